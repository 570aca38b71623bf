use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
/// First id handed to a real token.
pub const FIRST_TOKEN_ID: u32 = 2;

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Token/id mapping with reserved PAD and UNK slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, u32>,
    id_to_token: Vec<String>,
    min_count: usize,
}

impl Vocabulary {
    /// Counts tokens across all streams and keeps those seen at least
    /// `min_count` times. Ids go by descending frequency, ties lexicographic.
    pub fn from_token_streams<'a, I, S>(streams: I, min_count: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = &'a str>,
    {
        if min_count == 0 {
            return Err(Error::Config("min_count must be at least 1".into()));
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        let mut n_streams = 0usize;
        for stream in streams {
            n_streams += 1;
            for token in stream {
                *counts.entry(token).or_default() += 1;
            }
        }
        if n_streams == 0 {
            return Err(Error::EmptyDataset);
        }

        let mut kept: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|&(_, count)| count >= min_count)
            .collect();
        kept.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        Ok(Self::from_tokens(
            kept.into_iter().map(|(t, _)| t.to_owned()),
            min_count,
        ))
    }

    /// Builds a vocabulary from real tokens already in id order.
    pub fn from_tokens(tokens: impl IntoIterator<Item = String>, min_count: usize) -> Self {
        let mut id_to_token = vec![PAD_TOKEN.to_owned(), UNK_TOKEN.to_owned()];
        id_to_token.extend(tokens);
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .skip(FIRST_TOKEN_ID as usize)
            .map(|(id, t)| (t.clone(), id as u32))
            .collect();
        Self {
            token_to_id,
            id_to_token,
            min_count,
        }
    }

    /// Total number of ids, PAD and UNK included.
    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    /// Number of real (non-reserved) tokens.
    pub fn n_tokens(&self) -> usize {
        self.len() - FIRST_TOKEN_ID as usize
    }

    pub fn is_empty(&self) -> bool {
        self.n_tokens() == 0
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn id(&self, token: &str) -> u32 {
        self.token_to_id.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    /// Real tokens in id order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.id_to_token[FIRST_TOKEN_ID as usize..]
            .iter()
            .map(String::as_str)
    }

    /// Sidecar text form: one real token per line, line number = id - 2.
    pub fn to_sidecar(&self) -> String {
        let mut out = String::new();
        for token in self.tokens() {
            out.push_str(token);
            out.push('\n');
        }
        out
    }

    pub fn from_sidecar(text: &str, min_count: usize) -> Result<Self> {
        let tokens: Vec<String> = text.lines().map(str::to_owned).collect();
        let mut seen = std::collections::HashSet::new();
        for (line, t) in tokens.iter().enumerate() {
            if t.is_empty() || t.contains(char::is_whitespace) || !seen.insert(t.as_str()) {
                return Err(Error::Format(format!(
                    "vocabulary line {}: bad or duplicate token {t:?}",
                    line + 1
                )));
            }
        }
        Ok(Self::from_tokens(tokens, min_count))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_sidecar().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_sidecar(&text, 1)
    }
}
