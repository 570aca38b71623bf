//! Line-oriented corpus cache.
//!
//! ```text
//! # boostcnn-corpus v1 max_len=<n> vocab_size=<n>
//! <doc id>\t<label signs, EXT NEU AGR CON OPN>\t<space-joined non-PAD ids>
//! ```
//!
//! Sentences for embedding training are stored separately, one sentence per
//! line as space-joined ids.

use std::fmt::Write as _;
use std::path::Path;

use super::{EncodedCorpus, EncodedDocument, TraitLabels, PAD_ID};
use crate::error::{Error, Result};
use crate::io::write_atomic;

const MAGIC: &str = "# boostcnn-corpus v1";

pub fn corpus_cache_string(corpus: &EncodedCorpus) -> Result<String> {
    let mut out = format!(
        "{MAGIC} max_len={} vocab_size={}\n",
        corpus.max_len, corpus.vocab_size
    );
    for doc in &corpus.documents {
        if doc.id.contains(['\t', '\n', '\r']) {
            return Err(Error::Format(format!(
                "document id {:?} contains a tab or newline",
                doc.id
            )));
        }
        let ids: Vec<String> = doc.valid_ids().iter().map(u32::to_string).collect();
        writeln!(
            out,
            "{}\t{}\t{}",
            doc.id,
            doc.labels.to_signs_string(),
            ids.join(" ")
        )
        .unwrap();
    }
    Ok(out)
}

pub fn write_corpus_cache(path: &Path, corpus: &EncodedCorpus) -> Result<()> {
    write_atomic(path, corpus_cache_string(corpus)?.as_bytes())
}

fn header_field(header: &str, key: &str) -> Option<usize> {
    header
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix(key)?.strip_prefix('=')?.parse().ok())
}

pub fn read_corpus_cache(path: &Path) -> Result<EncodedCorpus> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |row: usize, message: &str| Error::Parse {
        path: path.to_path_buf(),
        row,
        message: message.to_owned(),
    };
    let mut lines = text.lines();
    let header = lines
        .next()
        .filter(|h| h.starts_with(MAGIC))
        .ok_or_else(|| bad(0, "missing corpus cache header"))?;
    let max_len = header_field(header, "max_len").ok_or_else(|| bad(0, "missing max_len"))?;
    let vocab_size =
        header_field(header, "vocab_size").ok_or_else(|| bad(0, "missing vocab_size"))?;

    let mut documents = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 1;
        let mut parts = line.split('\t');
        let (Some(id), Some(labels), Some(ids), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(bad(row, "expected three tab-separated fields"));
        };
        let labels =
            TraitLabels::from_signs_str(labels).ok_or_else(|| bad(row, "bad label vector"))?;
        let mut ids: Vec<u32> = ids
            .split_whitespace()
            .map(|s| {
                s.parse::<u32>()
                    .ok()
                    .filter(|&v| v != PAD_ID && (v as usize) < vocab_size)
            })
            .collect::<Option<_>>()
            .ok_or_else(|| bad(row, "bad token id"))?;
        let valid_len = ids.len();
        if valid_len == 0 || valid_len > max_len {
            return Err(bad(row, "token count out of range"));
        }
        ids.resize(max_len, PAD_ID);
        documents.push(EncodedDocument {
            id: id.to_owned(),
            ids,
            valid_len,
            labels,
        });
    }
    if documents.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(EncodedCorpus {
        max_len,
        vocab_size,
        documents,
    })
}

pub fn write_sentences(path: &Path, sentences: &[Vec<u32>]) -> Result<()> {
    let mut out = String::new();
    for s in sentences {
        let ids: Vec<String> = s.iter().map(u32::to_string).collect();
        out.push_str(&ids.join(" "));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_sentences(path: &Path) -> Result<Vec<Vec<u32>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            line.split_whitespace()
                .map(str::parse)
                .collect::<Result<Vec<u32>, _>>()
                .map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    row: i + 1,
                    message: e.to_string(),
                })
        })
        .collect()
}
