//! Essay ingestion, normalization, vocabulary and fixed-length encoding.

mod cache;
mod text;
mod vocab;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cache::{read_corpus_cache, read_sentences, write_corpus_cache, write_sentences};
pub use text::{normalize_text, split_sentences, tokenize, MAX_SENTENCE_TOKENS, RESPLIT_TOKENS};
pub use vocab::{Vocabulary, FIRST_TOKEN_ID, PAD_ID, PAD_TOKEN, UNK_ID, UNK_TOKEN};

/// One of the Big-Five personality traits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Trait {
    Ext,
    Neu,
    Agr,
    Con,
    Opn,
}

impl Trait {
    /// Storage order of label vectors.
    pub const ALL: [Trait; 5] = [Trait::Ext, Trait::Neu, Trait::Agr, Trait::Con, Trait::Opn];

    pub fn code(self) -> &'static str {
        match self {
            Trait::Ext => "EXT",
            Trait::Neu => "NEU",
            Trait::Agr => "AGR",
            Trait::Con => "CON",
            Trait::Opn => "OPN",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Trait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Trait {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Trait::ALL
            .into_iter()
            .find(|t| t.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown trait {s:?}")))
    }
}

impl From<Trait> for String {
    fn from(t: Trait) -> String {
        t.code().to_owned()
    }
}

impl TryFrom<String> for Trait {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Binary trait label. Positive is class index 0 of the softmax head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn sign(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    pub fn from_sign(sign: i8) -> Option<Self> {
        match sign {
            1 => Some(Label::Positive),
            -1 => Some(Label::Negative),
            _ => None,
        }
    }

    pub fn class_index(self) -> usize {
        match self {
            Label::Positive => 0,
            Label::Negative => 1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }

    pub fn from_class_index(index: usize) -> Self {
        if index == 0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

/// The five labels of one essay, indexed by [`Trait::index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TraitLabels(pub [Label; 5]);

impl TraitLabels {
    pub fn get(&self, t: Trait) -> Label {
        self.0[t.index()]
    }

    pub fn uniform(label: Label) -> Self {
        TraitLabels([label; 5])
    }

    /// `+1 -1 ...` in [`Trait::ALL`] order.
    pub fn to_signs_string(&self) -> String {
        self.0
            .iter()
            .map(|l| if l.sign() > 0 { "+1" } else { "-1" })
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn from_signs_str(s: &str) -> Option<Self> {
        let signs: Vec<Label> = s
            .split_whitespace()
            .map(|t| t.parse::<i8>().ok().and_then(Label::from_sign))
            .collect::<Option<_>>()?;
        Some(TraitLabels(signs.try_into().ok()?))
    }
}

pub trait Labeled {
    fn labels(&self) -> &TraitLabels;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub raw_text: String,
    pub labels: TraitLabels,
}

impl Labeled for Document {
    fn labels(&self) -> &TraitLabels {
        &self.labels
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub positive: usize,
    pub negative: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.positive + self.negative
    }
}

/// Per-trait positive/negative counts, in [`Trait::ALL`] order.
pub fn trait_counts<T: Labeled>(docs: &[T]) -> [ClassCounts; 5] {
    let mut counts = [ClassCounts::default(); 5];
    for doc in docs {
        for t in Trait::ALL {
            match doc.labels().get(t) {
                Label::Positive => counts[t.index()].positive += 1,
                Label::Negative => counts[t.index()].negative += 1,
            }
        }
    }
    counts
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub documents: Vec<Document>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn trait_counts(&self) -> [ClassCounts; 5] {
        trait_counts(&self.documents)
    }

    /// Vocabulary over the normalized token streams of every document.
    pub fn build_vocab(&self, min_count: usize) -> Result<Vocabulary> {
        if min_count == 0 {
            return Err(Error::Config("min_count must be at least 1".into()));
        }
        if self.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let streams: Vec<Vec<String>> = self
            .documents
            .iter()
            .map(|d| tokenize(&d.raw_text))
            .collect();
        Vocabulary::from_token_streams(
            streams.iter().map(|s| s.iter().map(String::as_str)),
            min_count,
        )
    }
}

/// Column names of the essay CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvFormat {
    pub id_column: String,
    pub text_column: String,
    /// Trait columns in [`Trait::ALL`] order.
    pub trait_columns: [String; 5],
}

impl Default for CsvFormat {
    fn default() -> Self {
        Self {
            id_column: "#AUTHID".into(),
            text_column: "TEXT".into(),
            trait_columns: ["cEXT", "cNEU", "cAGR", "cCON", "cOPN"].map(String::from),
        }
    }
}

fn parse_yn(field: &str) -> Option<Label> {
    match field.trim() {
        "y" | "Y" => Some(Label::Positive),
        "n" | "N" => Some(Label::Negative),
        _ => None,
    }
}

/// Reads the essay CSV. Rows are numbered from 1, header excluded.
pub fn load_essays(path: &Path, format: &CsvFormat) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let parse_err = |row: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        row,
        message,
    };

    let header = reader
        .byte_headers()
        .map_err(|e| parse_err(0, e.to_string()))?
        .clone();
    let column = |name: &str| {
        header
            .iter()
            .position(|h| String::from_utf8_lossy(h).trim() == name)
            .ok_or_else(|| parse_err(0, format!("missing column {name:?}")))
    };
    let id_col = column(&format.id_column)?;
    let text_col = column(&format.text_column)?;
    let trait_cols: Vec<usize> = format
        .trait_columns
        .iter()
        .map(|c| column(c))
        .collect::<Result<_>>()?;

    let mut documents = Vec::new();
    for (i, record) in reader.byte_records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| parse_err(row, e.to_string()))?;
        if record.len() != header.len() {
            return Err(parse_err(
                row,
                format!("expected {} columns, found {}", header.len(), record.len()),
            ));
        }
        let field = |c: usize| String::from_utf8_lossy(&record[c]).into_owned();
        let raw_text = field(text_col);
        if raw_text.trim().is_empty() {
            return Err(parse_err(row, "empty text".into()));
        }
        let mut labels = [Label::Negative; 5];
        for (slot, (&c, name)) in labels
            .iter_mut()
            .zip(trait_cols.iter().zip(&format.trait_columns))
        {
            *slot = parse_yn(&field(c)).ok_or_else(|| {
                parse_err(
                    row,
                    format!("column {name:?}: expected y or n, found {:?}", field(c)),
                )
            })?;
        }
        documents.push(Document {
            id: field(id_col).trim().to_owned(),
            raw_text,
            labels: TraitLabels(labels),
        });
    }
    if documents.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(Dataset { documents })
}

/// A document as a fixed-length id sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedDocument {
    pub id: String,
    /// Exactly `max_len` ids, PAD after `valid_len`.
    pub ids: Vec<u32>,
    pub valid_len: usize,
    pub labels: TraitLabels,
}

impl EncodedDocument {
    pub fn valid_ids(&self) -> &[u32] {
        &self.ids[..self.valid_len]
    }
}

impl Labeled for EncodedDocument {
    fn labels(&self) -> &TraitLabels {
        &self.labels
    }
}

/// Concatenates the document's sentences, maps tokens through `vocab`,
/// truncates to `max_len` and right-pads with PAD.
pub fn encode_document(
    doc: &Document,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<EncodedDocument> {
    if max_len == 0 {
        return Err(Error::Config("max_len must be positive".into()));
    }
    let tokens = tokenize(&doc.raw_text);
    if tokens.is_empty() {
        return Err(Error::EmptyDocument { id: doc.id.clone() });
    }
    let mut ids: Vec<u32> = tokens.iter().take(max_len).map(|t| vocab.id(t)).collect();
    let valid_len = ids.len();
    ids.resize(max_len, PAD_ID);
    Ok(EncodedDocument {
        id: doc.id.clone(),
        ids,
        valid_len,
        labels: doc.labels,
    })
}

/// An encoded dataset sharing one vocabulary and `max_len`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedCorpus {
    pub max_len: usize,
    pub vocab_size: usize,
    pub documents: Vec<EncodedDocument>,
}

impl EncodedCorpus {
    pub fn encode(dataset: &Dataset, vocab: &Vocabulary, max_len: usize) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let documents = dataset
            .documents
            .iter()
            .map(|d| encode_document(d, vocab, max_len))
            .collect::<Result<_>>()?;
        Ok(Self {
            max_len,
            vocab_size: vocab.len(),
            documents,
        })
    }

    pub fn trait_counts(&self) -> [ClassCounts; 5] {
        trait_counts(&self.documents)
    }

    /// Shortest valid length in the corpus.
    pub fn min_valid_len(&self) -> usize {
        self.documents
            .iter()
            .map(|d| d.valid_len)
            .min()
            .unwrap_or(0)
    }
}

/// Sentence-level id sequences (untruncated, unpadded) for embedding training.
pub fn encode_sentences(dataset: &Dataset, vocab: &Vocabulary) -> Vec<Vec<u32>> {
    dataset
        .documents
        .iter()
        .flat_map(|d| split_sentences(&normalize_text(&d.raw_text)))
        .map(|s| s.iter().map(|t| vocab.id(t)).collect())
        .collect()
}
