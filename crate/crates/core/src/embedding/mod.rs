//! Word-vector tables, Skip-Gram training and the four input-channel variants.

mod skipgram;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::corpus::PAD_ID;
use crate::error::{Error, Result};
use crate::io::{put_f64s, read, write_atomic, Reader};
use crate::rng;

pub use skipgram::{
    extract_context_pairs, log_prob, pair_gradient, skipgram_objective, train_skipgram,
    PairGradient, SkipGram, SkipGramConfig,
};

/// Half-width of the uniform initialization of randomly initialized channels.
pub const RANDOM_INIT_RANGE: f64 = 0.25;

const EMBEDDING_MAGIC: &[u8; 8] = b"BCNNEMB\0";
const EMBEDDING_VERSION: u32 = 1;

/// `n_rows x dim` row-major matrix, one row per vocabulary id. Row 0 (PAD)
/// is kept at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    n_rows: usize,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn zeros(n_rows: usize, dim: usize) -> Self {
        Self {
            n_rows,
            dim,
            data: vec![0.0; n_rows * dim],
        }
    }

    /// Rows uniform in `[-range, range]`, PAD row zero.
    pub fn uniform(n_rows: usize, dim: usize, range: f64, rng: &mut rng::Rng) -> Self {
        let mut table = Self::zeros(n_rows, dim);
        for id in 1..n_rows {
            for v in table.row_mut(id as u32) {
                *v = rng.gen_range(-range..=range);
            }
        }
        table
    }

    pub fn from_vec(n_rows: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * dim {
            return Err(Error::Shape(format!(
                "{} values for a {n_rows}x{dim} table",
                data.len()
            )));
        }
        let mut table = Self { n_rows, dim, data };
        if n_rows > 0 {
            table.row_mut(PAD_ID).fill(0.0);
        }
        Ok(table)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, id: u32) -> &[f64] {
        let start = id as usize * self.dim;
        &self.data[start..start + self.dim]
    }

    pub fn row_mut(&mut self, id: u32) -> &mut [f64] {
        let start = id as usize * self.dim;
        &mut self.data[start..start + self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `magic[8] | version u32 | n_rows u64 | dim u64 | f64 x n_rows*dim`,
    /// all little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(28 + self.data.len() * 8);
        out.extend_from_slice(EMBEDDING_MAGIC);
        out.extend_from_slice(&EMBEDDING_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n_rows as u64).to_le_bytes());
        out.extend_from_slice(&(self.dim as u64).to_le_bytes());
        put_f64s(&mut out, &self.data);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(8)? != EMBEDDING_MAGIC {
            return Err(Error::Format("not an embedding table".into()));
        }
        let version = r.u32()?;
        if version != EMBEDDING_VERSION {
            return Err(Error::Format(format!(
                "unsupported embedding version {version}"
            )));
        }
        let n_rows = r.u64()? as usize;
        let dim = r.u64()? as usize;
        let data = r.f64s(n_rows.saturating_mul(dim))?;
        r.finish()?;
        let table = Self { n_rows, dim, data };
        if !table.is_finite() {
            return Err(Error::Format("non-finite embedding value".into()));
        }
        if n_rows > 0 && table.row(PAD_ID).iter().any(|&v| v != 0.0) {
            return Err(Error::Format("PAD row is not zero".into()));
        }
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&read(path)?)
    }
}

/// Input configuration of the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Variant {
    Rand,
    Static,
    NonStatic,
    TwoChannel,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Rand,
        Variant::Static,
        Variant::NonStatic,
        Variant::TwoChannel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Rand => "rand",
            Variant::Static => "static",
            Variant::NonStatic => "non-static",
            Variant::TwoChannel => "2channel",
        }
    }

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Variant::ALL.get(tag as usize).copied()
    }

    pub fn needs_pretrained(self) -> bool {
        self != Variant::Rand
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| !matches!(c, '-' | '_'))
            .collect();
        match key.as_str() {
            "rand" => Ok(Variant::Rand),
            "static" => Ok(Variant::Static),
            "nonstatic" => Ok(Variant::NonStatic),
            "2channel" | "twochannel" => Ok(Variant::TwoChannel),
            _ => Err(Error::Config(format!("unknown variant {s:?}"))),
        }
    }
}

impl From<Variant> for String {
    fn from(v: Variant) -> String {
        v.name().to_owned()
    }
}

impl TryFrom<String> for Variant {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// One embedding input. Frozen tables are shared; a trainable table is
/// copied on first write.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub table: Arc<EmbeddingTable>,
    pub trainable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub variant: Variant,
    pub channels: Vec<Channel>,
}

impl ChannelSpec {
    pub fn dim(&self) -> usize {
        self.channels[0].table.dim()
    }

    pub fn n_rows(&self) -> usize {
        self.channels[0].table.n_rows()
    }
}

/// Builds the channel layout of `variant`:
///
/// | variant      | channels                                  |
/// |--------------|-------------------------------------------|
/// | `Rand`       | random, trainable                         |
/// | `Static`     | pretrained, frozen                        |
/// | `NonStatic`  | pretrained, trainable                     |
/// | `TwoChannel` | pretrained frozen + random trainable      |
pub fn build_input_channels(
    variant: Variant,
    vocab_size: usize,
    pretrained: Option<&EmbeddingTable>,
    dim: usize,
    seed: u64,
) -> Result<ChannelSpec> {
    if dim == 0 {
        return Err(Error::Config("embedding dimension must be positive".into()));
    }
    let pretrained = if variant.needs_pretrained() {
        let table = pretrained.ok_or_else(|| {
            Error::Config(format!(
                "variant {variant} needs a pretrained embedding table"
            ))
        })?;
        if table.dim() != dim || table.n_rows() != vocab_size {
            return Err(Error::Config(format!(
                "pretrained table is {}x{}, expected {vocab_size}x{dim}",
                table.n_rows(),
                table.dim()
            )));
        }
        Some(Arc::new(table.clone()))
    } else {
        None
    };
    let random = || {
        let mut rng = rng::substream(seed, &["channel-init", variant.name()]);
        Arc::new(EmbeddingTable::uniform(
            vocab_size,
            dim,
            RANDOM_INIT_RANGE,
            &mut rng,
        ))
    };
    let channel = |table, trainable| Channel { table, trainable };

    let channels = match (variant, pretrained) {
        (Variant::Rand, _) => vec![channel(random(), true)],
        (Variant::Static, Some(p)) => vec![channel(p, false)],
        (Variant::NonStatic, Some(p)) => vec![channel(p, true)],
        (Variant::TwoChannel, Some(p)) => vec![channel(p, false), channel(random(), true)],
        (_, None) => unreachable!("checked above"),
    };
    Ok(ChannelSpec { variant, channels })
}

/// `rows x dim` row-major sentence matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceMatrix {
    pub rows: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl SentenceMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(Error::Shape(format!(
                "{} values for {rows}x{dim}",
                data.len()
            )));
        }
        Ok(Self { rows, dim, data })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// Stacks the rows of `ids`. PAD rows come out zero.
pub fn lookup(ids: &[u32], table: &EmbeddingTable) -> Result<SentenceMatrix> {
    let dim = table.dim();
    let mut data = Vec::with_capacity(ids.len() * dim);
    for &id in ids {
        if id as usize >= table.n_rows() {
            return Err(Error::Shape(format!(
                "token id {id} outside a vocabulary of {}",
                table.n_rows()
            )));
        }
        data.extend_from_slice(table.row(id));
    }
    Ok(SentenceMatrix {
        rows: ids.len(),
        dim,
        data,
    })
}
