//! Binary checkpoint of one weak-classifier network.
//!
//! All integers and floats little-endian:
//!
//! ```text
//! magic    8 bytes  "BCNNWEAK"
//! version  u32      1
//! height   u32
//! dim      u32
//! filters  u32
//! classes  u32
//! variant  u8       0 rand, 1 static, 2 non-static, 3 2channel
//! channels u32
//! f64 x filters*channels*height*dim   filter weights [filter][channel][row][col]
//! f64 x filters                        filter biases
//! f64 x filters*classes                head weights [input][class]
//! f64 x classes                        head bias
//! per channel:
//!   trainable u8
//!   if trainable: rows u64, then per row: id u32, f64 x dim
//! ```
//!
//! Trainable channels store only the rows that differ from the base table
//! the network was trained from; loading needs that same base.

use std::sync::Arc;

use super::{ConvNet, FilterBank, SoftmaxHead};
use crate::embedding::{ChannelSpec, Variant};
use crate::error::{Error, Result};
use crate::io::{put_f64s, Reader};

const MAGIC: &[u8; 8] = b"BCNNWEAK";
pub const CHECKPOINT_VERSION: u32 = 1;

fn u32_of(v: usize) -> Result<[u8; 4]> {
    u32::try_from(v)
        .map(u32::to_le_bytes)
        .map_err(|_| Error::Format(format!("{v} does not fit in u32")))
}

pub fn encode_checkpoint(
    net: &ConvNet,
    channels: &ChannelSpec,
    base: &ChannelSpec,
) -> Result<Vec<u8>> {
    let bank = &net.bank;
    if channels.channels.len() != base.channels.len() || channels.channels.len() != bank.channels {
        return Err(Error::Shape("channel count mismatch".into()));
    }
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    for v in [bank.height, bank.dim, bank.count, net.head.classes] {
        out.extend_from_slice(&u32_of(v)?);
    }
    out.push(channels.variant.tag());
    out.extend_from_slice(&u32_of(bank.channels)?);
    put_f64s(&mut out, &bank.weights);
    put_f64s(&mut out, &bank.biases);
    put_f64s(&mut out, &net.head.weights);
    put_f64s(&mut out, &net.head.bias);

    for (current, base) in channels.channels.iter().zip(&base.channels) {
        out.push(u8::from(current.trainable));
        if !current.trainable {
            continue;
        }
        let changed: Vec<u32> = (0..current.table.n_rows() as u32)
            .filter(|&id| current.table.row(id) != base.table.row(id))
            .collect();
        out.extend_from_slice(&(changed.len() as u64).to_le_bytes());
        for id in changed {
            out.extend_from_slice(&id.to_le_bytes());
            put_f64s(&mut out, current.table.row(id));
        }
    }
    Ok(out)
}

/// Rebuilds the network and its channels on top of `base`.
pub fn decode_checkpoint(bytes: &[u8], base: &ChannelSpec) -> Result<(ConvNet, ChannelSpec)> {
    let mut r = Reader::new(bytes);
    if r.take(8)? != MAGIC {
        return Err(Error::Format("not a weak-classifier checkpoint".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!(
            "checkpoint version {version}, expected {CHECKPOINT_VERSION}"
        )));
    }
    let height = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let count = r.u32()? as usize;
    let classes = r.u32()? as usize;
    let variant =
        Variant::from_tag(r.u8()?).ok_or_else(|| Error::Format("unknown variant tag".into()))?;
    let n_channels = r.u32()? as usize;
    if variant != base.variant || n_channels != base.channels.len() || dim != base.dim() {
        return Err(Error::Format(format!(
            "checkpoint is {variant} with {n_channels} channel(s) of width {dim}; base is {} with {} of width {}",
            base.variant,
            base.channels.len(),
            base.dim()
        )));
    }
    let bank = FilterBank {
        height,
        dim,
        channels: n_channels,
        count,
        weights: r.f64s(count * n_channels * height * dim)?,
        biases: r.f64s(count)?,
    };
    let head = SoftmaxHead {
        inputs: count,
        classes,
        weights: r.f64s(count * classes)?,
        bias: r.f64s(classes)?,
    };

    let mut channels = base.clone();
    for channel in &mut channels.channels {
        let trainable = r.u8()? != 0;
        if trainable != channel.trainable {
            return Err(Error::Format("trainable flags differ from base".into()));
        }
        if !trainable {
            continue;
        }
        let n = r.u64()? as usize;
        if n > 0 {
            let table = Arc::make_mut(&mut channel.table);
            for _ in 0..n {
                let id = r.u32()?;
                if id as usize >= table.n_rows() || id == crate::corpus::PAD_ID {
                    return Err(Error::Format(format!("bad embedding row {id}")));
                }
                let row = r.f64s(dim)?;
                table.row_mut(id).copy_from_slice(&row);
            }
        }
    }
    r.finish()?;
    let net = ConvNet { bank, head };
    if !net.is_finite() || channels.channels.iter().any(|c| !c.table.is_finite()) {
        return Err(Error::Format("non-finite parameter".into()));
    }
    Ok((net, channels))
}
