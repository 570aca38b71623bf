//! Big-Five personality classification from essay text.
//!
//! The pipeline turns raw essays into token ids ([`corpus`]), learns word
//! vectors with Skip-Gram ([`embedding`]), trains one convolutional network
//! per filter height ([`neural`]) and fuses the three networks with AdaBoost
//! into a per-trait classifier ([`ensemble`]). [`experiment`] runs the k-fold
//! protocol over traits and input variants and renders the report.

pub mod corpus;
pub mod embedding;
pub mod ensemble;
mod error;
pub mod experiment;
pub mod io;
pub mod neural;
pub mod rng;

pub use error::{Error, Result};
