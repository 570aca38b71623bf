//! Skip-Gram word vectors.
//!
//! The objective is the mean log-probability of each context word given its
//! center word, with `p(context | center)` a softmax over every non-PAD id.
//! Training either follows the exact softmax gradient (`negative == 0`) or
//! the k-negative-sampling surrogate. [`skipgram_objective`] always evaluates
//! the exact softmax.

use rand::distributions::{Distribution, WeightedIndex};
use serde::{Deserialize, Serialize};

use super::EmbeddingTable;
use crate::corpus::{FIRST_TOKEN_ID, PAD_ID, UNK_ID};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipGramConfig {
    pub window: usize,
    pub dim: usize,
    pub learning_rate: f64,
    /// Learning rate reached at the end of the last epoch (linear decay).
    pub min_learning_rate: f64,
    pub epochs: usize,
    /// Negative samples per pair; 0 trains the exact softmax.
    pub negative: usize,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        Self {
            window: 5,
            dim: 150,
            learning_rate: 0.025,
            min_learning_rate: 0.0001,
            epochs: 5,
            negative: 5,
            seed: 0,
        }
    }
}

impl SkipGramConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(format!("skip-gram: {m}")));
        if self.window == 0 {
            return fail("window must be at least 1");
        }
        if self.dim == 0 {
            return fail("dimension must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning rate must be positive");
        }
        if !(self.min_learning_rate >= 0.0 && self.min_learning_rate <= self.learning_rate) {
            return fail("min learning rate must lie in [0, learning rate]");
        }
        Ok(())
    }
}

/// `(center, context)` pairs for every position and every offset within
/// `window`. UNK and PAD centers are skipped, as are PAD contexts.
pub fn extract_context_pairs(sentence: &[u32], window: usize) -> Vec<(u32, u32)> {
    let mut pairs = Vec::new();
    for (i, &center) in sentence.iter().enumerate() {
        if center == PAD_ID || center == UNK_ID {
            continue;
        }
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(sentence.len() - 1);
        for (j, &context) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
            if j != i && context != PAD_ID {
                pairs.push((center, context));
            }
        }
    }
    pairs
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_tables(input: &EmbeddingTable, output: &EmbeddingTable) -> Result<()> {
    if input.n_rows() != output.n_rows() || input.dim() != output.dim() {
        return Err(Error::Shape(format!(
            "input table {}x{} vs output table {}x{}",
            input.n_rows(),
            input.dim(),
            output.n_rows(),
            output.dim()
        )));
    }
    if input.n_rows() < 2 {
        return Err(Error::Shape("softmax needs at least one non-PAD id".into()));
    }
    Ok(())
}

/// Logits of `center` against every softmax outcome (ids `1..n_rows`).
fn logits(input: &EmbeddingTable, output: &EmbeddingTable, center: u32) -> Vec<f64> {
    let c = input.row(center);
    (1..output.n_rows() as u32)
        .map(|j| dot(c, output.row(j)))
        .collect()
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Exact-softmax `log p(context | center)`.
pub fn log_prob(input: &EmbeddingTable, output: &EmbeddingTable, center: u32, context: u32) -> f64 {
    let z = logits(input, output, center);
    z[context as usize - 1] - log_sum_exp(&z)
}

/// Mean exact-softmax log-probability over `pairs`.
pub fn skipgram_objective(
    input: &EmbeddingTable,
    output: &EmbeddingTable,
    pairs: &[(u32, u32)],
) -> Result<f64> {
    check_tables(input, output)?;
    if pairs.is_empty() {
        return Err(Error::Shape("objective over an empty pair list".into()));
    }
    let n = input.n_rows() as u32;
    let mut total = 0.0;
    for &(center, context) in pairs {
        if center >= n || context >= n || context == PAD_ID {
            return Err(Error::Shape(format!(
                "pair ({center}, {context}) out of range"
            )));
        }
        total += log_prob(input, output, center, context);
    }
    Ok(total / pairs.len() as f64)
}

/// Gradient of `log p(context | center)` with respect to the center's input
/// row and to the whole output table.
#[derive(Debug, Clone)]
pub struct PairGradient {
    pub log_prob: f64,
    pub d_center: Vec<f64>,
    /// `n_rows x dim`, row-major; the PAD row is zero.
    pub d_output: Vec<f64>,
}

pub fn pair_gradient(
    input: &EmbeddingTable,
    output: &EmbeddingTable,
    center: u32,
    context: u32,
) -> PairGradient {
    let dim = input.dim();
    let z = logits(input, output, center);
    let lse = log_sum_exp(&z);
    let c = input.row(center);

    let mut d_center = output.row(context).to_vec();
    let mut d_output = vec![0.0; output.n_rows() * dim];
    for (k, &zk) in z.iter().enumerate() {
        let j = k + 1;
        let p = (zk - lse).exp();
        let indicator = if j as u32 == context { 1.0 } else { 0.0 };
        for ((dc, &o), (dout, &cv)) in d_center
            .iter_mut()
            .zip(output.row(j as u32))
            .zip(d_output[j * dim..(j + 1) * dim].iter_mut().zip(c))
        {
            *dc -= p * o;
            *dout = (indicator - p) * cv;
        }
    }
    PairGradient {
        log_prob: z[context as usize - 1] - lse,
        d_center,
        d_output,
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Skip-Gram model under training. One instance is a single writer over its
/// two tables.
pub struct SkipGram {
    config: SkipGramConfig,
    input: EmbeddingTable,
    output: EmbeddingTable,
    sentences: Vec<Vec<u32>>,
    negatives: Option<WeightedIndex<f64>>,
    rng: rng::Rng,
    pairs_per_epoch: usize,
    step: usize,
    epochs_done: usize,
}

impl SkipGram {
    pub fn new(
        sentences: Vec<Vec<u32>>,
        vocab_size: usize,
        config: SkipGramConfig,
    ) -> Result<Self> {
        config.validate()?;
        if sentences.iter().all(Vec::is_empty) {
            return Err(Error::EmptyDataset);
        }
        if vocab_size < FIRST_TOKEN_ID as usize + 2 {
            return Err(Error::Config(format!(
                "skip-gram needs at least 2 real tokens, vocabulary has {}",
                vocab_size.saturating_sub(FIRST_TOKEN_ID as usize)
            )));
        }
        let mut counts = vec![0.0f64; vocab_size];
        for &id in sentences.iter().flatten() {
            let slot = counts.get_mut(id as usize).ok_or_else(|| {
                Error::Shape(format!("token id {id} outside vocabulary of {vocab_size}"))
            })?;
            *slot += 1.0;
        }
        counts[PAD_ID as usize] = 0.0;

        let negatives = if config.negative > 0 {
            let weights = counts.iter().map(|c| c.powf(0.75));
            Some(WeightedIndex::new(weights).map_err(|e| Error::Config(e.to_string()))?)
        } else {
            None
        };

        let mut init_rng = rng::substream(config.seed, &["skipgram", "init"]);
        let input = EmbeddingTable::uniform(
            vocab_size,
            config.dim,
            0.5 / config.dim as f64,
            &mut init_rng,
        );
        let output = EmbeddingTable::zeros(vocab_size, config.dim);
        let pairs_per_epoch = sentences
            .iter()
            .map(|s| extract_context_pairs(s, config.window).len())
            .sum();

        Ok(Self {
            rng: rng::substream(config.seed, &["skipgram", "negatives"]),
            config,
            input,
            output,
            sentences,
            negatives,
            pairs_per_epoch,
            step: 0,
            epochs_done: 0,
        })
    }

    pub fn input(&self) -> &EmbeddingTable {
        &self.input
    }

    pub fn output(&self) -> &EmbeddingTable {
        &self.output
    }

    pub fn epochs_done(&self) -> usize {
        self.epochs_done
    }

    pub fn pairs_per_epoch(&self) -> usize {
        self.pairs_per_epoch
    }

    fn learning_rate(&self) -> f64 {
        let total = (self.pairs_per_epoch * self.config.epochs.max(1)) as f64;
        let progress = (self.step as f64 / total).min(1.0);
        let c = &self.config;
        c.learning_rate - (c.learning_rate - c.min_learning_rate) * progress
    }

    /// Exact-softmax objective over every training pair, or over the first
    /// `limit` pairs when given.
    pub fn objective(&self, limit: Option<usize>) -> Result<f64> {
        let pairs: Vec<(u32, u32)> = self
            .sentences
            .iter()
            .flat_map(|s| extract_context_pairs(s, self.config.window))
            .take(limit.unwrap_or(usize::MAX))
            .collect();
        skipgram_objective(&self.input, &self.output, &pairs)
    }

    pub fn train_epoch(&mut self) {
        let sentences = std::mem::take(&mut self.sentences);
        for sentence in &sentences {
            for (center, context) in extract_context_pairs(sentence, self.config.window) {
                let lr = self.learning_rate();
                if self.negatives.is_some() {
                    self.negative_sampling_step(center, context, lr);
                } else {
                    self.exact_step(center, context, lr);
                }
                self.step += 1;
            }
        }
        self.sentences = sentences;
        self.epochs_done += 1;
    }

    fn exact_step(&mut self, center: u32, context: u32, lr: f64) {
        let g = pair_gradient(&self.input, &self.output, center, context);
        for (v, d) in self.input.row_mut(center).iter_mut().zip(&g.d_center) {
            *v += lr * d;
        }
        let dim = self.output.dim();
        for j in 1..self.output.n_rows() {
            for (v, d) in self
                .output
                .row_mut(j as u32)
                .iter_mut()
                .zip(&g.d_output[j * dim..(j + 1) * dim])
            {
                *v += lr * d;
            }
        }
    }

    fn negative_sampling_step(&mut self, center: u32, context: u32, lr: f64) {
        let dist = self.negatives.as_ref().expect("negative sampling enabled");
        let mut targets = Vec::with_capacity(self.config.negative + 1);
        targets.push((context, 1.0));
        for _ in 0..self.config.negative {
            let neg = dist.sample(&mut self.rng) as u32;
            if neg != context {
                targets.push((neg, 0.0));
            }
        }

        let mut center_grad = vec![0.0; self.input.dim()];
        let center_row = self.input.row(center).to_vec();
        for (target, label) in targets {
            let out = self.output.row_mut(target);
            let g = (label - sigmoid(dot(&center_row, out))) * lr;
            for ((acc, o), &c) in center_grad.iter_mut().zip(out.iter_mut()).zip(&center_row) {
                *acc += g * *o;
                *o += g * c;
            }
        }
        for (v, d) in self.input.row_mut(center).iter_mut().zip(&center_grad) {
            *v += d;
        }
    }

    pub fn train(&mut self) {
        while self.epochs_done < self.config.epochs {
            self.train_epoch();
        }
    }

    pub fn into_input(self) -> EmbeddingTable {
        self.input
    }
}

/// Trains for `config.epochs` epochs and returns the input-side table.
pub fn train_skipgram(
    sentences: Vec<Vec<u32>>,
    vocab_size: usize,
    config: SkipGramConfig,
) -> Result<EmbeddingTable> {
    let mut model = SkipGram::new(sentences, vocab_size, config)?;
    model.train();
    Ok(model.into_input())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn pairs_for_window() {
        let s = [2, 3, 4, 5, 6];
        let pairs = extract_context_pairs(&s, 2);
        let mut ctx: Vec<u32> = pairs.iter().filter(|p| p.0 == 4).map(|p| p.1).collect();
        ctx.sort();
        assert_eq!(ctx, vec![2, 3, 5, 6]);
        assert!(extract_context_pairs(&[7], 3).is_empty());
        assert_eq!(extract_context_pairs(&[2, 3], 1), vec![(2, 3), (3, 2)]);
    }

    #[test]
    fn pad_and_unk_handling() {
        let pairs = extract_context_pairs(&[UNK_ID, 2, PAD_ID], 1);
        assert_eq!(pairs, vec![(2, UNK_ID)]);
    }

    #[test]
    fn zero_tables_give_uniform_softmax() {
        let t = EmbeddingTable::zeros(6, 3);
        let obj = skipgram_objective(&t, &t, &[(2, 3), (4, 1)]).unwrap();
        assert!((obj - (1.0f64 / 5.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn two_outcome_softmax_hand_value() {
        // ids 1 and 2 are the only outcomes; logits [ln 2, 0] for the true context.
        let input = EmbeddingTable::from_vec(3, 1, vec![0.0, 0.0, 1.0]).unwrap();
        let output = EmbeddingTable::from_vec(3, 1, vec![0.0, 2f64.ln(), 0.0]).unwrap();
        let obj = skipgram_objective(&input, &output, &[(2, 1)]).unwrap();
        assert!((obj - (2.0f64 / 3.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn empty_pairs_rejected() {
        let t = EmbeddingTable::zeros(4, 2);
        assert!(skipgram_objective(&t, &t, &[]).is_err());
    }

    #[test]
    fn softmax_sums_to_one() {
        let mut r = rng::seeded(5);
        let a = EmbeddingTable::uniform(9, 4, 1.0, &mut r);
        let b = EmbeddingTable::uniform(9, 4, 1.0, &mut r);
        for center in 2..9 {
            let total: f64 = (1..9).map(|j| log_prob(&a, &b, center, j).exp()).sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn pair_gradient_matches_finite_differences() {
        // |V| = 8, d = 4
        let eps = 1e-5;
        let mut r = rng::seeded(11);
        for _ in 0..10 {
            let input = EmbeddingTable::uniform(8, 4, 1.0, &mut r);
            let output = EmbeddingTable::uniform(8, 4, 1.0, &mut r);
            let center = r.gen_range(1..8u32);
            let context = r.gen_range(1..8u32);
            let g = pair_gradient(&input, &output, center, context);
            let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-8);

            for k in 0..4 {
                let mut plus = input.clone();
                plus.row_mut(center)[k] += eps;
                let mut minus = input.clone();
                minus.row_mut(center)[k] -= eps;
                let num = (log_prob(&plus, &output, center, context)
                    - log_prob(&minus, &output, center, context))
                    / (2.0 * eps);
                assert!(rel(g.d_center[k], num) < 1e-5, "{} vs {num}", g.d_center[k]);
            }
            for j in 1..8u32 {
                for k in 0..4 {
                    let mut plus = output.clone();
                    plus.row_mut(j)[k] += eps;
                    let mut minus = output.clone();
                    minus.row_mut(j)[k] -= eps;
                    let num = (log_prob(&input, &plus, center, context)
                        - log_prob(&input, &minus, center, context))
                        / (2.0 * eps);
                    let a = g.d_output[j as usize * 4 + k];
                    assert!(rel(a, num) < 1e-5, "row {j}: {a} vs {num}");
                }
            }
        }
    }

    fn toy_corpus() -> Vec<Vec<u32>> {
        // a=2 b=3 alternate; q=4 r=5 alternate in separate sentences
        let mut s = Vec::new();
        for _ in 0..20 {
            s.push([2, 3].repeat(6));
            s.push([4, 5].repeat(6));
        }
        s
    }

    #[test]
    fn zero_epochs_is_initialization() {
        let cfg = SkipGramConfig {
            dim: 8,
            epochs: 0,
            ..Default::default()
        };
        let model = SkipGram::new(toy_corpus(), 6, cfg.clone()).unwrap();
        let init = model.input().clone();
        assert_eq!(train_skipgram(toy_corpus(), 6, cfg).unwrap(), init);
        assert!(init.row(PAD_ID).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn seeded_training_is_bitwise_deterministic() {
        let cfg = SkipGramConfig {
            dim: 8,
            epochs: 2,
            seed: 42,
            ..Default::default()
        };
        let a = train_skipgram(toy_corpus(), 6, cfg.clone()).unwrap();
        let b = train_skipgram(toy_corpus(), 6, cfg).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
    }

    #[test]
    fn co_occurring_context_gains_probability() {
        for negative in [0, 5] {
            let cfg = SkipGramConfig {
                dim: 8,
                epochs: 5,
                negative,
                ..Default::default()
            };
            let mut m = SkipGram::new(toy_corpus(), 6, cfg).unwrap();
            m.train();
            let p_b = log_prob(m.input(), m.output(), 2, 3);
            let p_q = log_prob(m.input(), m.output(), 2, 4);
            assert!(p_b > p_q, "negative={negative}: {p_b} <= {p_q}");
            assert!(m.input().is_finite());
            assert!(m.input().row(PAD_ID).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn too_small_vocabulary_rejected() {
        let err = SkipGram::new(vec![vec![2, 2]], 3, SkipGramConfig::default());
        assert!(matches!(err, Err(Error::Config(_))));
        assert!(matches!(
            SkipGram::new(vec![vec![]], 6, SkipGramConfig::default()),
            Err(Error::EmptyDataset)
        ));
    }
}
