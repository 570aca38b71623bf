//! ADADELTA with an extra step multiplier.
//!
//! ```text
//! E[g²]  <- rho E[g²] + (1 - rho) g²
//! u      <- sqrt(E[Δx²] + eps) / sqrt(E[g²] + eps) * g
//! E[Δx²] <- rho E[Δx²] + (1 - rho) u²
//! x      <- x - step_scale * u
//! ```
//!
//! With `step_scale = 1` this is plain ADADELTA.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdadeltaConfig {
    pub rho: f64,
    pub eps: f64,
    pub step_scale: f64,
}

impl Default for AdadeltaConfig {
    fn default() -> Self {
        Self {
            rho: 0.95,
            eps: 1e-6,
            step_scale: 0.01,
        }
    }
}

impl AdadeltaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Config(format!(
                "adadelta rho {} outside (0, 1)",
                self.rho
            )));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Config("adadelta eps must be positive".into()));
        }
        if !(self.step_scale > 0.0 && self.step_scale.is_finite()) {
            return Err(Error::Config("adadelta step scale must be positive".into()));
        }
        Ok(())
    }

    #[inline]
    fn update(&self, x: &mut f64, g: f64, sq_grad: &mut f64, sq_update: &mut f64) {
        *sq_grad = self.rho * *sq_grad + (1.0 - self.rho) * g * g;
        let u = ((*sq_update + self.eps).sqrt() / (*sq_grad + self.eps).sqrt()) * g;
        *sq_update = self.rho * *sq_update + (1.0 - self.rho) * u * u;
        *x -= self.step_scale * u;
    }
}

/// Running averages for one dense parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdadeltaState {
    pub sq_grad: Vec<f64>,
    pub sq_update: Vec<f64>,
}

impl AdadeltaState {
    pub fn new(len: usize) -> Self {
        Self {
            sq_grad: vec![0.0; len],
            sq_update: vec![0.0; len],
        }
    }
}

pub fn adadelta_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdadeltaState,
    config: &AdadeltaConfig,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.sq_grad.len() {
        return Err(Error::Shape(format!(
            "adadelta: {} params, {} grads, {} state",
            params.len(),
            grads.len(),
            state.sq_grad.len()
        )));
    }
    for (((x, &g), eg), ex) in params
        .iter_mut()
        .zip(grads)
        .zip(&mut state.sq_grad)
        .zip(&mut state.sq_update)
    {
        config.update(x, g, eg, ex);
    }
    Ok(())
}

/// Row-sparse ADADELTA for embedding tables.
///
/// A row with no gradient at a step only has both averages multiplied by
/// `rho`, so that decay is applied lazily as `rho^k` when the row is next
/// touched.
#[derive(Debug, Clone, PartialEq)]
pub struct RowAdadelta {
    dim: usize,
    state: AdadeltaState,
    last_step: Vec<u64>,
    step: u64,
}

impl RowAdadelta {
    pub fn new(n_rows: usize, dim: usize) -> Self {
        Self {
            dim,
            state: AdadeltaState::new(n_rows * dim),
            last_step: vec![0; n_rows],
            step: 0,
        }
    }

    /// Starts a new optimizer step.
    pub fn begin_step(&mut self) {
        self.step += 1;
    }

    /// Applies the current step to `row` with gradient `grad`.
    pub fn update_row(
        &mut self,
        row: usize,
        params: &mut [f64],
        grad: &[f64],
        config: &AdadeltaConfig,
    ) {
        let missed = self.step - self.last_step[row] - 1;
        let range = row * self.dim..(row + 1) * self.dim;
        let eg = &mut self.state.sq_grad[range.clone()];
        let ex = &mut self.state.sq_update[range];
        if missed > 0 && self.last_step[row] > 0 {
            let decay = config.rho.powi(missed.min(i32::MAX as u64) as i32);
            eg.iter_mut().for_each(|v| *v *= decay);
            ex.iter_mut().for_each(|v| *v *= decay);
        }
        for (((x, &g), eg), ex) in params.iter_mut().zip(grad).zip(eg).zip(ex) {
            config.update(x, g, eg, ex);
        }
        self.last_step[row] = self.step;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_hand_value() {
        // E[g²] = 0.05; u = sqrt(1e-6)/sqrt(0.050001) = 4.4721e-3; Δ = -0.01 u
        let cfg = AdadeltaConfig::default();
        let mut x = [0.0];
        let mut st = AdadeltaState::new(1);
        adadelta_step(&mut x, &[1.0], &mut st, &cfg).unwrap();
        let expected = -0.01 * (1e-6f64).sqrt() / (0.05f64 + 1e-6).sqrt();
        assert!((x[0] - expected).abs() < 1e-18);
        assert!((x[0] + 4.47e-5).abs() < 1e-7);
    }

    #[test]
    fn zero_gradient_only_decays() {
        let cfg = AdadeltaConfig::default();
        let mut x = [1.5];
        let mut st = AdadeltaState {
            sq_grad: vec![0.4],
            sq_update: vec![0.2],
        };
        adadelta_step(&mut x, &[0.0], &mut st, &cfg).unwrap();
        assert_eq!(x[0], 1.5);
        assert!((st.sq_grad[0] - 0.38).abs() < 1e-15);
        assert!((st.sq_update[0] - 0.19).abs() < 1e-15);
    }

    #[test]
    fn deterministic() {
        let cfg = AdadeltaConfig::default();
        let run = || {
            let mut x = vec![0.3, -0.2];
            let mut st = AdadeltaState {
                sq_grad: vec![0.1, 0.2],
                sq_update: vec![0.01, 0.0],
            };
            adadelta_step(&mut x, &[0.5, -1.5], &mut st, &cfg).unwrap();
            (x, st)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_mismatch() {
        let mut st = AdadeltaState::new(2);
        assert!(adadelta_step(
            &mut [0.0; 2],
            &[0.0; 3],
            &mut st,
            &AdadeltaConfig::default()
        )
        .is_err());
    }

    #[test]
    fn step_reduces_quadratic() {
        for &scale in &[1e-3, 0.01, 0.1, 0.5, 1.0] {
            for &x0 in &[-3.0, -0.1, 0.7, 5.0] {
                let cfg = AdadeltaConfig {
                    step_scale: scale,
                    ..Default::default()
                };
                let mut x = [x0];
                let mut st = AdadeltaState::new(1);
                let f = |x: f64| 0.5 * x * x;
                adadelta_step(&mut x, &[x0], &mut st, &cfg).unwrap();
                assert!(f(x[0]) < f(x0), "scale {scale} x0 {x0}");
            }
        }
    }

    #[test]
    fn lazy_rows_match_dense() {
        let cfg = AdadeltaConfig {
            step_scale: 0.5,
            ..Default::default()
        };
        let grads = [
            [0.3, -1.0],
            [0.0, 0.0],
            [0.0, 0.0],
            [2.0, 0.5],
            [0.0, 0.0],
            [-0.7, 0.1],
        ];
        let mut dense = vec![0.1, 0.2];
        let mut dense_state = AdadeltaState::new(2);
        let mut sparse = dense.clone();
        let mut rows = RowAdadelta::new(1, 2);
        for g in grads {
            adadelta_step(&mut dense, &g, &mut dense_state, &cfg).unwrap();
            rows.begin_step();
            if g != [0.0, 0.0] {
                rows.update_row(0, &mut sparse, &g, &cfg);
            }
        }
        for (a, b) in dense.iter().zip(&sparse) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
