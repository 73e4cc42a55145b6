//! Adam with D-Adaptation.
//!
//! Follows the reference pseudocode line by line: the distance estimate
//! `d` enters the first moment directly, the second moment is plain
//! squared gradients, and the numerator of the lower bound is an
//! `A⁻¹`-weighted inner product between the new gradient and the previous
//! gradient sum `s_k`:
//!
//! ```text
//! m  ← β1·m + (1−β1)·d·η·g
//! v  ← β2·v + (1−β2)·g²
//! A  = diag(√v + ε)
//! w  ← w − A⁻¹m
//! s' ← √β2·s + (1−√β2)·d·η·g
//! r  ← √β2·r + (1−√β2)·d·η·⟨g, s⟩_{A⁻¹}
//! d̂  = r / ((1−√β2)·‖s'‖₁)
//! d  ← max(d, d̂)
//! ```

use serde::{Deserialize, Serialize};

use super::{check_positive, check_unit_interval, StepRule};
use crate::error::Result;
use crate::tensor::{norm1, StepContext};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DAdaptConfig {
    pub d0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Adam-style bias correction of `m` and `v`; absent from the
    /// reference pseudocode, so off by default.
    #[serde(default)]
    pub bias_correction: bool,
}

impl Default for DAdaptConfig {
    fn default() -> Self {
        Self { d0: 1e-6, beta1: 0.9, beta2: 0.999, eps: 1e-8, bias_correction: false }
    }
}

impl DAdaptConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("d0", self.d0)?;
        check_unit_interval("beta1", self.beta1)?;
        check_unit_interval("beta2", self.beta2)?;
        check_positive("eps", self.eps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DAdaptState {
    pub cfg: DAdaptConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub s: Vec<f64>,
    pub r: f64,
    pub d: f64,
    pub t: u64,
}

impl DAdaptState {
    pub fn new(cfg: DAdaptConfig, dim: usize) -> Self {
        Self {
            cfg,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            s: vec![0.0; dim],
            r: 0.0,
            d: cfg.d0,
            t: 0,
        }
    }
}

impl StepRule for DAdaptState {
    fn dim(&self) -> usize {
        self.m.len()
    }

    fn apply(&mut self, w: &mut [f64], g: &[f64], _loss: f64, ctx: &StepContext) {
        let DAdaptConfig { beta1: b1, beta2: b2, eps, bias_correction, .. } = self.cfg;
        self.t += 1;
        let (bc1, bc2) = if bias_correction {
            let exp = i32::try_from(self.t).unwrap_or(i32::MAX);
            (1.0 - b1.powi(exp), 1.0 - b2.powi(exp))
        } else {
            (1.0, 1.0)
        };
        let eta = ctx.multiplier;
        let dk = self.d;
        let sqrt_b2 = b2.sqrt();
        let lr = dk * eta;

        let mut inner = 0.0;
        for i in 0..g.len() {
            let gi = g[i];
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * lr * gi;
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * gi * gi;
            let a = (self.v[i] / bc2).sqrt() + eps;
            inner += gi * self.s[i] / a;
            w[i] -= (self.m[i] / bc1) / a;
            self.s[i] = sqrt_b2 * self.s[i] + (1.0 - sqrt_b2) * lr * gi;
        }
        self.r = sqrt_b2 * self.r + (1.0 - sqrt_b2) * lr * inner;

        let s_norm = norm1(&self.s);
        let d_hat = if s_norm > 0.0 { self.r / ((1.0 - sqrt_b2) * s_norm) } else { 0.0 };
        self.d = self.d.max(d_hat);

        let shrink = 1.0 - lr * ctx.weight_decay;
        if shrink != 1.0 {
            for wi in w.iter_mut() {
                *wi *= shrink;
            }
        }
    }
}
