//! Prodigy: D-Adaptation with the distance estimate folded into the
//! second moment and a numerator built from `⟨g_k, w0 − w_k⟩`.

use serde::{Deserialize, Serialize};

use super::{check_positive, check_unit_interval, StepRule};
use crate::error::Result;
use crate::tensor::{norm1, StepContext};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProdigyConfig {
    pub d0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    #[serde(default)]
    pub bias_correction: bool,
    /// Freeze the distance estimate while the schedule warms up.
    #[serde(default)]
    pub safeguard_warmup: bool,
}

impl Default for ProdigyConfig {
    fn default() -> Self {
        Self {
            d0: 1e-6,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            bias_correction: false,
            safeguard_warmup: false,
        }
    }
}

impl ProdigyConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("d0", self.d0)?;
        check_unit_interval("beta1", self.beta1)?;
        check_unit_interval("beta2", self.beta2)?;
        check_positive("eps", self.eps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProdigyState {
    pub cfg: ProdigyConfig,
    pub w0: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub s: Vec<f64>,
    pub r: f64,
    pub d: f64,
    pub t: u64,
}

impl ProdigyState {
    pub fn new(cfg: ProdigyConfig, w0: &[f64]) -> Self {
        let n = w0.len();
        Self {
            cfg,
            w0: w0.to_vec(),
            m: vec![0.0; n],
            v: vec![0.0; n],
            s: vec![0.0; n],
            r: 0.0,
            d: cfg.d0,
            t: 0,
        }
    }
}

impl StepRule for ProdigyState {
    fn dim(&self) -> usize {
        self.w0.len()
    }

    fn apply(&mut self, w: &mut [f64], g: &[f64], _loss: f64, ctx: &StepContext) {
        let ProdigyConfig { beta1: b1, beta2: b2, eps, .. } = self.cfg;
        self.t += 1;
        let eta = ctx.multiplier;
        let dk = self.d;
        let dk2 = dk * dk;
        let sqrt_b2 = b2.sqrt();

        let mut inner = 0.0;
        for i in 0..g.len() {
            let gi = g[i];
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * dk * gi;
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * dk2 * gi * gi;
            inner += gi * (self.w0[i] - w[i]);
            self.s[i] = sqrt_b2 * self.s[i] + (1.0 - sqrt_b2) * eta * dk2 * gi;
        }
        self.r = sqrt_b2 * self.r + (1.0 - sqrt_b2) * eta * dk2 * inner;

        let s_norm = norm1(&self.s);
        let mut d_hat = if s_norm > 0.0 { self.r / s_norm } else { 0.0 };
        if self.cfg.safeguard_warmup && ctx.warmup {
            d_hat = 0.0;
        }
        self.d = self.d.max(d_hat);

        // Optional Adam-style bias correction folded into the step size.
        let correction = if self.cfg.bias_correction {
            let exp = i32::try_from(self.t).unwrap_or(i32::MAX);
            (1.0 - b2.powi(exp)).sqrt() / (1.0 - b1.powi(exp))
        } else {
            1.0
        };
        let lr = eta * dk * correction;
        let shrink = 1.0 - eta * dk * ctx.weight_decay;
        for i in 0..w.len() {
            w[i] = (w[i] - lr * self.m[i] / (self.v[i].sqrt() + dk * eps)) * shrink;
        }
    }
}
