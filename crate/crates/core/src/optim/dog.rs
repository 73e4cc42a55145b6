//! Distance over (weighted) gradients: the step size is the largest
//! distance travelled from `w0` divided by accumulated gradient norms.

use serde::{Deserialize, Serialize};

use super::{check_positive, StepRule};
use crate::error::Result;
use crate::tensor::{dist2, sum_sq, StepContext};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DogConfig {
    /// Relative initial movement: `r̄0 = r_eps·(1 + ‖w0‖) / √(‖g0‖² + eps)`.
    pub r_eps: f64,
    pub eps: f64,
}

impl Default for DogConfig {
    fn default() -> Self {
        Self { r_eps: 1e-6, eps: 1e-8 }
    }
}

impl DogConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("r_eps", self.r_eps)?;
        check_positive("eps", self.eps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DogState {
    pub cfg: DogConfig,
    pub w0: Vec<f64>,
    /// Max distance from `w0`; `None` until the first gradient seeds it.
    pub rbar: Option<f64>,
    /// Running sum of squared gradient norms.
    pub grad_sq_sum: f64,
}

impl DogState {
    pub fn new(cfg: DogConfig, w0: &[f64]) -> Self {
        Self { cfg, w0: w0.to_vec(), rbar: None, grad_sq_sum: 0.0 }
    }
}

impl StepRule for DogState {
    fn dim(&self) -> usize {
        self.w0.len()
    }

    fn apply(&mut self, w: &mut [f64], g: &[f64], _loss: f64, ctx: &StepContext) {
        let g_sq = sum_sq(g);
        let rbar = *self.rbar.get_or_insert_with(|| {
            let w0_norm = sum_sq(&self.w0).sqrt();
            self.cfg.r_eps * (1.0 + w0_norm) / (g_sq + self.cfg.eps).sqrt()
        });
        self.grad_sq_sum += g_sq;
        let eta = if self.grad_sq_sum > 0.0 { rbar / self.grad_sq_sum.sqrt() } else { 0.0 };
        let scale = ctx.multiplier * eta;
        let shrink = 1.0 - scale * ctx.weight_decay;
        for (wi, gi) in w.iter_mut().zip(g) {
            *wi = (*wi - scale * gi) * shrink;
        }
        self.rbar = Some(rbar.max(dist2(w, &self.w0)));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DowgConfig {
    /// Initial squared distance estimate `r̄0²`.
    pub r2_init: f64,
}

impl Default for DowgConfig {
    fn default() -> Self {
        Self { r2_init: 1e-4 }
    }
}

impl DowgConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("r2_init", self.r2_init)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DowgState {
    pub cfg: DowgConfig,
    pub w0: Vec<f64>,
    /// Squared max distance from `w0`.
    pub rbar_sq: f64,
    /// `Σ r̄ᵢ²‖gᵢ‖²`
    pub weighted_sum: f64,
}

impl DowgState {
    pub fn new(cfg: DowgConfig, w0: &[f64]) -> Self {
        Self { cfg, w0: w0.to_vec(), rbar_sq: cfg.r2_init, weighted_sum: 0.0 }
    }

    pub fn rbar(&self) -> f64 {
        self.rbar_sq.sqrt()
    }
}

impl StepRule for DowgState {
    fn dim(&self) -> usize {
        self.w0.len()
    }

    fn apply(&mut self, w: &mut [f64], g: &[f64], _loss: f64, ctx: &StepContext) {
        self.weighted_sum += self.rbar_sq * sum_sq(g);
        let eta = if self.weighted_sum > 0.0 {
            self.rbar_sq / self.weighted_sum.sqrt()
        } else {
            0.0
        };
        let scale = ctx.multiplier * eta;
        let shrink = 1.0 - scale * ctx.weight_decay;
        for (wi, gi) in w.iter_mut().zip(g) {
            *wi = (*wi - scale * gi) * shrink;
        }
        let d = dist2(w, &self.w0);
        self.rbar_sq = self.rbar_sq.max(d * d);
    }
}
