use serde::{Deserialize, Serialize};

use super::{check_positive, check_unit_interval, StepRule};
use crate::error::{Error, Result};
use crate::tensor::{dot, sum_sq, StepContext};

/// Model-based momentum: a truncated Polyak step on an averaged model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomoConfig {
    pub beta: f64,
    /// Step-length cap `α`, multiplied by the schedule each step.
    pub max_lr: f64,
    /// Objective lower bound `f*`.
    pub lower_bound: f64,
}

impl Default for MomoConfig {
    fn default() -> Self {
        Self { beta: 0.9, max_lr: 1e-2, lower_bound: 0.0 }
    }
}

impl MomoConfig {
    pub fn validate(&self) -> Result<()> {
        check_unit_interval("beta", self.beta)?;
        check_positive("max_lr", self.max_lr)?;
        if !self.lower_bound.is_finite() {
            return Err(Error::InvalidConfig("lower bound must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomoState {
    pub cfg: MomoConfig,
    pub initialized: bool,
    /// Loss average `f̄`.
    pub loss_avg: f64,
    /// Gradient average `d`.
    pub d: Vec<f64>,
    /// Average of `⟨∇f, w⟩`.
    pub tau: f64,
    /// Step length used by the last update.
    pub last_step: f64,
    /// Cap `α_k` in force during the last update.
    pub last_cap: f64,
}

impl MomoState {
    pub fn new(cfg: MomoConfig, dim: usize) -> Self {
        Self {
            cfg,
            initialized: false,
            loss_avg: 0.0,
            d: vec![0.0; dim],
            tau: 0.0,
            last_step: 0.0,
            last_cap: 0.0,
        }
    }
}

impl StepRule for MomoState {
    fn dim(&self) -> usize {
        self.d.len()
    }

    fn apply(&mut self, w: &mut [f64], g: &[f64], loss: f64, ctx: &StepContext) {
        let beta = self.cfg.beta;
        let gw = dot(g, w);
        if !self.initialized {
            // The first sample seeds the averages.
            self.loss_avg = loss;
            self.d.copy_from_slice(g);
            self.tau = gw;
            self.initialized = true;
        }
        self.loss_avg = (1.0 - beta) * loss + beta * self.loss_avg;
        self.tau = (1.0 - beta) * gw + beta * self.tau;
        for (di, gi) in self.d.iter_mut().zip(g) {
            *di = (1.0 - beta) * gi + beta * *di;
        }
        let h = self.loss_avg + dot(&self.d, w) - self.tau;
        let d_sq = sum_sq(&self.d);
        let cap = self.cfg.max_lr * ctx.multiplier;
        let step = if d_sq > 0.0 {
            cap.min((h - self.cfg.lower_bound).max(0.0) / d_sq)
        } else {
            0.0
        };
        self.last_step = step;
        self.last_cap = cap;
        let shrink = 1.0 - step * ctx.weight_decay;
        for (wi, di) in w.iter_mut().zip(&self.d) {
            *wi = (*wi - step * di) * shrink;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::OptimizerConfig;
    use crate::tensor::{GradSample, ParamVector};

    #[test]
    fn reduces_to_polyak_step_on_first_update() {
        // f(w) = ½w², w1 = 1, same batch for init and the first update.
        let cfg = MomoConfig { beta: 0.9, max_lr: 1.0, lower_bound: 0.0 };
        let mut w = ParamVector::new(vec![1.0]);
        let mut state = OptimizerConfig::Momo(cfg).init(&w).unwrap();
        let g = GradSample::new(ParamVector::new(vec![1.0]), 0.5, 0);
        state.step_mut(&mut w, &g, &StepContext::new(0, 1.0, 0.0)).unwrap();
        assert!((w.as_slice()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cap_and_truncation() {
        let cfg = MomoConfig { beta: 0.0, max_lr: 0.1, lower_bound: 0.0 };
        let mut s = MomoState::new(cfg, 1);
        let mut w = [1.0];
        // Polyak step would be 50/1 = 50; the cap wins.
        s.apply(&mut w, &[1.0], 50.0, &StepContext::new(0, 1.0, 0.0));
        assert_eq!(s.last_step, 0.1);
        // Loss below the lower bound: truncated to zero.
        let mut s = MomoState::new(MomoConfig { lower_bound: 10.0, ..cfg }, 1);
        let mut w = [1.0];
        s.apply(&mut w, &[1.0], 0.5, &StepContext::new(0, 1.0, 0.0));
        assert_eq!(s.last_step, 0.0);
        assert_eq!(w, [1.0]);
    }
}
