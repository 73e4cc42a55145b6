use serde::{Deserialize, Serialize};

use super::{check_positive, StepRule};
use crate::error::Result;
use crate::tensor::StepContext;

/// Per-coordinate coin betting (COCOB-Backprop).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CocobConfig {
    /// Caps the bet fraction through `max(G + L, α·L)`.
    pub alpha: f64,
    /// Initial gradient-scale estimate `L0`.
    pub l_init: f64,
}

impl Default for CocobConfig {
    fn default() -> Self {
        Self { alpha: 100.0, l_init: 1.0 }
    }
}

impl CocobConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("alpha", self.alpha)?;
        check_positive("l_init", self.l_init)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CocobState {
    pub cfg: CocobConfig,
    pub w_init: Vec<f64>,
    /// Gradient-scale estimate per coordinate.
    pub scale: Vec<f64>,
    /// Sum of absolute gradients.
    pub abs_sum: Vec<f64>,
    pub reward: Vec<f64>,
    /// Sum of negative gradients.
    pub theta: Vec<f64>,
}

impl CocobState {
    pub fn new(cfg: CocobConfig, w: &[f64]) -> Self {
        let n = w.len();
        Self {
            cfg,
            w_init: w.to_vec(),
            scale: vec![cfg.l_init; n],
            abs_sum: vec![0.0; n],
            reward: vec![0.0; n],
            theta: vec![0.0; n],
        }
    }
}

impl StepRule for CocobState {
    fn dim(&self) -> usize {
        self.w_init.len()
    }

    fn apply(&mut self, w: &mut [f64], g: &[f64], _loss: f64, ctx: &StepContext) {
        let alpha = self.cfg.alpha;
        let eta = ctx.multiplier;
        let shrink = 1.0 - eta * ctx.weight_decay;
        for i in 0..w.len() {
            let gi = g[i];
            let l = self.scale[i].max(gi.abs());
            self.scale[i] = l;
            self.abs_sum[i] += gi.abs();
            self.reward[i] = (self.reward[i] - gi * (w[i] - self.w_init[i])).max(0.0);
            self.theta[i] -= gi;
            let bet = self.theta[i] / (l * (self.abs_sum[i] + l).max(alpha * l));
            let target = self.w_init[i] + bet * (l + self.reward[i]);
            w[i] = (w[i] + eta * (target - w[i])) * shrink;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::{step, OptimizerConfig, OptimizerState};
    use crate::tensor::{GradSample, ParamVector};

    #[test]
    fn hand_executed_first_step() {
        let params = ParamVector::new(vec![0.0]);
        let state = OptimizerConfig::Cocob(CocobConfig::default()).init(&params).unwrap();
        let g = GradSample::new(ParamVector::new(vec![1.0]), 0.0, 0);
        let (state, w) = step(&state, &params, &g, &StepContext::new(0, 1.0, 0.0)).unwrap();
        assert!(((w.as_slice()[0] + 0.01) / 0.01).abs() < 1e-12);
        match state {
            OptimizerState::Cocob(s) => {
                assert_eq!(s.scale, vec![1.0]);
                assert_eq!(s.abs_sum, vec![1.0]);
                assert_eq!(s.reward, vec![0.0]);
                assert_eq!(s.theta, vec![-1.0]);
            }
            _ => unreachable!(),
        }
    }
}
