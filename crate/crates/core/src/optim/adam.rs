use serde::{Deserialize, Serialize};

use super::{check_positive, check_unit_interval, StepRule};
use crate::error::Result;
use crate::tensor::StepContext;

/// Hyperparameters shared by AdamW and NadamW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    /// Base learning rate; the schedule multiplier scales it every step.
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("lr", self.lr)?;
        check_unit_interval("beta1", self.beta1)?;
        check_unit_interval("beta2", self.beta2)?;
        check_positive("eps", self.eps)
    }
}

/// Bias-corrected first/second moments. `nesterov` selects NadamW.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub cfg: AdamConfig,
    pub nesterov: bool,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(cfg: AdamConfig, nesterov: bool, dim: usize) -> Self {
        Self { cfg, nesterov, m: vec![0.0; dim], v: vec![0.0; dim], t: 0 }
    }

    /// Advances the moments with `g` and writes the unscaled preconditioned
    /// direction `m̂ / (√v̂ + ε)` into `out`.
    pub(crate) fn direction(&mut self, g: &[f64], out: &mut [f64]) {
        let AdamConfig { beta1: b1, beta2: b2, eps, .. } = self.cfg;
        self.t += 1;
        let exp = i32::try_from(self.t).unwrap_or(i32::MAX);
        let bc1 = 1.0 - b1.powi(exp);
        let bc2 = 1.0 - b2.powi(exp);
        for i in 0..g.len() {
            let gi = g[i];
            let m = b1 * self.m[i] + (1.0 - b1) * gi;
            let v = b2 * self.v[i] + (1.0 - b2) * gi * gi;
            self.m[i] = m;
            self.v[i] = v;
            let num = if self.nesterov {
                (b1 * m + (1.0 - b1) * gi) / bc1
            } else {
                m / bc1
            };
            out[i] = num / ((v / bc2).sqrt() + eps);
        }
    }
}

impl StepRule for AdamState {
    fn dim(&self) -> usize {
        self.m.len()
    }

    fn apply(&mut self, w: &mut [f64], g: &[f64], _loss: f64, ctx: &StepContext) {
        let mut dir = vec![0.0; w.len()];
        self.direction(g, &mut dir);
        let lr = self.cfg.lr * ctx.multiplier;
        let shrink = 1.0 - lr * ctx.weight_decay;
        for (wi, di) in w.iter_mut().zip(&dir) {
            *wi = (*wi - lr * di) * shrink;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::{step, OptimizerConfig};
    use crate::tensor::{GradSample, ParamVector};

    fn run(cfg: OptimizerConfig, w0: f64, grads: &[f64], mult: f64, wd: f64) -> Vec<f64> {
        let mut w = ParamVector::new(vec![w0]);
        let mut state = cfg.init(&w).unwrap();
        let mut path = Vec::new();
        for (k, &g) in grads.iter().enumerate() {
            let sample = GradSample::new(ParamVector::new(vec![g]), 0.0, k as u64);
            state
                .step_mut(&mut w, &sample, &StepContext::new(k as u64, mult, wd))
                .unwrap();
            path.push(w.as_slice()[0]);
        }
        path
    }

    #[test]
    fn first_step_is_sign_sized() {
        let cfg = AdamConfig { lr: 1.0, ..AdamConfig::default() };
        let w = run(OptimizerConfig::AdamW(cfg), 0.0, &[2.0], 0.001, 0.0)[0];
        // m̂ = g, v̂ = g² after bias correction.
        let expected = -0.001 * 2.0 / (2.0 + 1e-8);
        assert!(((w - expected) / expected).abs() < 1e-12, "{w} vs {expected}");
        assert!((w + 0.001).abs() < 1e-11);
    }

    #[test]
    fn decoupled_decay_only_with_zero_gradient() {
        let cfg = AdamConfig { lr: 1.0, ..AdamConfig::default() };
        let params = ParamVector::new(vec![1.0]);
        let state = OptimizerConfig::AdamW(cfg).init(&params).unwrap();
        let g = GradSample::new(ParamVector::new(vec![0.0]), 0.0, 0);
        let (_, w) = step(&state, &params, &g, &StepContext::new(0, 0.1, 0.01)).unwrap();
        assert!((w.as_slice()[0] - 0.999).abs() < 1e-15);
    }

    #[test]
    fn nadamw_first_two_steps_differ_only_in_numerator() {
        // f(w) = ½w², w0 = 1, lr = 0.1
        let cfg = AdamConfig { lr: 0.1, ..AdamConfig::default() };
        let (b1, b2, eps, lr) = (0.9f64, 0.999f64, 1e-8, 0.1);

        let mut adam = ParamVector::new(vec![1.0]);
        let mut nadam = adam.clone();
        let mut sa = OptimizerConfig::AdamW(cfg).init(&adam).unwrap();
        let mut sn = OptimizerConfig::NadamW(cfg).init(&nadam).unwrap();

        // Hand execution, both methods share m and v for the same gradient.
        let (mut wa, mut wn) = (1.0f64, 1.0f64);
        let (mut ma, mut va, mut mn, mut vn) = (0.0, 0.0, 0.0, 0.0);
        for t in 1..=2 {
            let (ga, gn) = (wa, wn);
            ma = b1 * ma + (1.0 - b1) * ga;
            va = b2 * va + (1.0 - b2) * ga * ga;
            mn = b1 * mn + (1.0 - b1) * gn;
            vn = b2 * vn + (1.0 - b2) * gn * gn;
            let bc1 = 1.0 - b1.powi(t);
            let bc2 = 1.0 - b2.powi(t);
            let den_a = (va / bc2).sqrt() + eps;
            let den_n = (vn / bc2).sqrt() + eps;
            wa -= lr * (ma / bc1) / den_a;
            wn -= lr * ((b1 * mn + (1.0 - b1) * gn) / bc1) / den_n;

            for (w, s) in [(&mut adam, &mut sa), (&mut nadam, &mut sn)] {
                let g = GradSample::new(w.clone(), 0.0, t as u64);
                s.step_mut(w, &g, &StepContext::new(t as u64 - 1, 1.0, 0.0)).unwrap();
            }
            assert!((adam.as_slice()[0] - wa).abs() <= 1e-12 * wa.abs());
            assert!((nadam.as_slice()[0] - wn).abs() <= 1e-12 * wn.abs());
            if t == 1 {
                // Look-ahead numerator: (β1·m + (1−β1)·g)/(1−β1) = 1.9·g.
                assert!((wa - (1.0 - 0.1 / (1.0 + 1e-8))).abs() < 1e-15);
                assert!((wn - (1.0 - 0.19 / (1.0 + 1e-8))).abs() < 1e-15);
            }
        }
        assert_ne!(adam, nadam);
    }

    #[test]
    fn nadamw_equals_adamw_without_momentum() {
        let cfg = AdamConfig { lr: 0.05, beta1: 0.0, ..AdamConfig::default() };
        let grads: Vec<f64> = (0..200).map(|k| ((k * 37 % 11) as f64 - 5.0) * 0.3).collect();
        let a = run(OptimizerConfig::AdamW(cfg), 0.7, &grads, 0.8, 0.01);
        let n = run(OptimizerConfig::NadamW(cfg), 0.7, &grads, 0.8, 0.01);
        assert_eq!(
            a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            n.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
    }
}
