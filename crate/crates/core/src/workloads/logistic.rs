use rand::Rng;

use super::{fdot, normal};
use crate::rng;

const DIM: usize = 50;
const N_TRAIN: usize = 1024;
const N_VAL: usize = 1000;
const BATCH: usize = 32;
const DATA_SEED: u64 = 0x0051_AD03;
/// Norm of each class mean; the classes overlap, so the minimizer is finite.
const MEAN_NORM: f64 = 1.5;

/// Binary logistic regression on two Gaussian classes with means `±μ` and
/// identity covariance. Labels are 0/1, there is no bias term. The metric
/// is the validation log-loss.
#[derive(Debug, Clone)]
pub struct Logistic {
    pub x_train: Vec<f64>,
    pub y_train: Vec<f64>,
    pub x_val: Vec<f64>,
    pub y_val: Vec<f64>,
}

impl Logistic {
    pub fn new() -> Self {
        let mut r = rng::rng(DATA_SEED);
        let raw: Vec<f64> = (0..DIM).map(|_| normal(&mut r)).collect();
        let scale = MEAN_NORM / raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mu: Vec<f64> = raw.iter().map(|x| x * scale).collect();
        let (x_train, y_train) = sample(&mut r, &mu, N_TRAIN);
        let (x_val, y_val) = sample(&mut r, &mu, N_VAL);
        Self { x_train, y_train, x_val, y_val }
    }

    pub fn dim(&self) -> usize {
        DIM
    }

    pub fn loss_grad(&self, w: &[f64], batch_seed: u64, smoothing: f64, g: &mut [f64]) -> f64 {
        g.fill(0.0);
        let mut r = rng::rng(batch_seed);
        let mut loss = 0.0;
        let inv = 1.0 / BATCH as f64;
        for _ in 0..BATCH {
            let i = r.random_range(0..N_TRAIN);
            let x = &self.x_train[i * DIM..(i + 1) * DIM];
            let y = self.y_train[i] * (1.0 - smoothing) + 0.5 * smoothing;
            let z = fdot(w, x);
            loss += (softplus(z) - y * z) * inv;
            let coef = (sigmoid(z) - y) * inv;
            for (gj, xj) in g.iter_mut().zip(x) {
                *gj += coef * xj;
            }
        }
        loss
    }

    pub fn eval(&self, w: &[f64]) -> f64 {
        let mut loss = 0.0;
        for i in 0..N_VAL {
            let z = fdot(w, &self.x_val[i * DIM..(i + 1) * DIM]);
            loss += softplus(z) - self.y_val[i] * z;
        }
        loss / N_VAL as f64
    }
}

impl Default for Logistic {
    fn default() -> Self {
        Self::new()
    }
}

fn sample(r: &mut impl Rng, mu: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(n * DIM);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        // Balanced classes, alternating.
        let label = (i % 2) as f64;
        let sign = 2.0 * label - 1.0;
        for m in mu {
            let e = normal(r);
            x.push(sign * m + e);
        }
        y.push(label);
    }
    (x, y)
}

/// `ln(1 + eᶻ)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_give_ln2() {
        let l = Logistic::new();
        let w = vec![0.0; DIM];
        // Mean of 1000 equal terms: rounding accumulates past one ulp.
        assert!((l.eval(&w) - std::f64::consts::LN_2).abs() < 1e-13);
        let mut g = vec![0.0; DIM];
        let loss = l.loss_grad(&w, 5, 0.0, &mut g);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn stable_helpers() {
        assert_eq!(softplus(-800.0), 0.0);
        assert_eq!(softplus(800.0), 800.0);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-16);
    }
}
