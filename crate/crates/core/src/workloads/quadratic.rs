use super::{gaussian, normal};
use crate::rng;

const DIM: usize = 100;
const DATA_SEED: u64 = 0x0051_AD01;
/// Standard deviation of the shift between the training minimizer and the
/// validation center.
const VAL_SHIFT: f64 = 0.1;

/// `½(w − w*)ᵀH(w − w*)` with diagonal `H`, eigenvalues log-spaced over
/// `[1e-4, 1]` (condition number 1e4). With `noise > 0` each batch adds a
/// linear term `σ·ξᵀ(w − w*)`, `ξ ~ N(0, I)`, so gradients carry additive
/// Gaussian noise of scale `σ`.
///
/// The validation metric is the same quadratic centered at a slightly
/// shifted point, which gives it a positive floor.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub h: Vec<f64>,
    pub w_star: Vec<f64>,
    pub val_center: Vec<f64>,
    pub noise: f64,
}

impl Quadratic {
    pub fn new(noise: f64) -> Self {
        let h = (0..DIM)
            .map(|i| 10f64.powf(-4.0 + 4.0 * i as f64 / (DIM - 1) as f64))
            .collect();
        let mut r = rng::rng(DATA_SEED);
        let w_star = gaussian(&mut r, DIM, 1.0);
        let val_center = w_star
            .iter()
            .zip(gaussian(&mut r, DIM, VAL_SHIFT))
            .map(|(a, b)| a + b)
            .collect();
        Self { h, w_star, val_center, noise }
    }

    pub fn dim(&self) -> usize {
        DIM
    }

    pub fn loss_grad(&self, w: &[f64], batch_seed: u64, g: &mut [f64]) -> f64 {
        let mut loss = 0.0;
        for i in 0..DIM {
            let d = w[i] - self.w_star[i];
            loss += 0.5 * self.h[i] * d * d;
            g[i] = self.h[i] * d;
        }
        if self.noise > 0.0 {
            let mut r = rng::rng(batch_seed);
            for i in 0..DIM {
                let xi = normal(&mut r);
                loss += self.noise * xi * (w[i] - self.w_star[i]);
                g[i] += self.noise * xi;
            }
        }
        loss
    }

    /// Noise-free training objective.
    pub fn objective(&self, w: &[f64]) -> f64 {
        quad(&self.h, w, &self.w_star)
    }

    pub fn eval(&self, w: &[f64]) -> f64 {
        quad(&self.h, w, &self.val_center)
    }
}

fn quad(h: &[f64], w: &[f64], c: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..h.len() {
        let d = w[i] - c[i];
        acc += 0.5 * h[i] * d * d;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum() {
        let q = Quadratic::new(0.0);
        assert!((q.h[0] - 1e-4).abs() < 1e-18);
        assert!((q.h[DIM - 1] - 1.0).abs() < 1e-15);
        assert!((q.h[DIM - 1] / q.h[0] - 1e4).abs() < 1e-6);
    }

    #[test]
    fn gradient_is_linear() {
        let q = Quadratic::new(0.0);
        let mut g = vec![0.0; DIM];
        let loss = q.loss_grad(&q.w_star, 0, &mut g);
        assert_eq!(loss, 0.0);
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn noise_averages_out() {
        let q = Quadratic::new(0.1);
        let w = vec![0.0; DIM];
        let mut clean = vec![0.0; DIM];
        Quadratic::new(0.0).loss_grad(&w, 0, &mut clean);
        let mut mean = vec![0.0; DIM];
        let n = 2000;
        let mut g = vec![0.0; DIM];
        for s in 0..n {
            q.loss_grad(&w, s, &mut g);
            for i in 0..DIM {
                mean[i] += (g[i] - clean[i]) / n as f64;
            }
        }
        // Sample mean of N(0, 0.01) over 2000 draws: sd ≈ 2.2e-3.
        assert!(mean.iter().all(|m| m.abs() < 0.012));
    }
}
