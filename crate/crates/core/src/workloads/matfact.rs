use rand::Rng;

use super::{fdot, gaussian, normal};
use crate::rng;

const ROWS: usize = 30;
const COLS: usize = 30;
const RANK: usize = 5;
const BATCH: usize = 64;
const NOISE: f64 = 0.1;
const DATA_SEED: u64 = 0x0051_AD05;
const DIM: usize = (ROWS + COLS) * RANK;

/// Rank-5 factorization `M ≈ ABᵀ` of a 30×30 matrix observed with additive
/// noise. Batches sample entries with replacement; the metric is the mean
/// squared error against the clean matrix over all entries.
#[derive(Debug, Clone)]
pub struct MatFact {
    pub clean: Vec<f64>,
    pub observed: Vec<f64>,
}

impl MatFact {
    pub fn new() -> Self {
        let mut r = rng::rng(DATA_SEED);
        // Factor entries with variance 1/√RANK give unit-variance products.
        let s = (1.0 / (RANK as f64).sqrt()).sqrt();
        let u = gaussian(&mut r, ROWS * RANK, s);
        let v = gaussian(&mut r, COLS * RANK, s);
        let mut clean = vec![0.0; ROWS * COLS];
        for i in 0..ROWS {
            for j in 0..COLS {
                clean[i * COLS + j] =
                    fdot(&u[i * RANK..(i + 1) * RANK], &v[j * RANK..(j + 1) * RANK]);
            }
        }
        let observed = clean
            .iter()
            .map(|c| c + NOISE * normal(&mut r))
            .collect();
        Self { clean, observed }
    }

    pub fn dim(&self) -> usize {
        DIM
    }

    fn predict(w: &[f64], i: usize, j: usize) -> f64 {
        let a = &w[i * RANK..(i + 1) * RANK];
        let b = &w[(ROWS + j) * RANK..(ROWS + j + 1) * RANK];
        fdot(a, b)
    }

    pub fn loss_grad(&self, w: &[f64], batch_seed: u64, g: &mut [f64]) -> f64 {
        g.fill(0.0);
        let mut r = rng::rng(batch_seed);
        let inv = 1.0 / BATCH as f64;
        let mut loss = 0.0;
        for _ in 0..BATCH {
            let i = r.random_range(0..ROWS);
            let j = r.random_range(0..COLS);
            let e = Self::predict(w, i, j) - self.observed[i * COLS + j];
            loss += 0.5 * e * e * inv;
            let (ai, bj) = (i * RANK, (ROWS + j) * RANK);
            for k in 0..RANK {
                g[ai + k] += e * w[bj + k] * inv;
                g[bj + k] += e * w[ai + k] * inv;
            }
        }
        loss
    }

    pub fn eval(&self, w: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..ROWS {
            for j in 0..COLS {
                let e = Self::predict(w, i, j) - self.clean[i * COLS + j];
                acc += e * e;
            }
        }
        acc / (ROWS * COLS) as f64
    }
}

impl Default for MatFact {
    fn default() -> Self {
        Self::new()
    }
}
