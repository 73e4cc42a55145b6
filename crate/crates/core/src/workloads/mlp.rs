use rand::Rng;

use super::{fdot, gaussian, normal, RegularizerKnobs};
use crate::rng;

const INPUT: usize = 50;
const HIDDEN: usize = 32;
const CLASSES: usize = 3;
const N_TRAIN: usize = 1500;
const N_VAL: usize = 600;
const BATCH: usize = 64;
const DATA_SEED: u64 = 0x0051_AD04;

// Flat parameter layout: [W1 (HIDDEN×INPUT, row-major) | b1 | W2 (CLASSES×HIDDEN) | b2].
const W1: usize = 0;
const B1: usize = W1 + HIDDEN * INPUT;
const W2: usize = B1 + HIDDEN;
const B2: usize = W2 + CLASSES * HIDDEN;
const DIM: usize = B2 + CLASSES;

/// One-hidden-layer tanh network on a three-arm spiral embedded in 50
/// dimensions through a fixed random projection plus isotropic noise.
/// Softmax cross-entropy loss; the metric is validation error rate.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub x_train: Vec<f64>,
    pub y_train: Vec<usize>,
    pub x_val: Vec<f64>,
    pub y_val: Vec<usize>,
}

/// Per-example activations kept for the backward pass.
struct Forward {
    hidden: [f64; HIDDEN],
    logits: [f64; CLASSES],
}

impl Mlp {
    pub fn new() -> Self {
        let mut r = rng::rng(DATA_SEED);
        // Two random directions in input space carry the spiral plane.
        let proj = gaussian(&mut r, 2 * INPUT, (2.0 / INPUT as f64).sqrt());
        let (x_train, y_train) = spiral(&mut r, &proj, N_TRAIN);
        let (x_val, y_val) = spiral(&mut r, &proj, N_VAL);
        Self { x_train, y_train, x_val, y_val }
    }

    pub fn dim(&self) -> usize {
        DIM
    }

    pub fn init(&self, r: &mut impl Rng) -> Vec<f64> {
        let mut w = vec![0.0; DIM];
        let s1 = (1.0 / INPUT as f64).sqrt();
        let s2 = (1.0 / HIDDEN as f64).sqrt();
        for x in &mut w[W1..B1] {
            *x = s1 * normal(r);
        }
        for x in &mut w[W2..B2] {
            *x = s2 * normal(r);
        }
        w
    }

    fn forward(w: &[f64], x: &[f64], mask: Option<&[f64; HIDDEN]>) -> Forward {
        let mut hidden = [0.0; HIDDEN];
        for (j, h) in hidden.iter_mut().enumerate() {
            let row = &w[W1 + j * INPUT..W1 + (j + 1) * INPUT];
            let a = fdot(row, x) + w[B1 + j];
            *h = tanh(a);
            if let Some(m) = mask {
                *h *= m[j];
            }
        }
        let mut logits = [0.0; CLASSES];
        for (c, l) in logits.iter_mut().enumerate() {
            let row = &w[W2 + c * HIDDEN..W2 + (c + 1) * HIDDEN];
            *l = fdot(row, &hidden) + w[B2 + c];
        }
        Forward { hidden, logits }
    }

    pub fn loss_grad(&self, w: &[f64], batch_seed: u64, knobs: RegularizerKnobs, g: &mut [f64]) -> f64 {
        g.fill(0.0);
        let mut r = rng::rng(batch_seed);
        let inv = 1.0 / BATCH as f64;
        let keep = 1.0 - knobs.dropout;
        let eps = knobs.label_smoothing;
        let mut loss = 0.0;
        let mut mask = [1.0; HIDDEN];
        for _ in 0..BATCH {
            let i = r.random_range(0..N_TRAIN);
            let x = &self.x_train[i * INPUT..(i + 1) * INPUT];
            // Inverted dropout; mask entries are 0 or 1/keep.
            let mask_ref = if knobs.dropout > 0.0 {
                for m in &mut mask {
                    *m = if r.random::<f64>() < keep { 1.0 / keep } else { 0.0 };
                }
                Some(&mask)
            } else {
                None
            };
            let f = Self::forward(w, x, mask_ref);
            let logp = log_softmax(&f.logits);
            let mut dlogit = [0.0; CLASSES];
            for c in 0..CLASSES {
                let t = (1.0 - eps) * f64::from(u8::from(c == self.y_train[i])) + eps / CLASSES as f64;
                let pc = logp[c].exp();
                if t > 0.0 {
                    loss -= t * logp[c] * inv;
                }
                dlogit[c] = (pc - t) * inv;
            }
            let mut dhidden = [0.0; HIDDEN];
            for c in 0..CLASSES {
                g[B2 + c] += dlogit[c];
                for j in 0..HIDDEN {
                    g[W2 + c * HIDDEN + j] += dlogit[c] * f.hidden[j];
                    dhidden[j] += dlogit[c] * w[W2 + c * HIDDEN + j];
                }
            }
            for j in 0..HIDDEN {
                // hidden = m·tanh(a), so ∂hidden/∂a = m·(1 − tanh²a).
                let m = mask_ref.map_or(1.0, |mk| mk[j]);
                if m == 0.0 {
                    continue;
                }
                let t = f.hidden[j] / m;
                let da = dhidden[j] * m * (1.0 - t * t);
                g[B1 + j] += da;
                let row = &mut g[W1 + j * INPUT..W1 + (j + 1) * INPUT];
                for (gk, xk) in row.iter_mut().zip(x) {
                    *gk += da * xk;
                }
            }
        }
        loss
    }

    pub fn eval(&self, w: &[f64]) -> f64 {
        let mut wrong = 0usize;
        for i in 0..N_VAL {
            let f = Self::forward(w, &self.x_val[i * INPUT..(i + 1) * INPUT], None);
            if argmax(&f.logits) != self.y_val[i] {
                wrong += 1;
            }
        }
        wrong as f64 / N_VAL as f64
    }
}

impl Default for Mlp {
    fn default() -> Self {
        Self::new()
    }
}

fn spiral(r: &mut impl Rng, proj: &[f64], n: usize) -> (Vec<f64>, Vec<usize>) {
    let mut x = Vec::with_capacity(n * INPUT);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % CLASSES;
        let t: f64 = r.random();
        let e = normal(r);
        let theta = 4.0 * t + class as f64 * 2.0 * std::f64::consts::PI / CLASSES as f64 + 0.2 * e;
        let (p0, p1) = (2.0 * t * theta.sin(), 2.0 * t * theta.cos());
        for k in 0..INPUT {
            let noise = normal(r);
            x.push(proj[2 * k] * p0 + proj[2 * k + 1] * p1 + 0.05 * noise);
        }
        y.push(class);
    }
    (x, y)
}

/// `tanh` through one `exp`; several times faster than the libm routine and
/// within a few ulps of it.
fn tanh(a: f64) -> f64 {
    if a.abs() > 20.0 {
        return a.signum();
    }
    1.0 - 2.0 / ((2.0 * a).exp() + 1.0)
}

fn log_softmax(z: &[f64; CLASSES]) -> [f64; CLASSES] {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = z.iter().map(|zi| (zi - max).exp()).sum();
    let lse = max + sum.ln();
    let mut out = [0.0; CLASSES];
    for (o, zi) in out.iter_mut().zip(z) {
        *o = zi - lse;
    }
    out
}

fn argmax(z: &[f64; CLASSES]) -> usize {
    let mut best = 0;
    for c in 1..CLASSES {
        if z[c] > z[best] {
            best = c;
        }
    }
    best
}
