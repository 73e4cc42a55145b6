//! Flat parameter vectors and the reductions the optimizers are written in.
//!
//! Every reduction walks its inputs once, left to right, with a single
//! accumulator. Results are therefore bit-identical across runs and
//! platforms with IEEE-754 doubles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All trainable parameters of a workload, laid out flat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.0)
    }

    pub fn dot(&self, other: &ParamVector) -> Result<f64> {
        check_len(self.len(), other.len())?;
        Ok(dot(&self.0, &other.0))
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn norm1(&self) -> f64 {
        norm1(&self.0)
    }

    /// `self += alpha * x`
    pub fn axpy(&mut self, alpha: f64, x: &ParamVector) -> Result<()> {
        check_len(self.len(), x.len())?;
        axpy(alpha, &x.0, &mut self.0);
        Ok(())
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// One stochastic oracle answer: loss and gradient on mini-batch `batch_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradSample {
    pub gradient: ParamVector,
    pub loss: f64,
    pub batch_id: u64,
}

impl GradSample {
    pub fn new(gradient: ParamVector, loss: f64, batch_id: u64) -> Self {
        Self { gradient, loss, batch_id }
    }

    /// Rejects NaN/Inf anywhere in the sample.
    pub fn validate(&self) -> Result<()> {
        if !self.loss.is_finite() {
            return Err(Error::NonFinite(format!("loss of batch {}", self.batch_id)));
        }
        if !self.gradient.is_finite() {
            return Err(Error::NonFinite(format!("gradient of batch {}", self.batch_id)));
        }
        Ok(())
    }
}

/// Per-step inputs that do not come from the gradient oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepContext {
    /// Zero-based step index `k`.
    pub step: u64,
    /// Relative schedule value in `[0, 1]`; multiplies every update,
    /// weight decay included.
    pub multiplier: f64,
    /// Decoupled weight decay coefficient.
    pub weight_decay: f64,
    /// True while the relative schedule is still warming up.
    pub warmup: bool,
}

impl StepContext {
    pub fn new(step: u64, multiplier: f64, weight_decay: f64) -> Self {
        Self { step, multiplier, weight_decay, warmup: false }
    }

    pub fn with_warmup(mut self, warmup: bool) -> Self {
        self.warmup = warmup;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.multiplier) {
            return Err(Error::InvalidConfig(format!(
                "schedule multiplier {} outside [0, 1]",
                self.multiplier
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "weight decay {} must be finite and nonnegative",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::LengthMismatch { expected, got });
    }
    Ok(())
}

pub fn all_finite(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub fn sum_sq(a: &[f64]) -> f64 {
    let mut acc = 0.0;
    for x in a {
        acc += x * x;
    }
    acc
}

pub fn norm2(a: &[f64]) -> f64 {
    sum_sq(a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    let mut acc = 0.0;
    for x in a {
        acc += x.abs();
    }
    acc
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `‖a − b‖₂`
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc.sqrt()
}
