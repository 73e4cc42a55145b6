//! Desk-scale workload suite.
//!
//! Each workload owns a fixed synthetic dataset (generated from its own data
//! seed), a stochastic loss/gradient oracle keyed by a batch seed, a
//! deterministic validation metric and a target on that metric.

mod logistic;
mod matfact;
mod mlp;
mod quadratic;
mod targets;

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::{GradSample, ParamVector};

pub use logistic::Logistic;
pub use matfact::MatFact;
pub use mlp::Mlp;
pub use quadratic::Quadratic;
pub use targets::{derive_targets, derive_targets_for, oracle_spec as targets_oracle_spec, OracleBudget, OracleRun, TargetDerivation, FROZEN_TARGETS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WorkloadId {
    #[serde(rename = "w1_quadratic")]
    Quadratic,
    #[serde(rename = "w2_noisy_quadratic")]
    NoisyQuadratic,
    #[serde(rename = "w3_logistic")]
    Logistic,
    #[serde(rename = "w4_mlp")]
    Mlp,
    #[serde(rename = "w5_matfact")]
    MatFact,
}

impl WorkloadId {
    pub const ALL: [WorkloadId; 5] = [
        WorkloadId::Quadratic,
        WorkloadId::NoisyQuadratic,
        WorkloadId::Logistic,
        WorkloadId::Mlp,
        WorkloadId::MatFact,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WorkloadId::Quadratic => "w1_quadratic",
            WorkloadId::NoisyQuadratic => "w2_noisy_quadratic",
            WorkloadId::Logistic => "w3_logistic",
            WorkloadId::Mlp => "w4_mlp",
            WorkloadId::MatFact => "w5_matfact",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for WorkloadId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WorkloadId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        WorkloadId::ALL
            .into_iter()
            .find(|w| w.as_str() == lower || w.as_str().split('_').next() == Some(lower.as_str()))
            .ok_or_else(|| Error::UnknownWorkload(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    LowerBetter,
    HigherBetter,
}

impl Direction {
    /// Meets-or-beats comparison.
    pub fn meets(self, metric: f64, target: f64) -> bool {
        match self {
            Direction::LowerBetter => metric <= target,
            Direction::HigherBetter => metric >= target,
        }
    }

    /// Whether `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::LowerBetter => a < b,
            Direction::HigherBetter => a > b,
        }
    }

    /// Loosens `best` by `fraction` in the worse direction.
    pub fn relax(self, best: f64, fraction: f64) -> f64 {
        match self {
            Direction::LowerBetter => best * (1.0 + fraction),
            Direction::HigherBetter => best * (1.0 - fraction),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RegularizerKnobs {
    pub dropout: f64,
    pub label_smoothing: f64,
}

impl RegularizerKnobs {
    pub const NONE: RegularizerKnobs = RegularizerKnobs { dropout: 0.0, label_smoothing: 0.0 };

    /// Zeroes every knob the workload does not support.
    pub fn masked(self, supports: Supports) -> Self {
        Self {
            dropout: if supports.dropout { self.dropout } else { 0.0 },
            label_smoothing: if supports.label_smoothing { self.label_smoothing } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Supports {
    pub dropout: bool,
    pub label_smoothing: bool,
}

#[derive(Debug, Clone)]
pub enum Model {
    Quadratic(Quadratic),
    Logistic(Logistic),
    Mlp(Mlp),
    MatFact(MatFact),
}

#[derive(Debug, Clone)]
pub struct Workload {
    pub id: WorkloadId,
    pub t_max: u64,
    pub target: f64,
    pub direction: Direction,
    pub supports: Supports,
    pub model: Model,
}

impl Workload {
    pub fn new(id: WorkloadId) -> Self {
        let (t_max, supports, model) = match id {
            WorkloadId::Quadratic => (2000, Supports::default(), Model::Quadratic(Quadratic::new(0.0))),
            WorkloadId::NoisyQuadratic => {
                (5000, Supports::default(), Model::Quadratic(Quadratic::new(0.1)))
            }
            WorkloadId::Logistic => (
                5000,
                Supports { dropout: false, label_smoothing: true },
                Model::Logistic(Logistic::new()),
            ),
            WorkloadId::Mlp => (
                10000,
                Supports { dropout: true, label_smoothing: true },
                Model::Mlp(Mlp::new()),
            ),
            WorkloadId::MatFact => (5000, Supports::default(), Model::MatFact(MatFact::new())),
        };
        Self {
            id,
            t_max,
            target: FROZEN_TARGETS[id.index()],
            direction: Direction::LowerBetter,
            supports,
            model,
        }
    }

    pub fn name(&self) -> &'static str {
        self.id.as_str()
    }

    pub fn dim(&self) -> usize {
        match &self.model {
            Model::Quadratic(m) => m.dim(),
            Model::Logistic(m) => m.dim(),
            Model::Mlp(m) => m.dim(),
            Model::MatFact(m) => m.dim(),
        }
    }

    /// Initial parameters for trial seed `seed`.
    pub fn init(&self, seed: u64) -> ParamVector {
        let mut r = rng::rng(rng::derive(seed, 0x1D17));
        let values = match &self.model {
            Model::Quadratic(m) => gaussian(&mut r, m.dim(), 1.0),
            Model::Logistic(m) => vec![0.0; m.dim()],
            Model::Mlp(m) => m.init(&mut r),
            Model::MatFact(m) => gaussian(&mut r, m.dim(), 0.1),
        };
        ParamVector::new(values)
    }

    pub fn check_knobs(&self, knobs: RegularizerKnobs) -> Result<()> {
        if knobs.dropout != 0.0 && !self.supports.dropout {
            return Err(Error::UnsupportedKnob { workload: self.name().into(), knob: "dropout" });
        }
        if knobs.label_smoothing != 0.0 && !self.supports.label_smoothing {
            return Err(Error::UnsupportedKnob {
                workload: self.name().into(),
                knob: "label_smoothing",
            });
        }
        if !(0.0..1.0).contains(&knobs.dropout) || !(0.0..1.0).contains(&knobs.label_smoothing) {
            return Err(Error::InvalidConfig(format!("regularizer knobs out of range: {knobs:?}")));
        }
        Ok(())
    }

    /// Mini-batch loss and gradient. Batch membership, gradient noise and
    /// dropout masks all derive from `batch_seed`.
    pub fn loss_grad(
        &self,
        params: &ParamVector,
        batch_seed: u64,
        knobs: RegularizerKnobs,
    ) -> Result<GradSample> {
        let mut out = GradSample::new(ParamVector::zeros(self.dim()), 0.0, batch_seed);
        self.loss_grad_into(params, batch_seed, knobs, &mut out)?;
        Ok(out)
    }

    /// Allocation-free form of [`Workload::loss_grad`].
    pub fn loss_grad_into(
        &self,
        params: &ParamVector,
        batch_seed: u64,
        knobs: RegularizerKnobs,
        out: &mut GradSample,
    ) -> Result<()> {
        self.check_knobs(knobs)?;
        crate::tensor::check_len(self.dim(), params.len())?;
        crate::tensor::check_len(self.dim(), out.gradient.len())?;
        let w = params.as_slice();
        let g = out.gradient.as_mut_slice();
        out.loss = match &self.model {
            Model::Quadratic(m) => m.loss_grad(w, batch_seed, g),
            Model::Logistic(m) => m.loss_grad(w, batch_seed, knobs.label_smoothing, g),
            Model::Mlp(m) => m.loss_grad(w, batch_seed, knobs, g),
            Model::MatFact(m) => m.loss_grad(w, batch_seed, g),
        };
        out.batch_id = batch_seed;
        Ok(())
    }

    /// Validation metric; deterministic in the parameters.
    pub fn eval(&self, params: &ParamVector) -> f64 {
        let w = params.as_slice();
        match &self.model {
            Model::Quadratic(m) => m.eval(w),
            Model::Logistic(m) => m.eval(w),
            Model::Mlp(m) => m.eval(w),
            Model::MatFact(m) => m.eval(w),
        }
    }

    pub fn meets_target(&self, metric: f64) -> bool {
        self.direction.meets(metric, self.target)
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target = target;
        self
    }

    pub fn descriptor(&self) -> WorkloadDescriptor {
        WorkloadDescriptor {
            name: self.id,
            dim: self.dim(),
            t_max: self.t_max,
            target: self.target,
            direction: self.direction,
            supports: self.supports,
        }
    }
}

/// Manifest-facing summary of a workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadDescriptor {
    pub name: WorkloadId,
    pub dim: usize,
    pub t_max: u64,
    pub target: f64,
    pub direction: Direction,
    pub supports: Supports,
}

/// The five-workload suite with frozen targets.
pub fn suite() -> Vec<Workload> {
    WorkloadId::ALL.into_iter().map(Workload::new).collect()
}

pub fn workload(name: &str) -> Result<Workload> {
    Ok(Workload::new(name.parse()?))
}

/// Dot product with eight interleaved accumulators, combined in a fixed
/// order. Deterministic like the sequential reduction, but vectorizes; used
/// for model arithmetic, not for optimizer state.
#[inline]
pub(crate) fn fdot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

pub(crate) fn normal(r: &mut impl rand::Rng) -> f64 {
    StandardNormal.sample(r)
}

pub(crate) fn gaussian(r: &mut impl rand::Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * normal(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for id in WorkloadId::ALL {
            assert_eq!(id.as_str().parse::<WorkloadId>().unwrap(), id);
            let json = serde_json::to_string(&id).unwrap();
            assert_eq!(json, format!("\"{}\"", id.as_str()));
        }
        assert_eq!("w4".parse::<WorkloadId>().unwrap(), WorkloadId::Mlp);
        assert!("imagenet".parse::<WorkloadId>().is_err());
    }

    #[test]
    fn suite_shape() {
        let s = suite();
        let dims: Vec<usize> = s.iter().map(Workload::dim).collect();
        assert_eq!(dims, vec![100, 100, 50, 50 * 32 + 32 + 32 * 3 + 3, 300]);
        let t: Vec<u64> = s.iter().map(|w| w.t_max).collect();
        assert_eq!(t, vec![2000, 5000, 5000, 10000, 5000]);
    }

    #[test]
    fn unsupported_knobs_rejected() {
        let w = Workload::new(WorkloadId::Quadratic);
        let p = w.init(0);
        let knobs = RegularizerKnobs { dropout: 0.1, label_smoothing: 0.0 };
        assert!(matches!(w.loss_grad(&p, 0, knobs), Err(Error::UnsupportedKnob { .. })));
        let w = Workload::new(WorkloadId::Logistic);
        assert!(w.loss_grad(&w.init(0), 0, knobs).is_err());
        let ls = RegularizerKnobs { dropout: 0.0, label_smoothing: 0.2 };
        assert!(w.loss_grad(&w.init(0), 0, ls).is_ok());
    }

    #[test]
    fn oracle_is_deterministic() {
        for w in suite() {
            let p = w.init(3);
            assert_eq!(p, w.init(3));
            let a = w.loss_grad(&p, 11, RegularizerKnobs::NONE).unwrap();
            let b = w.loss_grad(&p, 11, RegularizerKnobs::NONE).unwrap();
            assert_eq!(a, b);
            assert_eq!(w.eval(&p).to_bits(), w.eval(&p).to_bits());
        }
    }

    #[test]
    fn relaxation() {
        assert!((Direction::LowerBetter.relax(2.0, 0.05) - 2.1).abs() < 1e-15);
        assert!((Direction::HigherBetter.relax(2.0, 0.05) - 1.9).abs() < 1e-15);
        assert!(Direction::LowerBetter.meets(0.3, 0.3));
        assert!(Direction::HigherBetter.meets(0.3, 0.3));
    }
}
