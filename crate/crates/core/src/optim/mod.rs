//! Step rules for the nine benchmarked training algorithms.
//!
//! Every algorithm is a value-typed state plus a rule that maps
//! `(state, params, grad, ctx)` to a new state and new parameters. The
//! pure entry point is [`step`]; trials use [`OptimizerState::step_mut`],
//! which performs the same computation in place.

mod adam;
mod cocob;
mod dadapt;
mod dog;
mod mechanic;
mod momo;
mod prodigy;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{check_len, GradSample, ParamVector, StepContext};

pub use adam::{AdamConfig, AdamState};
pub use cocob::{CocobConfig, CocobState};
pub use dadapt::{DAdaptConfig, DAdaptState};
pub use dog::{DogConfig, DogState, DowgConfig, DowgState};
pub use mechanic::{MechanicBase, MechanicConfig, MechanicForm, MechanicState, MECHANIC_BETAS};
pub use momo::{MomoConfig, MomoState};
pub use prodigy::{ProdigyConfig, ProdigyState};

/// Stable identifiers used in configs, file names and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "adamw")]
    AdamW,
    #[serde(rename = "nadamw")]
    NadamW,
    #[serde(rename = "dog")]
    Dog,
    #[serde(rename = "dowg")]
    Dowg,
    #[serde(rename = "dadapt_adam")]
    DAdaptAdam,
    #[serde(rename = "prodigy")]
    Prodigy,
    #[serde(rename = "mechanic_adam")]
    MechanicAdam,
    #[serde(rename = "momo")]
    Momo,
    #[serde(rename = "cocob")]
    Cocob,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Algorithm::AdamW,
        Algorithm::NadamW,
        Algorithm::Dog,
        Algorithm::Dowg,
        Algorithm::DAdaptAdam,
        Algorithm::Prodigy,
        Algorithm::MechanicAdam,
        Algorithm::Momo,
        Algorithm::Cocob,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::AdamW => "adamw",
            Algorithm::NadamW => "nadamw",
            Algorithm::Dog => "dog",
            Algorithm::Dowg => "dowg",
            Algorithm::DAdaptAdam => "dadapt_adam",
            Algorithm::Prodigy => "prodigy",
            Algorithm::MechanicAdam => "mechanic_adam",
            Algorithm::Momo => "momo",
            Algorithm::Cocob => "cocob",
        }
    }

    /// Baselines need an explicit base learning rate; every other
    /// algorithm sets its own scale.
    pub fn tunes_base_lr(self) -> bool {
        matches!(self, Algorithm::AdamW | Algorithm::NadamW)
    }

    /// Whether `1 − β1` is a meaningful search dimension.
    pub fn has_beta1(self) -> bool {
        !matches!(self, Algorithm::Dog | Algorithm::Dowg | Algorithm::Cocob)
    }

    /// Whether `1 − β2` is a meaningful search dimension.
    pub fn has_beta2(self) -> bool {
        !matches!(
            self,
            Algorithm::Dog | Algorithm::Dowg | Algorithm::Cocob | Algorithm::Momo
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let name = s.trim().to_ascii_lowercase();
        let alg = match name.as_str() {
            "adamw" => Algorithm::AdamW,
            "nadamw" => Algorithm::NadamW,
            "dog" => Algorithm::Dog,
            "dowg" => Algorithm::Dowg,
            "dadapt_adam" | "dadapt" | "d-adapt" => Algorithm::DAdaptAdam,
            "prodigy" => Algorithm::Prodigy,
            "mechanic_adam" | "mechanic" => Algorithm::MechanicAdam,
            "momo" => Algorithm::Momo,
            "cocob" => Algorithm::Cocob,
            _ => return Err(Error::UnknownAlgorithm(s.to_string())),
        };
        Ok(alg)
    }
}

/// Per-algorithm hyperparameters. Weight decay and the relative schedule
/// are trial-level settings and arrive through [`StepContext`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm")]
pub enum OptimizerConfig {
    #[serde(rename = "adamw")]
    AdamW(AdamConfig),
    #[serde(rename = "nadamw")]
    NadamW(AdamConfig),
    #[serde(rename = "dog")]
    Dog(DogConfig),
    #[serde(rename = "dowg")]
    Dowg(DowgConfig),
    #[serde(rename = "dadapt_adam")]
    DAdaptAdam(DAdaptConfig),
    #[serde(rename = "prodigy")]
    Prodigy(ProdigyConfig),
    #[serde(rename = "mechanic_adam")]
    MechanicAdam(MechanicConfig),
    #[serde(rename = "momo")]
    Momo(MomoConfig),
    #[serde(rename = "cocob")]
    Cocob(CocobConfig),
}

impl OptimizerConfig {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            OptimizerConfig::AdamW(_) => Algorithm::AdamW,
            OptimizerConfig::NadamW(_) => Algorithm::NadamW,
            OptimizerConfig::Dog(_) => Algorithm::Dog,
            OptimizerConfig::Dowg(_) => Algorithm::Dowg,
            OptimizerConfig::DAdaptAdam(_) => Algorithm::DAdaptAdam,
            OptimizerConfig::Prodigy(_) => Algorithm::Prodigy,
            OptimizerConfig::MechanicAdam(_) => Algorithm::MechanicAdam,
            OptimizerConfig::Momo(_) => Algorithm::Momo,
            OptimizerConfig::Cocob(_) => Algorithm::Cocob,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            OptimizerConfig::AdamW(c) | OptimizerConfig::NadamW(c) => c.validate(),
            OptimizerConfig::Dog(c) => c.validate(),
            OptimizerConfig::Dowg(c) => c.validate(),
            OptimizerConfig::DAdaptAdam(c) => c.validate(),
            OptimizerConfig::Prodigy(c) => c.validate(),
            OptimizerConfig::MechanicAdam(c) => c.validate(),
            OptimizerConfig::Momo(c) => c.validate(),
            OptimizerConfig::Cocob(c) => c.validate(),
        }
    }

    /// Sets the base learning rate of the baselines. No-op elsewhere.
    pub fn set_base_lr(&mut self, lr: f64) {
        if let OptimizerConfig::AdamW(c) | OptimizerConfig::NadamW(c) = self {
            c.lr = lr;
        }
    }

    pub fn set_beta1(&mut self, beta1: f64) {
        match self {
            OptimizerConfig::AdamW(c) | OptimizerConfig::NadamW(c) => c.beta1 = beta1,
            OptimizerConfig::DAdaptAdam(c) => c.beta1 = beta1,
            OptimizerConfig::Prodigy(c) => c.beta1 = beta1,
            OptimizerConfig::MechanicAdam(c) => c.base.set_beta1(beta1),
            OptimizerConfig::Momo(c) => c.beta = beta1,
            OptimizerConfig::Dog(_) | OptimizerConfig::Dowg(_) | OptimizerConfig::Cocob(_) => {}
        }
    }

    pub fn set_beta2(&mut self, beta2: f64) {
        match self {
            OptimizerConfig::AdamW(c) | OptimizerConfig::NadamW(c) => c.beta2 = beta2,
            OptimizerConfig::DAdaptAdam(c) => c.beta2 = beta2,
            OptimizerConfig::Prodigy(c) => c.beta2 = beta2,
            OptimizerConfig::MechanicAdam(c) => c.base.set_beta2(beta2),
            _ => {}
        }
    }

    /// Fresh state for parameters `params` (snapshots `w0` where needed).
    pub fn init(&self, params: &ParamVector) -> Result<OptimizerState> {
        self.validate()?;
        let w = params.as_slice();
        let state = match self {
            OptimizerConfig::AdamW(c) => OptimizerState::Adam(AdamState::new(*c, false, w.len())),
            OptimizerConfig::NadamW(c) => OptimizerState::Adam(AdamState::new(*c, true, w.len())),
            OptimizerConfig::Dog(c) => OptimizerState::Dog(DogState::new(*c, w)),
            OptimizerConfig::Dowg(c) => OptimizerState::Dowg(DowgState::new(*c, w)),
            OptimizerConfig::DAdaptAdam(c) => {
                OptimizerState::DAdapt(DAdaptState::new(*c, w.len()))
            }
            OptimizerConfig::Prodigy(c) => OptimizerState::Prodigy(ProdigyState::new(*c, w)),
            OptimizerConfig::MechanicAdam(c) => {
                OptimizerState::Mechanic(MechanicState::new(c.clone(), w))
            }
            OptimizerConfig::Momo(c) => OptimizerState::Momo(MomoState::new(*c, w.len())),
            OptimizerConfig::Cocob(c) => OptimizerState::Cocob(CocobState::new(*c, w)),
        };
        Ok(state)
    }
}

/// Mutable accumulators of one algorithm, bundled with its config.
#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerState {
    Adam(AdamState),
    Dog(DogState),
    Dowg(DowgState),
    DAdapt(DAdaptState),
    Prodigy(ProdigyState),
    Mechanic(MechanicState),
    Momo(MomoState),
    Cocob(CocobState),
}

/// Internal contract each algorithm implements: update `w` in place.
pub(crate) trait StepRule {
    fn dim(&self) -> usize;
    fn apply(&mut self, w: &mut [f64], g: &[f64], loss: f64, ctx: &StepContext);
}

impl OptimizerState {
    fn rule_mut(&mut self) -> &mut dyn StepRule {
        match self {
            OptimizerState::Adam(s) => s,
            OptimizerState::Dog(s) => s,
            OptimizerState::Dowg(s) => s,
            OptimizerState::DAdapt(s) => s,
            OptimizerState::Prodigy(s) => s,
            OptimizerState::Mechanic(s) => s,
            OptimizerState::Momo(s) => s,
            OptimizerState::Cocob(s) => s,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            OptimizerState::Adam(s) => s.dim(),
            OptimizerState::Dog(s) => s.dim(),
            OptimizerState::Dowg(s) => s.dim(),
            OptimizerState::DAdapt(s) => s.dim(),
            OptimizerState::Prodigy(s) => s.dim(),
            OptimizerState::Mechanic(s) => s.dim(),
            OptimizerState::Momo(s) => s.dim(),
            OptimizerState::Cocob(s) => s.dim(),
        }
    }

    /// In-place variant of [`step`]. On error the parameters may hold a
    /// partially applied, non-finite update; callers abort the trial.
    pub fn step_mut(
        &mut self,
        params: &mut ParamVector,
        grad: &GradSample,
        ctx: &StepContext,
    ) -> Result<()> {
        check_len(self.dim(), params.len())?;
        check_len(params.len(), grad.gradient.len())?;
        grad.validate()?;
        ctx.validate()?;
        if !params.is_finite() {
            return Err(Error::NonFinite("parameters before step".into()));
        }
        self.rule_mut().apply(
            params.as_mut_slice(),
            grad.gradient.as_slice(),
            grad.loss,
            ctx,
        );
        if !params.is_finite() {
            return Err(Error::NonFinite(format!("parameters after step {}", ctx.step)));
        }
        Ok(())
    }
}

/// One optimizer step as a pure function of its inputs.
pub fn step(
    state: &OptimizerState,
    params: &ParamVector,
    grad: &GradSample,
    ctx: &StepContext,
) -> Result<(OptimizerState, ParamVector)> {
    let mut next_state = state.clone();
    let mut next_params = params.clone();
    next_state.step_mut(&mut next_params, grad, ctx)?;
    Ok((next_state, next_params))
}

/// Literature defaults with no weight decay, as used for out-of-the-box runs.
pub fn naive_defaults(name: &str) -> Result<OptimizerConfig> {
    let alg: Algorithm = name.parse()?;
    Ok(naive_config(alg))
}

pub fn naive_config(alg: Algorithm) -> OptimizerConfig {
    match alg {
        Algorithm::AdamW => OptimizerConfig::AdamW(AdamConfig::default()),
        Algorithm::NadamW => OptimizerConfig::NadamW(AdamConfig::default()),
        Algorithm::Dog => OptimizerConfig::Dog(DogConfig::default()),
        Algorithm::Dowg => OptimizerConfig::Dowg(DowgConfig::default()),
        Algorithm::DAdaptAdam => OptimizerConfig::DAdaptAdam(DAdaptConfig::default()),
        Algorithm::Prodigy => OptimizerConfig::Prodigy(ProdigyConfig::default()),
        Algorithm::MechanicAdam => OptimizerConfig::MechanicAdam(MechanicConfig::default()),
        Algorithm::Momo => OptimizerConfig::Momo(MomoConfig::default()),
        Algorithm::Cocob => OptimizerConfig::Cocob(CocobConfig::default()),
    }
}

/// Starting point for scheduled (calibrated) runs: the naive defaults with
/// the peak learning rate of the schedule-based variants and the warmup
/// safeguard enabled for Prodigy.
pub fn scheduled_config(alg: Algorithm) -> OptimizerConfig {
    let mut cfg = naive_config(alg);
    match &mut cfg {
        OptimizerConfig::Momo(c) => c.max_lr = 1.0,
        OptimizerConfig::Prodigy(c) => c.safeguard_warmup = true,
        _ => {}
    }
    cfg
}

pub(crate) fn check_unit_interval(name: &str, beta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidConfig(format!("{name} = {beta} must lie in [0, 1)")));
    }
    Ok(())
}

pub(crate) fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidConfig(format!("{name} = {x} must be positive")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(g: Vec<f64>, loss: f64) -> GradSample {
        GradSample::new(ParamVector::new(g), loss, 0)
    }

    #[test]
    fn names_round_trip() {
        for alg in Algorithm::ALL {
            assert_eq!(alg.as_str().parse::<Algorithm>().unwrap(), alg);
            let json = serde_json::to_string(&alg).unwrap();
            assert_eq!(json, format!("\"{}\"", alg.as_str()));
        }
        assert!("sgd".parse::<Algorithm>().is_err());
    }

    #[test]
    fn config_serializes_with_algorithm_tag() {
        let cfg = naive_config(Algorithm::Prodigy);
        let json = serde_json::to_value(&cfg).unwrap();
        assert_eq!(json["algorithm"], "prodigy");
        let back: OptimizerConfig = serde_json::from_value(json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn naive_defaults_match_literature() {
        match naive_defaults("prodigy").unwrap() {
            OptimizerConfig::Prodigy(c) => {
                assert_eq!(c.d0, 1e-6);
                assert_eq!(c.beta1, 0.9);
                assert_eq!(c.beta2, 0.999);
            }
            other => panic!("unexpected {other:?}"),
        }
        match naive_defaults("mechanic").unwrap() {
            OptimizerConfig::MechanicAdam(c) => {
                assert_eq!(c.s_init, 1e-4);
                assert_eq!(c.lambda, 1e-2);
                assert_eq!(c.betas.len(), 6);
            }
            other => panic!("unexpected {other:?}"),
        }
        match naive_defaults("momo").unwrap() {
            OptimizerConfig::Momo(c) => {
                assert_eq!(c.lower_bound, 0.0);
                assert_eq!(c.max_lr, 1e-2);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(naive_defaults("lion"), Err(Error::UnknownAlgorithm(_))));
    }

    #[test]
    fn step_rejects_length_mismatch_and_non_finite() {
        let cfg = naive_config(Algorithm::AdamW);
        let params = ParamVector::zeros(2);
        let state = cfg.init(&params).unwrap();
        let ctx = StepContext::new(0, 1.0, 0.0);
        assert!(matches!(
            step(&state, &params, &sample(vec![1.0], 0.0), &ctx),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            step(&state, &params, &sample(vec![1.0, f64::NAN], 0.0), &ctx),
            Err(Error::NonFinite(_))
        ));
        let wrong_state = cfg.init(&ParamVector::zeros(3)).unwrap();
        assert!(step(&wrong_state, &params, &sample(vec![1.0, 1.0], 0.0), &ctx).is_err());
    }

    #[test]
    fn zero_multiplier_freezes_every_algorithm() {
        let params = ParamVector::new(vec![0.3, -1.2, 2.0]);
        for alg in Algorithm::ALL {
            let mut state = scheduled_config(alg).init(&params).unwrap();
            let mut w = params.clone();
            for k in 0..20u64 {
                let g = sample(vec![0.5 + k as f64, -1.0, 0.25], 1.0 + k as f64);
                let ctx = StepContext::new(k, 0.0, 0.1);
                state.step_mut(&mut w, &g, &ctx).unwrap();
            }
            assert_eq!(w, params, "{alg} moved with a zero multiplier");
        }
    }

    #[test]
    fn zero_gradient_keeps_parameters_without_decay() {
        let params = ParamVector::new(vec![0.3, -1.2]);
        for alg in Algorithm::ALL {
            let mut state = naive_config(alg).init(&params).unwrap();
            let mut w = params.clone();
            for k in 0..10u64 {
                let g = sample(vec![0.0, 0.0], 0.0);
                state.step_mut(&mut w, &g, &StepContext::new(k, 1.0, 0.0)).unwrap();
            }
            assert_eq!(w, params, "{alg} moved with zero gradient");
        }
    }

    #[test]
    fn pure_step_leaves_inputs_untouched() {
        let params = ParamVector::new(vec![1.0, 2.0]);
        for alg in Algorithm::ALL {
            let state = naive_config(alg).init(&params).unwrap();
            let g = sample(vec![0.1, -0.4], 2.0);
            let ctx = StepContext::new(0, 1.0, 0.0);
            let (s1, w1) = step(&state, &params, &g, &ctx).unwrap();
            let (s2, w2) = step(&state, &params, &g, &ctx).unwrap();
            assert_eq!(params.as_slice(), &[1.0, 2.0]);
            assert_eq!(w1, w2);
            assert_eq!(s1, s2);
        }
    }
}
