//! Fixed-hyperparameter training loop for one trial.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::optim::{Algorithm, OptimizerConfig};
use crate::rng;
use crate::schedule::{RelativeSchedule, ScheduleShape, ScheduleSpec};
use crate::scoring::Time;
use crate::tensor::{GradSample, ParamVector, StepContext};
use crate::workloads::{RegularizerKnobs, Workload, WorkloadId};

const BATCH_STREAM: u64 = 0xBA7C;

/// Everything that determines one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub config: OptimizerConfig,
    pub schedule: ScheduleSpec,
    pub weight_decay: f64,
    pub knobs: RegularizerKnobs,
    pub workload: WorkloadId,
    pub seed: u64,
}

impl TrialSpec {
    pub fn algorithm(&self) -> Algorithm {
        self.config.algorithm()
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.schedule.validate()?;
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "weight decay {} must be finite and nonnegative",
                self.weight_decay
            )));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("trial spec serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub spec: TrialSpec,
    pub spec_digest: String,
    pub t_max: u64,
    pub target: f64,
    /// Number of optimizer steps actually scheduled.
    pub steps: u64,
    pub initial_metric: f64,
    /// `(step, metric)` with strictly increasing steps.
    pub eval_history: Vec<(u64, f64)>,
    pub steps_to_target: Option<u64>,
    pub final_metric: f64,
    pub aborted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort_reason: Option<String>,
}

impl TrialRecord {
    pub fn runtime_fraction(&self) -> Time {
        runtime_fraction(self.steps_to_target, self.t_max)
    }

    /// First eval meeting `target`, for re-scoring a record under a
    /// different target.
    pub fn steps_to(&self, workload: &Workload, target: f64) -> Option<u64> {
        if self.aborted {
            return None;
        }
        first_meeting(&self.eval_history, |m| workload.direction.meets(m, target))
    }
}

pub fn runtime_fraction(steps_to_target: Option<u64>, t_max: u64) -> Time {
    steps_to_target.map_or(Time::Unreached, |s| Time::Reached(s as f64 / t_max as f64))
}

/// `max(1, t_max / 100)`.
pub fn eval_every(t_max: u64) -> u64 {
    (t_max / 100).max(1)
}

/// First recorded step whose metric satisfies `meets`.
pub fn first_meeting(history: &[(u64, f64)], meets: impl Fn(f64) -> bool) -> Option<u64> {
    history.iter().find(|(_, m)| meets(*m)).map(|(s, _)| *s)
}

/// Runs `spec` on the workload named in it, with the suite's frozen target.
pub fn run_trial(spec: &TrialSpec) -> Result<TrialRecord> {
    let workload = Workload::new(spec.workload);
    run_trial_on(&workload, spec)
}

/// Runs `spec` against an explicit workload instance (custom targets).
pub fn run_trial_on(workload: &Workload, spec: &TrialSpec) -> Result<TrialRecord> {
    if workload.id != spec.workload {
        return Err(Error::InvalidConfig(format!(
            "spec names {} but workload is {}",
            spec.workload, workload.id
        )));
    }
    spec.validate()?;
    workload.check_knobs(spec.knobs)?;
    let sched = spec.schedule.resolve(workload.t_max);
    let steps = match sched.shape {
        ScheduleShape::Constant => workload.t_max,
        ScheduleShape::WarmupCosine => sched.horizon_steps.min(workload.t_max),
    };
    run_with(workload, spec, steps, |t| (sched.multiplier(t), sched.in_warmup(t)))
}

/// Training loop with an arbitrary multiplier source; `schedule(t)` returns
/// the multiplier for 0-based step `t` and whether it is a warmup step.
pub fn run_with(
    workload: &Workload,
    spec: &TrialSpec,
    steps: u64,
    schedule: impl Fn(u64) -> (f64, bool),
) -> Result<TrialRecord> {
    let mut params = workload.init(spec.seed);
    let mut state = spec.config.init(&params)?;
    let initial_metric = workload.eval(&params);
    let every = eval_every(workload.t_max);
    let batch_root = rng::derive(spec.seed, BATCH_STREAM);

    let mut grad = GradSample::new(ParamVector::zeros(workload.dim()), 0.0, 0);
    let mut history = Vec::with_capacity((steps / every + 1) as usize);
    let mut abort_reason = None;
    let mut final_metric = initial_metric;

    for t in 0..steps {
        let batch_seed = rng::derive(batch_root, t);
        workload.loss_grad_into(&params, batch_seed, spec.knobs, &mut grad)?;
        let (multiplier, warmup) = schedule(t);
        let ctx = StepContext::new(t, multiplier, spec.weight_decay).with_warmup(warmup);
        if let Err(e) = state.step_mut(&mut params, &grad, &ctx) {
            match e {
                Error::NonFinite(_) => {
                    abort_reason = Some(e.to_string());
                    break;
                }
                other => return Err(other),
            }
        }
        let done = t + 1;
        if done % every == 0 || done == steps {
            let metric = workload.eval(&params);
            if !metric.is_finite() {
                abort_reason = Some(format!("non-finite metric at step {done}"));
                break;
            }
            history.push((done, metric));
            final_metric = metric;
        }
    }

    let aborted = abort_reason.is_some();
    let steps_to_target = if aborted {
        None
    } else {
        first_meeting(&history, |m| workload.meets_target(m))
    };
    Ok(TrialRecord {
        spec: spec.clone(),
        spec_digest: spec.digest(),
        t_max: workload.t_max,
        target: workload.target,
        steps,
        initial_metric,
        eval_history: history,
        steps_to_target,
        final_metric,
        aborted,
        abort_reason,
    })
}

/// Convenience: the resolved schedule for a spec on its workload.
pub fn resolved_schedule(spec: &TrialSpec) -> RelativeSchedule {
    spec.schedule.resolve(Workload::new(spec.workload).t_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::naive_config;

    fn spec(alg: Algorithm, wl: WorkloadId) -> TrialSpec {
        TrialSpec {
            config: naive_config(alg),
            schedule: ScheduleSpec::constant(),
            weight_decay: 0.0,
            knobs: RegularizerKnobs::NONE,
            workload: wl,
            seed: 7,
        }
    }

    #[test]
    fn meets_or_beats_at_equality() {
        let h = [(100, 0.5), (200, 0.3), (300, 0.1)];
        assert_eq!(first_meeting(&h, |m| m <= 0.3), Some(200));
        assert_eq!(first_meeting(&h, |m| m <= 0.01), None);
    }

    #[test]
    fn fractions() {
        assert_eq!(runtime_fraction(Some(15999), 31998), Time::Reached(0.5));
        match runtime_fraction(Some(15999), 32000) {
            Time::Reached(f) => assert!((f - 0.49997).abs() < 1e-5),
            Time::Unreached => panic!(),
        }
        assert_eq!(runtime_fraction(None, 10), Time::Unreached);
        assert_eq!(eval_every(2000), 20);
        assert_eq!(eval_every(50), 1);
    }

    #[test]
    fn deterministic_records() {
        let s = spec(Algorithm::Prodigy, WorkloadId::Logistic);
        let a = run_trial(&s).unwrap();
        let b = run_trial(&s).unwrap();
        assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
        assert_eq!(a.eval_history.len(), 100);
        assert!(a.eval_history.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn zero_multiplier_keeps_initial_metric() {
        let s = spec(Algorithm::AdamW, WorkloadId::MatFact);
        let w = Workload::new(WorkloadId::MatFact);
        let rec = run_with(&w, &s, 300, |_| (0.0, false)).unwrap();
        assert_eq!(rec.final_metric, rec.initial_metric);
    }

    #[test]
    fn scheduled_trials_stop_at_horizon() {
        let mut s = spec(Algorithm::AdamW, WorkloadId::Quadratic);
        s.schedule = ScheduleSpec::warmup_cosine(0.05, 0.33);
        let rec = run_trial(&s).unwrap();
        assert_eq!(rec.steps, 660);
        assert_eq!(rec.eval_history.last().unwrap().0, 660);
    }

    #[test]
    fn wrong_workload_instance_rejected() {
        let s = spec(Algorithm::AdamW, WorkloadId::Quadratic);
        assert!(run_trial_on(&Workload::new(WorkloadId::Logistic), &s).is_err());
    }
}
