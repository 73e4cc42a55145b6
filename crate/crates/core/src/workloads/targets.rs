//! Validation targets from a tuned-baseline oracle.
//!
//! The oracle trains AdamW under a full-horizon warmup-cosine schedule over
//! a grid of base learning rates and a few seeds. The target is the best
//! metric any oracle run achieved, loosened by 5%.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Workload, WorkloadId};
use crate::error::{Error, Result};
use crate::harness::{run_trial_on, TrialSpec};
use crate::optim::{AdamConfig, OptimizerConfig};
use crate::schedule::ScheduleSpec;
use crate::workloads::RegularizerKnobs;

/// Targets produced by `derive_targets(&OracleBudget::default())`, in
/// suite order. A unit test re-derives and compares them.
pub const FROZEN_TARGETS: [f64; 5] = [
    0.07505718119840325,
    0.08620334754035855,
    0.2179769806277237,
    0.021,
    0.003362443051862689,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleBudget {
    pub learning_rates: Vec<f64>,
    pub seeds: Vec<u64>,
    pub warmup_fraction: f64,
    pub relaxation: f64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            learning_rates: vec![1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2],
            seeds: vec![0, 1, 2],
            warmup_fraction: 0.05,
            relaxation: 0.05,
        }
    }
}

/// One oracle trial, summarized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTrial {
    pub lr: f64,
    pub seed: u64,
    pub best_metric: Option<f64>,
    pub aborted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRun {
    pub workload: WorkloadId,
    pub best_metric: f64,
    pub best_lr: f64,
    pub best_seed: u64,
    pub target: f64,
    pub transcript: Vec<OracleTrial>,
    pub transcript_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDerivation {
    pub budget: OracleBudget,
    pub runs: Vec<OracleRun>,
}

impl TargetDerivation {
    pub fn targets(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.target).collect()
    }
}

pub fn oracle_spec(workload: WorkloadId, lr: f64, seed: u64, warmup: f64) -> TrialSpec {
    TrialSpec {
        config: OptimizerConfig::AdamW(AdamConfig { lr, ..AdamConfig::default() }),
        schedule: ScheduleSpec::warmup_cosine(warmup, 1.0),
        weight_decay: 0.0,
        knobs: RegularizerKnobs::NONE,
        workload,
        seed,
    }
}

/// Runs the oracle grid on every workload of `workloads`.
pub fn derive_targets_for(workloads: &[WorkloadId], budget: &OracleBudget) -> Result<TargetDerivation> {
    if budget.learning_rates.is_empty() || budget.seeds.is_empty() {
        return Err(Error::Empty("oracle grid".into()));
    }
    let mut jobs = Vec::new();
    for &w in workloads {
        for &lr in &budget.learning_rates {
            for &seed in &budget.seeds {
                jobs.push((w, lr, seed));
            }
        }
    }
    let trials: Vec<(WorkloadId, OracleTrial)> = jobs
        .par_iter()
        .map(|&(w, lr, seed)| {
            let wl = Workload::new(w);
            let rec = run_trial_on(&wl, &oracle_spec(w, lr, seed, budget.warmup_fraction))?;
            let best = if rec.aborted {
                None
            } else {
                rec.eval_history
                    .iter()
                    .map(|&(_, m)| m)
                    .reduce(|a, b| if wl.direction.better(b, a) { b } else { a })
            };
            Ok((w, OracleTrial { lr, seed, best_metric: best, aborted: rec.aborted }))
        })
        .collect::<Result<_>>()?;

    let mut runs = Vec::new();
    for &w in workloads {
        let wl = Workload::new(w);
        let transcript: Vec<OracleTrial> =
            trials.iter().filter(|(id, _)| *id == w).map(|(_, t)| t.clone()).collect();
        let mut best: Option<&OracleTrial> = None;
        for t in &transcript {
            if let Some(m) = t.best_metric {
                if best.and_then(|b| b.best_metric).is_none_or(|bm| wl.direction.better(m, bm)) {
                    best = Some(t);
                }
            }
        }
        let best = best.ok_or_else(|| {
            Error::InvalidConfig(format!("oracle diverged on every grid point of {w}"))
        })?;
        let best_metric = best.best_metric.expect("selected run has a metric");
        let bytes = serde_json::to_vec(&transcript)?;
        runs.push(OracleRun {
            workload: w,
            best_metric,
            best_lr: best.lr,
            best_seed: best.seed,
            target: wl.direction.relax(best_metric, budget.relaxation),
            transcript,
            transcript_digest: hex::encode(Sha256::digest(bytes)),
        });
    }
    Ok(TargetDerivation { budget: budget.clone(), runs })
}

pub fn derive_targets(budget: &OracleBudget) -> Result<TargetDerivation> {
    derive_targets_for(&WorkloadId::ALL, budget)
}
