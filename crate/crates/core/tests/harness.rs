use lrfbench::harness::{eval_every, run_trial, TrialRecord, TrialSpec};
use lrfbench::optim::{naive_config, scheduled_config, Algorithm};
use lrfbench::schedule::ScheduleSpec;
use lrfbench::workloads::{RegularizerKnobs, Workload, WorkloadId};
use proptest::prelude::*;

fn spec(alg: Algorithm, id: WorkloadId, seed: u64) -> TrialSpec {
    TrialSpec {
        config: scheduled_config(alg),
        schedule: ScheduleSpec::warmup_cosine(0.05, 0.5),
        weight_decay: 1e-4,
        knobs: RegularizerKnobs::NONE,
        workload: id,
        seed,
    }
}

#[test]
fn record_json_round_trip_is_byte_stable() {
    let rec = run_trial(&spec(Algorithm::Prodigy, WorkloadId::Logistic, 1)).unwrap();
    let a = serde_json::to_string_pretty(&rec).unwrap();
    let back: TrialRecord = serde_json::from_str(&a).unwrap();
    assert_eq!(back, rec);
    assert_eq!(serde_json::to_string_pretty(&back).unwrap(), a);
}

#[test]
fn history_invariants() {
    for alg in Algorithm::ALL {
        let rec = run_trial(&spec(alg, WorkloadId::Quadratic, 3)).unwrap();
        assert!(rec.eval_history.windows(2).all(|w| w[0].0 < w[1].0));
        let every = eval_every(rec.t_max);
        for &(s, _) in rec.eval_history.iter().rev().skip(1) {
            assert_eq!(s % every, 0);
        }
        if !rec.aborted {
            assert_eq!(rec.eval_history.last().map(|e| e.0), Some(rec.steps));
        }
        if let Some(s) = rec.steps_to_target {
            let m = rec.eval_history.iter().find(|e| e.0 == s).expect("in history").1;
            assert!(m <= rec.target);
        }
    }
}

#[test]
fn constant_schedule_runs_full_budget() {
    let s = TrialSpec { config: naive_config(Algorithm::Dog), schedule: ScheduleSpec::constant(), ..spec(Algorithm::Dog, WorkloadId::Quadratic, 0) };
    let rec = run_trial(&s).unwrap();
    assert_eq!(rec.steps, rec.t_max);
    assert_eq!(rec.eval_history.len(), 100);
}

#[test]
fn divergence_aborts_as_unreached() {
    let mut cfg = naive_config(Algorithm::AdamW);
    cfg.set_base_lr(1e6);
    let s = TrialSpec { config: cfg, schedule: ScheduleSpec::constant(), ..spec(Algorithm::AdamW, WorkloadId::MatFact, 0) };
    let rec = run_trial(&s).unwrap();
    assert!(rec.aborted);
    assert!(rec.abort_reason.is_some());
    assert_eq!(rec.steps_to_target, None);
    assert!(!rec.runtime_fraction().is_reached());
}

#[test]
fn unsupported_knob_is_an_error() {
    let s = TrialSpec { knobs: RegularizerKnobs { dropout: 0.1, label_smoothing: 0.0 }, ..spec(Algorithm::Prodigy, WorkloadId::Quadratic, 0) };
    assert!(run_trial(&s).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Loosening a lower-better target never delays the first hit.
    #[test]
    fn relaxing_the_target_never_delays(seed in 0u64..1000, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let wl = Workload::new(WorkloadId::Quadratic);
        let rec = run_trial(&spec(Algorithm::MechanicAdam, WorkloadId::Quadratic, seed)).unwrap();
        let lo = rec.final_metric.min(rec.initial_metric) * (1.0 + a);
        let hi = lo * (1.0 + b);
        let strict = rec.steps_to(&wl, lo);
        let loose = rec.steps_to(&wl, hi);
        if let Some(s) = strict {
            prop_assert!(loose.is_some_and(|l| l <= s));
        }
    }

    #[test]
    fn trials_are_deterministic(seed in 0u64..1000) {
        let s = spec(Algorithm::Cocob, WorkloadId::Logistic, seed);
        prop_assert_eq!(run_trial(&s).unwrap(), run_trial(&s).unwrap());
    }
}
