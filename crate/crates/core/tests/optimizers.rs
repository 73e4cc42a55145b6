use lrfbench::optim::{
    naive_config, scheduled_config, AdamConfig, Algorithm, OptimizerConfig, OptimizerState,
};
use lrfbench::tensor::{GradSample, ParamVector, StepContext};
use lrfbench::workloads::{RegularizerKnobs, Workload, WorkloadId};
use proptest::prelude::*;

/// Runs `alg` on the sequence of gradients, calling `inspect` after each
/// successful step. Stops at the first non-finite update.
fn drive(
    alg: Algorithm,
    w0: Vec<f64>,
    grads: &[(Vec<f64>, f64, f64)],
    wd: f64,
    mut inspect: impl FnMut(&OptimizerState),
) {
    let mut w = ParamVector::new(w0);
    let mut state = naive_config(alg).init(&w).unwrap();
    for (t, (g, loss, mult)) in grads.iter().enumerate() {
        let s = GradSample::new(ParamVector::new(g.clone()), *loss, t as u64);
        let ctx = StepContext::new(t as u64, *mult, wd).with_warmup(t < 5);
        if state.step_mut(&mut w, &s, &ctx).is_err() {
            return;
        }
        inspect(&state);
    }
}

fn steps(dim: usize) -> impl Strategy<Value = Vec<(Vec<f64>, f64, f64)>> {
    prop::collection::vec(
        (prop::collection::vec(-5.0f64..5.0, dim), 0.0f64..10.0, 0.0f64..=1.0),
        1..60,
    )
}

fn case() -> impl Strategy<Value = (Vec<f64>, Vec<(Vec<f64>, f64, f64)>, f64)> {
    (1usize..6).prop_flat_map(|d| {
        (prop::collection::vec(-3.0f64..3.0, d), steps(d), prop_oneof![Just(0.0), 0.0f64..0.1])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_estimates_never_shrink((w0, grads, wd) in case()) {
        for alg in [Algorithm::Prodigy, Algorithm::DAdaptAdam, Algorithm::Dog, Algorithm::Dowg] {
            let mut prev = 0.0;
            let mut ok = true;
            drive(alg, w0.clone(), &grads, wd, |s| {
                let d = match s {
                    OptimizerState::Prodigy(s) => s.d,
                    OptimizerState::DAdapt(s) => s.d,
                    OptimizerState::Dog(s) => s.rbar.unwrap_or(0.0),
                    OptimizerState::Dowg(s) => s.rbar(),
                    _ => unreachable!(),
                };
                ok &= d >= prev;
                prev = d;
            });
            prop_assert!(ok, "{} estimate decreased", alg);
        }
    }

    #[test]
    fn wealth_and_rewards_stay_nonnegative((w0, grads, wd) in case()) {
        let mut ok = true;
        drive(Algorithm::MechanicAdam, w0.clone(), &grads, wd, |s| {
            let OptimizerState::Mechanic(s) = s else { unreachable!() };
            ok &= s.r.iter().chain(&s.s).all(|&x| x >= 0.0);
        });
        let mut prev: Option<Vec<f64>> = None;
        drive(Algorithm::Cocob, w0.clone(), &grads, wd, |s| {
            let OptimizerState::Cocob(s) = s else { unreachable!() };
            ok &= s.reward.iter().all(|&x| x >= 0.0);
            if let Some(p) = &prev {
                ok &= s.scale.iter().zip(p).all(|(a, b)| a >= b);
            }
            prev = Some(s.scale.clone());
        });
        prop_assert!(ok);
    }

    #[test]
    fn momo_step_within_cap((w0, grads, wd) in case()) {
        let mut ok = true;
        drive(Algorithm::Momo, w0, &grads, wd, |s| {
            let OptimizerState::Momo(s) = s else { unreachable!() };
            ok &= s.last_step >= 0.0 && s.last_step <= s.last_cap;
        });
        prop_assert!(ok);
    }

    /// A zero multiplier freezes every algorithm except for weight decay,
    /// which is also scaled by the multiplier.
    #[test]
    fn zero_multiplier_is_a_no_op((w0, grads, _wd) in case()) {
        for alg in Algorithm::ALL {
            let mut w = ParamVector::new(w0.clone());
            let mut state = scheduled_config(alg).init(&w).unwrap();
            for (t, (g, loss, _)) in grads.iter().enumerate() {
                let s = GradSample::new(ParamVector::new(g.clone()), *loss, t as u64);
                state.step_mut(&mut w, &s, &StepContext::new(t as u64, 0.0, 0.05)).unwrap();
            }
            prop_assert_eq!(w.as_slice(), &w0[..], "{} moved", alg);
        }
    }
}

#[test]
fn nadamw_without_momentum_matches_adamw_on_the_quadratic() {
    let wl = Workload::new(WorkloadId::Quadratic);
    for lr in [1e-3, 3e-2] {
        let cfg = AdamConfig { beta1: 0.0, lr, ..AdamConfig::default() };
        let mut a = wl.init(1);
        let mut n = a.clone();
        let mut sa = OptimizerConfig::AdamW(cfg).init(&a).unwrap();
        let mut sn = OptimizerConfig::NadamW(cfg).init(&n).unwrap();
        for t in 0..1000 {
            let ga = wl.loss_grad(&a, t, RegularizerKnobs::NONE).unwrap();
            let gn = wl.loss_grad(&n, t, RegularizerKnobs::NONE).unwrap();
            let ctx = StepContext::new(t, 0.5 + 0.5 * (t as f64 * 0.01).cos(), 1e-2);
            sa.step_mut(&mut a, &ga, &ctx).unwrap();
            sn.step_mut(&mut n, &gn, &ctx).unwrap();
        }
        let bits = |p: &ParamVector| p.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&n));
    }
}

#[test]
fn configs_round_trip_through_json() {
    for alg in Algorithm::ALL {
        for cfg in [naive_config(alg), scheduled_config(alg)] {
            let text = serde_json::to_string(&cfg).unwrap();
            let back: OptimizerConfig = serde_json::from_str(&text).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.algorithm(), alg);
            assert_eq!(alg.as_str().parse::<Algorithm>().unwrap(), alg);
        }
    }
    assert!(serde_json::from_str::<OptimizerConfig>(r#"{"algorithm":"sgd"}"#).is_err());
}

#[test]
fn invalid_hyperparameters_are_rejected() {
    let mut cfg = naive_config(Algorithm::Prodigy);
    cfg.set_beta1(1.5);
    assert!(cfg.init(&ParamVector::zeros(3)).is_err());
    let mut cfg = naive_config(Algorithm::AdamW);
    cfg.set_base_lr(-1.0);
    assert!(cfg.init(&ParamVector::zeros(3)).is_err());
}

#[test]
fn length_mismatch_is_an_error() {
    let w = ParamVector::zeros(3);
    let mut state = naive_config(Algorithm::Cocob).init(&w).unwrap();
    let mut w = w;
    let g = GradSample::new(ParamVector::zeros(2), 0.0, 0);
    assert!(state.step_mut(&mut w, &g, &StepContext::new(0, 1.0, 0.0)).is_err());
}
