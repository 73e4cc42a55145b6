use lrfbench::scoring::{
    benchmark_score, benchmark_scores, geometric_mean_cost, profile, profiles, Time, TimeTable,
};
use proptest::prelude::*;

fn time() -> impl Strategy<Value = Time> {
    prop_oneof![
        1 => Just(Time::Unreached),
        3 => (0.001f64..2.0).prop_map(Time::Reached),
        1 => Just(Time::Reached(0.5)),
    ]
}

fn table() -> impl Strategy<Value = TimeTable> {
    (1usize..6, 1usize..7).prop_flat_map(|(s, w)| {
        prop::collection::vec(prop::collection::vec(time(), w), s).prop_map(move |times| {
            TimeTable::new(
                (0..s).map(|i| format!("alg{i}")).collect(),
                (0..w).map(|i| format!("wl{i}")).collect(),
                times,
            )
            .unwrap()
        })
    })
}

proptest! {
    #[test]
    fn profiles_are_monotone_and_bounded(tbl in table(), taus in prop::collection::vec(0.5f64..10.0, 1..20)) {
        for p in profiles(&tbl) {
            let mut taus = taus.clone();
            taus.sort_by(f64::total_cmp);
            let vals: Vec<f64> = taus.iter().map(|&t| p.value(t)).collect();
            prop_assert!(vals.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn scores_in_unit_interval(tbl in table(), tau_max in 1.01f64..20.0) {
        for s in benchmark_scores(&tbl, tau_max).unwrap() {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&s));
        }
    }

    #[test]
    fn profile_credit_matches_reached_count(tbl in table()) {
        for s in 0..tbl.n_algorithms() {
            let p = profile(&tbl, s).unwrap();
            let expected = tbl.reached_count(s) as f64 / tbl.n_workloads() as f64;
            prop_assert!((p.value(f64::MAX) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn scaling_all_times_leaves_scores_unchanged(tbl in table(), k in 0.1f64..10.0) {
        let scaled = TimeTable {
            times: tbl
                .times
                .iter()
                .map(|row| row.iter().map(|t| t.value().map(|v| v * k).into()).collect())
                .collect(),
            ..tbl.clone()
        };
        let a = benchmark_scores(&tbl, 4.0).unwrap();
        let b = benchmark_scores(&scaled, 4.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_round_trip(tbl in table()) {
        let text = tbl.to_csv();
        let back = TimeTable::from_csv(&text).unwrap();
        prop_assert_eq!(back.to_csv(), text);
        prop_assert_eq!(back.algorithms, tbl.algorithms);
    }

    #[test]
    fn larger_tau_max_never_hurts_a_fully_reaching_row(t in prop::collection::vec(0.01f64..1.0, 1..6)) {
        let tbl = TimeTable::new(
            vec!["only".into()],
            (0..t.len()).map(|i| format!("w{i}")).collect(),
            vec![t.iter().map(|&x| Time::Reached(x)).collect()],
        )
        .unwrap();
        let p = &profiles(&tbl)[0];
        prop_assert_eq!(benchmark_score(p, 2.0).unwrap(), 1.0);
        prop_assert_eq!(benchmark_score(p, 7.0).unwrap(), 1.0);
    }
}

#[test]
fn csv_rejects_bad_input() {
    for bad in [
        "",
        "alg,wl,frac\nA,w,0.5\n",
        "algorithm,workload,fraction\nA,w,-0.5\n",
        "algorithm,workload,fraction\nA,w,0\n",
        "algorithm,workload,fraction\nA,w,>1\n",
        "algorithm,workload,fraction\nA,w,0.5,1\n",
        "algorithm,workload,fraction\nA,w,0.5\nA,w,0.4\n",
        "algorithm,workload,fraction\nA,w1,0.5\nB,w2,0.4\n",
        "algorithm,workload,fraction\nA,w,nan\n",
    ] {
        assert!(TimeTable::from_csv(bad).is_err(), "accepted {bad:?}");
    }
    let ok = TimeTable::from_csv("algorithm,workload,fraction\nA,w,UNREACHED\nB,w,0.25\n").unwrap();
    assert_eq!(ok.times, vec![vec![Time::Unreached], vec![Time::Reached(0.25)]]);
}

#[test]
fn single_record_profiles() {
    let hit = TimeTable::new(vec!["a".into()], vec!["w".into()], vec![vec![Time::Reached(3.0)]]).unwrap();
    let miss = TimeTable::new(vec!["a".into()], vec!["w".into()], vec![vec![Time::Unreached]]).unwrap();
    for tau in [1.0, 2.0, 100.0] {
        assert_eq!(profile(&hit, 0).unwrap().value(tau), 1.0);
        assert_eq!(profile(&miss, 0).unwrap().value(tau), 0.0);
    }
}

#[test]
fn geometric_mean_caps_misses() {
    let t = [Time::Reached(100.0), Time::Reached(400.0)];
    assert!((geometric_mean_cost(&t, &[1000.0, 1000.0]).unwrap() - 200.0).abs() < 1e-9);
    let t = [Time::Reached(100.0), Time::Unreached];
    assert!((geometric_mean_cost(&t, &[1000.0, 1000.0]).unwrap() - (100.0f64 * 2000.0).sqrt()).abs() < 1e-9);
    assert!(geometric_mean_cost(&[], &[]).is_err());
}
