use proptest::prelude::*;
use stabcheck::constructions::{kl_envelope, smooth_tau, TauTable};
use stabcheck::dynamics::builtin::{builtin, planar_counterexample, scalar_nonuniform};
use stabcheck::dynamics::DisturbanceSignal;
use stabcheck::monotone::MonotoneTable;
use stabcheck::props::{check_lagrange, check_robust_invariance, estimate_tau_ugatt, estimate_tau_uniform_weak};
use stabcheck::search::{adversarial_search, Objective, Region, SearchProblem, SignalTemplate};
use stabcheck::set::{norm, SetDescriptor};
use stabcheck::verdict::Budget;

fn small_budget(seed: u64) -> Budget {
    Budget {
        samples: 12,
        signals: 3,
        time_samples: 257,
        horizon: 40.0,
        seed,
        ..Budget::default()
    }
}

fn set_strategy(n: usize) -> impl Strategy<Value = SetDescriptor> {
    let v = move |s: f64| prop::collection::vec(-s..s, n);
    prop_oneof![
        prop::collection::vec(v(5.0), 1..5).prop_map(|p| SetDescriptor::points(p).unwrap()),
        (v(5.0), 0.0..3.0f64).prop_map(|(c, r)| SetDescriptor::ball(c, r).unwrap()),
        (v(5.0), v(5.0)).prop_map(|(a, b)| {
            let lo = a.iter().zip(&b).map(|(p, q)| p.min(*q)).collect();
            let hi = a.iter().zip(&b).map(|(p, q)| p.max(*q)).collect();
            SetDescriptor::new_box(lo, hi).unwrap()
        }),
    ]
}

fn point_and_set() -> impl Strategy<Value = (Vec<f64>, SetDescriptor)> {
    (1usize..=4).prop_flat_map(|n| (prop::collection::vec(-10.0..10.0f64, n), set_strategy(n)))
}

proptest! {
    #[test]
    fn norm_translation_inequalities((x, set) in point_and_set()) {
        let (dx, nx, na) = (set.distance_to(&x).unwrap(), norm(&x), set.set_norm());
        prop_assert!(nx - na <= dx + 1e-12);
        prop_assert!(dx <= nx + na + 1e-12);
        prop_assert!(dx - na <= nx + 1e-12);
        prop_assert!(nx <= dx + na + 1e-12);
    }

    #[test]
    fn distance_is_zero_exactly_on_the_set((x, set) in point_and_set()) {
        let p = set.nearest_point(&x).unwrap();
        prop_assert!(set.distance_to(&p).unwrap() <= 1e-9);
        prop_assert_eq!(set.contains(&x), set.distance_to(&x).unwrap() <= 0.0);
    }

    #[test]
    fn smoothed_tau_is_monotone_and_dominates(
        vals in prop::collection::vec(0.0f64..20.0, 20),
    ) {
        let eps = vec![0.05, 0.1, 0.2, 0.4];
        let r = vec![0.5, 1.0, 2.0, 4.0, 8.0];
        let raw = TauTable::from_raw(eps, r, vals).unwrap();
        prop_assert!(raw.table.is_monotone());
        let s = smooth_tau(&raw, &[0.1, 0.2], &[1.0, 2.0, 4.0]).unwrap();
        prop_assert!(s.table.is_monotone());
        for (i, e) in [0.1, 0.2].iter().enumerate() {
            for (j, rr) in [1.0, 2.0, 4.0].iter().enumerate() {
                prop_assert!(s.at(i, j) >= raw.eval(*e, *rr) - 1e-12);
            }
        }
    }

    #[test]
    fn kl_envelope_is_class_kl_with_halving_knots(
        rate in 0.2f64..3.0,
        slope in 0.5f64..4.0,
    ) {
        let eps: Vec<f64> = (0..25).map(|k| (1.0 / 1024.0) * 4096f64.powf(k as f64 / 24.0)).collect();
        let tau = TauTable::from_fn(eps, vec![0.25, 0.5, 1.0, 2.0, 4.0], |e, r| ((r / e).ln() / rate).max(0.0)).unwrap();
        let sigma = MonotoneTable::k_infinity(vec![1.0, 4.0], vec![slope, 4.0 * slope]).unwrap();
        let env = kl_envelope(&sigma, 0.0, &tau, &[0.5, 1.0, 2.0]).unwrap();
        prop_assert!(env.check_monotone().is_ok());
        for k in &env.knots {
            prop_assert!(k.levels.windows(2).all(|w| w[1] / w[0] == 0.5));
            prop_assert!(k.times.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn signal_shift_undoes_concatenation(
        a in prop::collection::vec(-1.0f64..1.0, 1..8),
        b in prop::collection::vec(-1.0f64..1.0, 1..8),
        k in 0usize..8,
    ) {
        let step = 0.5;
        let first = DisturbanceSignal::new(step, a.iter().map(|v| vec![*v]).collect(), vec![0.0]).unwrap();
        let second = DisturbanceSignal::new(step, b.iter().map(|v| vec![*v]).collect(), vec![0.25]).unwrap();
        let joined = DisturbanceSignal::concatenate(&first, &second, k).unwrap();
        let back = joined.shift_segments(k);
        for s in 0..(b.len() + 3) {
            prop_assert_eq!(back.segment(s), second.segment(s));
        }
        for s in 0..k {
            prop_assert_eq!(joined.segment(s), first.segment(s));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn first_entry_never_exceeds_last_exit(m in 0.0f64..6.0, seed in 0u64..1000) {
        let sys = scalar_nonuniform(m).unwrap();
        let a = SetDescriptor::origin(1);
        let (eps, r) = ([0.1, 0.3], [1.0, 2.0]);
        let b = small_budget(seed);
        let weak = estimate_tau_uniform_weak(&sys, &a, &eps, &r, &b).unwrap();
        let att = estimate_tau_ugatt(&sys, &a, &eps, &r, &b).unwrap();
        let (tw, ta) = (weak.tau().unwrap(), att.tau().unwrap());
        for i in 0..eps.len() {
            for j in 0..r.len() {
                prop_assert!(tw.at(i, j) <= ta.at(i, j) + 1e-9, "({i},{j}) {} > {}", tw.at(i, j), ta.at(i, j));
            }
        }
    }

    #[test]
    fn delta_table_is_monotone(m in 0.5f64..8.0, seed in 0u64..1000) {
        let sys = planar_counterexample(m).unwrap();
        let a = SetDescriptor::origin(2);
        let rep = check_robust_invariance(&sys, &a, &[0.1, 0.25, 0.5], &[1.0, 5.0], None, &small_budget(seed)).unwrap();
        let (eps, h, delta) = rep.delta().expect("δ certificate");
        let nh = h.len().max(1);
        for i in 0..eps.len() {
            prop_assert!(delta[i * nh] <= eps[i]);
            for k in 1..nh {
                prop_assert!(delta[i * nh + k] <= delta[i * nh + k - 1], "δ grows with h");
            }
            if i > 0 {
                for k in 0..nh {
                    prop_assert!(delta[i * nh + k] >= delta[(i - 1) * nh + k], "δ shrinks with ε");
                }
            }
        }
    }

    #[test]
    fn search_history_is_monotone_and_the_witness_replays(m in 0.0f64..9.0, seed in 0u64..1000) {
        let sys = scalar_nonuniform(m).unwrap();
        let a = SetDescriptor::origin(1);
        let problem = SearchProblem {
            objective: Objective::MaxSupNorm { set: a.clone() },
            region: Region::Neighborhood { set: a.clone(), radius: 1.0 },
            template: SignalTemplate { step: 0.5, horizon: 5.0, disturbance: sys.disturbance() },
            evaluations: 256,
            seed,
            tol: 1e-9,
            time_samples: 65,
        };
        let res = adversarial_search(&problem, &sys).unwrap();
        prop_assert!(res.history.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(res.signal.lies_in(&sys.disturbance()));
        let w = res.witness("sup norm");
        let x = sys.flow(w.time, &w.initial, &w.signal, 1e-10).unwrap();
        prop_assert!((a.distance_to(&x).unwrap() - w.value).abs() <= 1e-6 * (1.0 + w.value));
    }

    #[test]
    fn blow_up_witness_replays(seed in 0u64..1000) {
        let sys = builtin("scalar_unstable").unwrap();
        let rep = check_lagrange(&sys, &SetDescriptor::origin(1), &[1.0], &small_budget(seed).with_horizon(100.0)).unwrap();
        let w = rep.verdict.witness.expect("falsified with a witness");
        prop_assert!(sys.flow(w.time * 1.001, &w.initial, &w.signal, 1e-9).is_err());
        let before = sys.flow(w.time * 0.9, &w.initial, &w.signal, 1e-9).unwrap();
        prop_assert!(norm(&before) > 1e6);
    }
}
