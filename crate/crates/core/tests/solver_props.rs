use lopcut::numerics::int;
use lopcut::oracle::validate_inequality;
use lopcut::solver::SolveStatus;
use lopcut::{brute_force_opt, permutation_value, random_instance, solve, LopInstance, SolverConfig};
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = LopInstance> {
    (3usize..=6)
        .prop_flat_map(|n| proptest::collection::vec(proptest::collection::vec(-20i64..=20, n), n))
        .prop_map(|mut rows| {
            for (i, r) in rows.iter_mut().enumerate() {
                r[i] = 0;
            }
            LopInstance::new(rows, "prop").unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bound_never_below_optimum(inst in instance()) {
        let r = solve(&inst, &SolverConfig::default());
        let opt = brute_force_opt(&inst).unwrap().best_value;
        prop_assert!(r.best_bound >= int(opt));
        if r.status == SolveStatus::Optimal {
            prop_assert_eq!(r.best_bound.clone(), int(opt));
            let (p, v) = r.incumbent.clone().unwrap();
            prop_assert_eq!(permutation_value(&inst, &p), v);
            prop_assert_eq!(v, opt);
        }
    }

    #[test]
    fn lp_values_never_increase(inst in instance()) {
        let r = solve(&inst, &SolverConfig::default());
        for w in r.iterations.windows(2) {
            prop_assert!(w[1].lp_value <= w[0].lp_value);
        }
    }

    #[test]
    fn pool_cuts_hold_at_every_ordering(inst in instance()) {
        let r = solve(&inst, &SolverConfig::default());
        for c in &r.cut_pool_final {
            prop_assert!(validate_inequality(c, inst.n).unwrap().valid);
        }
    }
}

#[test]
fn solving_is_deterministic() {
    let inst = random_instance(7, 5, 0..=99).unwrap();
    let a = solve(&inst, &SolverConfig::default());
    let b = solve(&inst, &SolverConfig::default());
    assert_eq!(a, b);
}

#[test]
fn iteration_limit_is_respected() {
    let inst = LopInstance::new(
        vec![
            vec![0, 0, 0, 1, 0, 0],
            vec![0, 0, 0, 0, 1, 0],
            vec![0, 0, 0, 0, 0, 1],
            vec![0, 0, 0, 0, 0, 0],
            vec![0, 0, 0, 0, 0, 0],
            vec![0, 0, 0, 0, 0, 0],
        ],
        "one",
    )
    .unwrap();
    let cfg = SolverConfig {
        max_iterations: 1,
        ..SolverConfig::default()
    };
    let r = solve(&inst, &cfg);
    assert!(r.iterations.len() <= 1);
    assert!(r.best_bound >= int(brute_force_opt(&inst).unwrap().best_value));
}
