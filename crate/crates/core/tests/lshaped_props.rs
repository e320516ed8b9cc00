use pgvrp_core::lshaped::{self, extensive_form, lshape_solve, LShapedError, LShapedOptions, Recourse, RecourseScenario, TwoStageLP};
use pgvrp_core::simplex::{self, LpStatus};
use proptest::prelude::*;

const TOL: f64 = 1e-7;

/// Random problem with bounded first stage `sum x + s = budget` and dual
/// feasible recourse, so every scenario is either infeasible or bounded.
fn problem_strategy() -> impl Strategy<Value = TwoStageLP> {
    (1usize..=3, 1usize..=3, 1usize..=4, 1usize..=3).prop_flat_map(|(n1, m2, n2, ks)| {
        (
            prop::collection::vec(-5i32..=5, n1),
            1i32..=10,
            prop::collection::vec(prop::collection::vec(-3i32..=3, n2), m2),
            prop::collection::vec(-2i32..=2, m2),
            prop::collection::vec(
                (1u32..=5, prop::collection::vec(0i32..=5, n2), prop::collection::vec(prop::collection::vec(-3i32..=3, n1), m2), prop::collection::vec(-5i32..=10, m2)),
                ks,
            ),
        )
            .prop_map(move |(c, budget, w, pi0, scen)| {
                let w: Vec<Vec<f64>> = w.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
                let total: u32 = scen.iter().map(|s| s.0).sum();
                let scenarios = scen
                    .iter()
                    .map(|(weight, slack, t, h)| {
                        let q = (0..n2).map(|j| (0..m2).map(|i| pi0[i] as f64 * w[i][j]).sum::<f64>() + slack[j] as f64).collect();
                        let t = t.iter().map(|r| r.iter().map(|&v| v as f64).chain([0.0]).collect()).collect();
                        RecourseScenario { probability: *weight as f64 / total as f64, q, t, h: h.iter().map(|&v| v as f64).collect() }
                    })
                    .collect();
                TwoStageLP {
                    c: c.iter().map(|&v| v as f64).chain([0.0]).collect(),
                    a: vec![vec![1.0; n1 + 1]],
                    b: vec![budget as f64],
                    w,
                    scenarios,
                }
            })
    })
}

/// A point of the first-stage polytope from nonnegative weights.
fn first_stage_point(p: &TwoStageLP, weights: &[u8]) -> Vec<f64> {
    let n = p.first_stage_len();
    let w: Vec<f64> = (0..n).map(|j| weights[j % weights.len()] as f64 + 1.0).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total * p.b[0]).collect()
}

fn q_value(p: &TwoStageLP, x: &[f64], k: usize) -> Option<(f64, Vec<f64>)> {
    match lshaped::recourse_q(p, x, k).unwrap() {
        Recourse::Value { value, duals } => Some((value, duals)),
        Recourse::Infeasible => None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn lshaped_matches_extensive_form(p in problem_strategy(), multi in any::<bool>()) {
        let ef = simplex::solve(&extensive_form(&p).unwrap()).unwrap();
        let opts = LShapedOptions { all_feasibility_cuts: multi, ..LShapedOptions::default() };
        let res = lshaped::lshape_solve_with(&p, &opts);
        match ef.status {
            LpStatus::Optimal => {
                let r = res.unwrap();
                prop_assert!((r.objective - ef.objective).abs() <= 1e-6 * (1.0 + ef.objective.abs()), "{} vs {}", r.objective, ef.objective);
                let at = p.objective_at(&r.x).unwrap().unwrap();
                prop_assert!((at - r.objective).abs() <= 1e-6 * (1.0 + at.abs()));
                // Before the first optimality cut theta is unbounded below.
                let with_theta: Vec<_> = r.trace.iter().filter(|t| t.theta.is_some()).collect();
                for pair in with_theta.windows(2) {
                    prop_assert!(pair[1].master_objective >= pair[0].master_objective - TOL * (1.0 + pair[0].master_objective.abs()));
                }
                for rec in &r.trace {
                    if let (Some(t), Some(q)) = (rec.theta, rec.expected_recourse) {
                        prop_assert!(t <= q + TOL * (1.0 + q.abs()));
                    }
                }
                for cut in &r.cuts.feasibility {
                    prop_assert!(cut.slack_at(&r.trace[cut.iteration].x) < 0.0);
                    prop_assert!(cut.slack_at(&r.x) >= -TOL);
                }
            }
            LpStatus::Infeasible => {
                prop_assert!(matches!(res, Err(LShapedError::FirstStageInfeasible | LShapedError::NoFeasibleFirstStage)), "{:?}", res);
            }
            LpStatus::Unbounded => prop_assert!(false, "generated problems are bounded"),
        }
    }

    #[test]
    fn cuts_are_valid_at_sampled_points(p in problem_strategy(), samples in prop::collection::vec(prop::collection::vec(any::<u8>(), 4), 1..6)) {
        let Ok(r) = lshape_solve(&p) else { return Ok(()); };
        for wts in samples {
            let x = first_stage_point(&p, &wts);
            let mut expected = 0.0;
            let mut feasible = true;
            for k in 0..p.scenarios.len() {
                match q_value(&p, &x, k) {
                    Some((v, _)) => expected += p.scenarios[k].probability * v,
                    None => feasible = false,
                }
            }
            if feasible {
                for cut in &r.cuts.feasibility {
                    prop_assert!(cut.slack_at(&x) >= -TOL);
                }
                for cut in &r.cuts.optimality {
                    prop_assert!(cut.floor_at(&x) <= expected + TOL * (1.0 + expected.abs()));
                }
            }
        }
    }

    #[test]
    fn recourse_is_convex(p in problem_strategy(), a in prop::collection::vec(any::<u8>(), 4), b in prop::collection::vec(any::<u8>(), 4), lambda in 0.01f64..0.99) {
        let x1 = first_stage_point(&p, &a);
        let x2 = first_stage_point(&p, &b);
        let mix: Vec<f64> = x1.iter().zip(&x2).map(|(u, v)| lambda * u + (1.0 - lambda) * v).collect();
        let mid: Vec<f64> = x1.iter().zip(&x2).map(|(u, v)| 0.5 * (u + v)).collect();
        for k in 0..p.scenarios.len() {
            if let (Some((q1, _)), Some((q2, _))) = (q_value(&p, &x1, k), q_value(&p, &x2, k)) {
                let (qm, _) = q_value(&p, &mix, k).expect("feasible set of a scenario is convex");
                prop_assert!(qm <= lambda * q1 + (1.0 - lambda) * q2 + TOL * (1.0 + q1.abs() + q2.abs()));
                prop_assert!(q_value(&p, &mid, k).is_some());
            }
        }
    }

    #[test]
    fn duals_give_subgradients(p in problem_strategy(), a in prop::collection::vec(any::<u8>(), 4), b in prop::collection::vec(any::<u8>(), 4)) {
        let x = first_stage_point(&p, &a);
        let other = first_stage_point(&p, &b);
        for k in 0..p.scenarios.len() {
            if let (Some((q, _)), Some((_, pi))) = (q_value(&p, &x, k), q_value(&p, &other, k)) {
                let rhs = p.recourse_rhs(&x, k);
                let linear: f64 = pi.iter().zip(&rhs).map(|(u, v)| u * v).sum();
                prop_assert!(q >= linear - TOL * (1.0 + q.abs()));
            }
        }
    }

    #[test]
    fn duplicated_scenarios_keep_the_optimum(p in problem_strategy(), copies in 2usize..4) {
        let mut single = p.clone();
        single.scenarios.truncate(1);
        single.scenarios[0].probability = 1.0;
        let mut dup = single.clone();
        dup.scenarios = (0..copies).map(|_| {
            let mut s = single.scenarios[0].clone();
            s.probability = 1.0 / copies as f64;
            s
        }).collect();
        let a = simplex::solve(&extensive_form(&single).unwrap()).unwrap();
        let b = simplex::solve(&extensive_form(&dup).unwrap()).unwrap();
        prop_assert_eq!(a.status, b.status);
        if a.status == LpStatus::Optimal {
            prop_assert!((a.objective - b.objective).abs() <= 1e-7 * (1.0 + a.objective.abs()));
        }
    }
}
