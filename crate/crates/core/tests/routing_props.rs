mod common;

use common::{random_instance, random_solution};
use pgvrp_core::bounds::{self, ThetaBounds};
use pgvrp_core::eval;
use pgvrp_core::heuristics::{self, expected_insertion_value, SlotTable};
use pgvrp_core::model::{AprioriSolution, Cluster, FractionalPoint, Instance, Point};
use pgvrp_core::oracle::{self, EnumerationBudget};
use proptest::prelude::*;

fn sizes(max_customers: usize, max_clusters: usize, max_k: usize) -> impl Strategy<Value = (u64, usize, usize, usize)> {
    (any::<u64>(), 1..=max_customers, 1..=max_k).prop_flat_map(move |(seed, c, k)| {
        (Just(seed), Just(c), 1..=c.min(max_clusters), Just(k))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn closed_form_matches_scenario_enumeration((seed, c, m, k) in sizes(14, 10, 3)) {
        let inst = random_instance(seed, c, m, k);
        let sol = random_solution(seed, &inst);
        let closed = eval::expected_length(&sol, &inst).unwrap();
        let brute = oracle::expected_length_enumerated(&sol, &inst).unwrap();
        prop_assert!((closed - brute).abs() <= 1e-10 * brute.abs().max(1.0), "{closed} vs {brute}");
    }

    #[test]
    fn certain_presence_gives_deterministic_length((seed, c, m, k) in sizes(12, 8, 3)) {
        let inst = random_instance(seed, c, m, k).deterministic();
        let sol = random_solution(seed, &inst);
        let e = eval::expected_length(&sol, &inst).unwrap();
        let d = sol.deterministic_length(&inst);
        prop_assert!((e - d).abs() <= 1e-9 * d.max(1.0));
        prop_assert!(eval::expected_recourse(&sol, &inst).unwrap().abs() <= 1e-9 * d.max(1.0));
    }

    #[test]
    fn lowering_a_probability_never_lowers_recourse((seed, c, m, k) in sizes(12, 8, 3), which in any::<usize>(), factor in 0.05f64..1.0) {
        let inst = random_instance(seed, c, m, k);
        let sol = random_solution(seed, &inst);
        let mut ps: Vec<f64> = inst.clusters().iter().map(|c| c.probability).collect();
        let idx = which % ps.len();
        ps[idx] *= factor;
        let lowered = inst.with_probabilities(&ps).unwrap();
        let before = eval::expected_recourse(&sol, &inst).unwrap();
        let after = eval::expected_recourse(&sol, &lowered).unwrap();
        prop_assert!(after >= before - 1e-9);
    }

    #[test]
    fn insertion_value_is_length_increase((seed, c, m, _k) in sizes(14, 12, 1), slot_pick in any::<usize>(), node_pick in any::<usize>()) {
        prop_assume!(m >= 2);
        let inst = random_instance(seed, c, m, 1);
        let sol = random_solution(seed, &inst);
        let mut tour = sol.tours[0].clone();
        let removed = tour.remove(1 + node_pick % (tour.len() - 2));
        let cluster = inst.cluster_index(removed).unwrap();
        let members = &inst.clusters()[cluster].members;
        let node = members[node_pick % members.len()];
        let slot = 1 + slot_pick % (tour.len() - 1);
        let extra = expected_insertion_value(&tour, slot, node, &inst).unwrap();
        let fast = SlotTable::new(&tour, &inst).value(slot, node, &inst);
        let mut longer = tour.clone();
        longer.insert(slot, node);
        let delta = eval::tour_expected_length(&longer, &inst).unwrap() - eval::tour_expected_length(&tour, &inst).unwrap();
        prop_assert!((extra - delta).abs() <= 1e-9);
        prop_assert!((fast - delta).abs() <= 1e-9);
        prop_assert!(extra >= -1e-9);
    }

    #[test]
    fn recourse_bounds_hold_on_random_solutions((seed, c, m, k) in sizes(30, 15, 4)) {
        let inst = random_instance(seed, c, m, k);
        let sol = random_solution(seed, &inst);
        let q = eval::expected_recourse(&sol, &inst).unwrap();
        let tb = ThetaBounds::compute(&inst);
        prop_assert!(q >= -1e-9);
        prop_assert!(q <= tb.u() + 1e-9, "q {q} u {}", tb.u());
        prop_assert!(tb.u_clustered <= tb.u_simple + 1e-12);
        let cap = tb.theta_cap(&inst, &FractionalPoint::from_solution(&sol, &inst));
        prop_assert!(q <= cap + 1e-9, "q {q} cap {cap}");
    }

    #[test]
    fn heuristics_are_feasible_with_k_tours((seed, c, m, k) in sizes(40, 20, 5)) {
        let inst = random_instance(seed, c, m, k);
        let cap = heuristics::default_capacity(&inst);
        for sol in [
            heuristics::min_min_insertion(&inst, cap).unwrap(),
            heuristics::max_min_insertion(&inst, cap).unwrap(),
            heuristics::unbounded_insertion(&inst).unwrap(),
        ] {
            prop_assert!(sol.check(&inst).is_feasible(), "{}", sol.check(&inst));
            prop_assert_eq!(sol.tours.len(), k);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn oracle_dominates_heuristics_and_bounds((seed, c, m, k) in sizes(7, 4, 2)) {
        let inst = random_instance(seed, c, m, k);
        let budget = EnumerationBudget::default();
        let (best, value) = oracle::best_apriori_bruteforce(&inst, &budget).unwrap();
        prop_assert!((eval::expected_length(&best, &inst).unwrap() - value).abs() <= 1e-12);
        let cap = heuristics::default_capacity(&inst);
        for sol in [
            heuristics::min_min_insertion(&inst, cap).unwrap(),
            heuristics::max_min_insertion(&inst, cap).unwrap(),
            heuristics::unbounded_insertion(&inst).unwrap(),
        ] {
            prop_assert!(eval::expected_length(&sol, &inst).unwrap() >= value - 1e-9);
        }
        let (_, l) = oracle::gvrp_optimal(&inst, &budget).unwrap();
        prop_assert!(bounds::lower_bound_scaled(&inst, l) <= value + 1e-9);
        let tb = ThetaBounds::compute(&inst);
        for s in oracle::enumerate_solutions(&inst, &budget).unwrap() {
            let q = eval::expected_recourse(&s, &inst).unwrap();
            prop_assert!(q >= -1e-9 && q <= tb.u() + 1e-9);
            prop_assert!(q <= tb.theta_cap(&inst, &FractionalPoint::from_solution(&s, &inst)) + 1e-9);
        }
        if k < 3 {
            let more = inst.with_vehicles(k + 1).unwrap();
            let (_, v2) = oracle::best_apriori_bruteforce(&more, &budget).unwrap();
            prop_assert!(v2 <= value + 1e-12);
        }
    }

    #[test]
    fn certain_presence_oracles_agree((seed, c, m, k) in sizes(7, 4, 2)) {
        let inst = random_instance(seed, c, m, k).deterministic();
        let budget = EnumerationBudget::default();
        let (_, a) = oracle::best_apriori_bruteforce(&inst, &budget).unwrap();
        let (_, b) = oracle::gvrp_optimal(&inst, &budget).unwrap();
        prop_assert_eq!(a, b);
    }
}

fn classical_cheapest_insertion(inst: &Instance) -> Vec<usize> {
    let mut tour = vec![0, 0];
    let mut left: Vec<usize> = (1..inst.n_nodes()).collect();
    while !left.is_empty() {
        let mut best = (f64::INFINITY, usize::MAX, 0);
        for &v in &left {
            for s in 1..tour.len() {
                let c = inst.distance(tour[s - 1], v) + inst.distance(v, tour[s]) - inst.distance(tour[s - 1], tour[s]);
                if c < best.0 || (c == best.0 && v < best.1) {
                    best = (c, v, s);
                }
            }
        }
        tour.insert(best.2, best.1);
        left.retain(|&v| v != best.1);
    }
    tour
}

proptest! {
    #[test]
    fn min_min_reproduces_cheapest_insertion(seed in any::<u64>(), c in 1usize..15) {
        let inst = random_instance(seed, c, c, 1).deterministic();
        let sol = heuristics::min_min_insertion(&inst, c).unwrap();
        prop_assert_eq!(&sol.tours[0], &classical_cheapest_insertion(&inst));
    }

    #[test]
    fn singleton_tsp_matches_brute_force(seed in any::<u64>(), c in 1usize..6) {
        let inst = random_instance(seed, c, c, 1);
        let (_, l) = oracle::gvrp_optimal(&inst, &EnumerationBudget::default()).unwrap();
        let mut perm: Vec<usize> = (1..=c).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            let mut t = vec![0];
            t.extend_from_slice(p);
            t.push(0);
            best = best.min(AprioriSolution::new(vec![t]).deterministic_length(&inst));
        });
        prop_assert!((l - best).abs() <= 1e-9);
    }
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

#[test]
fn triangle_example_expected_length() {
    // Depot and two customers with probability 1/2 on a 3-4-5 triangle.
    let pts = vec![Point::new(0.0, 0.0), Point::new(3.0, 0.0), Point::new(3.0, 4.0)];
    let clusters = vec![
        Cluster { id: 1, probability: 0.5, members: vec![1] },
        Cluster { id: 2, probability: 0.5, members: vec![2] },
    ];
    let inst = Instance::euclid(pts, clusters, 1).unwrap();
    let sol = AprioriSolution::new(vec![vec![0, 1, 2, 0]]);
    let closed = eval::expected_length(&sol, &inst).unwrap();
    let brute = oracle::expected_length_enumerated(&sol, &inst).unwrap();
    // Scenarios: both present 12, only 1 present 6, only 2 present 10, none 0.
    let by_hand = 0.25 * 12.0 + 0.25 * 6.0 + 0.25 * 10.0;
    assert!((closed - by_hand).abs() < 1e-12);
    assert!((brute - by_hand).abs() < 1e-12);
}
