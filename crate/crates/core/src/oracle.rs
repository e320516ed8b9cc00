//! Brute-force reference solvers for tiny instances.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::eval::{self, EvalError};
use crate::model::{AprioriSolution, Instance};

/// Limits that keep enumeration tractable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationBudget {
    pub max_nodes: usize,
    pub max_clusters: usize,
    pub max_vehicles: usize,
    /// Cap on representative choices times ordered single tours examined.
    pub max_candidates: u64,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget { max_nodes: 10, max_clusters: 5, max_vehicles: 3, max_candidates: 20_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("instance exceeds the enumeration budget: {0}")]
    BudgetExceeded(&'static str),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn check_budget(instance: &Instance, budget: &EnumerationBudget) -> Result<(), OracleError> {
    if instance.n_nodes() > budget.max_nodes {
        return Err(OracleError::BudgetExceeded("too many nodes"));
    }
    if instance.num_clusters() > budget.max_clusters {
        return Err(OracleError::BudgetExceeded("too many clusters"));
    }
    if instance.vehicles() > budget.max_vehicles {
        return Err(OracleError::BudgetExceeded("too many vehicles"));
    }
    let m = instance.num_clusters();
    let reps: u64 = instance.clusters().iter().map(|c| c.members.len() as u64).product();
    let mut per_choice: u64 = 0;
    for size in 1..=m as u64 {
        let orders = (1..=size).product::<u64>().div_ceil(2).max(1);
        per_choice = per_choice.saturating_add(binomial(m as u64, size).saturating_mul(orders));
    }
    if reps.saturating_mul(per_choice.max(1)) > budget.max_candidates {
        return Err(OracleError::BudgetExceeded("too many candidates"));
    }
    Ok(())
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Every permutation of `items`, with mirror images dropped (first < last).
fn oriented_permutations(items: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(items.len());
    let mut used = vec![false; items.len()];
    fn rec(items: &[usize], used: &mut [bool], current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == items.len() {
            if current.len() < 2 || current[0] < current[current.len() - 1] {
                out.push(current.clone());
            }
            return;
        }
        for i in 0..items.len() {
            if !used[i] {
                used[i] = true;
                current.push(items[i]);
                rec(items, used, current, out);
                current.pop();
                used[i] = false;
            }
        }
    }
    rec(items, &mut used, &mut current, &mut out);
    out
}

/// Set partitions of `0..m` into at most `k` nonempty blocks, as block masks.
fn partitions(m: usize, k: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut blocks: Vec<u32> = Vec::new();
    fn rec(item: usize, m: usize, k: usize, blocks: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if item == m {
            out.push(blocks.clone());
            return;
        }
        for b in 0..blocks.len() {
            blocks[b] |= 1 << item;
            rec(item + 1, m, k, blocks, out);
            blocks[b] &= !(1 << item);
        }
        if blocks.len() < k {
            blocks.push(1 << item);
            rec(item + 1, m, k, blocks, out);
            blocks.pop();
        }
    }
    rec(0, m, k, &mut blocks, &mut out);
    out
}

fn tour_of(route: &[usize]) -> Vec<usize> {
    let mut t = Vec::with_capacity(route.len() + 2);
    t.push(0);
    t.extend_from_slice(route);
    t.push(0);
    t
}

/// Calls `visit` on every feasible solution (canonical form) of the instance.
///
/// One node per cluster, at most `K` nonempty tours, padded with empty tours.
pub fn for_each_solution(
    instance: &Instance,
    budget: &EnumerationBudget,
    mut visit: impl FnMut(&AprioriSolution),
) -> Result<(), OracleError> {
    check_budget(instance, budget)?;
    let m = instance.num_clusters();
    let k = instance.vehicles();
    let parts = partitions(m, k);
    let mut choice = vec![0usize; m];
    loop {
        let reps: Vec<usize> = (0..m).map(|c| instance.clusters()[c].members[choice[c]]).collect();
        let mut orders: BTreeMap<u32, Vec<Vec<usize>>> = BTreeMap::new();
        for part in &parts {
            let mut per_block: Vec<Vec<Vec<usize>>> = Vec::with_capacity(part.len());
            for &mask in part {
                let entry = orders.entry(mask).or_insert_with(|| {
                    let mut nodes: Vec<usize> = (0..m).filter(|&c| mask >> c & 1 == 1).map(|c| reps[c]).collect();
                    nodes.sort_unstable();
                    oriented_permutations(&nodes)
                });
                per_block.push(entry.clone());
            }
            let mut idx = vec![0usize; per_block.len()];
            loop {
                let routes: Vec<Vec<usize>> = idx.iter().zip(&per_block).map(|(&i, b)| b[i].clone()).collect();
                let mut tours: Vec<Vec<usize>> = routes.iter().map(|r| tour_of(r)).collect();
                while tours.len() < k {
                    tours.push(vec![0, 0]);
                }
                visit(&AprioriSolution::new(tours).canonical());
                let mut pos = 0;
                loop {
                    if pos == idx.len() {
                        break;
                    }
                    idx[pos] += 1;
                    if idx[pos] < per_block[pos].len() {
                        break;
                    }
                    idx[pos] = 0;
                    pos += 1;
                }
                if pos == idx.len() {
                    break;
                }
            }
        }
        let mut c = 0;
        loop {
            if c == m {
                return Ok(());
            }
            choice[c] += 1;
            if choice[c] < instance.clusters()[c].members.len() {
                break;
            }
            choice[c] = 0;
            c += 1;
        }
    }
}

/// All feasible solutions in canonical form, sorted.
pub fn enumerate_solutions(instance: &Instance, budget: &EnumerationBudget) -> Result<Vec<AprioriSolution>, OracleError> {
    let mut all = Vec::new();
    for_each_solution(instance, budget, |s| all.push(s.clone()))?;
    all.sort();
    all.dedup();
    Ok(all)
}

/// Minimum expected length by exhaustive search; ties go to the
/// lexicographically smallest canonical solution.
pub fn best_apriori_bruteforce(
    instance: &Instance,
    budget: &EnumerationBudget,
) -> Result<(AprioriSolution, f64), OracleError> {
    let mut best: Option<(AprioriSolution, f64)> = None;
    let mut failure = None;
    for_each_solution(instance, budget, |s| {
        if failure.is_some() {
            return;
        }
        let value = match eval::expected_length(s, instance) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        let better = match &best {
            None => true,
            Some((bs, bv)) => value < *bv || (value == *bv && s < bs),
        };
        if better {
            best = Some((s.clone(), value));
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(best.expect("at least one solution is enumerated"))
}

/// Deterministic optimum: the same search with every probability set to 1.
pub fn gvrp_optimal(instance: &Instance, budget: &EnumerationBudget) -> Result<(AprioriSolution, f64), OracleError> {
    best_apriori_bruteforce(&instance.deterministic(), budget)
}

/// Expected length by summing over all `2^m` scenarios.
pub fn expected_length_enumerated(solution: &AprioriSolution, instance: &Instance) -> Result<f64, OracleError> {
    let mut total = 0.0;
    for s in eval::scenarios(instance.num_clusters())? {
        let p = s.probability(instance);
        if p != 0.0 {
            total += p * eval::realized_length(solution, &s, instance);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cluster, Point};

    #[test]
    fn partition_counts_match_stirling_sums() {
        assert_eq!(partitions(4, 4).len(), 15);
        assert_eq!(partitions(4, 2).len(), 8);
        assert_eq!(partitions(5, 3).len(), 41);
        assert_eq!(partitions(0, 2).len(), 1);
    }

    #[test]
    fn oriented_permutations_halve() {
        assert_eq!(oriented_permutations(&[1, 2, 3, 4]).len(), 12);
        assert_eq!(oriented_permutations(&[7]).len(), 1);
    }

    #[test]
    fn single_cluster_round_trip() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(3.0, 4.0)];
        let c = vec![Cluster { id: 1, probability: 0.4, members: vec![1] }];
        let inst = Instance::euclid(pts, c, 1).unwrap();
        let (s, v) = best_apriori_bruteforce(&inst, &EnumerationBudget::default()).unwrap();
        assert_eq!(s.tours, vec![vec![0, 1, 0]]);
        assert!((v - 2.0 * 0.4 * 5.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_gvrp_length() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(3.0, 0.0), Point::new(3.0, 4.0)];
        let c = vec![
            Cluster { id: 1, probability: 1.0, members: vec![1] },
            Cluster { id: 2, probability: 1.0, members: vec![2] },
        ];
        let inst = Instance::euclid(pts, c, 1).unwrap();
        let (s, v) = best_apriori_bruteforce(&inst, &EnumerationBudget::default()).unwrap();
        assert_eq!(v, 12.0);
        assert_eq!(s.tours, vec![vec![0, 1, 2, 0]]);
    }

    #[test]
    fn closer_member_chosen() {
        let d = vec![0.0, 1.0, 9.0, 1.0, 0.0, 8.0, 9.0, 8.0, 0.0];
        let c = vec![Cluster { id: 1, probability: 0.3, members: vec![1, 2] }];
        let inst = Instance::explicit(3, d, c, 1).unwrap();
        let (s, v) = gvrp_optimal(&inst, &EnumerationBudget::default()).unwrap();
        assert_eq!(s.tours, vec![vec![0, 1, 0]]);
        assert_eq!(v, 2.0);
    }

    #[test]
    fn star_tours_when_k_equals_m_and_forced() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 2.0)];
        let c = vec![
            Cluster { id: 1, probability: 1.0, members: vec![1] },
            Cluster { id: 2, probability: 1.0, members: vec![2] },
        ];
        let inst = Instance::euclid(pts, c, 2).unwrap();
        let all = enumerate_solutions(&inst, &EnumerationBudget::default()).unwrap();
        assert_eq!(all.len(), 2);
        assert!(all.iter().any(|s| s.tours == vec![vec![0, 1, 0], vec![0, 2, 0]]));
    }

    #[test]
    fn depot_only_enumerates_to_zero() {
        let inst = Instance::euclid(vec![Point::new(0.0, 0.0)], vec![], 1).unwrap();
        assert_eq!(expected_length_enumerated(&AprioriSolution::empty(1), &inst).unwrap(), 0.0);
        let (s, v) = best_apriori_bruteforce(&inst, &EnumerationBudget::default()).unwrap();
        assert_eq!(s, AprioriSolution::empty(1));
        assert_eq!(v, 0.0);
    }

    #[test]
    fn budget_is_enforced() {
        let pts = (0..12).map(|i| Point::new(i as f64, 0.0)).collect();
        let c = (1..12).map(|i| Cluster { id: i, probability: 0.5, members: vec![i] }).collect();
        let inst = Instance::euclid(pts, c, 1).unwrap();
        assert!(matches!(
            best_apriori_bruteforce(&inst, &EnumerationBudget::default()),
            Err(OracleError::BudgetExceeded(_))
        ));
    }
}
