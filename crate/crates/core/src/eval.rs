//! Closed-form expected tour length and scenario evaluation.
//!
//! For consecutive-in-tour positions `i < j`, the arc between them is driven
//! exactly when both are present and everything strictly between them is
//! absent. With independent clusters and one node per cluster this
//! probability is `p_i p_j prod(1 - p_t)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{AprioriSolution, FeasibilityReport, Instance, Scenario};

/// Largest cluster count for which scenarios are enumerated.
pub const MAX_ENUMERATED_CLUSTERS: usize = 25;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("infeasible solution: {0}")]
    Infeasible(FeasibilityReport),
    #[error("tour must start and end at the depot")]
    OpenTour,
    #[error("node {0} is out of range")]
    NodeOutOfRange(usize),
    #[error("{0} clusters is too many to enumerate (limit {MAX_ENUMERATED_CLUSTERS})")]
    TooManyClusters(usize),
    #[error("heuristic value {heuristic} is finite but the exact value {exact} is not positive")]
    NonPositiveReference { heuristic: f64, exact: f64 },
}

/// Arc-use probabilities between positions of one tour.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaMatrix {
    len: usize,
    values: Vec<f64>,
}

impl AlphaMatrix {
    /// Number of tour positions, depot endpoints included.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Probability that the arc from position `i` to position `j > i` is used.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j <= i {
            0.0
        } else {
            self.values[i * self.len + j]
        }
    }
}

fn check_tour(tour: &[usize], instance: &Instance) -> Result<(), EvalError> {
    if tour.len() < 2 || tour[0] != 0 || tour[tour.len() - 1] != 0 {
        return Err(EvalError::OpenTour);
    }
    if let Some(&v) = tour.iter().find(|&&v| v >= instance.n_nodes()) {
        return Err(EvalError::NodeOutOfRange(v));
    }
    Ok(())
}

/// Arc-use probabilities for a depot-to-depot tour.
///
/// Positions are treated as presence events of their clusters, so a tour
/// that repeats a cluster still gets exact probabilities.
pub fn alpha_coefficients(tour: &[usize], instance: &Instance) -> Result<AlphaMatrix, EvalError> {
    check_tour(tour, instance)?;
    let h = tour.len();
    let m = instance.num_clusters();
    let mut values = vec![0.0; h * h];
    let mut between = vec![false; m];
    let mut marked: Vec<usize> = Vec::new();
    for i in 0..h {
        let ci = instance.cluster_index(tour[i]);
        let pi = instance.node_probability(tour[i]);
        let mut absent = 1.0;
        for j in (i + 1)..h {
            let cj = instance.cluster_index(tour[j]);
            let pj = instance.node_probability(tour[j]);
            let value = match cj {
                Some(k) if Some(k) == ci => pi * absent,
                Some(k) if between[k] => 0.0,
                _ => pi * pj * absent,
            };
            values[i * h + j] = value;
            match cj {
                None => break,
                Some(k) if Some(k) == ci => break,
                Some(k) => {
                    if !between[k] {
                        between[k] = true;
                        marked.push(k);
                        absent *= 1.0 - pj;
                    }
                }
            }
            if absent == 0.0 {
                break;
            }
        }
        for k in marked.drain(..) {
            between[k] = false;
        }
    }
    Ok(AlphaMatrix { len: h, values })
}

/// Expected length of one depot-to-depot tour.
pub fn tour_expected_length(tour: &[usize], instance: &Instance) -> Result<f64, EvalError> {
    let alpha = alpha_coefficients(tour, instance)?;
    let h = tour.len();
    let mut total = 0.0;
    for i in 0..h {
        for j in (i + 1)..h {
            let a = alpha.get(i, j);
            if a != 0.0 {
                total += a * instance.distance(tour[i], tour[j]);
            }
        }
    }
    Ok(total)
}

/// Expected length of a feasible a-priori solution.
pub fn expected_length(solution: &AprioriSolution, instance: &Instance) -> Result<f64, EvalError> {
    let report = solution.check(instance);
    if !report.is_feasible() {
        return Err(EvalError::Infeasible(report));
    }
    let mut total = 0.0;
    for t in &solution.tours {
        total += tour_expected_length(t, instance)?;
    }
    Ok(total)
}

/// Expected recourse: deterministic length minus expected length.
pub fn expected_recourse(solution: &AprioriSolution, instance: &Instance) -> Result<f64, EvalError> {
    let e = expected_length(solution, instance)?;
    Ok(solution.deterministic_length(instance) - e)
}

/// Length actually driven in a scenario, skipping absent nodes.
pub fn realized_length(solution: &AprioriSolution, scenario: &Scenario, instance: &Instance) -> f64 {
    let mut total = 0.0;
    for t in &solution.tours {
        let mut prev = 0;
        for &v in t.iter().skip(1) {
            if v == 0 || scenario.node_present(instance, v) {
                total += instance.distance(prev, v);
                prev = v;
            }
        }
    }
    total
}

/// Recourse in a scenario: deterministic length minus realized length.
pub fn recourse_value(solution: &AprioriSolution, scenario: &Scenario, instance: &Instance) -> f64 {
    solution.deterministic_length(instance) - realized_length(solution, scenario, instance)
}

/// All `2^m` scenarios in mask order.
pub fn scenarios(m: usize) -> Result<impl Iterator<Item = Scenario>, EvalError> {
    if m > MAX_ENUMERATED_CLUSTERS {
        return Err(EvalError::TooManyClusters(m));
    }
    Ok((0..(1u64 << m)).map(move |mask| Scenario::from_mask(m, mask)))
}

/// Relative excess of a heuristic objective over an exact one.
pub fn deviation(heuristic: f64, exact: f64) -> Result<f64, EvalError> {
    if !(exact > 0.0) {
        if heuristic == exact {
            return Ok(0.0);
        }
        return Err(EvalError::NonPositiveReference { heuristic, exact });
    }
    Ok((heuristic - exact) / exact)
}
