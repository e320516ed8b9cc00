//! Optimality cuts `theta <= U + (Q - U)(x(E^q) - |E^q| + 1)` generated at
//! integral points.

use alloc::vec::Vec;

use crate::eval;
use crate::model::{AprioriSolution, Instance};

use super::ExactError;

/// A binary edge variable of the relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKey {
    /// Edge `{i, j}` with `i < j`, traversed once.
    Edge(usize, usize),
    /// Tour `0, j, 0` using the depot edge of `j` twice.
    Shuttle(usize),
}

/// Sorted edge keys used by a solution.
pub fn edge_keys(solution: &AprioriSolution) -> Vec<EdgeKey> {
    let mut keys = Vec::new();
    for tour in &solution.tours {
        if tour.len() == 3 {
            keys.push(EdgeKey::Shuttle(tour[1]));
        } else if tour.len() > 3 {
            for w in tour.windows(2) {
                keys.push(EdgeKey::Edge(w[0].min(w[1]), w[0].max(w[1])));
            }
        }
    }
    keys.sort();
    keys.dedup();
    keys
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityCut {
    pub edges: Vec<EdgeKey>,
    /// Recourse value at the generating point.
    pub q: f64,
    pub u: f64,
}

impl OptimalityCut {
    /// Largest `theta` the cut allows when `hits` of its edges are at one.
    pub fn theta_limit(&self, hits: usize) -> f64 {
        self.u + (self.q - self.u) * (hits as f64 - self.edges.len() as f64 + 1.0)
    }

    /// Largest `theta` the cut allows at `solution`.
    pub fn theta_limit_at(&self, solution: &AprioriSolution) -> f64 {
        let keys = edge_keys(solution);
        let hits = self.edges.iter().filter(|k| keys.binary_search(k).is_ok()).count();
        self.theta_limit(hits)
    }
}

/// Cut generated at a feasible solution with recourse bound `u`.
pub fn optimality_cut(solution: &AprioriSolution, instance: &Instance, u: f64) -> Result<OptimalityCut, ExactError> {
    let q = eval::expected_recourse(solution, instance).map_err(ExactError::Eval)?;
    Ok(OptimalityCut { edges: edge_keys(solution), q, u })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cluster, Point};
    use alloc::vec;

    fn inst(p: f64) -> Instance {
        let pts = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
        let clusters = (1..=3).map(|k| Cluster { id: k, probability: p, members: vec![k] }).collect();
        Instance::euclid(pts, clusters, 2).unwrap()
    }

    #[test]
    fn keys_distinguish_shuttles() {
        let s = AprioriSolution::new(vec![vec![0, 2, 0], vec![0, 3, 1, 0]]);
        assert_eq!(edge_keys(&s), vec![EdgeKey::Edge(0, 1), EdgeKey::Edge(0, 3), EdgeKey::Edge(1, 3), EdgeKey::Shuttle(2)]);
    }

    #[test]
    fn cut_is_tight_at_its_point() {
        let i = inst(0.5);
        let s = AprioriSolution::new(vec![vec![0, 1, 2, 3, 0], vec![0, 0]]);
        let cut = optimality_cut(&s, &i, 10.0).unwrap();
        assert!((cut.theta_limit_at(&s) - cut.q).abs() < 1e-12);
        assert_eq!(cut.theta_limit(cut.edges.len() - 1), 10.0);
    }

    #[test]
    fn certain_presence_cut_reads_zero() {
        let i = inst(1.0);
        let s = AprioriSolution::new(vec![vec![0, 1, 2, 3, 0], vec![0, 0]]);
        let cut = optimality_cut(&s, &i, 0.0).unwrap();
        assert_eq!(cut.theta_limit_at(&s), 0.0);
        assert_eq!(cut.theta_limit(0), 0.0);
    }

    #[test]
    fn q_equal_u_degenerates() {
        let cut = OptimalityCut { edges: vec![EdgeKey::Shuttle(1)], q: 4.0, u: 4.0 };
        assert_eq!(cut.theta_limit(0), 4.0);
        assert_eq!(cut.theta_limit(1), 4.0);
    }
}
