//! Bounds on the optimal expected length and on the recourse value.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{FractionalPoint, Instance, EdgeIndex};

/// Upper bounds on the recourse variable used by the exact solver.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaBounds {
    pub u_simple: f64,
    pub u_clustered: f64,
    /// Row-major `n x n` symmetric matrix of per-edge expected-length floors.
    pub b: Vec<f64>,
    n: usize,
}

impl ThetaBounds {
    pub fn compute(instance: &Instance) -> Self {
        let n = instance.n_nodes();
        let all = vec![true; n];
        let terms = saving_terms(instance, &all);
        let u_simple = terms.iter().sum();
        let u_clustered = clustered_from_terms(instance, &terms, &all);
        ThetaBounds { u_simple, u_clustered, b: b_matrix(instance), n }
    }

    /// The tighter of the two scalar bounds.
    pub fn u(&self) -> f64 {
        self.u_simple.min(self.u_clustered)
    }

    #[inline]
    pub fn b(&self, i: usize, j: usize) -> f64 {
        self.b[i * self.n + j]
    }

    /// `sum (d_ij - b_ij) x_ij` over the edges of `point`.
    pub fn theta_cap(&self, instance: &Instance, point: &FractionalPoint) -> f64 {
        let index = EdgeIndex::new(self.n);
        let mut total = 0.0;
        for (e, &x) in point.x.iter().enumerate() {
            if x != 0.0 {
                let (i, j) = index.endpoints(e);
                total += (instance.distance(i, j) - self.b(i, j)) * x;
            }
        }
        total
    }
}

/// Expected-length floor from the deterministic optimum: `min_k p_k * l`.
pub fn lower_bound_scaled(instance: &Instance, gvrp_opt_length: f64) -> f64 {
    let p = instance.clusters().iter().map(|c| c.probability).fold(1.0, f64::min);
    p * gvrp_opt_length
}

/// Per-node saving terms `(1 - p_t) max (d_it + d_tj - d_ij)`, clamped at 0,
/// over ordered pairs outside `t`'s cluster. Nodes with `allowed[v] == false`
/// are skipped both as `t` and as neighbours.
fn saving_terms(instance: &Instance, allowed: &[bool]) -> Vec<f64> {
    let n = instance.n_nodes();
    let mut terms = vec![0.0; n];
    for t in 1..n {
        if !allowed[t] {
            continue;
        }
        let ct = instance.cluster_index(t);
        let q = 1.0 - instance.node_probability(t);
        if q == 0.0 {
            continue;
        }
        let outside = |v: usize| allowed[v] && (v == 0 || instance.cluster_index(v) != ct);
        let mut best = 2.0 * instance.distance(0, t);
        for i in 0..n {
            if !outside(i) {
                continue;
            }
            let dit = instance.distance(i, t);
            for j in (i + 1)..n {
                if !outside(j) {
                    continue;
                }
                let v = dit + instance.distance(t, j) - instance.distance(i, j);
                if v > best {
                    best = v;
                }
            }
        }
        terms[t] = (q * best).max(0.0);
    }
    terms
}

fn clustered_from_terms(instance: &Instance, terms: &[f64], allowed: &[bool]) -> f64 {
    instance
        .clusters()
        .iter()
        .map(|c| c.members.iter().filter(|&&t| allowed[t]).map(|&t| terms[t]).fold(0.0, f64::max))
        .sum()
}

/// Sum over customers of their clamped saving term.
pub fn ub_simple(instance: &Instance) -> f64 {
    saving_terms(instance, &vec![true; instance.n_nodes()]).iter().sum()
}

/// Sum over clusters of the largest member saving term.
pub fn ub_clustered(instance: &Instance) -> f64 {
    let all = vec![true; instance.n_nodes()];
    clustered_from_terms(instance, &saving_terms(instance, &all), &all)
}

/// Clustered bound over the nodes still allowed; excluded nodes are neither
/// candidates nor neighbours.
pub fn ub_clustered_restricted(instance: &Instance, allowed: &[bool]) -> f64 {
    clustered_from_terms(instance, &saving_terms(instance, allowed), allowed)
}

/// Per-edge floors `b_ij` on the expected length contributed by edge `{i, j}`.
pub fn b_matrix(instance: &Instance) -> Vec<f64> {
    let n = instance.n_nodes();
    let mut order: Vec<Vec<usize>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&t| t != i).collect();
        others.sort_by(|&a, &b| instance.distance(i, a).total_cmp(&instance.distance(i, b)).then(a.cmp(&b)));
        order.push(others);
    }
    let nearest_outside = |i: usize, ci: Option<usize>, cj: Option<usize>| -> f64 {
        for &t in &order[i] {
            let ct = instance.cluster_index(t);
            if t == 0 || (ct != ci && ct != cj) {
                return instance.distance(i, t);
            }
        }
        0.0
    };
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let pi = instance.node_probability(i);
            let pj = instance.node_probability(j);
            let d = instance.distance(i, j);
            let ci = instance.cluster_index(i);
            let cj = instance.cluster_index(j);
            let v = if i == 0 || ci == cj {
                pi * pj * d
            } else {
                pi * pj * d + 0.5 * pi * (1.0 - pj) * nearest_outside(i, ci, cj) + 0.5 * (1.0 - pi) * pj * nearest_outside(j, ci, cj)
            };
            b[i * n + j] = v;
            b[j * n + i] = v;
        }
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cluster, Point};

    fn inst(ps: &[f64]) -> Instance {
        let pts = (0..=ps.len()).map(|i| Point::new((i * i) as f64, i as f64)).collect();
        let clusters = ps
            .iter()
            .enumerate()
            .map(|(k, &p)| Cluster { id: k + 1, probability: p, members: vec![k + 1] })
            .collect();
        Instance::euclid(pts, clusters, 1).unwrap()
    }

    #[test]
    fn certain_presence_gives_zero_bounds() {
        let i = inst(&[1.0, 1.0, 1.0]);
        assert_eq!(ub_simple(&i), 0.0);
        assert_eq!(ub_clustered(&i), 0.0);
        let b = b_matrix(&i);
        for a in 0..4 {
            for c in 0..4 {
                assert_eq!(b[a * 4 + c], i.distance(a, c));
            }
        }
    }

    #[test]
    fn single_node_bound_is_round_trip_share() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(6.0, 8.0)];
        let c = vec![Cluster { id: 1, probability: 0.5, members: vec![1] }];
        let i = Instance::euclid(pts, c, 1).unwrap();
        assert_eq!(ub_simple(&i), 10.0);
        assert_eq!(ub_clustered(&i), 10.0);
    }

    #[test]
    fn depot_edge_floor() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(10.0, 0.0)];
        let c = vec![Cluster { id: 1, probability: 0.3, members: vec![1] }];
        let i = Instance::euclid(pts, c, 1).unwrap();
        assert!((b_matrix(&i)[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn singleton_clusters_bounds_agree() {
        let i = inst(&[0.2, 0.5, 0.9, 0.4]);
        assert_eq!(ub_simple(&i), ub_clustered(&i));
    }

    #[test]
    fn scaled_lower_bound() {
        let i = inst(&[0.5, 0.7]);
        assert_eq!(lower_bound_scaled(&i, 12.0), 6.0);
        assert_eq!(lower_bound_scaled(&inst(&[1.0]), 12.0), 12.0);
    }

    #[test]
    fn theta_cap_of_zero_point() {
        let i = inst(&[0.5, 0.7]);
        let tb = ThetaBounds::compute(&i);
        let p = FractionalPoint { x: vec![0.0; 3], y: vec![1.0, 0.0, 0.0], theta: 0.0 };
        assert_eq!(tb.theta_cap(&i, &p), 0.0);
    }
}
