//! The LP relaxation solved at every branch-and-cut node.
//!
//! Variables: `y_t` per customer, `x_0j` per depot edge, a shuttle `s_j`
//! for the tour `0, j, 0`, `x_ij` per customer edge between different
//! clusters, and `theta`. Objective `min d x + 2 d_0j s_j - theta`.

use alloc::vec;
use alloc::vec::Vec;

use crate::bounds::ThetaBounds;
use crate::model::{AprioriSolution, EdgeIndex, FractionalPoint, Instance};
use crate::simplex::{LinearProgram, Row, Sense};

use super::cuts::{EdgeKey, OptimalityCut};
use super::separation::GsecCut;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    Y(usize),
    DepotEdge(usize),
    Shuttle(usize),
    Edge(usize, usize),
    Theta,
}

#[derive(Debug, Clone)]
pub struct RootRelaxation {
    pub lp: LinearProgram,
    pub bounds: ThetaBounds,
    /// Root bound on `theta`.
    pub u: f64,
    n: usize,
    k: usize,
    vars: Vec<Var>,
    y: Vec<usize>,
    depot: Vec<usize>,
    shuttle: Vec<usize>,
    /// `n x n` table of customer edge columns.
    edge: Vec<usize>,
    theta: usize,
}

pub fn build_root(instance: &Instance) -> RootRelaxation {
    let n = instance.n_nodes();
    let bounds = ThetaBounds::compute(instance);
    let u = bounds.u().max(0.0);
    let mut lp = LinearProgram::new(0);
    let mut vars = Vec::new();
    let mut add = |lp: &mut LinearProgram, v: Var, cost: f64, upper: f64| {
        vars.push(v);
        lp.add_variable(cost, 0.0, upper)
    };
    let mut y = vec![NONE; n];
    let mut depot = vec![NONE; n];
    let mut shuttle = vec![NONE; n];
    let mut edge = vec![NONE; n * n];
    for t in 1..n {
        y[t] = add(&mut lp, Var::Y(t), 0.0, 1.0);
    }
    for j in 1..n {
        depot[j] = add(&mut lp, Var::DepotEdge(j), instance.distance(0, j), 1.0);
    }
    for j in 1..n {
        shuttle[j] = add(&mut lp, Var::Shuttle(j), 2.0 * instance.distance(0, j), 1.0);
    }
    for i in 1..n {
        for j in (i + 1)..n {
            if instance.cluster_index(i) != instance.cluster_index(j) {
                let c = add(&mut lp, Var::Edge(i, j), instance.distance(i, j), 1.0);
                edge[i * n + j] = c;
                edge[j * n + i] = c;
            }
        }
    }
    let theta = add(&mut lp, Var::Theta, -1.0, u);

    for c in instance.clusters() {
        lp.add_row(c.members.iter().map(|&t| (y[t], 1.0)).collect(), Sense::Eq, 1.0);
    }
    for t in 1..n {
        let mut coeffs = vec![(depot[t], 1.0), (shuttle[t], 2.0), (y[t], -2.0)];
        for j in 1..n {
            if edge[t * n + j] != NONE {
                coeffs.push((edge[t * n + j], 1.0));
            }
        }
        lp.add_row(coeffs, Sense::Eq, 0.0);
    }
    let mut depot_row = Vec::new();
    for j in 1..n {
        depot_row.push((depot[j], 1.0));
        depot_row.push((shuttle[j], 2.0));
    }
    lp.add_row(depot_row, Sense::Le, 2.0 * instance.vehicles() as f64);
    let mut cap = vec![(theta, 1.0)];
    let slack = |i: usize, j: usize| instance.distance(i, j) - bounds.b(i, j);
    for j in 1..n {
        cap.push((depot[j], -slack(0, j)));
        cap.push((shuttle[j], -2.0 * slack(0, j)));
    }
    for i in 1..n {
        for j in (i + 1)..n {
            if edge[i * n + j] != NONE {
                cap.push((edge[i * n + j], -slack(i, j)));
            }
        }
    }
    lp.add_row(cap, Sense::Le, 0.0);

    RootRelaxation { lp, bounds, u, n, k: instance.vehicles(), vars, y, depot, shuttle, edge, theta }
}

impl RootRelaxation {
    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn var(&self, column: usize) -> Var {
        self.vars[column]
    }

    pub fn y_column(&self, t: usize) -> usize {
        self.y[t]
    }

    pub fn theta_column(&self) -> usize {
        self.theta
    }

    pub fn edge_column(&self, key: EdgeKey) -> Option<usize> {
        let c = match key {
            EdgeKey::Shuttle(j) => self.shuttle[j],
            EdgeKey::Edge(0, j) => self.depot[j],
            EdgeKey::Edge(i, j) => self.edge[i * self.n + j],
        };
        (c != NONE).then_some(c)
    }

    /// The point in edge space: depot edges carry `x_0j + 2 s_j`.
    pub fn point(&self, primal: &[f64]) -> FractionalPoint {
        let index = EdgeIndex::new(self.n);
        let mut x = vec![0.0; index.len()];
        let mut y = vec![0.0; self.n];
        y[0] = self.k as f64;
        for (c, &v) in primal.iter().enumerate() {
            match self.vars[c] {
                Var::Y(t) => y[t] = v,
                Var::DepotEdge(j) => x[index.index(0, j)] += v,
                Var::Shuttle(j) => x[index.index(0, j)] += 2.0 * v,
                Var::Edge(i, j) => x[index.index(i, j)] = v,
                Var::Theta => {}
            }
        }
        FractionalPoint { x, y, theta: primal[self.theta] }
    }

    pub fn gsec_row(&self, cut: &GsecCut) -> Row {
        let mut inside = vec![false; self.n];
        for &v in &cut.set {
            inside[v] = true;
        }
        let mut coeffs = vec![(self.y[cut.anchor], -2.0)];
        for &v in &cut.set {
            coeffs.push((self.depot[v], 1.0));
            coeffs.push((self.shuttle[v], 2.0));
            for u in 1..self.n {
                let c = self.edge[v * self.n + u];
                if !inside[u] && c != NONE {
                    coeffs.push((c, 1.0));
                }
            }
        }
        Row::new(coeffs, Sense::Ge, 0.0)
    }

    /// `theta + (U - Q) x(E^q) <= U + (U - Q)(|E^q| - 1)`.
    pub fn optimality_row(&self, cut: &OptimalityCut) -> Row {
        let slope = cut.u - cut.q;
        let mut coeffs = vec![(self.theta, 1.0)];
        for &key in &cut.edges {
            if let Some(c) = self.edge_column(key) {
                if slope != 0.0 {
                    coeffs.push((c, slope));
                }
            }
        }
        Row::new(coeffs, Sense::Le, cut.u + slope * (cut.edges.len() as f64 - 1.0))
    }

    /// Whether every column except `theta` is within `tol` of an integer.
    pub fn is_integral(&self, primal: &[f64], tol: f64) -> bool {
        primal.iter().enumerate().all(|(c, &v)| c == self.theta || (v - libm::round(v)).abs() <= tol)
    }

    /// Tours of an integral point, or `None` if some customer is not on a
    /// depot tour.
    pub fn decode(&self, primal: &[f64]) -> Option<AprioriSolution> {
        let n = self.n;
        let on = |c: usize| c != NONE && primal[c] > 0.5;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut routes = Vec::new();
        let mut used = vec![false; n];
        for j in 1..n {
            if on(self.shuttle[j]) {
                routes.push(vec![j]);
                used[j] = true;
            }
            if on(self.depot[j]) {
                adj[j].push(0);
                adj[0].push(j);
            }
            for i in (j + 1)..n {
                if on(self.edge[j * n + i]) {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        for &start in &adj[0] {
            if used[start] {
                continue;
            }
            let mut route = Vec::new();
            let (mut prev, mut cur) = (0, start);
            while cur != 0 {
                if used[cur] || adj[cur].len() != 2 {
                    return None;
                }
                used[cur] = true;
                route.push(cur);
                let next = if adj[cur][0] == prev { adj[cur][1] } else { adj[cur][0] };
                prev = cur;
                cur = next;
            }
            routes.push(route);
        }
        if (1..n).any(|t| on(self.y[t]) && !used[t]) {
            return None;
        }
        if routes.len() > self.k {
            return None;
        }
        Some(AprioriSolution::from_routes(&routes, self.k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cluster, Point};
    use crate::simplex;

    #[test]
    fn single_cluster_round_trip() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(3.0, 4.0), Point::new(0.0, 2.0)];
        let c = vec![Cluster { id: 1, probability: 0.4, members: vec![1, 2] }];
        let inst = Instance::euclid(pts, c, 1).unwrap();
        let root = build_root(&inst);
        let sol = simplex::solve(&root.lp).unwrap();
        // Cheapest representative is node 2: expected length 2 * 0.4 * 2.
        assert!((sol.objective - 1.6).abs() < 1e-9);
        let s = root.decode(&sol.primal).unwrap();
        assert_eq!(s.tours[0], vec![0, 2, 0]);
    }

    #[test]
    fn certain_presence_fixes_theta_at_zero() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(3.0, 4.0), Point::new(0.0, 2.0)];
        let c = vec![
            Cluster { id: 1, probability: 1.0, members: vec![1] },
            Cluster { id: 2, probability: 1.0, members: vec![2] },
        ];
        let inst = Instance::euclid(pts, c, 1).unwrap();
        let root = build_root(&inst);
        assert_eq!(root.u, 0.0);
        assert_eq!(root.lp.upper[root.theta_column()], 0.0);
    }

    #[test]
    fn decode_two_tours() {
        let pts = (0..5).map(|i| Point::new(i as f64, (i * i) as f64)).collect();
        let c = (1..5).map(|k| Cluster { id: k, probability: 0.5, members: vec![k] }).collect();
        let inst = Instance::euclid(pts, c, 2).unwrap();
        let root = build_root(&inst);
        let mut primal = vec![0.0; root.num_vars()];
        for t in 1..5 {
            primal[root.y_column(t)] = 1.0;
        }
        for key in [EdgeKey::Edge(0, 1), EdgeKey::Edge(1, 2), EdgeKey::Edge(2, 3), EdgeKey::Edge(0, 3), EdgeKey::Shuttle(4)] {
            primal[root.edge_column(key).unwrap()] = 1.0;
        }
        let s = root.decode(&primal).unwrap();
        assert_eq!(s.canonical().tours, vec![vec![0, 1, 2, 3, 0], vec![0, 4, 0]]);
        assert_eq!(root.lp.max_violation(&primal), 0.0);
    }
}
