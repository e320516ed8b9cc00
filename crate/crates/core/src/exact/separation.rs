//! Separation of generalized subtour elimination constraints
//! `x(delta(S)) >= 2 y_t` for `t` in `S`, depot outside `S`.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::{AprioriSolution, EdgeIndex, FractionalPoint, Instance};

/// Support threshold and minimum violation.
pub const SEPARATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GsecCut {
    /// Customer set, sorted; never contains the depot.
    pub set: Vec<usize>,
    pub anchor: usize,
}

impl GsecCut {
    /// Weight of the edges leaving `set` under `point`.
    pub fn crossing(&self, point: &FractionalPoint) -> f64 {
        let n = point.n_nodes();
        let mut inside = vec![false; n];
        for &v in &self.set {
            inside[v] = true;
        }
        let index = EdgeIndex::new(n);
        let mut total = 0.0;
        for (e, &x) in point.x.iter().enumerate() {
            if x != 0.0 {
                let (i, j) = index.endpoints(e);
                if inside[i] != inside[j] {
                    total += x;
                }
            }
        }
        total
    }

    /// `2 y_anchor - x(delta(S))`; positive when the point violates the cut.
    pub fn violation(&self, point: &FractionalPoint) -> f64 {
        2.0 * point.y[self.anchor] - self.crossing(point)
    }

    pub fn is_satisfied_by(&self, solution: &AprioriSolution, instance: &Instance) -> bool {
        self.violation(&FractionalPoint::from_solution(solution, instance)) <= 1e-9
    }
}

/// Violated cuts found from support components and depot-rooted min cuts.
pub fn separate_gsec(point: &FractionalPoint) -> Vec<GsecCut> {
    let n = point.n_nodes();
    let index = EdgeIndex::new(n);
    let mut cuts: Vec<GsecCut> = Vec::new();

    let mut parent: Vec<usize> = (0..n).collect();
    for (e, &x) in point.x.iter().enumerate() {
        if x > SEPARATION_TOL {
            let (i, j) = index.endpoints(e);
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|v| find(&mut parent, v)).collect();
    let depot_root = roots[0];
    let mut seen = vec![false; n];
    for v in 1..n {
        let r = roots[v];
        if r == depot_root || seen[r] {
            continue;
        }
        seen[r] = true;
        let set: Vec<usize> = (1..n).filter(|&u| roots[u] == r).collect();
        push_if_violated(&mut cuts, set, point);
    }

    let mut covered = vec![false; n];
    for c in &cuts {
        for &v in &c.set {
            covered[v] = true;
        }
    }
    let mut flow = Dinic::new(n);
    for (e, &x) in point.x.iter().enumerate() {
        if x > SEPARATION_TOL {
            let (i, j) = index.endpoints(e);
            flow.add_undirected(i, j, x);
        }
    }
    for t in 1..n {
        if covered[t] || point.y[t] <= SEPARATION_TOL || roots[t] != depot_root {
            continue;
        }
        flow.reset();
        let value = flow.max_flow(0, t, 2.0 * point.y[t]);
        if value < 2.0 * point.y[t] - SEPARATION_TOL {
            let set = flow.sink_side(t);
            for &v in &set {
                covered[v] = true;
            }
            push_if_violated(&mut cuts, set, point);
        }
    }
    cuts
}

fn push_if_violated(cuts: &mut Vec<GsecCut>, set: Vec<usize>, point: &FractionalPoint) {
    let Some(&anchor) = set.iter().max_by(|&&a, &&b| point.y[a].total_cmp(&point.y[b]).then(b.cmp(&a))) else {
        return;
    };
    let cut = GsecCut { set, anchor };
    if cut.violation(point) > SEPARATION_TOL && !cuts.iter().any(|c| c.set == cut.set) {
        cuts.push(cut);
    }
}

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

struct Arc {
    to: usize,
    cap: f64,
    flow: f64,
}

/// Max flow on an undirected graph; each edge is a pair of mutually
/// reverse arcs with the full capacity.
struct Dinic {
    adj: Vec<Vec<usize>>,
    arcs: Vec<Arc>,
    level: Vec<i64>,
    next: Vec<usize>,
}

impl Dinic {
    fn new(n: usize) -> Self {
        Dinic { adj: vec![Vec::new(); n], arcs: Vec::new(), level: vec![0; n], next: vec![0; n] }
    }

    fn add_undirected(&mut self, u: usize, v: usize, cap: f64) {
        self.adj[u].push(self.arcs.len());
        self.arcs.push(Arc { to: v, cap, flow: 0.0 });
        self.adj[v].push(self.arcs.len());
        self.arcs.push(Arc { to: u, cap, flow: 0.0 });
    }

    fn reset(&mut self) {
        for a in &mut self.arcs {
            a.flow = 0.0;
        }
    }

    fn residual(&self, a: usize) -> f64 {
        self.arcs[a].cap - self.arcs[a].flow
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.adj[u] {
                let v = self.arcs[a].to;
                if self.level[v] < 0 && self.residual(a) > 1e-12 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: f64) -> f64 {
        if u == t {
            return pushed;
        }
        while self.next[u] < self.adj[u].len() {
            let a = self.adj[u][self.next[u]];
            let v = self.arcs[a].to;
            let r = self.residual(a);
            if self.level[v] == self.level[u] + 1 && r > 1e-12 {
                let got = self.dfs(v, t, pushed.min(r));
                if got > 0.0 {
                    self.arcs[a].flow += got;
                    self.arcs[a ^ 1].flow -= got;
                    return got;
                }
            }
            self.next[u] += 1;
        }
        0.0
    }

    /// Flow value, stopping early once `limit` is reached.
    fn max_flow(&mut self, s: usize, t: usize, limit: f64) -> f64 {
        let mut total = 0.0;
        while total < limit && self.bfs(s, t) {
            self.next.iter_mut().for_each(|p| *p = 0);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= 0.0 {
                    break;
                }
                total += f;
            }
        }
        total
    }

    /// Nodes that can still reach `t` in the residual graph.
    fn sink_side(&self, t: usize) -> Vec<usize> {
        let n = self.adj.len();
        let mut mark = vec![false; n];
        mark[t] = true;
        let mut stack = vec![t];
        while let Some(v) = stack.pop() {
            for &a in &self.adj[v] {
                // Arc a runs v -> u; its partner u -> v carries residual into v.
                let u = self.arcs[a].to;
                if !mark[u] && self.residual(a ^ 1) > 1e-12 {
                    mark[u] = true;
                    stack.push(u);
                }
            }
        }
        (1..n).filter(|&v| mark[v]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(n: usize, edges: &[(usize, usize, f64)], y: &[f64]) -> FractionalPoint {
        let index = EdgeIndex::new(n);
        let mut x = vec![0.0; index.len()];
        for &(i, j, v) in edges {
            x[index.index(i, j)] = v;
        }
        FractionalPoint { x, y: y.to_vec(), theta: 0.0 }
    }

    #[test]
    fn connected_tour_has_no_cut() {
        let p = point(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)], &[1.0, 1.0, 1.0, 1.0]);
        assert!(separate_gsec(&p).is_empty());
    }

    #[test]
    fn subcycle_component_is_returned() {
        // Depot shuttle to 1; triangle 2-3-4 detached.
        let p = point(5, &[(0, 1, 2.0), (2, 3, 1.0), (3, 4, 1.0), (2, 4, 1.0)], &[1.0, 1.0, 1.0, 1.0, 1.0]);
        let cuts = separate_gsec(&p);
        assert_eq!(cuts.len(), 1);
        assert_eq!(cuts[0].set, vec![2, 3, 4]);
        assert_eq!(cuts[0].violation(&p), 2.0);
    }

    #[test]
    fn half_bridges_between_triangles() {
        // Triangles {1,2,3} and {4,5,6}, every node of degree 2, each
        // triangle joined to the depot by two half edges.
        let e = [
            (1, 2, 1.0),
            (2, 3, 1.0),
            (1, 3, 0.5),
            (4, 5, 1.0),
            (5, 6, 1.0),
            (4, 6, 0.5),
            (0, 1, 0.5),
            (0, 3, 0.5),
            (0, 4, 0.5),
            (0, 6, 0.5),
        ];
        let p = point(7, &e, &[1.0; 7]);
        let cuts = separate_gsec(&p);
        assert_eq!(cuts.len(), 2);
        // Crossing weight 1 against 2 y_t = 2.
        assert_eq!(cuts[0].set, vec![1, 2, 3]);
        assert!((cuts[0].violation(&p) - 1.0).abs() < 1e-12);
        assert_eq!(cuts[1].set, vec![4, 5, 6]);
    }
}
