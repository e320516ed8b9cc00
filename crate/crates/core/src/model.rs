//! Instances, a-priori solutions, scenarios and LP points.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// How distances were supplied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Euclidean distances computed from node coordinates.
    Euclid,
    /// An explicit symmetric distance table.
    Explicit,
}

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        libm::sqrt((self.x - other.x) * (self.x - other.x) + (self.y - other.y) * (self.y - other.y))
    }
}

/// A cluster of customer nodes sharing one presence probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// 1-based cluster id.
    pub id: usize,
    pub probability: f64,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("instance has no nodes")]
    NoNodes,
    #[error("vehicle count must be at least 1")]
    NoVehicles,
    #[error("distance table has {found} entries, expected {expected}")]
    DistanceTableSize { expected: usize, found: usize },
    #[error("distance d({i},{j}) = {value} is negative or not finite")]
    BadDistance { i: usize, j: usize, value: f64 },
    #[error("distance table is not symmetric at ({i},{j})")]
    AsymmetricDistance { i: usize, j: usize },
    #[error("distance d({i},{i}) is not zero")]
    NonZeroDiagonal { i: usize },
    #[error("coordinate of node {node} is not finite")]
    BadCoordinate { node: usize },
    #[error("cluster {cluster} has probability {probability} outside (0, 1]")]
    BadProbability { cluster: usize, probability: f64 },
    #[error("cluster {cluster} is empty")]
    EmptyCluster { cluster: usize },
    #[error("cluster ids must be 1..=m in order, found {found} at position {position}")]
    ClusterIdSequence { position: usize, found: usize },
    #[error("node {node} is out of range")]
    NodeOutOfRange { node: usize },
    #[error("depot cannot belong to cluster {cluster}")]
    DepotInCluster { cluster: usize },
    #[error("node in two clusters: node {node}")]
    NodeInTwoClusters { node: usize },
    #[error("node {node} belongs to no cluster")]
    UncoveredNode { node: usize },
}

/// A validated problem instance. Node 0 is the depot.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    n: usize,
    dist: Vec<f64>,
    clusters: Vec<Cluster>,
    cluster_of: Vec<Option<usize>>,
    vehicles: usize,
    metric: Metric,
    coordinates: Option<Vec<Point>>,
}

impl Instance {
    /// Builds a Euclidean instance from coordinates (index 0 is the depot).
    pub fn euclid(coordinates: Vec<Point>, clusters: Vec<Cluster>, vehicles: usize) -> Result<Self, ModelError> {
        for (node, p) in coordinates.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(ModelError::BadCoordinate { node });
            }
        }
        let n = coordinates.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = coordinates[i].distance(&coordinates[j]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Self::build(n, dist, clusters, vehicles, Metric::Euclid, Some(coordinates))
    }

    /// Builds an instance from a full row-major `n x n` distance table.
    pub fn explicit(n: usize, distances: Vec<f64>, clusters: Vec<Cluster>, vehicles: usize) -> Result<Self, ModelError> {
        Self::build(n, distances, clusters, vehicles, Metric::Explicit, None)
    }

    fn build(
        n: usize,
        dist: Vec<f64>,
        clusters: Vec<Cluster>,
        vehicles: usize,
        metric: Metric,
        coordinates: Option<Vec<Point>>,
    ) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::NoNodes);
        }
        if vehicles == 0 {
            return Err(ModelError::NoVehicles);
        }
        if dist.len() != n * n {
            return Err(ModelError::DistanceTableSize { expected: n * n, found: dist.len() });
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(ModelError::NonZeroDiagonal { i });
            }
            for j in 0..n {
                let value = dist[i * n + j];
                if !value.is_finite() || value < 0.0 {
                    return Err(ModelError::BadDistance { i, j, value });
                }
                if value != dist[j * n + i] {
                    return Err(ModelError::AsymmetricDistance { i: i.min(j), j: i.max(j) });
                }
            }
        }
        let mut cluster_of = vec![None; n];
        for (position, c) in clusters.iter().enumerate() {
            if c.id != position + 1 {
                return Err(ModelError::ClusterIdSequence { position, found: c.id });
            }
            if !(c.probability > 0.0 && c.probability <= 1.0) {
                return Err(ModelError::BadProbability { cluster: c.id, probability: c.probability });
            }
            if c.members.is_empty() {
                return Err(ModelError::EmptyCluster { cluster: c.id });
            }
            for &node in &c.members {
                if node >= n {
                    return Err(ModelError::NodeOutOfRange { node });
                }
                if node == 0 {
                    return Err(ModelError::DepotInCluster { cluster: c.id });
                }
                if cluster_of[node].is_some() {
                    return Err(ModelError::NodeInTwoClusters { node });
                }
                cluster_of[node] = Some(position);
            }
        }
        if let Some(node) = (1..n).find(|&v| cluster_of[v].is_none()) {
            return Err(ModelError::UncoveredNode { node });
        }
        Ok(Instance { n, dist, clusters, cluster_of, vehicles, metric, coordinates })
    }

    /// Number of nodes including the depot.
    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn vehicles(&self) -> usize {
        self.vehicles
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn coordinates(&self) -> Option<&[Point]> {
        self.coordinates.as_deref()
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    /// Zero-based cluster index of a node; `None` for the depot.
    #[inline]
    pub fn cluster_index(&self, node: usize) -> Option<usize> {
        self.cluster_of[node]
    }

    /// Presence probability of a node; the depot is always present.
    #[inline]
    pub fn node_probability(&self, node: usize) -> f64 {
        match self.cluster_of[node] {
            Some(k) => self.clusters[k].probability,
            None => 1.0,
        }
    }

    /// Largest cluster size.
    pub fn max_cluster_size(&self) -> usize {
        self.clusters.iter().map(|c| c.members.len()).max().unwrap_or(0)
    }

    /// Same instance with a different fleet size.
    pub fn with_vehicles(&self, vehicles: usize) -> Result<Self, ModelError> {
        if vehicles == 0 {
            return Err(ModelError::NoVehicles);
        }
        let mut out = self.clone();
        out.vehicles = vehicles;
        Ok(out)
    }

    /// Same instance with every cluster present for sure.
    pub fn deterministic(&self) -> Self {
        let mut out = self.clone();
        for c in &mut out.clusters {
            c.probability = 1.0;
        }
        out
    }

    /// Same instance with new cluster probabilities.
    pub fn with_probabilities(&self, probabilities: &[f64]) -> Result<Self, ModelError> {
        let mut clusters = self.clusters.clone();
        for (c, &p) in clusters.iter_mut().zip(probabilities) {
            c.probability = p;
        }
        Self::build(self.n, self.dist.clone(), clusters, self.vehicles, self.metric, self.coordinates.clone())
    }

    /// Largest triangle-inequality excess `d_ij - d_ik - d_kj` over distinct
    /// triples, or 0 when there are fewer than three nodes. Values `<= 0`
    /// mean the distances are metric.
    pub fn triangle_excess(&self) -> f64 {
        if self.n < 3 {
            return 0.0;
        }
        let mut worst = f64::NEG_INFINITY;
        for i in 0..self.n {
            for j in 0..self.n {
                if i == j {
                    continue;
                }
                for k in 0..self.n {
                    if k == i || k == j {
                        continue;
                    }
                    let v = self.distance(i, j) - self.distance(i, k) - self.distance(k, j);
                    if v > worst {
                        worst = v;
                    }
                }
            }
        }
        worst
    }
}

/// One realization of cluster presence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub present: Vec<bool>,
}

impl Scenario {
    /// Scenario whose cluster `k` is present iff bit `k` of `mask` is set.
    pub fn from_mask(m: usize, mask: u64) -> Self {
        Scenario { present: (0..m).map(|k| mask >> k & 1 == 1).collect() }
    }

    pub fn all_present(m: usize) -> Self {
        Scenario { present: vec![true; m] }
    }

    /// Probability of this scenario under independent clusters.
    pub fn probability(&self, instance: &Instance) -> f64 {
        self.present
            .iter()
            .zip(instance.clusters())
            .map(|(&on, c)| if on { c.probability } else { 1.0 - c.probability })
            .product()
    }

    /// Whether a node is present; the depot always is.
    pub fn node_present(&self, instance: &Instance, node: usize) -> bool {
        match instance.cluster_index(node) {
            Some(k) => self.present[k],
            None => true,
        }
    }
}

/// A set of tours, each a node sequence starting and ending at the depot.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AprioriSolution {
    pub tours: Vec<Vec<usize>>,
}

/// One feasibility violation of an a-priori solution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// A tour references a node outside the instance.
    UnknownNode { tour: usize, node: usize },
    /// A tour does not start and end at the depot, or passes through it.
    DepotDegree { tour: usize },
    /// A node is visited more than once.
    DuplicateVisit { node: usize },
    /// A cluster is visited zero times or more than once.
    ClusterCover { cluster: usize, visits: usize },
    /// Number of tours differs from the fleet size.
    TourCount { expected: usize, found: usize },
}

impl Violation {
    pub fn name(&self) -> &'static str {
        match self {
            Violation::UnknownNode { .. } => "unknown-node",
            Violation::DepotDegree { .. } => "depot-degree",
            Violation::DuplicateVisit { .. } => "degree",
            Violation::ClusterCover { .. } => "cluster-cover",
            Violation::TourCount { .. } => "tour-count",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownNode { tour, node } => write!(f, "tour {tour} visits unknown node {node}"),
            Violation::DepotDegree { tour } => write!(f, "tour {tour} must start and end at the depot and not pass through it"),
            Violation::DuplicateVisit { node } => write!(f, "duplicate visit of node {node}"),
            Violation::ClusterCover { cluster, visits } => write!(f, "cluster {cluster} visited {visits} times"),
            Violation::TourCount { expected, found } => write!(f, "{found} tours, expected {expected}"),
        }
    }
}

/// Result of [`AprioriSolution::check`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {v}", v.name())?;
        }
        Ok(())
    }
}

impl AprioriSolution {
    pub fn new(tours: Vec<Vec<usize>>) -> Self {
        AprioriSolution { tours }
    }

    /// `k` empty tours `[0, 0]`.
    pub fn empty(k: usize) -> Self {
        AprioriSolution { tours: vec![vec![0, 0]; k] }
    }

    /// Wraps depot-free routes in depot endpoints and pads with empty tours
    /// up to `k` tours.
    pub fn from_routes(routes: &[Vec<usize>], k: usize) -> Self {
        let mut tours: Vec<Vec<usize>> = routes
            .iter()
            .map(|r| {
                let mut t = Vec::with_capacity(r.len() + 2);
                t.push(0);
                t.extend_from_slice(r);
                t.push(0);
                t
            })
            .collect();
        while tours.len() < k {
            tours.push(vec![0, 0]);
        }
        AprioriSolution { tours }
    }

    /// Customer nodes in visiting order across all tours.
    pub fn visited(&self) -> impl Iterator<Item = usize> + '_ {
        self.tours.iter().flat_map(|t| t.iter().copied().filter(|&v| v != 0))
    }

    /// Length when every cluster is present.
    pub fn deterministic_length(&self, instance: &Instance) -> f64 {
        self.tours
            .iter()
            .map(|t| t.windows(2).map(|w| instance.distance(w[0], w[1])).sum::<f64>())
            .sum()
    }

    /// Lists every violation of the feasibility rules.
    pub fn check(&self, instance: &Instance) -> FeasibilityReport {
        let mut violations = Vec::new();
        let n = instance.n_nodes();
        if self.tours.len() != instance.vehicles() {
            violations.push(Violation::TourCount { expected: instance.vehicles(), found: self.tours.len() });
        }
        let mut seen = vec![0usize; n];
        let mut cluster_visits = vec![0usize; instance.num_clusters()];
        for (ti, tour) in self.tours.iter().enumerate() {
            if tour.len() < 2 || tour[0] != 0 || tour[tour.len() - 1] != 0 {
                violations.push(Violation::DepotDegree { tour: ti });
            }
            let inner = if tour.len() >= 2 { &tour[1..tour.len() - 1] } else { &[][..] };
            let mut depot_inside = false;
            for &v in inner {
                if v >= n {
                    violations.push(Violation::UnknownNode { tour: ti, node: v });
                    continue;
                }
                if v == 0 {
                    depot_inside = true;
                    continue;
                }
                seen[v] += 1;
                if seen[v] == 2 {
                    violations.push(Violation::DuplicateVisit { node: v });
                }
                if seen[v] == 1 {
                    if let Some(k) = instance.cluster_index(v) {
                        cluster_visits[k] += 1;
                    }
                }
            }
            if depot_inside {
                violations.push(Violation::DepotDegree { tour: ti });
            }
        }
        for (k, &visits) in cluster_visits.iter().enumerate() {
            if visits != 1 {
                violations.push(Violation::ClusterCover { cluster: k + 1, visits });
            }
        }
        FeasibilityReport { violations }
    }

    /// Canonical form: each tour oriented so its first customer is smaller
    /// than its last, tours sorted, empty tours last.
    pub fn canonical(&self) -> Self {
        let mut tours: Vec<Vec<usize>> = self
            .tours
            .iter()
            .map(|t| {
                let mut t = t.clone();
                if t.len() > 3 && t[1] > t[t.len() - 2] {
                    t.reverse();
                }
                t
            })
            .collect();
        tours.sort_by(|a, b| {
            let ea = a.len() <= 2;
            let eb = b.len() <= 2;
            ea.cmp(&eb).then_with(|| a.cmp(b))
        });
        AprioriSolution { tours }
    }

    /// Undirected edge multiplicities in [`EdgeIndex`] order. A single-customer
    /// tour uses its depot edge twice.
    pub fn edge_incidence(&self, n: usize) -> Vec<f64> {
        let index = EdgeIndex::new(n);
        let mut x = vec![0.0; index.len()];
        for t in &self.tours {
            for w in t.windows(2) {
                if w[0] != w[1] {
                    x[index.index(w[0], w[1])] += 1.0;
                }
            }
        }
        x
    }
}

/// Dense numbering of undirected edges `{i, j}`, `i != j`, of an `n`-node graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeIndex {
    n: usize,
}

impl EdgeIndex {
    pub fn new(n: usize) -> Self {
        EdgeIndex { n }
    }

    pub fn len(&self) -> usize {
        self.n * self.n.saturating_sub(1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Index of edge `{i, j}`; panics when `i == j`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        assert!(i != j, "loop edge");
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        a * (2 * self.n - a - 1) / 2 + (b - a - 1)
    }

    /// Endpoints `(i, j)` with `i < j` of edge `e`.
    pub fn endpoints(&self, mut e: usize) -> (usize, usize) {
        let mut a = 0;
        loop {
            let row = self.n - a - 1;
            if e < row {
                return (a, a + 1 + e);
            }
            e -= row;
            a += 1;
        }
    }
}

/// A point of the routing relaxation: edge values, node values and `theta`.
///
/// `x` follows [`EdgeIndex`] order and holds values in `[0, 1]`, except depot
/// edges which may reach 2 for a single-customer tour. `y[0]` is the fleet size.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub theta: f64,
}

impl FractionalPoint {
    /// The integral point of an a-priori solution.
    pub fn from_solution(solution: &AprioriSolution, instance: &Instance) -> Self {
        let n = instance.n_nodes();
        let mut y = vec![0.0; n];
        y[0] = instance.vehicles() as f64;
        for v in solution.visited() {
            y[v] = 1.0;
        }
        FractionalPoint { x: solution.edge_incidence(n), y, theta: 0.0 }
    }

    pub fn n_nodes(&self) -> usize {
        self.y.len()
    }

    pub fn edge(&self, i: usize, j: usize) -> f64 {
        self.x[EdgeIndex::new(self.y.len()).index(i, j)]
    }
}
