//! Seeded instance generation and the experiment runner.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use pgvrp_core::deadline::Deadline;
use pgvrp_core::exact::{self, ExactOptions, ExactStatus};
use pgvrp_core::model::{AprioriSolution, Cluster, Instance, ModelError, Point};
use pgvrp_core::oracle::{self, EnumerationBudget};
use pgvrp_core::{eval, heuristics};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Size rows `(n_nodes, m_clusters, k_vehicles)` of the default suite.
pub const DEFAULT_ROWS: [(usize, usize, usize); 16] = [
    (10, 2, 1),
    (10, 5, 2),
    (30, 5, 2),
    (30, 10, 5),
    (50, 10, 4),
    (50, 25, 7),
    (80, 20, 6),
    (80, 40, 12),
    (100, 25, 8),
    (100, 50, 14),
    (200, 50, 15),
    (200, 100, 18),
    (250, 50, 18),
    (250, 125, 25),
    (300, 100, 20),
    (300, 150, 30),
];

pub const CSV_HEADER: [&str; 11] =
    ["id", "n_nodes", "m_clusters", "cluster_size", "k_vehicles", "algo", "objective", "seconds", "status", "exact_ref", "deviation"];

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("row {row}: {msg}")]
    BadRow { row: usize, msg: &'static str },
    #[error("line {line}: expected `<n_nodes> <m_clusters> <k_vehicles>`")]
    RowSyntax { line: usize },
    #[error("probability range must satisfy 0 < lo <= hi <= 1")]
    ProbabilityRange,
    #[error("box size must be positive")]
    BoxSize,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteRow {
    pub n_nodes: usize,
    pub m_clusters: usize,
    pub k_vehicles: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSpec {
    pub rows: Vec<SuiteRow>,
    pub seed: u64,
    /// Side of the square holding the nodes; the depot sits at its center.
    pub box_size: f64,
    pub probability_range: (f64, f64),
}

impl SuiteSpec {
    pub fn new(rows: Vec<SuiteRow>, seed: u64) -> Self {
        SuiteSpec { rows, seed, box_size: 100.0, probability_range: (0.1, 0.9) }
    }

    pub fn default_suite(seed: u64) -> Self {
        let rows = DEFAULT_ROWS.iter().map(|&(n_nodes, m_clusters, k_vehicles)| SuiteRow { n_nodes, m_clusters, k_vehicles }).collect();
        SuiteSpec::new(rows, seed)
    }

    /// One `n m k` row per line; `#` starts a comment.
    pub fn parse_rows(text: &str) -> Result<Vec<SuiteRow>, BenchError> {
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let body = raw.split('#').next().unwrap_or("");
            let words: Vec<&str> = body.split_whitespace().collect();
            if words.is_empty() {
                continue;
            }
            let nums: Vec<usize> = words.iter().filter_map(|w| w.parse().ok()).collect();
            if words.len() != 3 || nums.len() != 3 {
                return Err(BenchError::RowSyntax { line: i + 1 });
            }
            rows.push(SuiteRow { n_nodes: nums[0], m_clusters: nums[1], k_vehicles: nums[2] });
        }
        Ok(rows)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let (lo, hi) = self.probability_range;
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(BenchError::ProbabilityRange);
        }
        if !(self.box_size > 0.0 && self.box_size.is_finite()) {
            return Err(BenchError::BoxSize);
        }
        for (row, r) in self.rows.iter().enumerate() {
            if r.n_nodes < 2 {
                return Err(BenchError::BadRow { row, msg: "need at least one customer" });
            }
            if r.m_clusters == 0 || r.m_clusters > r.n_nodes - 1 {
                return Err(BenchError::BadRow { row, msg: "need 1 <= m_clusters <= n_nodes - 1" });
            }
            if r.k_vehicles == 0 {
                return Err(BenchError::BadRow { row, msg: "need at least one vehicle" });
            }
        }
        Ok(())
    }
}

/// Sizes of `m` clusters over `customers` nodes, as even as possible,
/// larger clusters first.
pub fn cluster_sizes(customers: usize, m: usize) -> Vec<usize> {
    (0..m).map(|k| customers / m + usize::from(k < customers % m)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedInstance {
    pub id: String,
    pub instance: Instance,
}

pub fn instance_id(index: usize, row: &SuiteRow) -> String {
    format!("{:03}-n{}-m{}-k{}", index + 1, row.n_nodes, row.m_clusters, row.k_vehicles)
}

/// Builds one instance per row. Each row draws from its own stream of the
/// suite seed, so rows do not depend on each other.
pub fn generate(spec: &SuiteSpec) -> Result<Vec<GeneratedInstance>, BenchError> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.rows.len());
    for (index, row) in spec.rows.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(index as u64);
        let half = spec.box_size / 2.0;
        let mut points = vec![Point::new(half, half)];
        for _ in 1..row.n_nodes {
            points.push(Point::new(rng.random_range(0.0..spec.box_size), rng.random_range(0.0..spec.box_size)));
        }
        let mut order: Vec<usize> = (1..row.n_nodes).collect();
        order.shuffle(&mut rng);
        let (lo, hi) = spec.probability_range;
        let mut clusters = Vec::with_capacity(row.m_clusters);
        let mut start = 0;
        for (k, size) in cluster_sizes(row.n_nodes - 1, row.m_clusters).into_iter().enumerate() {
            let probability = if lo == hi { lo } else { rng.random_range(lo..hi) };
            let mut members = order[start..start + size].to_vec();
            members.sort_unstable();
            clusters.push(Cluster { id: k + 1, probability, members });
            start += size;
        }
        let instance = Instance::euclid(points, clusters, row.k_vehicles)?;
        out.push(GeneratedInstance { id: instance_id(index, row), instance });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    MaxMin,
    MinMin,
    Unbounded,
    Exact,
    Oracle,
}

impl Algo {
    pub const ALL: [Algo; 5] = [Algo::MaxMin, Algo::MinMin, Algo::Unbounded, Algo::Exact, Algo::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Algo::MaxMin => "MmI",
            Algo::MinMin => "mmI",
            Algo::Unbounded => "unbounded",
            Algo::Exact => "exact",
            Algo::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algo::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| format!("unknown algorithm `{s}` (expected MmI, mmI, unbounded, exact or oracle)"))
    }
}

/// Parses a comma-separated algorithm list.
pub fn parse_algos(list: &str) -> Result<Vec<Algo>, String> {
    let algos: Vec<Algo> = list.split(',').map(|s| s.trim().parse()).collect::<Result<_, _>>()?;
    if algos.is_empty() {
        return Err("empty algorithm list".into());
    }
    Ok(algos)
}

/// Wall-clock deadline for the exact solver.
#[derive(Debug, Clone, Copy)]
pub struct TimeLimit {
    end: Option<Instant>,
}

impl TimeLimit {
    pub fn new(limit: Option<Duration>) -> Self {
        TimeLimit { end: limit.map(|d| Instant::now() + d) }
    }
}

impl Deadline for TimeLimit {
    fn expired(&self) -> bool {
        self.end.is_some_and(|e| Instant::now() >= e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Ok,
    Optimal,
    /// Exact search stopped early; the objective is a lower bound.
    BoundOnly,
    Error(String),
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunStatus::Ok => f.write_str("ok"),
            RunStatus::Optimal => f.write_str("optimal"),
            RunStatus::BoundOnly => f.write_str("L"),
            RunStatus::Error(msg) => write!(f, "error:{msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub objective: Option<f64>,
    pub seconds: f64,
    pub status: RunStatus,
    pub solution: Option<AprioriSolution>,
}

/// Runs one algorithm. `capacity` applies to the capacitated insertion
/// heuristics and defaults to `ceil(m / K)`.
pub fn run_algo(instance: &Instance, algo: Algo, capacity: Option<usize>, time_limit: Option<Duration>) -> Outcome {
    let start = Instant::now();
    let result: Result<(AprioriSolution, f64, RunStatus), String> = (|| {
        let cap = capacity.unwrap_or_else(|| heuristics::default_capacity(instance));
        let heuristic = |s: AprioriSolution| {
            let v = eval::expected_length(&s, instance).map_err(|e| e.to_string())?;
            Ok((s, v, RunStatus::Ok))
        };
        match algo {
            Algo::MaxMin => heuristic(heuristics::max_min_insertion(instance, cap).map_err(|e| e.to_string())?),
            Algo::MinMin => heuristic(heuristics::min_min_insertion(instance, cap).map_err(|e| e.to_string())?),
            Algo::Unbounded => heuristic(heuristics::unbounded_insertion(instance).map_err(|e| e.to_string())?),
            Algo::Exact => {
                let opts = ExactOptions { record_log: false, ..ExactOptions::default() };
                let r = exact::solve_exact(instance, &opts, &TimeLimit::new(time_limit)).map_err(|e| e.to_string())?;
                let status = match r.status {
                    ExactStatus::Optimal => RunStatus::Optimal,
                    ExactStatus::BoundOnly => RunStatus::BoundOnly,
                };
                let value = r.objective();
                let sol = r.solution.ok_or("no incumbent")?;
                Ok((sol, value, status))
            }
            Algo::Oracle => {
                let budget = EnumerationBudget::default();
                let (s, v) = oracle::best_apriori_bruteforce(instance, &budget).map_err(|e| e.to_string())?;
                Ok((s, v, RunStatus::Optimal))
            }
        }
    })();
    let seconds = start.elapsed().as_secs_f64();
    match result {
        Ok((solution, value, status)) => Outcome { objective: Some(value), seconds, status, solution: Some(solution) },
        Err(msg) => Outcome { objective: None, seconds, status: RunStatus::Error(msg), solution: None },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub id: String,
    pub n_nodes: usize,
    pub m_clusters: usize,
    pub cluster_size: usize,
    pub k_vehicles: usize,
    pub algo: Algo,
    pub objective: Option<f64>,
    pub seconds: f64,
    pub status: String,
    pub exact_ref: Option<f64>,
    pub deviation: Option<f64>,
}

impl ResultRow {
    /// CSV fields with timing excluded, for reproducibility checks.
    pub fn without_timing(&self) -> Vec<String> {
        let mut f = self.fields();
        f.remove(7);
        f
    }

    pub fn fields(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
        vec![
            self.id.clone(),
            self.n_nodes.to_string(),
            self.m_clusters.to_string(),
            self.cluster_size.to_string(),
            self.k_vehicles.to_string(),
            self.algo.to_string(),
            opt(self.objective),
            format!("{:.3}", self.seconds),
            self.status.clone(),
            opt(self.exact_ref),
            opt(self.deviation),
        ]
    }
}

/// Runs every algorithm on every instance, in instance-id order.
///
/// The reference for `exact_ref` and `deviation` is the exact run when it
/// produced a value, otherwise the oracle. Rows measured against a lower
/// bound get the status suffix `-L`.
pub fn run_suite(instances: &[GeneratedInstance], algos: &[Algo], time_limit: Duration) -> Vec<ResultRow> {
    let mut order: Vec<&GeneratedInstance> = instances.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    let mut rows = Vec::new();
    for g in order {
        let inst = &g.instance;
        let outcomes: Vec<(Algo, Outcome)> = algos.iter().map(|&a| (a, run_algo(inst, a, None, Some(time_limit)))).collect();
        let pick = |want: Algo, proven: bool| {
            outcomes
                .iter()
                .find(|(a, o)| *a == want && o.objective.is_some() && (o.status == RunStatus::Optimal) == proven)
                .map(|(a, o)| (*a, o.objective.unwrap(), !proven))
        };
        let reference = pick(Algo::Exact, true).or_else(|| pick(Algo::Oracle, true)).or_else(|| pick(Algo::Exact, false));
        for (algo, o) in &outcomes {
            let mut status = o.status.to_string();
            let (mut exact_ref, mut deviation) = (None, None);
            if let (Some((ref_algo, value, is_bound)), Some(obj)) = (reference, o.objective) {
                if ref_algo != *algo {
                    exact_ref = Some(value);
                    deviation = eval::deviation(obj, value).ok();
                    if is_bound {
                        status.push_str("-L");
                    }
                }
            }
            rows.push(ResultRow {
                id: g.id.clone(),
                n_nodes: inst.n_nodes(),
                m_clusters: inst.num_clusters(),
                cluster_size: inst.max_cluster_size(),
                k_vehicles: inst.vehicles(),
                algo: *algo,
                objective: o.objective,
                seconds: o.seconds,
                status,
                exact_ref,
                deviation,
            });
        }
    }
    rows
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_are_even_larger_first() {
        assert_eq!(cluster_sizes(9, 2), vec![5, 4]);
        assert_eq!(cluster_sizes(9, 5), vec![2, 2, 2, 2, 1]);
        assert_eq!(cluster_sizes(299, 100).iter().max(), Some(&3));
    }

    #[test]
    fn default_suite_shapes() {
        let spec = SuiteSpec { rows: SuiteSpec::default_suite(7).rows[..2].to_vec(), ..SuiteSpec::default_suite(7) };
        let g = generate(&spec).unwrap();
        let sizes: Vec<usize> = g[0].instance.clusters().iter().map(|c| c.members.len()).collect();
        assert_eq!(sizes, vec![5, 4]);
        let sizes: Vec<usize> = g[1].instance.clusters().iter().map(|c| c.members.len()).collect();
        assert_eq!(sizes, vec![2, 2, 2, 2, 1]);
        assert_eq!(g[0].id, "001-n10-m2-k1");
        for c in g[1].instance.clusters() {
            assert!((0.1..0.9).contains(&c.probability));
        }
        assert_eq!(g[0].instance.coordinates().unwrap()[0], Point::new(50.0, 50.0));
    }

    #[test]
    fn rows_file_parsing() {
        let rows = SuiteSpec::parse_rows("# n m k\n10 2 1\n\n30 5 2 # second\n").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1], SuiteRow { n_nodes: 30, m_clusters: 5, k_vehicles: 2 });
        assert!(matches!(SuiteSpec::parse_rows("10 2\n"), Err(BenchError::RowSyntax { line: 1 })));
    }

    #[test]
    fn invalid_rows_rejected() {
        let bad = SuiteSpec::new(vec![SuiteRow { n_nodes: 5, m_clusters: 5, k_vehicles: 1 }], 1);
        assert!(generate(&bad).is_err());
        let bad = SuiteSpec::new(vec![SuiteRow { n_nodes: 5, m_clusters: 2, k_vehicles: 0 }], 1);
        assert!(generate(&bad).is_err());
    }

    #[test]
    fn algo_names_round_trip() {
        for a in Algo::ALL {
            assert_eq!(a.name().parse::<Algo>().unwrap(), a);
        }
        assert!("mmi".parse::<Algo>().is_err());
        assert_eq!(parse_algos("MmI,exact").unwrap(), vec![Algo::MaxMin, Algo::Exact]);
    }

    #[test]
    fn deviation_against_reference() {
        let spec = SuiteSpec::new(vec![SuiteRow { n_nodes: 6, m_clusters: 3, k_vehicles: 1 }], 3);
        let g = generate(&spec).unwrap();
        let rows = run_suite(&g, &[Algo::MaxMin, Algo::Exact, Algo::Oracle], Duration::from_secs(30));
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].status, "optimal");
        assert!(rows[1].exact_ref.is_none());
        assert_eq!(rows[2].deviation.map(|d| d.abs() < 1e-9), Some(true));
        assert!(rows[0].deviation.unwrap() >= -1e-12);
    }

    #[test]
    fn csv_header_order() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "id,n_nodes,m_clusters,cluster_size,k_vehicles,algo,objective,seconds,status,exact_ref,deviation\n");
    }

    #[test]
    fn table_deviation_example() {
        assert!((eval::deviation(82.0, 78.0).unwrap() - 0.05128).abs() < 1e-5);
    }
}
