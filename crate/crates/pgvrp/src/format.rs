//! Text formats for instances and a-priori solutions.
//!
//! Instance:
//!
//! ```text
//! PGVRP 1
//! VEHICLES 2
//! METRIC EUCLID
//! NODE 0 50 50
//! NODE 1 10 20
//! NODE 2 80 15
//! CLUSTER 1 0.4 1 2
//! ```
//!
//! With `METRIC EXPLICIT` the `NODE` lines are replaced by `EDGE i j d` for
//! every pair `i < j`. `#` starts a comment.
//!
//! Solution: `TOURS K` followed by one line per tour, `0 ... 0`.

use std::fmt::Write as _;

use pgvrp_core::model::{AprioriSolution, Cluster, Instance, Metric, ModelError, Point};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{0}")]
    Missing(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn syntax(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, msg: msg.into() }
}

/// Non-empty lines with comments removed, numbered from 1.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let words: Vec<&str> = body.split_whitespace().collect();
        (!words.is_empty()).then_some((i + 1, words))
    })
}

fn number<T: std::str::FromStr>(line: usize, word: &str, what: &str) -> Result<T, FormatError> {
    word.parse().map_err(|_| syntax(line, format!("bad {what} `{word}`")))
}

pub fn parse_instance(text: &str) -> Result<Instance, FormatError> {
    let mut it = lines(text);
    match it.next() {
        Some((_, w)) if w == ["PGVRP", "1"] => {}
        Some((line, _)) => return Err(syntax(line, "expected header `PGVRP 1`")),
        None => return Err(FormatError::Missing("header `PGVRP 1`")),
    }
    let mut vehicles: Option<usize> = None;
    let mut metric: Option<Metric> = None;
    let mut nodes: Vec<(usize, Point)> = Vec::new();
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut clusters: Vec<Cluster> = Vec::new();
    for (line, w) in it {
        match w[0] {
            "VEHICLES" => {
                if w.len() != 2 {
                    return Err(syntax(line, "expected `VEHICLES <K>`"));
                }
                if vehicles.replace(number(line, w[1], "vehicle count")?).is_some() {
                    return Err(syntax(line, "duplicate VEHICLES"));
                }
            }
            "METRIC" => {
                let m = match w.get(1..) {
                    Some(["EUCLID"]) => Metric::Euclid,
                    Some(["EXPLICIT"]) => Metric::Explicit,
                    _ => return Err(syntax(line, "expected `METRIC EUCLID|EXPLICIT`")),
                };
                if metric.replace(m).is_some() {
                    return Err(syntax(line, "duplicate METRIC"));
                }
            }
            "NODE" => {
                if w.len() != 4 {
                    return Err(syntax(line, "expected `NODE <id> <x> <y>`"));
                }
                let id = number(line, w[1], "node id")?;
                let p = Point::new(number(line, w[2], "coordinate")?, number(line, w[3], "coordinate")?);
                nodes.push((id, p));
            }
            "EDGE" => {
                if w.len() != 4 {
                    return Err(syntax(line, "expected `EDGE <i> <j> <d>`"));
                }
                let i: usize = number(line, w[1], "node id")?;
                let j: usize = number(line, w[2], "node id")?;
                if i >= j {
                    return Err(syntax(line, "EDGE needs i < j"));
                }
                edges.push((i, j, number(line, w[3], "distance")?));
            }
            "CLUSTER" => {
                if w.len() < 4 {
                    return Err(syntax(line, "expected `CLUSTER <k> <p> <node>+`"));
                }
                let id = number(line, w[1], "cluster id")?;
                let probability = number(line, w[2], "probability")?;
                let members = w[3..].iter().map(|s| number(line, s, "node id")).collect::<Result<_, _>>()?;
                clusters.push(Cluster { id, probability, members });
            }
            other => return Err(syntax(line, format!("unknown keyword `{other}`"))),
        }
    }
    let vehicles = vehicles.ok_or(FormatError::Missing("VEHICLES line"))?;
    clusters.sort_by_key(|c| c.id);
    match metric.ok_or(FormatError::Missing("METRIC line"))? {
        Metric::Euclid => {
            if !edges.is_empty() {
                return Err(FormatError::Missing("NODE lines (EDGE given with METRIC EUCLID)"));
            }
            nodes.sort_by_key(|(id, _)| *id);
            if nodes.iter().enumerate().any(|(k, (id, _))| *id != k) {
                return Err(FormatError::Missing("NODE ids 0..n-1, each exactly once"));
            }
            Ok(Instance::euclid(nodes.into_iter().map(|(_, p)| p).collect(), clusters, vehicles)?)
        }
        Metric::Explicit => {
            if !nodes.is_empty() {
                return Err(FormatError::Missing("EDGE lines (NODE given with METRIC EXPLICIT)"));
            }
            let n = edges.iter().map(|e| e.1 + 1).max().unwrap_or(1);
            let mut dist = vec![f64::NAN; n * n];
            for i in 0..n {
                dist[i * n + i] = 0.0;
            }
            for &(i, j, d) in &edges {
                if !dist[i * n + j].is_nan() {
                    return Err(FormatError::Missing("each EDGE pair exactly once"));
                }
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
            if dist.iter().any(|d| d.is_nan()) {
                return Err(FormatError::Missing("EDGE line for every pair i < j"));
            }
            Ok(Instance::explicit(n, dist, clusters, vehicles)?)
        }
    }
}

pub fn write_instance(instance: &Instance) -> String {
    let mut out = String::new();
    out.push_str("PGVRP 1\n");
    let _ = writeln!(out, "VEHICLES {}", instance.vehicles());
    let n = instance.n_nodes();
    match instance.coordinates() {
        Some(points) if instance.metric() == Metric::Euclid => {
            out.push_str("METRIC EUCLID\n");
            for (i, p) in points.iter().enumerate() {
                let _ = writeln!(out, "NODE {i} {} {}", p.x, p.y);
            }
        }
        _ => {
            out.push_str("METRIC EXPLICIT\n");
            for i in 0..n {
                for j in (i + 1)..n {
                    let _ = writeln!(out, "EDGE {i} {j} {}", instance.distance(i, j));
                }
            }
        }
    }
    for c in instance.clusters() {
        let _ = write!(out, "CLUSTER {} {}", c.id, c.probability);
        for m in &c.members {
            let _ = write!(out, " {m}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_solution(text: &str) -> Result<AprioriSolution, FormatError> {
    let mut it = lines(text);
    let (line, w) = it.next().ok_or(FormatError::Missing("header `TOURS <K>`"))?;
    if w.len() != 2 || w[0] != "TOURS" {
        return Err(syntax(line, "expected `TOURS <K>`"));
    }
    let k: usize = number(line, w[1], "tour count")?;
    let mut tours = Vec::with_capacity(k);
    for (line, w) in it {
        let tour: Vec<usize> = w.iter().map(|s| number(line, s, "node id")).collect::<Result<_, _>>()?;
        if tour.len() < 2 || tour[0] != 0 || tour[tour.len() - 1] != 0 {
            return Err(syntax(line, "a tour starts and ends at 0"));
        }
        if tours.len() == k {
            return Err(syntax(line, format!("more than {k} tours")));
        }
        tours.push(tour);
    }
    if tours.len() != k {
        return Err(FormatError::Missing("one line per declared tour"));
    }
    Ok(AprioriSolution::new(tours))
}

pub fn write_solution(solution: &AprioriSolution) -> String {
    let mut out = format!("TOURS {}\n", solution.tours.len());
    for t in &solution.tours {
        let line: Vec<String> = t.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}
