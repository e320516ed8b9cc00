//! Integer L-shaped branch-and-cut for the PGVRP.
//!
//! Nodes are processed depth first. Each node solves the relaxation under
//! its fixings, adds violated GSECs until none remain, branches on a
//! fractional variable, and at integral points evaluates the recourse and
//! adds an optimality cut when `theta` overestimates it.

mod cuts;
mod relaxation;
mod separation;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

pub use cuts::{edge_keys, optimality_cut, EdgeKey, OptimalityCut};
pub use relaxation::{build_root, RootRelaxation, Var};
pub use separation::{separate_gsec, GsecCut, SEPARATION_TOL};

use crate::bounds;
use crate::deadline::Deadline;
use crate::eval::{self, EvalError};
use crate::heuristics::{self, HeuristicError};
use crate::model::{AprioriSolution, Instance};
use crate::simplex::{LpError, LpStatus, Row, Simplex, SimplexOptions};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExactError {
    #[error("evaluation failed: {0}")]
    Eval(EvalError),
    #[error("heuristic failed: {0}")]
    Heuristic(HeuristicError),
    #[error("LP failure: {0}")]
    Lp(LpError),
    #[error("root relaxation is infeasible")]
    RootInfeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactOptions {
    pub integrality_tol: f64,
    /// Node limit; reaching it ends the search like a timeout.
    pub max_nodes: Option<usize>,
    /// Starting incumbent; the insertion heuristics are used when absent.
    pub incumbent: Option<AprioriSolution>,
    pub record_log: bool,
    pub simplex: SimplexOptions,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions { integrality_tol: 1e-6, max_nodes: None, incumbent: None, record_log: true, simplex: SimplexOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactStatus {
    Optimal,
    /// Search stopped early; only the lower bound is certified.
    BoundOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Prune,
    Gsec,
    Branch,
    Incumbent,
    Optcut,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Prune => "prune",
            Action::Gsec => "gsec",
            Action::Branch => "branch",
            Action::Incumbent => "incumbent",
            Action::Optcut => "optcut",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub node: usize,
    pub depth: usize,
    pub bound: f64,
    pub action: Action,
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.node, self.depth, self.bound, self.action)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExactStats {
    pub nodes: usize,
    pub gsec_cuts: usize,
    pub optimality_cuts: usize,
    pub lp_iterations: usize,
    pub cold_starts: usize,
    pub root_bound: Option<f64>,
    pub max_depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub status: ExactStatus,
    pub solution: Option<AprioriSolution>,
    /// Expected length of `solution`, or infinity without one.
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub stats: ExactStats,
    pub log: Vec<LogEntry>,
    /// Every cut added during the search.
    pub gsecs: Vec<GsecCut>,
    pub optimality_cuts: Vec<OptimalityCut>,
}

impl ExactResult {
    /// The optimum when solved, otherwise the lower bound.
    pub fn objective(&self) -> f64 {
        match self.status {
            ExactStatus::Optimal => self.upper_bound,
            ExactStatus::BoundOnly => self.lower_bound,
        }
    }
}

struct Node {
    id: usize,
    depth: usize,
    /// LP bound of the parent.
    bound: f64,
    /// `theta` ceiling inherited from the parent.
    u: f64,
    fixings: Vec<(usize, f64)>,
}

struct Search<'a> {
    instance: &'a Instance,
    root: RootRelaxation,
    lp: Simplex,
    opts: &'a ExactOptions,
    current: Vec<(f64, f64)>,
    incumbent: Option<AprioriSolution>,
    z_bar: f64,
    log: Vec<LogEntry>,
    stats: ExactStats,
    gsecs: Vec<GsecCut>,
    optimality_cuts: Vec<OptimalityCut>,
    /// Every cut row generated so far.
    pool: Vec<Row>,
    in_lp: Vec<bool>,
    /// Pool index of each cut row of `lp`, in row order.
    lp_cuts: Vec<usize>,
    /// Iterations of simplex instances already discarded.
    iter_base: usize,
    cold_base: usize,
    next_id: usize,
}

pub fn solve_exact(instance: &Instance, opts: &ExactOptions, deadline: &dyn Deadline) -> Result<ExactResult, ExactError> {
    let incumbent = match &opts.incumbent {
        Some(s) => Some(s.clone()),
        None => Some(initial_incumbent(instance)?),
    };
    let z_bar = match &incumbent {
        Some(s) => eval::expected_length(s, instance).map_err(ExactError::Eval)?,
        None => f64::INFINITY,
    };
    let root = build_root(instance);
    let current = root.lp.lower.iter().copied().zip(root.lp.upper.iter().copied()).collect();
    let lp = Simplex::new(root.lp.clone(), opts.simplex).map_err(ExactError::Lp)?;
    let u = root.u;
    let mut search = Search {
        instance,
        root,
        lp,
        opts,
        current,
        incumbent,
        z_bar,
        log: Vec::new(),
        stats: ExactStats::default(),
        gsecs: Vec::new(),
        optimality_cuts: Vec::new(),
        pool: Vec::new(),
        in_lp: Vec::new(),
        lp_cuts: Vec::new(),
        iter_base: 0,
        cold_base: 0,
        next_id: 1,
    };
    let mut stack = vec![Node { id: 0, depth: 0, bound: f64::NEG_INFINITY, u, fixings: Vec::new() }];
    let mut first = true;
    let mut stopped: Option<f64> = None;
    while let Some(node) = stack.pop() {
        let out_of_nodes = opts.max_nodes.is_some_and(|m| search.stats.nodes >= m);
        if out_of_nodes || deadline.expired() {
            stopped = Some(node.bound);
            stack.push(node);
            break;
        }
        match search.process(node, first, deadline, &mut stack) {
            Ok(()) => {}
            Err(Interrupt::Deadline(bound)) => {
                stopped = Some(bound);
                break;
            }
            Err(Interrupt::Failure(e)) => return Err(e),
        }
        first = false;
    }
    search.stats.lp_iterations = search.iter_base + search.lp.iterations();
    search.stats.cold_starts = search.cold_base + search.lp.cold_starts();
    let (status, lower_bound) = match stopped {
        None => (ExactStatus::Optimal, search.z_bar),
        Some(bound) => {
            let open = stack.iter().map(|n| n.bound).fold(bound, f64::min);
            let root = search.stats.root_bound.unwrap_or(0.0);
            (ExactStatus::BoundOnly, open.max(root).max(0.0).min(search.z_bar))
        }
    };
    Ok(ExactResult {
        status,
        upper_bound: search.z_bar,
        solution: search.incumbent,
        lower_bound,
        stats: search.stats,
        log: search.log,
        gsecs: search.gsecs,
        optimality_cuts: search.optimality_cuts,
    })
}

/// Best of max-min insertion at the default capacity and with a single
/// capacity covering all clusters.
pub fn initial_incumbent(instance: &Instance) -> Result<AprioriSolution, ExactError> {
    let mut best: Option<(f64, AprioriSolution)> = None;
    let caps = [heuristics::default_capacity(instance), instance.num_clusters()];
    for cap in caps {
        let s = heuristics::max_min_insertion(instance, cap).map_err(ExactError::Heuristic)?;
        let v = eval::expected_length(&s, instance).map_err(ExactError::Eval)?;
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, s));
        }
    }
    Ok(best.expect("at least one capacity tried").1)
}

enum Interrupt {
    /// Time ran out while the node with this bound was open.
    Deadline(f64),
    Failure(ExactError),
}

impl From<LpError> for Interrupt {
    fn from(e: LpError) -> Self {
        Interrupt::Failure(ExactError::Lp(e))
    }
}

impl Search<'_> {
    fn record(&mut self, node: &Node, bound: f64, action: Action) {
        if self.opts.record_log {
            self.log.push(LogEntry { node: node.id, depth: node.depth, bound, action });
        }
    }

    /// Moves every column to the root bounds overridden by `fixings`.
    fn apply(&mut self, fixings: &[(usize, f64)], theta_cap: f64) -> Result<(), LpError> {
        let mut target: Vec<(f64, f64)> = self.root.lp.lower.iter().copied().zip(self.root.lp.upper.iter().copied()).collect();
        for &(c, v) in fixings {
            target[c] = (v, v);
        }
        let th = self.root.theta_column();
        target[th].1 = theta_cap;
        for c in 0..target.len() {
            if target[c] != self.current[c] {
                self.lp.set_bounds(c, target[c].0, target[c].1)?;
                self.current[c] = target[c];
            }
        }
        Ok(())
    }

    fn add_cut(&mut self, row: Row) -> Result<(), LpError> {
        self.lp.add_row(row.clone())?;
        self.lp_cuts.push(self.pool.len());
        self.pool.push(row);
        self.in_lp.push(true);
        Ok(())
    }

    /// Drops slack cut rows once too many have accumulated, keeping the
    /// current basis.
    fn purge(&mut self) -> Result<(), LpError> {
        let r0 = self.root.lp.num_rows();
        if self.lp_cuts.len() <= r0.max(40) {
            return Ok(());
        }
        let n = self.root.num_vars();
        let (basis, at_upper) = self.lp.basis();
        let x = self.lp.primal_values();
        let mut basic = vec![false; self.lp.num_rows()];
        for &b in &basis {
            if b >= n && b - n < basic.len() {
                basic[b - n] = true;
            }
        }
        let mut lp = self.lp.lp().clone();
        lp.rows.truncate(r0);
        let mut new_index = vec![None; self.lp_cuts.len()];
        let mut kept = Vec::new();
        for (k, &p) in self.lp_cuts.iter().enumerate() {
            let row = &self.pool[p];
            let slack = (row.activity(&x) - row.rhs).abs();
            if basic[r0 + k] && slack > 1e-7 * (1.0 + row.rhs.abs()) {
                self.in_lp[p] = false;
            } else {
                new_index[k] = Some(r0 + kept.len());
                kept.push(p);
                lp.rows.push(row.clone());
            }
        }
        let new_basis: Vec<usize> = basis
            .iter()
            .filter_map(|&b| match b.checked_sub(n + r0) {
                None => Some(b),
                Some(k) => new_index.get(k).copied().flatten().map(|r| n + r),
            })
            .collect();
        self.lp_cuts = kept;
        self.iter_base += self.lp.iterations();
        self.cold_base += self.lp.cold_starts();
        self.lp = match Simplex::from_basis(lp.clone(), self.opts.simplex, &new_basis, &at_upper) {
            Ok(s) => s,
            Err(_) => Simplex::new(lp, self.opts.simplex)?,
        };
        Ok(())
    }

    /// Re-adds pooled cuts violated by `primal`.
    fn restore_violated(&mut self, primal: &[f64]) -> Result<bool, LpError> {
        let mut any = false;
        for p in 0..self.pool.len() {
            if !self.in_lp[p] && self.pool[p].violation(primal) > 1e-7 {
                self.lp.add_row(self.pool[p].clone())?;
                self.lp_cuts.push(p);
                self.in_lp[p] = true;
                any = true;
            }
        }
        Ok(any)
    }

    /// `theta` ceiling after fixings: the clustered bound over nodes that
    /// can still be visited, never above the parent's.
    fn local_u(&self, parent_u: f64, fixings: &[(usize, f64)]) -> f64 {
        let n = self.instance.n_nodes();
        let mut allowed = vec![true; n];
        for &(c, v) in fixings {
            if let Var::Y(t) = self.root.var(c) {
                if v == 0.0 {
                    allowed[t] = false;
                } else if let Some(k) = self.instance.cluster_index(t) {
                    for &o in &self.instance.clusters()[k].members {
                        allowed[o] = o == t;
                    }
                }
            }
        }
        parent_u.min(bounds::ub_clustered_restricted(self.instance, &allowed).max(0.0))
    }

    fn process(&mut self, node: Node, is_root: bool, deadline: &dyn Deadline, stack: &mut Vec<Node>) -> Result<(), Interrupt> {
        self.stats.nodes += 1;
        self.stats.max_depth = self.stats.max_depth.max(node.depth);
        let u = if is_root { node.u } else { self.local_u(node.u, &node.fixings) };
        self.purge()?;
        self.apply(&node.fixings, u)?;
        loop {
            let sol = match self.lp.resolve(deadline) {
                Ok(s) => s,
                Err(LpError::Interrupted) => return Err(Interrupt::Deadline(node.bound)),
                Err(e) => return Err(e.into()),
            };
            match sol.status {
                LpStatus::Optimal => {}
                LpStatus::Infeasible if is_root && node.fixings.is_empty() && self.stats.gsec_cuts == 0 => {
                    return Err(Interrupt::Failure(ExactError::RootInfeasible));
                }
                LpStatus::Infeasible => {
                    self.record(&node, f64::INFINITY, Action::Prune);
                    return Ok(());
                }
                LpStatus::Unbounded => return Err(Interrupt::Failure(ExactError::Lp(LpError::NumericBreakdown("unbounded relaxation")))),
            }
            if self.restore_violated(&sol.primal)? {
                continue;
            }
            let bound = sol.objective;
            debug_assert!(bound >= node.bound - 1e-6 * (1.0 + bound.abs()), "child bound {bound} below parent {}", node.bound);
            if is_root {
                self.stats.root_bound = Some(bound);
            }
            if bound >= self.z_bar - 1e-9 {
                self.record(&node, bound, Action::Prune);
                return Ok(());
            }
            let point = self.root.point(&sol.primal);
            let found = separate_gsec(&point);
            if !found.is_empty() {
                for cut in found {
                    self.add_cut(self.root.gsec_row(&cut))?;
                    self.stats.gsec_cuts += 1;
                    self.gsecs.push(cut);
                }
                self.record(&node, bound, Action::Gsec);
                continue;
            }
            if let Some(col) = self.branch_column(&sol.primal) {
                self.record(&node, bound, Action::Branch);
                for value in [0.0, 1.0] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((col, value));
                    stack.push(Node { id: self.next_id, depth: node.depth + 1, bound, u, fixings });
                    self.next_id += 1;
                }
                return Ok(());
            }
            let Some(solution) = self.root.decode(&sol.primal) else {
                return Err(Interrupt::Failure(ExactError::Lp(LpError::NumericBreakdown("integral point without tours"))));
            };
            let cut = optimality_cut(&solution, self.instance, self.root.u).map_err(Interrupt::Failure)?;
            let value = solution.deterministic_length(self.instance) - cut.q;
            if value < self.z_bar - 1e-12 {
                self.z_bar = value;
                self.incumbent = Some(solution);
                self.record(&node, bound, Action::Incumbent);
            }
            let theta = sol.primal[self.root.theta_column()];
            if theta <= cut.q + 1e-9 {
                self.record(&node, bound, Action::Prune);
                return Ok(());
            }
            self.add_cut(self.root.optimality_row(&cut))?;
            self.stats.optimality_cuts += 1;
            self.optimality_cuts.push(cut);
            self.record(&node, bound, Action::Optcut);
        }
    }

    /// Most fractional `y`, then most fractional edge or shuttle column;
    /// ties go to the smaller column.
    fn branch_column(&self, primal: &[f64]) -> Option<usize> {
        let tol = self.opts.integrality_tol;
        let mut best_y: Option<(f64, usize)> = None;
        let mut best_x: Option<(f64, usize)> = None;
        for (c, &v) in primal.iter().enumerate() {
            let frac = (v - libm::floor(v)).min(libm::ceil(v) - v);
            if frac <= tol {
                continue;
            }
            let slot = match self.root.var(c) {
                Var::Theta => continue,
                Var::Y(_) => &mut best_y,
                _ => &mut best_x,
            };
            if slot.is_none_or(|(f, _)| frac > f) {
                *slot = Some((frac, c));
            }
        }
        best_y.or(best_x).map(|(_, c)| c)
    }
}
