//! Dantzig-Wolfe column generation over block-structured LPs.
//!
//! The problem is `min sum_i c_i x_i` subject to coupling rows
//! `sum_i A_i x_i (<=, =, >=) b` and per-block domains
//! `X_i = { x_i >= 0 : B_i x_i <= b_i }`. The master works with convex
//! weights on vertices of each `X_i` and nonnegative weights on its rays.

use alloc::vec;
use alloc::vec::Vec;

use crate::lshaped::Matrix;
use crate::simplex::{self, LinearProgram, LpError, LpStatus, Sense};

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub cost: Vec<f64>,
    /// This block's columns of the coupling rows.
    pub coupling: Matrix,
    pub rows: Matrix,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposedLP {
    pub blocks: Vec<Block>,
    pub senses: Vec<Sense>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DwError {
    #[error("dimension mismatch: {0}")]
    Dimension(&'static str),
    #[error("domain of block {block} is empty")]
    EmptyBlock { block: usize },
    #[error("coupling rows cannot be satisfied")]
    Infeasible,
    #[error("problem is unbounded")]
    Unbounded,
    #[error("iteration limit reached")]
    IterationLimit,
    #[error(transparent)]
    Lp(#[from] LpError),
}

impl DecomposedLP {
    pub fn num_vars(&self) -> usize {
        self.blocks.iter().map(|b| b.cost.len()).sum()
    }

    pub fn validate(&self) -> Result<(), DwError> {
        let m = self.rhs.len();
        if self.senses.len() != m {
            return Err(DwError::Dimension("coupling senses"));
        }
        for b in &self.blocks {
            let n = b.cost.len();
            if b.coupling.len() != m || b.coupling.iter().any(|r| r.len() != n) {
                return Err(DwError::Dimension("coupling block"));
            }
            if b.rows.len() != b.rhs.len() || b.rows.iter().any(|r| r.len() != n) {
                return Err(DwError::Dimension("block rows"));
            }
        }
        Ok(())
    }

    /// The undecomposed LP over the concatenated block variables.
    pub fn monolithic(&self) -> Result<LinearProgram, DwError> {
        self.validate()?;
        let mut lp = LinearProgram::new(self.num_vars());
        let offsets = self.offsets();
        for (b, &off) in self.blocks.iter().zip(&offsets) {
            lp.objective[off..off + b.cost.len()].copy_from_slice(&b.cost);
        }
        for i in 0..self.rhs.len() {
            let mut coeffs = Vec::new();
            for (b, &off) in self.blocks.iter().zip(&offsets) {
                coeffs.extend(sparse(&b.coupling[i], off));
            }
            lp.add_row(coeffs, self.senses[i], self.rhs[i]);
        }
        for (b, &off) in self.blocks.iter().zip(&offsets) {
            for (row, &r) in b.rows.iter().zip(&b.rhs) {
                lp.add_row(sparse(row, off), Sense::Le, r);
            }
        }
        Ok(lp)
    }

    fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.blocks
            .iter()
            .map(|b| {
                let o = acc;
                acc += b.cost.len();
                o
            })
            .collect()
    }
}

fn sparse(row: &[f64], offset: usize) -> Vec<(usize, f64)> {
    row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, &v)| (offset + j, v)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Vertex,
    Ray,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub block: usize,
    pub kind: ColumnKind,
    pub point: Vec<f64>,
    cost: f64,
    coupling: Vec<f64>,
}

impl Column {
    fn new(problem: &DecomposedLP, block: usize, kind: ColumnKind, point: Vec<f64>) -> Self {
        let b = &problem.blocks[block];
        let cost = dot(&b.cost, &point);
        let coupling = b.coupling.iter().map(|r| dot(r, &point)).collect();
        Column { block, kind, point, cost, coupling }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwOptions {
    pub gap_tolerance: f64,
    /// Stop pricing at the first block with an improving column.
    pub partial_pricing: bool,
    pub max_iterations: usize,
}

impl Default for DwOptions {
    fn default() -> Self {
        DwOptions { gap_tolerance: 1e-9, partial_pricing: false, max_iterations: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DwResult {
    /// Recovered original variables, blocks concatenated.
    pub x: Vec<f64>,
    pub objective: f64,
    /// Lower bound after each fully priced phase-two iteration.
    pub bound_trace: Vec<f64>,
    /// Restricted master objective per phase-two iteration.
    pub master_trace: Vec<f64>,
    pub columns: Vec<Column>,
    pub iterations: usize,
}

/// `master_objective - sum max(0, z_k - c_k)` over the pricing values.
pub fn dw_lower_bound(master_objective: f64, pricing_values: &[f64]) -> f64 {
    master_objective - pricing_values.iter().map(|v| v.max(0.0)).sum::<f64>()
}

struct Master {
    objective: f64,
    weights: Vec<f64>,
    coupling_duals: Vec<f64>,
    convexity_duals: Vec<f64>,
}

enum Pricing {
    Bounded { value: f64, point: Vec<f64> },
    Ray { direction: Vec<f64> },
}

pub fn dw_solve(problem: &DecomposedLP, gap_tolerance: f64) -> Result<DwResult, DwError> {
    dw_solve_with(problem, &DwOptions { gap_tolerance, ..DwOptions::default() })
}

pub fn dw_solve_with(problem: &DecomposedLP, opts: &DwOptions) -> Result<DwResult, DwError> {
    problem.validate()?;
    let zero_costs: Vec<Vec<f64>> = problem.blocks.iter().map(|b| vec![0.0; b.cost.len()]).collect();
    let mut columns = Vec::new();
    for (i, b) in problem.blocks.iter().enumerate() {
        match price_block(b, &zero_costs[i])? {
            Some(Pricing::Bounded { point, .. }) => columns.push(Column::new(problem, i, ColumnKind::Vertex, point)),
            _ => return Err(DwError::EmptyBlock { block: i }),
        }
    }

    let mut iterations = 0;
    // Phase one: drive the artificial columns to zero.
    loop {
        iterations += 1;
        if iterations > opts.max_iterations {
            return Err(DwError::IterationLimit);
        }
        let master = solve_master(problem, &columns, true)?.ok_or(DwError::Infeasible)?;
        if master.objective <= 1e-9 {
            break;
        }
        let (found, _) = generate_columns(problem, &columns, &master, true, opts)?;
        if found.is_empty() {
            return Err(DwError::Infeasible);
        }
        columns.extend(found);
    }

    let mut bound_trace = Vec::new();
    let mut master_trace = Vec::new();
    loop {
        iterations += 1;
        if iterations > opts.max_iterations {
            return Err(DwError::IterationLimit);
        }
        let master = solve_master(problem, &columns, false)?.ok_or(DwError::Unbounded)?;
        master_trace.push(master.objective);
        let (found, pricing_values) = generate_columns(problem, &columns, &master, false, opts)?;
        if let Some(values) = pricing_values {
            let bound = dw_lower_bound(master.objective, &values);
            bound_trace.push(bound);
            if master.objective - bound <= opts.gap_tolerance {
                return Ok(finish(problem, columns, &master, bound_trace, master_trace, iterations));
            }
        }
        if found.is_empty() {
            return Ok(finish(problem, columns, &master, bound_trace, master_trace, iterations));
        }
        columns.extend(found);
    }
}

fn finish(
    problem: &DecomposedLP,
    columns: Vec<Column>,
    master: &Master,
    bound_trace: Vec<f64>,
    master_trace: Vec<f64>,
    iterations: usize,
) -> DwResult {
    let offsets = problem.offsets();
    let mut x = vec![0.0; problem.num_vars()];
    for (col, &w) in columns.iter().zip(&master.weights) {
        if w != 0.0 {
            let off = offsets[col.block];
            for (j, v) in col.point.iter().enumerate() {
                x[off + j] += w * v;
            }
        }
    }
    DwResult { x, objective: master.objective, bound_trace, master_trace, columns, iterations }
}

/// Restricted master over `columns`. In phase one every coupling row gets
/// artificial columns and only their sum is minimized. Returns `None` when
/// the master is unbounded.
fn solve_master(problem: &DecomposedLP, columns: &[Column], phase_one: bool) -> Result<Option<Master>, DwError> {
    let m = problem.rhs.len();
    let nb = problem.blocks.len();
    let mut lp = LinearProgram::new(columns.len());
    let mut row_coeffs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m + nb];
    for (j, col) in columns.iter().enumerate() {
        if !phase_one {
            lp.objective[j] = col.cost;
        }
        for (i, &a) in col.coupling.iter().enumerate() {
            if a != 0.0 {
                row_coeffs[i].push((j, a));
            }
        }
        if col.kind == ColumnKind::Vertex {
            row_coeffs[m + col.block].push((j, 1.0));
        }
    }
    if phase_one {
        for i in 0..m {
            let signs: &[f64] = match problem.senses[i] {
                Sense::Le => &[-1.0],
                Sense::Ge => &[1.0],
                Sense::Eq => &[1.0, -1.0],
            };
            for &s in signs {
                let a = lp.add_variable(1.0, 0.0, f64::INFINITY);
                row_coeffs[i].push((a, s));
            }
        }
    }
    for (i, coeffs) in row_coeffs.into_iter().enumerate() {
        if i < m {
            lp.add_row(coeffs, problem.senses[i], problem.rhs[i]);
        } else {
            lp.add_row(coeffs, Sense::Eq, 1.0);
        }
    }
    let sol = simplex::solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(Some(Master {
            objective: sol.objective,
            weights: sol.primal[..columns.len()].to_vec(),
            coupling_duals: sol.dual[..m].to_vec(),
            convexity_duals: sol.dual[m..].to_vec(),
        })),
        LpStatus::Unbounded => Ok(None),
        LpStatus::Infeasible => Err(DwError::Lp(LpError::NumericBreakdown("restricted master infeasible"))),
    }
}

/// Prices every block against the master duals. Returns the improving
/// columns and, when every block was priced and bounded, the values
/// `z_k - c_k` per block.
fn generate_columns(
    problem: &DecomposedLP,
    columns: &[Column],
    master: &Master,
    phase_one: bool,
    opts: &DwOptions,
) -> Result<(Vec<Column>, Option<Vec<f64>>), DwError> {
    let tol = 1e-9 * (1.0 + master.objective.abs());
    let mut found = Vec::new();
    let mut values = Vec::with_capacity(problem.blocks.len());
    let mut complete = true;
    for (i, b) in problem.blocks.iter().enumerate() {
        let reduced: Vec<f64> = (0..b.cost.len())
            .map(|j| {
                let c = if phase_one { 0.0 } else { b.cost[j] };
                c - (0..problem.rhs.len()).map(|r| master.coupling_duals[r] * b.coupling[r][j]).sum::<f64>()
            })
            .collect();
        let candidate = match price_block(b, &reduced)? {
            None => return Err(DwError::EmptyBlock { block: i }),
            Some(Pricing::Bounded { value, point }) => {
                let gain = master.convexity_duals[i] - value;
                values.push(gain);
                (gain > tol).then(|| Column::new(problem, i, ColumnKind::Vertex, point))
            }
            Some(Pricing::Ray { direction }) => {
                complete = false;
                Some(Column::new(problem, i, ColumnKind::Ray, direction))
            }
        };
        if let Some(col) = candidate {
            let duplicate = columns.iter().chain(&found).any(|c| c.block == col.block && c.kind == col.kind && c.point == col.point);
            if !duplicate {
                found.push(col);
                if opts.partial_pricing && i + 1 < problem.blocks.len() {
                    complete = false;
                    break;
                }
            }
        }
    }
    Ok((found, complete.then_some(values)))
}

/// `min cost x` over the block domain. `None` when the domain is empty.
fn price_block(block: &Block, cost: &[f64]) -> Result<Option<Pricing>, DwError> {
    let mut lp = LinearProgram::new(cost.len());
    lp.objective.copy_from_slice(cost);
    for (row, &r) in block.rows.iter().zip(&block.rhs) {
        lp.add_row(sparse(row, 0), Sense::Le, r);
    }
    let sol = simplex::solve(&lp)?;
    Ok(match sol.status {
        LpStatus::Optimal => Some(Pricing::Bounded { value: sol.objective, point: sol.primal }),
        LpStatus::Infeasible => None,
        LpStatus::Unbounded => {
            let direction = sol.ray.ok_or(DwError::Lp(LpError::NumericBreakdown("unbounded without ray")))?;
            Some(Pricing::Ray { direction })
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(cost: &[f64], coupling: &[&[f64]], rows: &[&[f64]], rhs: &[f64]) -> Block {
        Block {
            cost: cost.to_vec(),
            coupling: coupling.iter().map(|r| r.to_vec()).collect(),
            rows: rows.iter().map(|r| r.to_vec()).collect(),
            rhs: rhs.to_vec(),
        }
    }

    fn direct(p: &DecomposedLP) -> f64 {
        simplex::solve(&p.monolithic().unwrap()).unwrap().objective
    }

    #[test]
    fn bound_arithmetic() {
        assert_eq!(dw_lower_bound(12.0, &[5.0]), 7.0);
        assert_eq!(dw_lower_bound(12.0, &[-1.0, 2.0]), 10.0);
    }

    #[test]
    fn no_coupling_rows() {
        let p = DecomposedLP {
            blocks: vec![block(&[-1.0, -2.0], &[], &[&[1.0, 1.0]], &[4.0])],
            senses: vec![],
            rhs: vec![],
        };
        let r = dw_solve(&p, 1e-9).unwrap();
        assert_eq!(r.objective, -8.0);
        assert_eq!(r.objective, direct(&p));
    }

    #[test]
    fn two_blocks_one_coupling_row() {
        // max x1 + x2 with x1 <= 3, x2 <= 3, x1 + x2 <= 4.
        let p = DecomposedLP {
            blocks: vec![
                block(&[-1.0], &[&[1.0]], &[&[1.0]], &[3.0]),
                block(&[-1.0], &[&[1.0]], &[&[1.0]], &[3.0]),
            ],
            senses: vec![Sense::Le],
            rhs: vec![4.0],
        };
        let r = dw_solve(&p, 1e-9).unwrap();
        assert!((r.objective + 4.0).abs() < 1e-9);
        assert!((r.x[0] + r.x[1] - 4.0).abs() < 1e-9);
        for b in &r.bound_trace {
            assert!(*b <= -4.0 + 1e-7);
        }
    }

    #[test]
    fn cone_domain_produces_ray_column() {
        // Domain x >= 0 with no rows; coupling x1 - x2 = 1 and x2 >= 2.
        let p = DecomposedLP {
            blocks: vec![block(&[1.0, -0.5], &[&[1.0, -1.0], &[0.0, 1.0]], &[], &[])],
            senses: vec![Sense::Eq, Sense::Ge],
            rhs: vec![1.0, 2.0],
        };
        let r = dw_solve(&p, 1e-9).unwrap();
        assert!(r.columns.iter().any(|c| c.kind == ColumnKind::Ray));
        assert!((r.objective - direct(&p)).abs() < 1e-9);
        assert!((r.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_coupling_detected() {
        let p = DecomposedLP {
            blocks: vec![block(&[1.0], &[&[1.0]], &[&[1.0]], &[1.0])],
            senses: vec![Sense::Ge],
            rhs: vec![2.0],
        };
        assert_eq!(dw_solve(&p, 1e-9), Err(DwError::Infeasible));
    }

    #[test]
    fn empty_block_detected() {
        let p = DecomposedLP {
            blocks: vec![block(&[1.0], &[], &[&[1.0]], &[-1.0])],
            senses: vec![],
            rhs: vec![],
        };
        assert_eq!(dw_solve(&p, 1e-9), Err(DwError::EmptyBlock { block: 0 }));
    }

    #[test]
    fn unbounded_problem_detected() {
        let p = DecomposedLP {
            blocks: vec![block(&[-1.0], &[&[1.0]], &[], &[])],
            senses: vec![Sense::Ge],
            rhs: vec![1.0],
        };
        assert_eq!(dw_solve(&p, 1e-9), Err(DwError::Unbounded));
    }
}
