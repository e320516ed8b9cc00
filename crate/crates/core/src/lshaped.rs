//! Continuous L-shaped method for two-stage stochastic LPs with finitely
//! many scenarios.
//!
//! First stage: `min c x + E[Q(x, k)]` over `A x = b, x >= 0`, where
//! `Q(x, k) = min { q_k y : W y = h_k - T_k x, y >= 0 }`.

use alloc::vec;
use alloc::vec::Vec;

use crate::simplex::{self, LinearProgram, LpError, LpSolution, LpStatus, Sense};

/// Dense row-major matrix as a list of rows.
pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct RecourseScenario {
    pub probability: f64,
    pub q: Vec<f64>,
    pub t: Matrix,
    pub h: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageLP {
    pub c: Vec<f64>,
    pub a: Matrix,
    pub b: Vec<f64>,
    /// Fixed recourse matrix shared by all scenarios.
    pub w: Matrix,
    pub scenarios: Vec<RecourseScenario>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LShapedError {
    #[error("dimension mismatch: {0}")]
    Dimension(&'static str),
    #[error("scenario probabilities must be positive and sum to 1")]
    Probabilities,
    #[error("first-stage constraints are infeasible")]
    FirstStageInfeasible,
    #[error("no first-stage point has feasible recourse in every scenario")]
    NoFeasibleFirstStage,
    #[error("recourse of scenario {scenario} is unbounded")]
    UnboundedRecourse { scenario: usize },
    #[error("master problem is unbounded")]
    UnboundedMaster,
    #[error("iteration limit reached")]
    IterationLimit,
    #[error(transparent)]
    Lp(#[from] LpError),
}

impl TwoStageLP {
    pub fn first_stage_len(&self) -> usize {
        self.c.len()
    }

    pub fn recourse_len(&self) -> usize {
        self.w.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<(), LShapedError> {
        let n1 = self.c.len();
        let m2 = self.w.len();
        let n2 = self.recourse_len();
        if self.a.len() != self.b.len() || self.a.iter().any(|r| r.len() != n1) {
            return Err(LShapedError::Dimension("first-stage rows"));
        }
        if self.w.iter().any(|r| r.len() != n2) {
            return Err(LShapedError::Dimension("recourse matrix"));
        }
        if self.scenarios.is_empty() {
            return Err(LShapedError::Probabilities);
        }
        let mut total = 0.0;
        for s in &self.scenarios {
            if s.q.len() != n2 || s.h.len() != m2 || s.t.len() != m2 || s.t.iter().any(|r| r.len() != n1) {
                return Err(LShapedError::Dimension("scenario data"));
            }
            if !(s.probability > 0.0) {
                return Err(LShapedError::Probabilities);
            }
            total += s.probability;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(LShapedError::Probabilities);
        }
        Ok(())
    }

    /// `h_k - T_k x`.
    pub fn recourse_rhs(&self, x: &[f64], k: usize) -> Vec<f64> {
        let s = &self.scenarios[k];
        s.h.iter().zip(&s.t).map(|(h, row)| h - dot(row, x)).collect()
    }

    /// `c x + sum_k p_k Q(x, k)`, or `None` when some scenario is infeasible.
    pub fn objective_at(&self, x: &[f64]) -> Result<Option<f64>, LShapedError> {
        let mut total = dot(&self.c, x);
        for k in 0..self.scenarios.len() {
            match recourse_q(self, x, k)? {
                Recourse::Value { value, .. } => total += self.scenarios[k].probability * value,
                Recourse::Infeasible => return Ok(None),
            }
        }
        Ok(Some(total))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sparse(row: &[f64], offset: usize) -> Vec<(usize, f64)> {
    row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, &v)| (offset + j, v)).collect()
}

/// The monolithic LP over `(x, y_1, .., y_K)`.
pub fn extensive_form(problem: &TwoStageLP) -> Result<LinearProgram, LShapedError> {
    problem.validate()?;
    let n1 = problem.first_stage_len();
    let n2 = problem.recourse_len();
    let mut lp = LinearProgram::new(n1 + n2 * problem.scenarios.len());
    lp.objective[..n1].copy_from_slice(&problem.c);
    for (row, &rhs) in problem.a.iter().zip(&problem.b) {
        lp.add_row(sparse(row, 0), Sense::Eq, rhs);
    }
    for (k, s) in problem.scenarios.iter().enumerate() {
        let off = n1 + k * n2;
        for j in 0..n2 {
            lp.objective[off + j] = s.probability * s.q[j];
        }
        for (i, w_row) in problem.w.iter().enumerate() {
            let mut coeffs = sparse(&s.t[i], 0);
            coeffs.extend(sparse(w_row, off));
            lp.add_row(coeffs, Sense::Eq, s.h[i]);
        }
    }
    Ok(lp)
}

/// Second-stage outcome at a fixed first-stage point.
#[derive(Debug, Clone, PartialEq)]
pub enum Recourse {
    /// Optimal value and the row multipliers `pi` with `value = pi (h - T x)`.
    Value { value: f64, duals: Vec<f64> },
    Infeasible,
}

/// Solves the recourse LP of scenario `k` at `x`.
pub fn recourse_q(problem: &TwoStageLP, x: &[f64], k: usize) -> Result<Recourse, LShapedError> {
    let s = &problem.scenarios[k];
    let rhs = problem.recourse_rhs(x, k);
    let mut lp = LinearProgram::new(problem.recourse_len());
    lp.objective.copy_from_slice(&s.q);
    for (row, r) in problem.w.iter().zip(&rhs) {
        lp.add_row(sparse(row, 0), Sense::Eq, *r);
    }
    let sol = simplex::solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(Recourse::Value { value: sol.objective, duals: sol.dual }),
        LpStatus::Infeasible => Ok(Recourse::Infeasible),
        LpStatus::Unbounded => Err(LShapedError::UnboundedRecourse { scenario: k }),
    }
}

/// Phase-one check `min e v+ + e v-` over `W y + v+ - v- = h - T x`.
/// Returns the infeasibility measure and its multipliers `sigma`.
pub fn feasibility_check(problem: &TwoStageLP, x: &[f64], k: usize) -> Result<(f64, Vec<f64>), LShapedError> {
    let rhs = problem.recourse_rhs(x, k);
    let n2 = problem.recourse_len();
    let m2 = problem.w.len();
    let mut lp = LinearProgram::new(n2 + 2 * m2);
    for i in 0..2 * m2 {
        lp.objective[n2 + i] = 1.0;
    }
    for (i, (row, r)) in problem.w.iter().zip(&rhs).enumerate() {
        let mut coeffs = sparse(row, 0);
        coeffs.push((n2 + i, 1.0));
        coeffs.push((n2 + m2 + i, -1.0));
        lp.add_row(coeffs, Sense::Eq, *r);
    }
    let sol = simplex::solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(LShapedError::Lp(LpError::NumericBreakdown("feasibility subproblem not optimal")));
    }
    Ok((sol.objective, sol.dual))
}

/// `D x >= d`, generated from scenario `scenario`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityCut {
    pub scenario: usize,
    /// Index into the iteration trace of the point it cuts off.
    pub iteration: usize,
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

/// `E x + theta >= e`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityCut {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl OptimalityCut {
    /// Lower bound on `theta` implied at `x`.
    pub fn floor_at(&self, x: &[f64]) -> f64 {
        self.rhs - dot(&self.coeffs, x)
    }
}

impl FeasibilityCut {
    pub fn slack_at(&self, x: &[f64]) -> f64 {
        dot(&self.coeffs, x) - self.rhs
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CutSet {
    pub feasibility: Vec<FeasibilityCut>,
    pub optimality: Vec<OptimalityCut>,
    /// Master solves performed.
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LShapedOptions {
    /// Generate a cut for every infeasible scenario instead of the first.
    pub all_feasibility_cuts: bool,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for LShapedOptions {
    fn default() -> Self {
        LShapedOptions { all_feasibility_cuts: false, tolerance: 1e-9, max_iterations: 10_000 }
    }
}

/// One master solve.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub x: Vec<f64>,
    /// Without a `theta` term this is `c x` alone.
    pub master_objective: f64,
    /// `None` while the master carries no optimality cut.
    pub theta: Option<f64>,
    /// `sum_k p_k Q(x, k)` when every scenario is feasible at the iterate.
    pub expected_recourse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LShapedResult {
    pub x: Vec<f64>,
    pub theta: f64,
    pub objective: f64,
    pub cuts: CutSet,
    pub trace: Vec<IterationRecord>,
}

pub fn lshape_solve(problem: &TwoStageLP) -> Result<LShapedResult, LShapedError> {
    lshape_solve_with(problem, &LShapedOptions::default())
}

pub fn lshape_solve_with(problem: &TwoStageLP, opts: &LShapedOptions) -> Result<LShapedResult, LShapedError> {
    problem.validate()?;
    let n1 = problem.first_stage_len();
    let mut cuts = CutSet::default();
    let mut trace = Vec::new();
    loop {
        if cuts.iterations >= opts.max_iterations {
            return Err(LShapedError::IterationLimit);
        }
        cuts.iterations += 1;
        let sol = solve_master(problem, &cuts)?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible if cuts.feasibility.is_empty() => return Err(LShapedError::FirstStageInfeasible),
            LpStatus::Infeasible => return Err(LShapedError::NoFeasibleFirstStage),
            LpStatus::Unbounded => return Err(LShapedError::UnboundedMaster),
        }
        let x: Vec<f64> = sol.primal[..n1].to_vec();
        let theta = (!cuts.optimality.is_empty()).then(|| sol.primal[n1] - sol.primal[n1 + 1]);
        let mut record = IterationRecord { x: x.clone(), master_objective: sol.objective, theta, expected_recourse: None };

        let mut added = false;
        for k in 0..problem.scenarios.len() {
            let (w, sigma) = feasibility_check(problem, &x, k)?;
            if w > opts.tolerance {
                let s = &problem.scenarios[k];
                let coeffs = (0..n1).map(|j| (0..sigma.len()).map(|i| sigma[i] * s.t[i][j]).sum()).collect();
                let rhs = dot(&sigma, &s.h);
                cuts.feasibility.push(FeasibilityCut { scenario: k, iteration: trace.len(), coeffs, rhs });
                added = true;
                if !opts.all_feasibility_cuts {
                    break;
                }
            }
        }
        if added {
            trace.push(record);
            continue;
        }

        let mut e_coeffs = vec![0.0; n1];
        let mut e_rhs = 0.0;
        let mut expected = 0.0;
        for k in 0..problem.scenarios.len() {
            let s = &problem.scenarios[k];
            let (value, pi) = match recourse_q(problem, &x, k)? {
                Recourse::Value { value, duals } => (value, duals),
                // Feasibility was just certified; treat a disagreement as numeric trouble.
                Recourse::Infeasible => return Err(LShapedError::Lp(LpError::NumericBreakdown("recourse infeasible after check"))),
            };
            expected += s.probability * value;
            for j in 0..n1 {
                e_coeffs[j] += s.probability * (0..pi.len()).map(|i| pi[i] * s.t[i][j]).sum::<f64>();
            }
            e_rhs += s.probability * dot(&pi, &s.h);
        }
        record.expected_recourse = Some(expected);
        trace.push(record);
        let w = e_rhs - dot(&e_coeffs, &x);
        if let Some(t) = theta {
            if t >= w - opts.tolerance * (1.0 + w.abs()) {
                let objective = dot(&problem.c, &x) + expected;
                return Ok(LShapedResult { x, theta: expected, objective, cuts, trace });
            }
        }
        cuts.optimality.push(OptimalityCut { coeffs: e_coeffs, rhs: e_rhs });
    }
}

/// `min c x + theta` over the first-stage rows and current cuts. `theta`
/// enters as `theta+ - theta-` once an optimality cut exists.
fn solve_master(problem: &TwoStageLP, cuts: &CutSet) -> Result<LpSolution, LShapedError> {
    let n1 = problem.first_stage_len();
    let with_theta = !cuts.optimality.is_empty();
    let mut lp = LinearProgram::new(n1 + if with_theta { 2 } else { 0 });
    lp.objective[..n1].copy_from_slice(&problem.c);
    if with_theta {
        lp.objective[n1] = 1.0;
        lp.objective[n1 + 1] = -1.0;
    }
    for (row, &rhs) in problem.a.iter().zip(&problem.b) {
        lp.add_row(sparse(row, 0), Sense::Eq, rhs);
    }
    for cut in &cuts.feasibility {
        lp.add_row(sparse(&cut.coeffs, 0), Sense::Ge, cut.rhs);
    }
    for cut in &cuts.optimality {
        let mut coeffs = sparse(&cut.coeffs, 0);
        coeffs.push((n1, 1.0));
        coeffs.push((n1 + 1, -1.0));
        lp.add_row(coeffs, Sense::Ge, cut.rhs);
    }
    Ok(simplex::solve(&lp)?)
}
