//! Dense bounded-variable simplex.
//!
//! Every row gets a slack so the starting basis is the identity; rows whose
//! slack would start infeasible receive an artificial column. Phase one
//! minimizes the artificial sum, phase two the real objective. A stateful
//! [`Simplex`] keeps its tableau so rows and bounds can be changed and the
//! problem re-optimized with the dual simplex.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::deadline::{Deadline, NoDeadline};

/// Row sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// A sparse constraint row `sum a_j x_j (sense) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn new(coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> Self {
        Row { coeffs, sense, rhs }
    }

    /// Left-hand side at `x`.
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// `minimize c.x` subject to rows and `lower <= x <= upper`.
///
/// Lower bounds must be finite; upper bounds may be `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    /// `n` variables with zero cost and bounds `[0, inf)`.
    pub fn new(n: usize) -> Self {
        LinearProgram { objective: vec![0.0; n], lower: vec![0.0; n], upper: vec![f64::INFINITY; n], rows: Vec::new() }
    }

    pub fn add_variable(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.rows.push(Row { coeffs, sense, rhs });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::DimensionMismatch);
        }
        for j in 0..n {
            if !self.objective[j].is_finite() {
                return Err(LpError::NonFinite);
            }
            if !self.lower[j].is_finite() || self.upper[j].is_nan() || self.upper[j] < self.lower[j] {
                return Err(LpError::InvalidBounds { var: j });
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(LpError::NonFinite);
            }
            for &(j, a) in &r.coeffs {
                if j >= n {
                    return Err(LpError::DimensionMismatch);
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite);
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest row or bound violation at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for r in &self.rows {
            worst = worst.max(r.violation(x));
        }
        for j in 0..x.len() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        worst
    }
}

impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("min:")?;
        for (j, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                write!(f, " {c:+} x{j}")?;
            }
        }
        f.write_str("\n")?;
        for (i, r) in self.rows.iter().enumerate() {
            write!(f, "r{i}:")?;
            for (j, a) in &r.coeffs {
                write!(f, " {a:+} x{j}")?;
            }
            let s = match r.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            writeln!(f, " {s} {}", r.rhs)?;
        }
        for j in 0..self.objective.len() {
            if self.lower[j] != 0.0 || self.upper[j].is_finite() {
                writeln!(f, "bound: {} <= x{j} <= {}", self.lower[j], self.upper[j])?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of a solve.
///
/// Duals follow `reduced_costs = c - A^T dual`; for a minimization, `<=`
/// rows get nonpositive and `>=` rows nonnegative multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    /// Improving feasible direction when unbounded.
    pub ray: Option<Vec<f64>>,
    /// Basic variable per row: `j < n` is structural, `n + i` the slack of row `i`.
    pub basis: Vec<usize>,
    /// Nonbasic structurals resting at their upper bound.
    pub at_upper: Vec<usize>,
    pub iterations: usize,
    /// Whether the anti-cycling rule was switched on.
    pub bland_engaged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartMethod {
    TwoPhase,
    /// Single phase with this penalty on artificial columns.
    BigM,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    /// Consecutive degenerate pivots tolerated before Bland's rule.
    pub bland_after: usize,
    /// Pivots between refactorizations of the tableau.
    pub refactor_every: usize,
    pub max_iterations: Option<usize>,
    pub start: StartMethod,
    pub big_m: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            feasibility_tol: 1e-8,
            optimality_tol: 1e-8,
            pivot_tol: 1e-10,
            bland_after: 50,
            refactor_every: 200,
            max_iterations: None,
            start: StartMethod::TwoPhase,
            big_m: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("dimension mismatch")]
    DimensionMismatch,
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("invalid bounds on variable {var}")]
    InvalidBounds { var: usize },
    #[error("numeric breakdown: {0}")]
    NumericBreakdown(&'static str),
    #[error("iteration limit reached")]
    IterationLimit,
    #[error("interrupted")]
    Interrupted,
    #[error("no optimal basis to warm start from")]
    NoBasis,
}

/// Solves with default options.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_with(lp, &SimplexOptions::default(), &NoDeadline)
}

pub fn solve_with(lp: &LinearProgram, options: &SimplexOptions, deadline: &dyn Deadline) -> Result<LpSolution, LpError> {
    Simplex::new(lp.clone(), *options)?.solve(deadline)
}

/// Re-optimizes `lp` plus `row` starting from the basis of `previous`.
///
/// Falls back to a cold solve when the old basis cannot be refactored.
pub fn resolve_with_added_row(
    lp: &LinearProgram,
    previous: &LpSolution,
    row: Row,
    options: &SimplexOptions,
) -> Result<LpSolution, LpError> {
    let mut extended = lp.clone();
    extended.rows.push(row.clone());
    if previous.status == LpStatus::Optimal && previous.basis.len() == lp.num_rows() {
        if let Ok(mut s) = Simplex::from_basis(lp.clone(), *options, &previous.basis, &previous.at_upper) {
            s.add_row(row)?;
            if let Ok(sol) = s.resolve(&NoDeadline) {
                return Ok(sol);
            }
        }
    }
    solve_with(&extended, options, &NoDeadline)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColState {
    Basic,
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Structural,
    Slack(usize),
    Artificial(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Fresh,
    Optimal,
    Dirty,
}

enum PrimalEnd {
    Optimal,
    Unbounded { col: usize, dir: f64 },
}

enum DualEnd {
    Optimal,
    Infeasible,
}

/// A simplex tableau that survives between solves.
#[derive(Debug, Clone)]
pub struct Simplex {
    lp: LinearProgram,
    opts: SimplexOptions,
    n: usize,
    m: usize,
    ncols: usize,
    stride: usize,
    t: Vec<f64>,
    xb: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<ColState>,
    lo: Vec<f64>,
    up: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    kind: Vec<Kind>,
    colsign: Vec<f64>,
    slack_col: Vec<usize>,
    sign: Vec<f64>,
    cols: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    iterations: usize,
    /// Value of `iterations` when the current solve call began.
    call_start: usize,
    cold_starts: usize,
    since_refactor: usize,
    bland_engaged: bool,
    phase: Phase,
}

impl Simplex {
    pub fn new(lp: LinearProgram, opts: SimplexOptions) -> Result<Self, LpError> {
        lp.validate()?;
        let n = lp.num_vars();
        let m = lp.num_rows();
        let ncols = n + m;
        let stride = ncols + 16;
        let mut s = Simplex {
            opts,
            n,
            m,
            ncols,
            stride,
            t: vec![0.0; m * stride],
            xb: vec![0.0; m],
            basis: (n..n + m).collect(),
            state: vec![ColState::Lower; ncols],
            lo: Vec::with_capacity(stride),
            up: Vec::with_capacity(stride),
            cost: Vec::with_capacity(stride),
            d: vec![0.0; ncols],
            kind: Vec::with_capacity(stride),
            colsign: vec![1.0; ncols],
            slack_col: (n..n + m).collect(),
            sign: vec![1.0; m],
            cols: vec![Vec::new(); n],
            b: vec![0.0; m],
            iterations: 0,
            call_start: 0,
            cold_starts: 0,
            since_refactor: 0,
            bland_engaged: false,
            phase: Phase::Fresh,
            lp,
        };
        s.lo.extend_from_slice(&s.lp.lower);
        s.up.extend_from_slice(&s.lp.upper);
        s.cost.extend_from_slice(&s.lp.objective);
        s.kind.extend(core::iter::repeat_n(Kind::Structural, n));
        for i in 0..m {
            let row = &s.lp.rows[i];
            let sg = if row.sense == Sense::Ge { -1.0 } else { 1.0 };
            s.sign[i] = sg;
            s.b[i] = sg * row.rhs;
            for &(j, a) in &row.coeffs {
                if a != 0.0 {
                    s.t[i * stride + j] += sg * a;
                }
            }
            s.t[i * stride + n + i] = 1.0;
            s.lo.push(0.0);
            s.up.push(if row.sense == Sense::Eq { 0.0 } else { f64::INFINITY });
            s.cost.push(0.0);
            s.kind.push(Kind::Slack(i));
            s.state[n + i] = ColState::Basic;
        }
        for i in 0..m {
            for j in 0..n {
                let a = s.t[i * stride + j];
                if a != 0.0 {
                    s.cols[j].push((i, a));
                }
            }
        }
        for i in 0..m {
            let mut v = s.b[i];
            for j in 0..n {
                v -= s.t[i * stride + j] * s.lo[j];
            }
            s.xb[i] = v;
        }
        Ok(s)
    }

    /// Builds a tableau for `lp` at the given basis (as reported in
    /// [`LpSolution::basis`]).
    pub fn from_basis(lp: LinearProgram, opts: SimplexOptions, basis: &[usize], at_upper: &[usize]) -> Result<Self, LpError> {
        let mut s = Simplex::new(lp, opts)?;
        if basis.len() != s.m {
            return Err(LpError::NoBasis);
        }
        for st in s.state.iter_mut() {
            *st = ColState::Lower;
        }
        for &j in at_upper {
            if j < s.n && s.up[j].is_finite() {
                s.state[j] = ColState::Upper;
            }
        }
        for (i, &col) in basis.iter().enumerate() {
            if col >= s.ncols || s.state[col] == ColState::Basic {
                return Err(LpError::NoBasis);
            }
            s.basis[i] = col;
            s.state[col] = ColState::Basic;
        }
        s.refactor()?;
        s.phase = Phase::Dirty;
        Ok(s)
    }

    pub fn lp(&self) -> &LinearProgram {
        &self.lp
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Current basis in the numbering of [`LpSolution::basis`], and the
    /// structural columns at their upper bound.
    pub fn basis(&self) -> (Vec<usize>, Vec<usize>) {
        self.export_basis()
    }

    /// Values of the structural variables at the current basis.
    pub fn primal_values(&self) -> Vec<f64> {
        self.structural_values()
    }

    /// Solves restarted from the slack basis.
    pub fn cold_starts(&self) -> usize {
        self.cold_starts
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.stride + j]
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            ColState::Upper => self.up[j],
            _ => self.lo[j],
        }
    }

    fn iteration_cap(&self) -> usize {
        self.opts.max_iterations.unwrap_or(20_000 + 50 * (self.m + self.ncols))
    }

    fn art_sign(&self, col: usize) -> f64 {
        self.colsign[col]
    }

    fn grow_columns(&mut self, extra: usize) {
        if self.ncols + extra <= self.stride {
            return;
        }
        let new_stride = (self.ncols + extra) + self.ncols / 2 + 16;
        let mut t = vec![0.0; self.m * new_stride];
        for i in 0..self.m {
            t[i * new_stride..i * new_stride + self.ncols].copy_from_slice(&self.t[i * self.stride..i * self.stride + self.ncols]);
        }
        self.t = t;
        self.stride = new_stride;
    }

    fn push_column(&mut self, kind: Kind, lo: f64, up: f64, state: ColState) -> usize {
        self.grow_columns(1);
        let col = self.ncols;
        self.ncols += 1;
        self.kind.push(kind);
        self.lo.push(lo);
        self.up.push(up);
        self.cost.push(0.0);
        self.d.push(0.0);
        self.colsign.push(1.0);
        self.state.push(state);
        col
    }

    /// Sets reduced costs from the current basis and the costs `c`.
    fn price(&mut self, c: &[f64]) {
        let mut d: Vec<f64> = c[..self.ncols].to_vec();
        for i in 0..self.m {
            let cb = c[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.stride..i * self.stride + self.ncols];
                for (dj, &a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        for i in 0..self.m {
            d[self.basis[i]] = 0.0;
        }
        self.d = d;
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let stride = self.stride;
        let ncols = self.ncols;
        let piv = self.t[r * stride + j];
        {
            let row = &mut self.t[r * stride..r * stride + ncols];
            for v in row.iter_mut() {
                *v /= piv;
            }
            row[j] = 1.0;
        }
        let nz: Vec<usize> = (0..ncols).filter(|&k| self.t[r * stride + k] != 0.0).collect();
        let prow: Vec<f64> = nz.iter().map(|&k| self.t[r * stride + k]).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * stride + j];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * stride..i * stride + ncols];
            for (&k, &a) in nz.iter().zip(&prow) {
                row[k] -= f * a;
            }
            row[j] = 0.0;
        }
        let dj = self.d[j];
        if dj != 0.0 {
            for (&k, &a) in nz.iter().zip(&prow) {
                self.d[k] -= dj * a;
            }
            self.d[j] = 0.0;
        }
        self.basis[r] = j;
        self.state[j] = ColState::Basic;
        self.since_refactor += 1;
    }

    /// Recomputes the tableau, basic values and reduced costs from the
    /// original data and the current basis.
    fn refactor_with(&mut self, c: &[f64]) -> Result<(), LpError> {
        let m = self.m;
        let mut bmat = vec![0.0; m * m];
        for (k, &col) in self.basis.iter().enumerate() {
            match self.kind[col] {
                Kind::Structural => {
                    for &(i, a) in &self.cols[col] {
                        bmat[i * m + k] = a;
                    }
                }
                Kind::Slack(i) => bmat[i * m + k] = 1.0,
                Kind::Artificial(i) => bmat[i * m + k] = self.art_sign(col),
            }
        }
        let inv = invert(&mut bmat, m).ok_or(LpError::NumericBreakdown("singular basis"))?;
        let stride = self.stride;
        let ncols = self.ncols;
        for v in self.t[..m * stride].iter_mut() {
            *v = 0.0;
        }
        for col in 0..ncols {
            match self.kind[col] {
                Kind::Structural => {
                    for &(r, a) in &self.cols[col] {
                        for i in 0..m {
                            let v = inv[i * m + r];
                            if v != 0.0 {
                                self.t[i * stride + col] += v * a;
                            }
                        }
                    }
                }
                Kind::Slack(r) | Kind::Artificial(r) => {
                    let s = if matches!(self.kind[col], Kind::Artificial(_)) { self.art_sign(col) } else { 1.0 };
                    for i in 0..m {
                        self.t[i * stride + col] = s * inv[i * m + r];
                    }
                }
            }
        }
        for (k, &col) in self.basis.iter().enumerate() {
            for i in 0..m {
                self.t[i * stride + col] = if i == k { 1.0 } else { 0.0 };
            }
        }
        let mut rhs = self.b.clone();
        for col in 0..ncols {
            if self.state[col] == ColState::Basic {
                continue;
            }
            let v = self.nonbasic_value(col);
            if v == 0.0 {
                continue;
            }
            match self.kind[col] {
                Kind::Structural => {
                    for &(i, a) in &self.cols[col] {
                        rhs[i] -= a * v;
                    }
                }
                Kind::Slack(i) => rhs[i] -= v,
                Kind::Artificial(i) => rhs[i] -= self.art_sign(col) * v,
            }
        }
        for i in 0..m {
            self.xb[i] = (0..m).map(|r| inv[i * m + r] * rhs[r]).sum();
        }
        self.price(c);
        self.since_refactor = 0;
        Ok(())
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let c = self.cost.clone();
        self.refactor_with(&c)
    }

    fn primal_infeasibility(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.m {
            let col = self.basis[i];
            worst = worst.max(self.lo[col] - self.xb[i]).max(self.xb[i] - self.up[col]);
        }
        worst
    }

    fn dual_infeasible(&self) -> bool {
        let tol = self.opts.optimality_tol;
        (0..self.ncols).any(|j| match self.state[j] {
            ColState::Basic => false,
            _ if self.lo[j] == self.up[j] => false,
            ColState::Lower => self.d[j] < -tol,
            ColState::Upper => self.d[j] > tol,
        })
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let tol = self.opts.optimality_tol;
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols {
            if self.state[j] == ColState::Basic || self.lo[j] == self.up[j] {
                continue;
            }
            let dj = self.d[j];
            let dir = match self.state[j] {
                ColState::Lower if dj < -tol => 1.0,
                ColState::Upper if dj > tol => -1.0,
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if dj.abs() > best_score {
                best_score = dj.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    /// Primal simplex on costs `c` from a primal feasible basis.
    fn primal(&mut self, c: &[f64], deadline: &dyn Deadline) -> Result<PrimalEnd, LpError> {
        let mut stall = 0usize;
        let mut bland = false;
        let ptol = self.opts.pivot_tol;
        let ftol = self.opts.feasibility_tol;
        loop {
            if deadline.expired() {
                return Err(LpError::Interrupted);
            }
            if self.iterations - self.call_start >= self.iteration_cap() {
                return Err(LpError::IterationLimit);
            }
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor_with(c)?;
            }
            let Some((j, dir)) = self.choose_entering(bland) else {
                return Ok(PrimalEnd::Optimal);
            };
            self.iterations += 1;
            let flip = self.up[j] - self.lo[j];
            // Harris pass: largest step allowed with bounds relaxed by ftol.
            let mut relaxed = f64::INFINITY;
            for i in 0..self.m {
                let a = self.at(i, j) * dir;
                let col = self.basis[i];
                if a > ptol {
                    relaxed = relaxed.min((self.xb[i] - self.lo[col] + ftol) / a);
                } else if a < -ptol && self.up[col].is_finite() {
                    relaxed = relaxed.min((self.up[col] - self.xb[i] + ftol) / -a);
                }
            }
            let mut leave: Option<(usize, f64, bool)> = None;
            let mut leave_key = (0.0f64, usize::MAX);
            for i in 0..self.m {
                let a = self.at(i, j) * dir;
                let col = self.basis[i];
                let (ratio, to_upper) = if a > ptol {
                    ((self.xb[i] - self.lo[col]) / a, false)
                } else if a < -ptol && self.up[col].is_finite() {
                    ((self.up[col] - self.xb[i]) / -a, true)
                } else {
                    continue;
                };
                let ratio = ratio.max(0.0);
                if bland {
                    let better = match leave {
                        None => true,
                        Some((_, best, _)) => ratio < best - 1e-12 || (ratio <= best + 1e-12 && col < leave_key.1),
                    };
                    if better {
                        leave = Some((i, ratio, to_upper));
                        leave_key = (a.abs(), col);
                    }
                } else if ratio <= relaxed && a.abs() > leave_key.0 {
                    leave = Some((i, ratio, to_upper));
                    leave_key = (a.abs(), col);
                }
            }
            if leave.is_none() && flip.is_infinite() {
                return Ok(PrimalEnd::Unbounded { col: j, dir });
            }
            let step_row = match leave {
                Some((_, ratio, _)) if ratio < flip => leave,
                _ => None,
            };
            let step = match step_row {
                Some((_, ratio, _)) => ratio,
                None => flip,
            };
            if step <= 1e-12 {
                stall += 1;
                if stall > self.opts.bland_after && !bland {
                    bland = true;
                    self.bland_engaged = true;
                }
            } else {
                stall = 0;
            }
            let delta = dir * step;
            if delta != 0.0 {
                for i in 0..self.m {
                    let a = self.at(i, j);
                    if a != 0.0 {
                        self.xb[i] -= a * delta;
                    }
                }
            }
            match step_row {
                None => {
                    self.state[j] = if dir > 0.0 { ColState::Upper } else { ColState::Lower };
                }
                Some((r, _, to_upper)) => {
                    let entering_value = self.nonbasic_value(j) + delta;
                    let leaving = self.basis[r];
                    self.pivot(r, j);
                    self.xb[r] = entering_value;
                    self.state[leaving] = if to_upper { ColState::Upper } else { ColState::Lower };
                    if self.is_artificial(leaving) {
                        self.up[leaving] = 0.0;
                        self.state[leaving] = ColState::Lower;
                    }
                }
            }
        }
    }

    /// Dual simplex from a dual feasible basis.
    fn dual(&mut self, deadline: &dyn Deadline) -> Result<DualEnd, LpError> {
        let ptol = self.opts.pivot_tol;
        let ftol = self.opts.feasibility_tol;
        loop {
            if deadline.expired() {
                return Err(LpError::Interrupted);
            }
            if self.iterations - self.call_start >= self.iteration_cap() {
                return Err(LpError::IterationLimit);
            }
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor()?;
            }
            let mut leave: Option<(usize, f64)> = None;
            let mut worst = ftol;
            for i in 0..self.m {
                let col = self.basis[i];
                let below = self.lo[col] - self.xb[i];
                let above = self.xb[i] - self.up[col];
                if below > worst {
                    worst = below;
                    leave = Some((i, self.lo[col]));
                } else if above > worst {
                    worst = above;
                    leave = Some((i, self.up[col]));
                }
            }
            let Some((r, target)) = leave else {
                return Ok(DualEnd::Optimal);
            };
            self.iterations += 1;
            let increase = target > self.xb[r];
            let otol = self.opts.optimality_tol;
            let eligible = |j: usize| -> Option<f64> {
                if self.state[j] == ColState::Basic || self.lo[j] == self.up[j] {
                    return None;
                }
                let a = self.at(r, j);
                if a.abs() <= ptol {
                    return None;
                }
                let ok = match (self.state[j], increase) {
                    (ColState::Lower, true) | (ColState::Upper, false) => a < 0.0,
                    (ColState::Upper, true) | (ColState::Lower, false) => a > 0.0,
                    _ => false,
                };
                ok.then_some(a)
            };
            // Harris pass: largest dual step with reduced costs relaxed by otol.
            let mut relaxed = f64::INFINITY;
            for j in 0..self.ncols {
                if let Some(a) = eligible(j) {
                    relaxed = relaxed.min((self.d[j].abs() + otol) / a.abs());
                }
            }
            let mut enter: Option<usize> = None;
            let mut best_mag = 0.0;
            for j in 0..self.ncols {
                if let Some(a) = eligible(j) {
                    if (self.d[j] / a).abs() <= relaxed && a.abs() > best_mag {
                        best_mag = a.abs();
                        enter = Some(j);
                    }
                }
            }
            let Some(j) = enter else {
                return Ok(DualEnd::Infeasible);
            };
            let a = self.at(r, j);
            let delta = (self.xb[r] - target) / a;
            for i in 0..self.m {
                let v = self.at(i, j);
                if v != 0.0 {
                    self.xb[i] -= v * delta;
                }
            }
            let entering_value = self.nonbasic_value(j) + delta;
            let leaving = self.basis[r];
            self.pivot(r, j);
            self.xb[r] = entering_value;
            self.state[leaving] = if target == self.lo[leaving] { ColState::Lower } else { ColState::Upper };
        }
    }

    /// Adds artificials to rows whose slack starts infeasible.
    fn add_artificials(&mut self) -> bool {
        let ftol = self.opts.feasibility_tol;
        let mut any = false;
        for i in 0..self.m {
            let col = self.basis[i];
            let v = self.xb[i];
            let infeasible = v < self.lo[col] - ftol || v > self.up[col] + ftol;
            if !infeasible {
                continue;
            }
            let target = if v < self.lo[col] { self.lo[col] } else { self.up[col] };
            let excess = v - target;
            let sg = if excess >= 0.0 { 1.0 } else { -1.0 };
            let art = self.push_column(Kind::Artificial(i), 0.0, f64::INFINITY, ColState::Basic);
            self.colsign[art] = sg;
            let stride = self.stride;
            if sg < 0.0 {
                for k in 0..self.ncols {
                    self.t[i * stride + k] = -self.t[i * stride + k];
                }
            }
            self.t[i * stride + art] = 1.0;
            self.state[col] = if target == self.up[col] && self.up[col] != self.lo[col] { ColState::Upper } else { ColState::Lower };
            self.basis[i] = art;
            self.xb[i] = excess.abs();
            any = true;
        }
        any
    }

    fn is_artificial(&self, col: usize) -> bool {
        matches!(self.kind[col], Kind::Artificial(_))
    }

    fn art_value(&self) -> f64 {
        (0..self.m).filter(|&i| self.is_artificial(self.basis[i])).map(|i| self.xb[i].abs()).sum()
    }

    /// Pivots zero-valued artificials out of the basis where possible.
    fn drive_out_artificials(&mut self) {
        for i in 0..self.m {
            if !self.is_artificial(self.basis[i]) {
                continue;
            }
            let mut best: Option<usize> = None;
            let mut mag = self.opts.pivot_tol.max(1e-9);
            for j in 0..self.ncols {
                if self.state[j] == ColState::Basic || self.is_artificial(j) {
                    continue;
                }
                let a = self.at(i, j).abs();
                if a > mag {
                    mag = a;
                    best = Some(j);
                }
            }
            if let Some(j) = best {
                let value = self.nonbasic_value(j);
                let leaving = self.basis[i];
                let shift = self.xb[i] / self.at(i, j);
                for k in 0..self.m {
                    let v = self.at(k, j);
                    if v != 0.0 && k != i {
                        self.xb[k] -= v * shift;
                    }
                }
                self.pivot(i, j);
                self.xb[i] = value + shift;
                self.state[leaving] = ColState::Lower;
            }
        }
    }

    fn freeze_artificials(&mut self) {
        for col in 0..self.ncols {
            if self.is_artificial(col) {
                self.lo[col] = 0.0;
                self.up[col] = 0.0;
            }
        }
    }

    /// Cold two-phase (or Big-M) solve from the slack basis.
    pub fn solve(&mut self, deadline: &dyn Deadline) -> Result<LpSolution, LpError> {
        if self.phase != Phase::Fresh {
            let iterations = self.iterations;
            *self = Simplex::new(self.lp.clone(), self.opts)?;
            self.iterations = iterations;
        }
        self.call_start = self.iterations;
        let has_art = self.add_artificials();
        if has_art {
            match self.opts.start {
                StartMethod::TwoPhase => {
                    let c1: Vec<f64> = (0..self.ncols).map(|j| if self.is_artificial(j) { 1.0 } else { 0.0 }).collect();
                    self.price(&c1);
                    self.primal(&c1, deadline)?;
                    self.refactor_with(&c1)?;
                    if self.primal_infeasibility() > self.opts.feasibility_tol {
                        self.primal(&c1, deadline)?;
                    }
                    let scale = 1.0 + self.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    if self.art_value() > self.opts.feasibility_tol * scale {
                        self.phase = Phase::Dirty;
                        return Ok(self.infeasible_solution());
                    }
                    self.drive_out_artificials();
                    self.freeze_artificials();
                    self.phase = Phase::Dirty;
                }
                StartMethod::BigM => {
                    let big = self.opts.big_m;
                    for j in 0..self.ncols {
                        if self.is_artificial(j) {
                            self.cost[j] = big;
                        }
                    }
                    let c = self.cost.clone();
                    self.price(&c);
                    let end = self.primal(&c, deadline)?;
                    let scale = 1.0 + self.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    for j in 0..self.ncols {
                        if self.is_artificial(j) {
                            self.cost[j] = 0.0;
                        }
                    }
                    if self.art_value() > self.opts.feasibility_tol * scale {
                        self.phase = Phase::Dirty;
                        return Ok(self.infeasible_solution());
                    }
                    self.phase = Phase::Dirty;
                    if let PrimalEnd::Unbounded { col, dir } = end {
                        return Ok(self.unbounded_solution(col, dir));
                    }
                    self.drive_out_artificials();
                    self.freeze_artificials();
                }
            }
        }
        self.phase = Phase::Dirty;
        self.finish_primal(deadline)
    }

    fn finish_primal(&mut self, deadline: &dyn Deadline) -> Result<LpSolution, LpError> {
        let c = self.cost.clone();
        self.price(&c);
        for _ in 0..4 {
            match self.primal(&c, deadline)? {
                PrimalEnd::Unbounded { col, dir } => return Ok(self.unbounded_solution(col, dir)),
                PrimalEnd::Optimal => {}
            }
            if self.since_refactor == 0 {
                break;
            }
            self.refactor_with(&c)?;
            if self.primal_infeasibility() > self.opts.feasibility_tol {
                match self.dual_cleanup(deadline)? {
                    Some(sol) => return Ok(sol),
                    None => continue,
                }
            }
            if !self.dual_infeasible() {
                break;
            }
        }
        self.phase = Phase::Optimal;
        Ok(self.optimal_solution())
    }

    /// After refactoring exposed small primal infeasibility.
    fn dual_cleanup(&mut self, deadline: &dyn Deadline) -> Result<Option<LpSolution>, LpError> {
        if self.dual_infeasible() {
            return Err(LpError::NumericBreakdown("lost feasibility after refactorization"));
        }
        match self.dual(deadline)? {
            DualEnd::Infeasible => Ok(Some(self.infeasible_solution())),
            DualEnd::Optimal => Ok(None),
        }
    }

    /// Appends a row; call [`Simplex::resolve`] afterwards.
    pub fn add_row(&mut self, row: Row) -> Result<usize, LpError> {
        for &(j, a) in &row.coeffs {
            if j >= self.n {
                return Err(LpError::DimensionMismatch);
            }
            if !a.is_finite() {
                return Err(LpError::NonFinite);
            }
        }
        if !row.rhs.is_finite() {
            return Err(LpError::NonFinite);
        }
        let i = self.m;
        let sg = if row.sense == Sense::Ge { -1.0 } else { 1.0 };
        let mut dense = vec![0.0; self.n];
        for &(j, a) in &row.coeffs {
            dense[j] += sg * a;
        }
        let slack = self.push_column(Kind::Slack(i), 0.0, if row.sense == Sense::Eq { 0.0 } else { f64::INFINITY }, ColState::Basic);
        let mut new_row = vec![0.0; self.stride];
        for (j, &a) in dense.iter().enumerate() {
            new_row[j] = a;
        }
        for k in 0..self.m {
            let col = self.basis[k];
            if col < self.n && dense[col] != 0.0 {
                let f = dense[col];
                let src = &self.t[k * self.stride..k * self.stride + self.ncols];
                for (v, &s) in new_row.iter_mut().zip(src) {
                    *v -= f * s;
                }
            }
        }
        for k in 0..self.m {
            let col = self.basis[k];
            new_row[col] = 0.0;
        }
        new_row[slack] = 1.0;
        let mut value = sg * row.rhs;
        for j in 0..self.n {
            if dense[j] != 0.0 {
                value -= dense[j] * self.current_value(j);
            }
        }
        self.t.extend_from_slice(&new_row);
        for (j, &a) in dense.iter().enumerate() {
            if a != 0.0 {
                self.cols[j].push((i, a));
            }
        }
        self.b.push(sg * row.rhs);
        self.sign.push(sg);
        self.slack_col.push(slack);
        self.basis.push(slack);
        self.xb.push(value);
        self.m += 1;
        self.lp.rows.push(row);
        if self.phase == Phase::Optimal {
            self.phase = Phase::Dirty;
        }
        Ok(i)
    }

    fn current_value(&self, j: usize) -> f64 {
        if self.state[j] == ColState::Basic {
            let r = self.basis.iter().position(|&c| c == j).expect("basic column has a row");
            self.xb[r]
        } else {
            self.nonbasic_value(j)
        }
    }

    /// Changes the bounds of structural variable `j`.
    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) -> Result<(), LpError> {
        if j >= self.n {
            return Err(LpError::DimensionMismatch);
        }
        if !lower.is_finite() || upper.is_nan() || upper < lower {
            return Err(LpError::InvalidBounds { var: j });
        }
        let old = self.nonbasic_value(j);
        let was = self.state[j];
        self.lo[j] = lower;
        self.up[j] = upper;
        self.lp.lower[j] = lower;
        self.lp.upper[j] = upper;
        if was != ColState::Basic {
            // Park at the bound that keeps the reduced cost dual feasible.
            if !upper.is_finite() || self.d[j] > 0.0 {
                self.state[j] = ColState::Lower;
            } else if self.d[j] < 0.0 {
                self.state[j] = ColState::Upper;
            }
            let delta = self.nonbasic_value(j) - old;
            if delta != 0.0 {
                for i in 0..self.m {
                    let a = self.at(i, j);
                    if a != 0.0 {
                        self.xb[i] -= a * delta;
                    }
                }
            }
        }
        if self.phase == Phase::Optimal {
            self.phase = Phase::Dirty;
        }
        Ok(())
    }

    /// Re-optimizes after rows or bounds changed, warm starting from the
    /// current basis. Falls back to a cold solve when needed.
    pub fn resolve(&mut self, deadline: &dyn Deadline) -> Result<LpSolution, LpError> {
        self.call_start = self.iterations;
        if self.phase == Phase::Fresh {
            return self.cold(deadline);
        }
        if self.since_refactor >= self.opts.refactor_every / 2 && self.refactor().is_err() {
            return self.cold(deadline);
        }
        let c = self.cost.clone();
        self.price(&c);
        if !self.dual_infeasible() {
            match self.dual(deadline) {
                Ok(DualEnd::Infeasible) => {
                    self.phase = Phase::Dirty;
                    return Ok(self.infeasible_solution());
                }
                Ok(DualEnd::Optimal) => return self.finish_primal(deadline),
                Err(LpError::Interrupted) => return Err(LpError::Interrupted),
                Err(_) => return self.cold(deadline),
            }
        }
        if self.primal_infeasibility() <= self.opts.feasibility_tol {
            return match self.finish_primal(deadline) {
                Err(LpError::Interrupted) => Err(LpError::Interrupted),
                Err(_) => self.cold(deadline),
                ok => ok,
            };
        }
        self.cold(deadline)
    }

    /// Solve from the slack basis; after a numerical failure, retries once
    /// with a stricter pivot tolerance and more frequent refactorization.
    fn cold(&mut self, deadline: &dyn Deadline) -> Result<LpSolution, LpError> {
        let (iterations, cold_starts) = (self.iterations, self.cold_starts + 1);
        let opts = self.opts;
        *self = Simplex::new(self.lp.clone(), opts)?;
        self.iterations = iterations;
        self.cold_starts = cold_starts;
        match self.solve(deadline) {
            Err(LpError::NumericBreakdown(_) | LpError::IterationLimit) => {
                let strict = SimplexOptions { pivot_tol: opts.pivot_tol.max(1e-7), refactor_every: opts.refactor_every.min(50), ..opts };
                let (iterations, cold_starts) = (self.iterations, self.cold_starts + 1);
                *self = Simplex::new(self.lp.clone(), strict)?;
                self.iterations = iterations;
                self.cold_starts = cold_starts;
                let out = self.solve(deadline);
                self.opts = opts;
                out
            }
            other => other,
        }
    }

    fn structural_values(&self) -> Vec<f64> {
        let mut x: Vec<f64> = (0..self.n).map(|j| self.nonbasic_value(j)).collect();
        for i in 0..self.m {
            let col = self.basis[i];
            if col < self.n {
                x[col] = self.xb[i];
            }
        }
        x
    }

    fn export_basis(&self) -> (Vec<usize>, Vec<usize>) {
        let basis = self
            .basis
            .iter()
            .enumerate()
            .map(|(i, &col)| match self.kind[col] {
                Kind::Structural => col,
                Kind::Slack(r) => self.n + r,
                Kind::Artificial(_) => self.n + i,
            })
            .collect();
        let at_upper = (0..self.n).filter(|&j| self.state[j] == ColState::Upper).collect();
        (basis, at_upper)
    }

    fn optimal_solution(&self) -> LpSolution {
        let primal = self.structural_values();
        let objective = self.lp.objective_value(&primal);
        let dual: Vec<f64> = (0..self.m).map(|i| -self.d[self.slack_col[i]] * self.sign[i]).collect();
        let reduced_costs = self.d[..self.n].to_vec();
        let (basis, at_upper) = self.export_basis();
        LpSolution {
            status: LpStatus::Optimal,
            objective,
            primal,
            dual,
            reduced_costs,
            ray: None,
            basis,
            at_upper,
            iterations: self.iterations,
            bland_engaged: self.bland_engaged,
        }
    }

    fn infeasible_solution(&self) -> LpSolution {
        let (basis, at_upper) = self.export_basis();
        LpSolution {
            status: LpStatus::Infeasible,
            objective: f64::INFINITY,
            primal: self.structural_values(),
            dual: vec![0.0; self.m],
            reduced_costs: vec![0.0; self.n],
            ray: None,
            basis,
            at_upper,
            iterations: self.iterations,
            bland_engaged: self.bland_engaged,
        }
    }

    fn unbounded_solution(&self, col: usize, dir: f64) -> LpSolution {
        let mut ray = vec![0.0; self.n];
        if col < self.n {
            ray[col] = dir;
        }
        for i in 0..self.m {
            let b = self.basis[i];
            if b < self.n {
                ray[b] = -dir * self.at(i, col);
            }
        }
        let (basis, at_upper) = self.export_basis();
        LpSolution {
            status: LpStatus::Unbounded,
            objective: f64::NEG_INFINITY,
            primal: self.structural_values(),
            dual: vec![0.0; self.m],
            reduced_costs: self.d[..self.n].to_vec(),
            ray: Some(ray),
            basis,
            at_upper,
            iterations: self.iterations,
            bland_engaged: self.bland_engaged,
        }
    }
}

/// Gauss-Jordan inverse with partial pivoting; `a` is destroyed.
fn invert(a: &mut [f64], m: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; m * m];
    for i in 0..m {
        inv[i * m + i] = 1.0;
    }
    for col in 0..m {
        let mut p = col;
        let mut best = a[col * m + col].abs();
        for r in (col + 1)..m {
            let v = a[r * m + col].abs();
            if v > best {
                best = v;
                p = r;
            }
        }
        if best < 1e-12 {
            return None;
        }
        if p != col {
            for k in 0..m {
                a.swap(col * m + k, p * m + k);
                inv.swap(col * m + k, p * m + k);
            }
        }
        let piv = a[col * m + col];
        for k in 0..m {
            a[col * m + k] /= piv;
            inv[col * m + k] /= piv;
        }
        for r in 0..m {
            if r == col {
                continue;
            }
            let f = a[r * m + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..m {
                a[r * m + k] -= f * a[col * m + k];
                inv[r * m + k] -= f * inv[col * m + k];
            }
        }
    }
    Some(inv)
}
