//! Dense revised simplex for small equality-form linear programs.
//!
//! Solves `min c'x  s.t.  Ax = b, x >= 0` with `b >= 0` and `A` given by
//! sparse columns. Two-phase method with an explicit basis inverse,
//! periodic refactorization, and a switch to Bland's rule after a run of
//! degenerate pivots. Redundant rows (routine for transportation
//! polytopes) are handled by leaving their artificials pinned in the
//! basis at level zero after a drive-out pass.
//!
//! The returned solution carries the dual vector together with residuals
//! recomputed from scratch — primal feasibility, the most negative
//! reduced cost, and the objective/dual gap — so callers can
//! machine-check optimality instead of trusting the iteration.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("problem is unbounded below")]
    Unbounded,
    #[error("basis is numerically singular")]
    Singular,
    #[error("malformed program: {0}")]
    Malformed(&'static str),
}

/// Column of the constraint matrix as `(row, coefficient)` pairs.
#[derive(Clone, Debug)]
pub struct SparseColumn {
    pub entries: Vec<(usize, f64)>,
}

/// `min objective . x  s.t.  columns x = rhs, x >= 0`.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub nrows: usize,
    pub columns: Vec<SparseColumn>,
    pub objective: Vec<f64>,
    pub rhs: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Dual vector (simplex multipliers), one per row.
    pub duals: Vec<f64>,
    pub iterations: usize,
    /// `max_i |(Ax - b)_i|`, recomputed from the columns.
    pub primal_residual: f64,
    /// `min_j (c_j - y . A_j)`, recomputed over all columns.
    pub min_reduced_cost: f64,
    /// `|c . x - y . b|`, recomputed.
    pub duality_gap: f64,
}

#[derive(Debug)]
pub enum LpOutcome {
    Optimal(LpSolution),
    /// Phase I could not zero the artificials; the residual is the
    /// leftover artificial mass.
    Infeasible {
        infeasibility: f64,
    },
}

const REFACTOR_EVERY: usize = 64;
const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
const BLAND_AFTER: usize = 600;

pub fn solve(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    let m = lp.nrows;
    let n = lp.columns.len();
    if m == 0 || lp.rhs.len() != m || lp.objective.len() != n {
        return Err(LpError::Malformed("inconsistent dimensions"));
    }
    if lp.rhs.iter().any(|&b| b < 0.0 || !b.is_finite()) {
        return Err(LpError::Malformed("rhs must be nonnegative and finite"));
    }
    for col in &lp.columns {
        if col.entries.iter().any(|&(r, v)| r >= m || !v.is_finite()) {
            return Err(LpError::Malformed("column entry out of range"));
        }
    }

    let mut state = State::new(lp);
    let phase1_cost: Vec<f64> = vec![0.0; n];

    // Phase I: minimize the artificial mass.
    state.run(lp, &phase1_cost, 1.0, true)?;
    let infeasibility: f64 = state
        .basis
        .iter()
        .zip(&state.xb)
        .filter(|(&b, _)| b >= n)
        .map(|(_, &x)| x.max(0.0))
        .sum();
    if infeasibility > FEAS_TOL {
        return Ok(LpOutcome::Infeasible { infeasibility });
    }
    state.drive_out_artificials(lp)?;

    // Phase II: the real objective; artificials stay pinned at zero.
    state.run(lp, &lp.objective, 0.0, false)?;

    state.refactor(lp)?;
    let mut x = vec![0.0; n];
    for (i, &b) in state.basis.iter().enumerate() {
        if b < n {
            x[b] = state.xb[i].max(0.0);
        }
    }
    let duals = state.duals(&lp.objective, 0.0);
    let objective: f64 = x.iter().zip(&lp.objective).map(|(xi, ci)| xi * ci).sum();

    // Recompute the certificate quantities from scratch.
    let mut residual_vec: Vec<f64> = lp.rhs.iter().map(|&b| -b).collect();
    for (j, col) in lp.columns.iter().enumerate() {
        if x[j] != 0.0 {
            for &(r, v) in &col.entries {
                residual_vec[r] += v * x[j];
            }
        }
    }
    let primal_residual = residual_vec.iter().fold(0.0f64, |acc, r| acc.max(r.abs()));
    let mut min_reduced_cost = f64::INFINITY;
    for (j, col) in lp.columns.iter().enumerate() {
        let mut d = lp.objective[j];
        for &(r, v) in &col.entries {
            d -= duals[r] * v;
        }
        min_reduced_cost = min_reduced_cost.min(d);
    }
    if n == 0 {
        min_reduced_cost = 0.0;
    }
    let dual_objective: f64 = duals.iter().zip(&lp.rhs).map(|(y, b)| y * b).sum();
    let duality_gap = (objective - dual_objective).abs();

    Ok(LpOutcome::Optimal(LpSolution {
        x,
        objective,
        duals,
        iterations: state.iterations,
        primal_residual,
        min_reduced_cost,
        duality_gap,
    }))
}

/// Basis bookkeeping. Basis entries `>= n` denote the artificial of row
/// `basis[i] - n`.
struct State {
    n: usize,
    m: usize,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Vec<Vec<f64>>,
    xb: Vec<f64>,
    iterations: usize,
    pivots_since_refactor: usize,
}

impl State {
    fn new(lp: &LinearProgram) -> Self {
        let m = lp.nrows;
        let n = lp.columns.len();
        let mut binv = vec![vec![0.0; m]; m];
        for (i, row) in binv.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        State {
            n,
            m,
            basis: (n..n + m).collect(),
            in_basis: vec![false; n],
            binv,
            xb: lp.rhs.clone(),
            iterations: 0,
            pivots_since_refactor: 0,
        }
    }

    fn cost_of(&self, var: usize, real: &[f64], artificial_cost: f64) -> f64 {
        if var < self.n {
            real[var]
        } else {
            artificial_cost
        }
    }

    /// `y = c_B B^-1`.
    fn duals(&self, real: &[f64], artificial_cost: f64) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = self.cost_of(b, real, artificial_cost);
            if cb != 0.0 {
                for (yk, bk) in y.iter_mut().zip(&self.binv[i]) {
                    *yk += cb * bk;
                }
            }
        }
        y
    }

    /// `w = B^-1 A_j`.
    fn ftran(&self, lp: &LinearProgram, j: usize) -> Vec<f64> {
        let mut w = vec![0.0; self.m];
        for &(r, v) in &lp.columns[j].entries {
            if v != 0.0 {
                for i in 0..self.m {
                    w[i] += self.binv[i][r] * v;
                }
            }
        }
        w
    }

    fn refactor(&mut self, lp: &LinearProgram) -> Result<(), LpError> {
        let m = self.m;
        // Assemble the basis matrix and invert it by Gauss-Jordan with
        // partial pivoting.
        let mut a = vec![vec![0.0; 2 * m]; m];
        for (k, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                for &(r, v) in &lp.columns[b].entries {
                    a[r][k] = v;
                }
            } else {
                a[b - self.n][k] = 1.0;
            }
        }
        for (i, row) in a.iter_mut().enumerate() {
            row[m + i] = 1.0;
        }
        for col in 0..m {
            let (pivot_row, pivot_val) = (col..m)
                .map(|r| (r, a[r][col].abs()))
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .expect("nonempty range");
            if pivot_val <= 1e-13 {
                return Err(LpError::Singular);
            }
            a.swap(col, pivot_row);
            let inv = 1.0 / a[col][col];
            for c in 0..2 * m {
                a[col][c] *= inv;
            }
            for r in 0..m {
                if r != col {
                    let f = a[r][col];
                    if f != 0.0 {
                        for c in 0..2 * m {
                            a[r][c] -= f * a[col][c];
                        }
                    }
                }
            }
        }
        for i in 0..m {
            for k in 0..m {
                self.binv[i][k] = a[i][m + k];
            }
        }
        // Refresh the basic values from the inverse.
        for i in 0..m {
            let mut v = 0.0;
            for k in 0..m {
                v += self.binv[i][k] * lp.rhs[k];
            }
            if v < -1e-7 {
                return Err(LpError::Singular);
            }
            self.xb[i] = v.max(0.0);
        }
        self.pivots_since_refactor = 0;
        Ok(())
    }

    fn drive_out_artificials(&mut self, lp: &LinearProgram) -> Result<(), LpError> {
        for i in 0..self.m {
            if self.basis[i] < self.n {
                continue;
            }
            // The artificial sits within the feasibility tolerance of zero;
            // snap it so the exchange below is exactly degenerate.
            self.xb[i] = 0.0;
            // Any real column with a nonzero tableau entry in this row can
            // replace the artificial at a zero-length step. If none exists
            // the row is redundant and every future direction has a zero
            // component here, so the artificial stays safely at level 0.
            let mut replacement = None;
            for j in 0..self.n {
                if self.in_basis[j] {
                    continue;
                }
                let mut t = 0.0;
                for &(r, v) in &lp.columns[j].entries {
                    t += self.binv[i][r] * v;
                }
                if t.abs() > 1e-7 {
                    replacement = Some(j);
                    break;
                }
            }
            if let Some(j) = replacement {
                let w = self.ftran(lp, j);
                self.pivot(i, j, &w)?;
            }
        }
        Ok(())
    }

    fn pivot(&mut self, leave_row: usize, enter: usize, w: &[f64]) -> Result<(), LpError> {
        let wr = w[leave_row];
        if wr.abs() <= 1e-13 {
            return Err(LpError::Singular);
        }
        let t = self.xb[leave_row] / wr;
        for i in 0..self.m {
            if i != leave_row {
                self.xb[i] -= t * w[i];
                if self.xb[i] < 0.0 && self.xb[i] > -1e-9 {
                    self.xb[i] = 0.0;
                }
            }
        }
        self.xb[leave_row] = t;

        let inv = 1.0 / wr;
        let pivot_row = std::mem::take(&mut self.binv[leave_row]);
        for i in 0..self.m {
            if i != leave_row {
                let f = w[i];
                if f != 0.0 {
                    for k in 0..self.m {
                        self.binv[i][k] -= f * inv * pivot_row[k];
                    }
                }
            }
        }
        self.binv[leave_row] = pivot_row;
        for k in 0..self.m {
            self.binv[leave_row][k] *= inv;
        }

        let old = self.basis[leave_row];
        if old < self.n {
            self.in_basis[old] = false;
        }
        self.basis[leave_row] = enter;
        self.in_basis[enter] = true;
        self.pivots_since_refactor += 1;
        Ok(())
    }

    /// Runs the simplex loop to optimality for the given cost vector.
    fn run(
        &mut self,
        lp: &LinearProgram,
        real_cost: &[f64],
        artificial_cost: f64,
        phase_one: bool,
    ) -> Result<(), LpError> {
        let cost_scale = real_cost
            .iter()
            .fold(1.0f64, |acc, c| acc.max(c.abs()))
            .max(artificial_cost.abs());
        let enter_tol = 1e-9 * cost_scale.max(1.0);
        let max_iterations = 50_000 + 20 * (self.n + self.m);
        let mut bland = false;
        let mut degenerate_run = 0usize;

        loop {
            if self.pivots_since_refactor >= REFACTOR_EVERY {
                self.refactor(lp)?;
            }
            let y = self.duals(real_cost, artificial_cost);

            let mut enter: Option<(usize, f64)> = None;
            for j in 0..self.n {
                if self.in_basis[j] {
                    continue;
                }
                let mut d = real_cost[j];
                for &(r, v) in &lp.columns[j].entries {
                    d -= y[r] * v;
                }
                if d < -enter_tol {
                    if bland {
                        enter = Some((j, d));
                        break;
                    }
                    match enter {
                        Some((_, best)) if best <= d => {}
                        _ => enter = Some((j, d)),
                    }
                }
            }
            let Some((j, _)) = enter else {
                return Ok(());
            };

            let w = self.ftran(lp, j);
            let mut leave: Option<usize> = None;
            let mut t_min = f64::INFINITY;
            for i in 0..self.m {
                if w[i] > PIVOT_TOL {
                    let t = self.xb[i] / w[i];
                    let better = match leave {
                        None => true,
                        Some(cur) => {
                            if t < t_min - 1e-12 {
                                true
                            } else if t <= t_min + 1e-12 {
                                // Tie-break: prefer evicting artificials,
                                // then the larger pivot for stability.
                                let cur_art = self.basis[cur] >= self.n;
                                let new_art = self.basis[i] >= self.n;
                                if new_art != cur_art {
                                    new_art
                                } else if bland {
                                    self.basis[i] < self.basis[cur]
                                } else {
                                    w[i] > w[cur]
                                }
                            } else {
                                false
                            }
                        }
                    };
                    if better {
                        leave = Some(i);
                        t_min = t.min(t_min);
                    }
                }
            }
            let Some(leave_row) = leave else {
                return if phase_one {
                    // Phase I is bounded below by zero; a missing ratio
                    // means the numerics collapsed.
                    Err(LpError::Singular)
                } else {
                    Err(LpError::Unbounded)
                };
            };

            if t_min.abs() <= DEGENERATE_STEP {
                degenerate_run += 1;
                if degenerate_run > BLAND_AFTER {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }

            self.pivot(leave_row, j, &w)?;
            self.iterations += 1;
            if self.iterations > max_iterations {
                return Err(LpError::IterationLimit(max_iterations));
            }
        }
    }
}
