//! Bounded-variable revised simplex with an explicit dense basis inverse.
//!
//! Two phases with artificial variables, Dantzig pricing falling back to
//! Bland's rule after a stall, deterministic tie-breaking, periodic
//! refactorization of the basis inverse with residual checks.

use super::{LpError, LpProblem, LpSolution, LpStatus, LpTolerances, Sense};
use nalgebra::{DMatrix, DVector};

const REFACTOR_EVERY: usize = 64;
const STALL_LIMIT: usize = 64;
const PIVOT_TOL: f64 = 1e-9;
const DRIVE_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable, held at zero.
    Free,
}

enum LoopExit {
    Optimal,
    Unbounded,
    IterLimit,
}

struct Tableau {
    m: usize,
    ncols: usize,
    n_struct: usize,
    a: DMatrix<f64>,
    b: DVector<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    binv: DMatrix<f64>,
    x: Vec<f64>,
    banned: Vec<bool>,
    bland: bool,
    pivots_since_refactor: usize,
    iterations: usize,
}

pub(super) fn solve(p: &LpProblem, tol: &LpTolerances) -> Result<LpSolution, LpError> {
    let n = p.num_vars();
    let m_eq = p.a_eq.nrows();
    let m_in = p.a_in.nrows();
    let m = m_eq + m_in;

    // Internal form is minimization.
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let c_min: Vec<f64> = p.objective.iter().map(|&v| sign * v).collect();

    if m == 0 {
        return solve_box_only(p, &c_min, sign);
    }

    // Row scaling to unit infinity-norm.
    let mut scale = vec![1.0f64; m];
    let mut a = DMatrix::zeros(m, n + m_in);
    let mut b = DVector::zeros(m);
    for i in 0..m_eq {
        let amax = (0..n).map(|j| p.a_eq[(i, j)].abs()).fold(0.0f64, f64::max);
        scale[i] = if amax > 0.0 { 1.0 / amax } else { 1.0 };
        for j in 0..n {
            a[(i, j)] = p.a_eq[(i, j)] * scale[i];
        }
        b[i] = p.b_eq[i] * scale[i];
    }
    for k in 0..m_in {
        let i = m_eq + k;
        let amax = (0..n).map(|j| p.a_in[(k, j)].abs()).fold(0.0f64, f64::max);
        scale[i] = if amax > 0.0 { 1.0 / amax } else { 1.0 };
        for j in 0..n {
            a[(i, j)] = p.a_in[(k, j)] * scale[i];
        }
        a[(i, n + k)] = 1.0; // slack
        b[i] = p.b_in[k] * scale[i];
    }

    let mut lower = vec![0.0f64; n + m_in];
    let mut upper = vec![f64::INFINITY; n + m_in];
    for j in 0..n {
        lower[j] = p.bounds[j].0;
        upper[j] = p.bounds[j].1;
    }

    // Nonbasic starting point: nearest finite bound, zero for free variables.
    let mut x = vec![0.0f64; n + m_in];
    let mut state = vec![VarState::Free; n + m_in];
    for j in 0..n {
        if lower[j].is_finite() {
            x[j] = lower[j];
            state[j] = VarState::AtLower;
        } else if upper[j].is_finite() {
            x[j] = upper[j];
            state[j] = VarState::AtUpper;
        }
    }

    // Row residuals with all structural variables at their starting values.
    let mut resid = b.clone();
    for j in 0..n {
        if x[j] != 0.0 {
            for i in 0..m {
                resid[i] -= a[(i, j)] * x[j];
            }
        }
    }

    // Initial basis: slacks where feasible, artificials elsewhere.
    let mut basis = Vec::with_capacity(m);
    let mut art_cols: Vec<usize> = Vec::new();
    let mut a_full = a;
    for i in 0..m {
        let is_in = i >= m_eq;
        if is_in && resid[i] >= 0.0 {
            let slack = n + (i - m_eq);
            x[slack] = resid[i];
            basis.push(slack);
        } else {
            let col = a_full.ncols();
            let coef = if resid[i] >= 0.0 { 1.0 } else { -1.0 };
            a_full = a_full.insert_column(col, 0.0);
            a_full[(i, col)] = coef;
            lower.push(0.0);
            upper.push(f64::INFINITY);
            x.push(resid[i] * coef);
            state.push(VarState::Free); // replaced right below
            if is_in {
                state[n + (i - m_eq)] = VarState::AtLower; // slack stays at 0
            }
            basis.push(col);
            art_cols.push(col);
        }
    }
    let ncols = a_full.ncols();
    for (row, &col) in basis.iter().enumerate() {
        state[col] = VarState::Basic(row);
    }

    let max_iter = if tol.max_iterations > 0 {
        tol.max_iterations
    } else {
        500 + 50 * (m + ncols)
    };

    let mut t = Tableau {
        m,
        ncols,
        n_struct: n,
        a: a_full,
        b,
        lower,
        upper,
        cost: vec![0.0; ncols],
        state,
        basis,
        binv: DMatrix::identity(m, m),
        x,
        banned: vec![false; ncols],
        bland: false,
        pivots_since_refactor: 0,
        iterations: 0,
    };
    t.refactor(tol)?;

    // Phase 1: minimize the sum of artificial variables.
    if !art_cols.is_empty() {
        for &j in &art_cols {
            t.cost[j] = 1.0;
        }
        match t.run(tol, max_iter)? {
            LoopExit::Optimal => {}
            LoopExit::Unbounded => {
                return Err(LpError::Numerical("phase-1 objective unbounded".into()))
            }
            LoopExit::IterLimit => {
                return Ok(t.extract(p, &scale, sign, LpStatus::IterationLimit, tol));
            }
        }
        let infeas: f64 = art_cols.iter().map(|&j| t.x[j]).sum();
        if infeas > tol.feas * 10.0 * (1.0 + t.b.amax()) {
            return Ok(t.extract(p, &scale, sign, LpStatus::Infeasible, tol));
        }
        t.drive_out_artificials(&art_cols);
        for &j in &art_cols {
            t.cost[j] = 0.0;
            t.banned[j] = true;
            // Pin any residual artificial (redundant row) at zero.
            t.lower[j] = 0.0;
            t.upper[j] = 0.0;
        }
        t.bland = false;
    }

    // Phase 2.
    for j in 0..n {
        t.cost[j] = c_min[j];
    }
    for j in n..t.ncols {
        if !art_cols.contains(&j) {
            t.cost[j] = 0.0;
        }
    }
    let status = match t.run(tol, max_iter)? {
        LoopExit::Optimal => LpStatus::Optimal,
        LoopExit::Unbounded => LpStatus::Unbounded,
        LoopExit::IterLimit => LpStatus::IterationLimit,
    };
    let sol = t.extract(p, &scale, sign, status, tol);
    if sol.status == LpStatus::Optimal {
        verify(p, &sol, tol)?;
    }
    Ok(sol)
}

/// Degenerate case without rows: optimize each variable over its box.
fn solve_box_only(p: &LpProblem, c_min: &[f64], sign: f64) -> Result<LpSolution, LpError> {
    let n = p.num_vars();
    let mut x = DVector::zeros(n);
    for j in 0..n {
        let (l, u) = p.bounds[j];
        let v = if c_min[j] > 0.0 {
            l
        } else if c_min[j] < 0.0 {
            u
        } else if l.is_finite() {
            l
        } else if u.is_finite() {
            u
        } else {
            0.0
        };
        if !v.is_finite() {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                x,
                objective_value: sign * f64::NEG_INFINITY,
                dual_eq: DVector::zeros(0),
                dual_in: DVector::zeros(0),
            });
        }
        x[j] = v;
    }
    let obj = p.objective.dot(&x);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective_value: obj,
        dual_eq: DVector::zeros(0),
        dual_in: DVector::zeros(0),
    })
}

impl Tableau {
    fn refactor(&mut self, tol: &LpTolerances) -> Result<(), LpError> {
        let mut bmat = DMatrix::zeros(self.m, self.m);
        for (r, &col) in self.basis.iter().enumerate() {
            bmat.set_column(r, &self.a.column(col));
        }
        self.binv = bmat
            .clone()
            .try_inverse()
            .ok_or_else(|| LpError::Numerical("singular basis".into()))?;
        // Recompute basic values from the nonbasic point.
        let mut rhs = self.b.clone();
        for j in 0..self.ncols {
            if !matches!(self.state[j], VarState::Basic(_)) && self.x[j] != 0.0 {
                for i in 0..self.m {
                    rhs[i] -= self.a[(i, j)] * self.x[j];
                }
            }
        }
        let xb = &self.binv * &rhs;
        let resid = (&bmat * &xb - &rhs).amax();
        if !resid.is_finite() || resid > tol.feas * 1e3 * (1.0 + rhs.amax()) {
            return Err(LpError::Numerical(format!(
                "basis refactorization residual {resid:.3e}"
            )));
        }
        for (r, &col) in self.basis.iter().enumerate() {
            self.x[col] = xb[r];
        }
        self.pivots_since_refactor = 0;
        Ok(())
    }

    fn objective(&self) -> f64 {
        (0..self.ncols).map(|j| self.cost[j] * self.x[j]).sum()
    }

    fn duals(&self) -> DVector<f64> {
        let mut cb = DVector::zeros(self.m);
        for (r, &col) in self.basis.iter().enumerate() {
            cb[r] = self.cost[col];
        }
        self.binv.transpose() * cb
    }

    fn run(&mut self, tol: &LpTolerances, max_iter: usize) -> Result<LoopExit, LpError> {
        let mut stall = 0usize;
        let mut last_obj = self.objective();
        loop {
            if self.iterations >= max_iter {
                return Ok(LoopExit::IterLimit);
            }
            self.iterations += 1;

            let y = self.duals();
            // Pricing: pick the entering variable and its direction.
            let mut entering: Option<(usize, f64, f64)> = None; // (col, dir, violation)
            for j in 0..self.ncols {
                if self.banned[j]
                    || matches!(self.state[j], VarState::Basic(_))
                    || self.lower[j] == self.upper[j]
                {
                    continue;
                }
                let mut d = self.cost[j];
                for i in 0..self.m {
                    d -= y[i] * self.a[(i, j)];
                }
                let (viol, dir) = match self.state[j] {
                    VarState::AtLower => (-d, 1.0),
                    VarState::AtUpper => (d, -1.0),
                    VarState::Free => {
                        if d < 0.0 {
                            (-d, 1.0)
                        } else {
                            (d, -1.0)
                        }
                    }
                    VarState::Basic(_) => unreachable!(),
                };
                if viol > tol.feas * 10.0 {
                    if self.bland {
                        entering = Some((j, dir, viol));
                        break;
                    }
                    match entering {
                        Some((_, _, best)) if best >= viol => {}
                        _ => entering = Some((j, dir, viol)),
                    }
                }
            }
            let Some((e, dir, _)) = entering else {
                return Ok(LoopExit::Optimal);
            };

            // Ratio test.
            let w = &self.binv * self.a.column(e);
            let own_span = self.upper[e] - self.lower[e]; // may be inf
            let mut t_best = own_span;
            let mut block_row: Option<usize> = None;
            for i in 0..self.m {
                let wb = dir * w[i];
                let k = self.basis[i];
                let ratio = if wb > PIVOT_TOL {
                    if self.lower[k].is_finite() {
                        (self.x[k] - self.lower[k]) / wb
                    } else {
                        continue;
                    }
                } else if wb < -PIVOT_TOL {
                    if self.upper[k].is_finite() {
                        (self.upper[k] - self.x[k]) / -wb
                    } else {
                        continue;
                    }
                } else {
                    continue;
                };
                let ratio = ratio.max(0.0);
                let replace = match block_row {
                    None => ratio < t_best,
                    Some(r) => {
                        ratio < t_best - 1e-12 * (1.0 + t_best.abs())
                            || (ratio <= t_best + 1e-12 * (1.0 + t_best.abs())
                                && if self.bland {
                                    self.basis[i] < self.basis[r]
                                } else {
                                    w[i].abs() > w[r].abs()
                                })
                    }
                };
                if replace {
                    t_best = ratio.min(t_best);
                    block_row = Some(i);
                }
            }

            match block_row {
                None => {
                    if own_span.is_finite() {
                        // Bound flip: the entering variable crosses its box.
                        let t = own_span;
                        for i in 0..self.m {
                            let k = self.basis[i];
                            self.x[k] -= t * dir * w[i];
                        }
                        self.x[e] += dir * t;
                        self.state[e] = match self.state[e] {
                            VarState::AtLower => VarState::AtUpper,
                            VarState::AtUpper => VarState::AtLower,
                            s => s,
                        };
                    } else {
                        return Ok(LoopExit::Unbounded);
                    }
                }
                Some(r) => {
                    let t = t_best.max(0.0);
                    if own_span.is_finite() && own_span < t {
                        // Own bound blocks first.
                        let t = own_span;
                        for i in 0..self.m {
                            let k = self.basis[i];
                            self.x[k] -= t * dir * w[i];
                        }
                        self.x[e] += dir * t;
                        self.state[e] = match self.state[e] {
                            VarState::AtLower => VarState::AtUpper,
                            VarState::AtUpper => VarState::AtLower,
                            s => s,
                        };
                    } else {
                        for i in 0..self.m {
                            let k = self.basis[i];
                            self.x[k] -= t * dir * w[i];
                        }
                        self.x[e] += dir * t;
                        let leaving = self.basis[r];
                        let wb = dir * w[r];
                        self.state[leaving] = if wb > 0.0 {
                            self.x[leaving] = self.lower[leaving];
                            VarState::AtLower
                        } else {
                            self.x[leaving] = self.upper[leaving];
                            VarState::AtUpper
                        };
                        self.basis[r] = e;
                        self.state[e] = VarState::Basic(r);
                        self.pivot_update(r, &w)?;
                        self.pivots_since_refactor += 1;
                        if self.pivots_since_refactor >= REFACTOR_EVERY {
                            self.refactor(tol)?;
                        }
                    }
                }
            }

            let obj = self.objective();
            if obj < last_obj - 1e-13 * (1.0 + last_obj.abs()) {
                stall = 0;
            } else {
                stall += 1;
                if stall >= STALL_LIMIT {
                    self.bland = true;
                }
            }
            last_obj = obj;
        }
    }

    /// Product-form update of the basis inverse after replacing the basic
    /// variable in `row` (pivot column already in the basis array).
    fn pivot_update(&mut self, row: usize, w: &DVector<f64>) -> Result<(), LpError> {
        let piv = w[row];
        if piv.abs() < PIVOT_TOL {
            return Err(LpError::Numerical(format!("pivot {piv:.3e} too small")));
        }
        let inv = 1.0 / piv;
        for c in 0..self.m {
            self.binv[(row, c)] *= inv;
        }
        for i in 0..self.m {
            if i == row {
                continue;
            }
            let f = w[i];
            if f != 0.0 {
                for c in 0..self.m {
                    self.binv[(i, c)] -= f * self.binv[(row, c)];
                }
            }
        }
        Ok(())
    }

    /// Pivot basic artificials out of the basis where a structural or slack
    /// column can replace them; rows that admit none are redundant and keep a
    /// zero-pinned artificial.
    fn drive_out_artificials(&mut self, art_cols: &[usize]) {
        for &aj in art_cols {
            let VarState::Basic(row) = self.state[aj] else { continue };
            let mut found = None;
            for j in 0..self.ncols {
                if art_cols.contains(&j) || matches!(self.state[j], VarState::Basic(_)) {
                    continue;
                }
                let mut wr = 0.0;
                for c in 0..self.m {
                    wr += self.binv[(row, c)] * self.a[(c, j)];
                }
                if wr.abs() > DRIVE_TOL {
                    found = Some(j);
                    break;
                }
            }
            if let Some(j) = found {
                let w = &self.binv * self.a.column(j);
                let old_val = self.x[j];
                self.state[aj] = VarState::AtLower;
                self.x[aj] = 0.0;
                self.basis[row] = j;
                self.state[j] = VarState::Basic(row);
                if self.pivot_update(row, &w).is_err() {
                    // Should not happen after the DRIVE_TOL check; restore.
                    self.basis[row] = aj;
                    self.state[aj] = VarState::Basic(row);
                    self.state[j] = VarState::AtLower;
                    self.x[j] = old_val;
                }
            }
        }
    }

    fn extract(
        &self,
        p: &LpProblem,
        scale: &[f64],
        sign: f64,
        status: LpStatus,
        _tol: &LpTolerances,
    ) -> LpSolution {
        let n = p.num_vars();
        let m_eq = p.a_eq.nrows();
        let m_in = p.a_in.nrows();
        let mut x = DVector::zeros(n);
        for j in 0..n {
            x[j] = self.x[j];
        }
        let y = self.duals();
        let mut dual_eq = DVector::zeros(m_eq);
        let mut dual_in = DVector::zeros(m_in);
        for i in 0..m_eq {
            dual_eq[i] = sign * y[i] * scale[i];
        }
        for k in 0..m_in {
            dual_in[k] = sign * y[m_eq + k] * scale[m_eq + k];
        }
        LpSolution {
            status,
            objective_value: p.objective.dot(&x),
            x,
            dual_eq,
            dual_in,
        }
    }
}

/// Post-solve verification at `Optimal`: primal feasibility, stationarity and
/// the duality gap, all on the original data.
fn verify(p: &LpProblem, sol: &LpSolution, tol: &LpTolerances) -> Result<(), LpError> {
    let n = p.num_vars();
    let feas = |row_norm: f64| tol.feas * 1e3 * (1.0 + row_norm);
    for i in 0..p.a_eq.nrows() {
        let mut r = -p.b_eq[i];
        let mut nrm = 0.0f64;
        for j in 0..n {
            r += p.a_eq[(i, j)] * sol.x[j];
            nrm = nrm.max(p.a_eq[(i, j)].abs() * (1.0 + sol.x[j].abs()));
        }
        if r.abs() > feas(nrm + p.b_eq[i].abs()) {
            return Err(LpError::Numerical(format!("equality row {i} residual {r:.3e}")));
        }
    }
    for i in 0..p.a_in.nrows() {
        let mut r = -p.b_in[i];
        let mut nrm = 0.0f64;
        for j in 0..n {
            r += p.a_in[(i, j)] * sol.x[j];
            nrm = nrm.max(p.a_in[(i, j)].abs() * (1.0 + sol.x[j].abs()));
        }
        if r > feas(nrm + p.b_in[i].abs()) {
            return Err(LpError::Numerical(format!("inequality row {i} violated by {r:.3e}")));
        }
    }
    // Strong duality: cᵀx = b_eqᵀy_eq + b_inᵀy_in + Σ z_j x_j.
    let mut dual_obj = p.b_eq.dot(&sol.dual_eq) + p.b_in.dot(&sol.dual_in);
    let mut magnitude = 1.0 + sol.objective_value.abs();
    for j in 0..n {
        let mut z = p.objective[j];
        for i in 0..p.a_eq.nrows() {
            z -= p.a_eq[(i, j)] * sol.dual_eq[i];
        }
        for i in 0..p.a_in.nrows() {
            z -= p.a_in[(i, j)] * sol.dual_in[i];
        }
        dual_obj += z * sol.x[j];
        magnitude = magnitude.max(z.abs() * sol.x[j].abs());
    }
    let gap = (sol.objective_value - dual_obj).abs();
    if gap > tol.gap * 1e2 * magnitude {
        return Err(LpError::Numerical(format!("duality gap {gap:.3e}")));
    }
    Ok(())
}
