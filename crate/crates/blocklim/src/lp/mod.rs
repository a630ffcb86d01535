//! Backend-agnostic linear programming contract plus a dense reference solver.
//!
//! Problems are stated as
//!
//! ```text
//!   min / max   cᵀ x
//!   subject to  A_eq x  = b_eq
//!               A_in x ≤ b_in
//!               l ≤ x ≤ u        (entries may be ±∞)
//! ```
//!
//! Solutions carry the primal vector and the dual multipliers of both row
//! groups; the analyses in this crate recover mechanisms from those duals, so
//! dual recovery is part of the contract, not an optional extra.
//!
//! # Dual sign convention
//!
//! Duals are objective sensitivities: `dual_eq[i] = ∂obj/∂b_eq[i]` and
//! `dual_in[i] = ∂obj/∂b_in[i]`, in the problem's own sense. Hence for a
//! minimization `dual_in ≤ 0` (relaxing a ≤ row cannot increase the minimum)
//! and for a maximization `dual_in ≥ 0`. Stationarity reads
//! `c = A_eqᵀ dual_eq + A_inᵀ dual_in + z` with `z` the reduced costs, nonzero
//! only on variables sitting at a bound, and strong duality
//! `cᵀx = b_eqᵀ dual_eq + b_inᵀ dual_in + Σ_j z_j x_j`.
//!
//! The built-in [`DenseSimplex`] backend is a bounded-variable revised
//! simplex with an explicit dense basis inverse, two phases, Dantzig pricing
//! with a Bland's-rule fallback after stalls, and row scaling to unit ∞-norm.
//! It is deterministic: the same problem yields bit-identical iterates.

mod simplex;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// A dense linear program. `a_in x ≤ b_in`; equality rows are separate.
#[derive(Clone, Debug)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub a_in: DMatrix<f64>,
    pub b_in: DVector<f64>,
    /// Per-variable `(lower, upper)`; use `f64::NEG_INFINITY` / `f64::INFINITY`
    /// for unbounded sides.
    pub bounds: Vec<(f64, f64)>,
}

impl LpProblem {
    /// A problem with no constraints yet: all-free variables.
    pub fn new(sense: Sense, objective: DVector<f64>) -> Self {
        let n = objective.len();
        LpProblem {
            sense,
            objective,
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
            a_in: DMatrix::zeros(0, n),
            b_in: DVector::zeros(0),
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.a_eq.ncols() != n || self.a_in.ncols() != n || self.bounds.len() != n {
            return Err(LpError::BadProblem(format!(
                "inconsistent dimensions: n={} a_eq={}x{} a_in={}x{} bounds={}",
                n,
                self.a_eq.nrows(),
                self.a_eq.ncols(),
                self.a_in.nrows(),
                self.a_in.ncols(),
                self.bounds.len()
            )));
        }
        if self.a_eq.nrows() != self.b_eq.len() || self.a_in.nrows() != self.b_in.len() {
            return Err(LpError::BadProblem("row count does not match rhs length".into()));
        }
        let finite = |v: f64| v.is_finite();
        if !self.objective.iter().all(|&v| finite(v))
            || !self.a_eq.iter().all(|&v| finite(v))
            || !self.a_in.iter().all(|&v| finite(v))
            || !self.b_eq.iter().all(|&v| finite(v))
            || !self.b_in.iter().all(|&v| finite(v))
        {
            return Err(LpError::BadProblem("non-finite coefficient".into()));
        }
        for (j, &(l, u)) in self.bounds.iter().enumerate() {
            if l.is_nan() || u.is_nan() || l > u {
                return Err(LpError::BadProblem(format!("bad bounds for variable {j}: [{l}, {u}]")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: DVector<f64>,
    pub objective_value: f64,
    pub dual_eq: DVector<f64>,
    pub dual_in: DVector<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct LpTolerances {
    /// Primal feasibility on row-scaled data.
    pub feas: f64,
    /// Admissible duality gap at `Optimal`.
    pub gap: f64,
    /// 0 means an automatic limit from the problem size.
    pub max_iterations: usize,
}

impl Default for LpTolerances {
    fn default() -> Self {
        LpTolerances { feas: 1e-9, gap: 1e-8, max_iterations: 0 }
    }
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed problem: {0}")]
    BadProblem(String),
    /// Ill-conditioning detected (singular basis, failed residual check,
    /// duality-gap violation). Distinct from `Infeasible`.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Pluggable solver backend.
pub trait LpBackend {
    fn solve(&self, problem: &LpProblem, tol: &LpTolerances) -> Result<LpSolution, LpError>;
}

/// Reference dense revised-simplex backend.
#[derive(Clone, Copy, Debug, Default)]
pub struct DenseSimplex;

impl LpBackend for DenseSimplex {
    fn solve(&self, problem: &LpProblem, tol: &LpTolerances) -> Result<LpSolution, LpError> {
        problem.validate()?;
        simplex::solve(problem, tol)
    }
}

/// Solve with the built-in backend and default tolerances.
pub fn solve(problem: &LpProblem) -> Result<LpSolution, LpError> {
    DenseSimplex.solve(problem, &LpTolerances::default())
}

/// Solve with the built-in backend and explicit tolerances.
pub fn solve_with(problem: &LpProblem, tol: &LpTolerances) -> Result<LpSolution, LpError> {
    DenseSimplex.solve(problem, tol)
}

/// Dump a problem in CPLEX LP text format for cross-checking with external
/// tools.
pub fn write_lp_format(p: &LpProblem) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let head = match p.sense {
        Sense::Minimize => "Minimize",
        Sense::Maximize => "Maximize",
    };
    let term = |coef: f64, j: usize| format!("{} {} x{}", if coef < 0.0 { "-" } else { "+" }, coef.abs(), j);
    writeln!(s, "\\ generated by blocklim").unwrap();
    writeln!(s, "{head}").unwrap();
    let obj: Vec<String> = (0..p.num_vars()).map(|j| term(p.objective[j], j)).collect();
    writeln!(s, " obj: {}", obj.join(" ")).unwrap();
    writeln!(s, "Subject To").unwrap();
    for i in 0..p.a_eq.nrows() {
        let row: Vec<String> = (0..p.num_vars()).map(|j| term(p.a_eq[(i, j)], j)).collect();
        writeln!(s, " e{}: {} = {}", i, row.join(" "), p.b_eq[i]).unwrap();
    }
    for i in 0..p.a_in.nrows() {
        let row: Vec<String> = (0..p.num_vars()).map(|j| term(p.a_in[(i, j)], j)).collect();
        writeln!(s, " c{}: {} <= {}", i, row.join(" "), p.b_in[i]).unwrap();
    }
    writeln!(s, "Bounds").unwrap();
    for (j, &(l, u)) in p.bounds.iter().enumerate() {
        match (l.is_finite(), u.is_finite()) {
            (true, true) => writeln!(s, " {} <= x{} <= {}", l, j, u).unwrap(),
            (true, false) => writeln!(s, " x{} >= {}", j, l).unwrap(),
            (false, true) => writeln!(s, " -inf <= x{} <= {}", j, u).unwrap(),
            (false, false) => writeln!(s, " x{} free", j).unwrap(),
        }
    }
    writeln!(s, "End").unwrap();
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dmat(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn max_x_with_upper_bound() {
        // max x s.t. x <= 3, x >= 0
        let mut p = LpProblem::new(Sense::Maximize, DVector::from_vec(vec![1.0]));
        p.a_in = dmat(1, 1, &[1.0]);
        p.b_in = DVector::from_vec(vec![3.0]);
        p.bounds = vec![(0.0, f64::INFINITY)];
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_relative_eq!(s.x[0], 3.0, epsilon = 1e-10);
        assert_relative_eq!(s.objective_value, 3.0, epsilon = 1e-10);
        // Max sense: dual of an active <= row is >= 0, here dObj/db = 1.
        assert_relative_eq!(s.dual_in[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn unbounded_ray_detected() {
        let p = LpProblem {
            bounds: vec![(0.0, f64::INFINITY)],
            ..LpProblem::new(Sense::Maximize, DVector::from_vec(vec![1.0]))
        };
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn infeasible_detected() {
        // min 0 s.t. x <= -1, x >= 0
        let mut p = LpProblem::new(Sense::Minimize, DVector::from_vec(vec![0.0]));
        p.a_in = dmat(1, 1, &[1.0]);
        p.b_in = DVector::from_vec(vec![-1.0]);
        p.bounds = vec![(0.0, f64::INFINITY)];
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn textbook_two_vars() {
        // max x + 2y s.t. x + y <= 4, 2x + y >= 2 (as -2x - y <= -2), x >= 0, 0 <= y <= 3.
        let mut p = LpProblem::new(Sense::Maximize, DVector::from_vec(vec![1.0, 2.0]));
        p.a_in = dmat(2, 2, &[1.0, 1.0, -2.0, -1.0]);
        p.b_in = DVector::from_vec(vec![4.0, -2.0]);
        p.bounds = vec![(0.0, f64::INFINITY), (0.0, 3.0)];
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_relative_eq!(s.objective_value, 7.0, epsilon = 1e-9);
        assert_relative_eq!(s.x[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(s.x[1], 3.0, epsilon = 1e-9);
    }

    #[test]
    fn equality_duals_and_strong_duality() {
        // min x + y s.t. x + 2y = 4, x >= 0, y >= 0. Optimum (0, 2), cost 2.
        let mut p = LpProblem::new(Sense::Minimize, DVector::from_vec(vec![1.0, 1.0]));
        p.a_eq = dmat(1, 2, &[1.0, 2.0]);
        p.b_eq = DVector::from_vec(vec![4.0]);
        p.bounds = vec![(0.0, f64::INFINITY), (0.0, f64::INFINITY)];
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_relative_eq!(s.objective_value, 2.0, epsilon = 1e-9);
        // y basic: zero reduced cost fixes the dual at c_y / 2 = 0.5.
        assert_relative_eq!(s.dual_eq[0], 0.5, epsilon = 1e-9);
        // Strong duality: obj = b_eq * dual (x sits at its zero bound).
        assert_relative_eq!(s.objective_value, 4.0 * s.dual_eq[0], epsilon = 1e-8);
    }

    #[test]
    fn free_variable_makes_it_unbounded() {
        // min x + y s.t. x + 2y = 4 with x free: cost 4 - y is unbounded below.
        let mut p = LpProblem::new(Sense::Minimize, DVector::from_vec(vec![1.0, 1.0]));
        p.a_eq = dmat(1, 2, &[1.0, 2.0]);
        p.b_eq = DVector::from_vec(vec![4.0]);
        p.bounds = vec![(f64::NEG_INFINITY, f64::INFINITY), (0.0, f64::INFINITY)];
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn beale_cycling_example_terminates() {
        // Beale's classic cycling LP; Dantzig pricing cycles without
        // safeguards. The stall detector must hand over to Bland's rule.
        let mut p = LpProblem::new(
            Sense::Minimize,
            DVector::from_vec(vec![-0.75, 150.0, -0.02, 6.0]),
        );
        p.a_in = dmat(
            3,
            4,
            &[
                0.25, -60.0, -1.0 / 25.0, 9.0, //
                0.5, -90.0, -1.0 / 50.0, 3.0, //
                0.0, 0.0, 1.0, 0.0,
            ],
        );
        p.b_in = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        p.bounds = vec![(0.0, f64::INFINITY); 4];
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_relative_eq!(s.objective_value, -0.05, epsilon = 1e-9);
    }

    #[test]
    fn fixed_variable_is_respected() {
        // min -x - y with x fixed at 2, y <= 5.
        let mut p = LpProblem::new(Sense::Minimize, DVector::from_vec(vec![-1.0, -1.0]));
        p.bounds = vec![(2.0, 2.0), (0.0, 5.0)];
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_relative_eq!(s.x[0], 2.0);
        assert_relative_eq!(s.x[1], 5.0);
    }

    #[test]
    fn negative_lower_bounds() {
        // min x + y, -3 <= x <= -1, x + y = 0.
        let mut p = LpProblem::new(Sense::Minimize, DVector::from_vec(vec![1.0, 1.0]));
        p.a_eq = dmat(1, 2, &[1.0, 1.0]);
        p.b_eq = DVector::from_vec(vec![0.0]);
        p.bounds = vec![(-3.0, -1.0), (f64::NEG_INFINITY, f64::INFINITY)];
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_relative_eq!(s.objective_value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn lp_dump_mentions_all_sections() {
        let mut p = LpProblem::new(Sense::Maximize, DVector::from_vec(vec![1.0, -2.0]));
        p.a_in = dmat(1, 2, &[1.0, 1.0]);
        p.b_in = DVector::from_vec(vec![4.0]);
        let text = write_lp_format(&p);
        for needle in ["Maximize", "Subject To", "Bounds", "End", "x0", "x1"] {
            assert!(text.contains(needle), "missing {needle} in:\n{text}");
        }
    }

    #[test]
    fn dimension_mismatch_is_bad_problem() {
        let mut p = LpProblem::new(Sense::Minimize, DVector::from_vec(vec![1.0]));
        p.a_eq = dmat(1, 2, &[1.0, 2.0]);
        p.b_eq = DVector::from_vec(vec![0.0]);
        assert!(matches!(solve(&p), Err(LpError::BadProblem(_))));
    }
}
