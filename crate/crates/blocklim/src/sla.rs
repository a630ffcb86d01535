//! Static limit analysis: collapse multiplier maximization over equilibrium
//! states.
//!
//! Two formulations are provided. `SLA1` keeps the reinforcement forces R as
//! explicit unknowns bounded by their yield limits and can penalize them in
//! the objective (weight `alpha`), which makes it the formulation of choice
//! for force reporting and reinforcement design. `SLA2` folds the
//! reinforcements into the interface admissibility domain by relaxing the
//! rotation rows by `R̂` and maximizes the bare multiplier; reinforcement
//! forces are reconstructed from the interface force couple afterwards.
//!
//! Non-associative friction (μ̃ < μ) makes the admissibility cone depend on
//! the unknown normal forces. Both entry points run the same outer loop: the
//! first iteration solves the associative problem, later iterations tighten
//! the friction rows with `ΔNᵀX*` evaluated at the previous iterate until λ
//! and X settle.

use crate::assemble::SystemMatrices;
use crate::lp::{self, LpError, LpProblem, LpSolution, LpStatus, LpTolerances, Sense};
use crate::model::{End, ModelError};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    /// No equilibrium state exists even at λ = 0: the model is inconsistent.
    #[error("no equilibrium state exists (infeasible at any multiplier)")]
    Infeasible,
    #[error("live load vector is identically zero")]
    NoLiveLoad,
    #[error(transparent)]
    Distortion(#[from] crate::kla::DistortionError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which constraint set produced a [`LimitResult`]; determines how residuals
/// are evaluated (`Sla2` forces carry the folded reinforcement contribution,
/// `Kla` forces equilibrate with all reinforcements at their limit).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Formulation {
    Sla1,
    Sla2,
    Kla,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitStatus {
    /// Outer loop converged; λ is a fixed point of the linearization.
    Converged,
    /// Iteration budget exhausted; the last iterate is reported.
    NotConverged,
    /// The live load admits no collapse (the multiplier is unbounded).
    NoCollapse,
}

#[derive(Clone, Debug)]
pub struct SlaOptions {
    /// Reinforcement-force weight α ≥ 0 in the SLA1 objective.
    pub alpha: f64,
    pub max_outer_iterations: usize,
    /// Relative convergence tolerance on λ.
    pub lambda_tol: f64,
    /// Relative convergence tolerance on the ∞-norm change of X.
    pub x_tol: f64,
    pub lp: LpTolerances,
}

impl Default for SlaOptions {
    fn default() -> Self {
        SlaOptions {
            alpha: 0.0,
            max_outer_iterations: 100,
            lambda_tol: 1e-6,
            x_tol: 1e-6,
            lp: LpTolerances::default(),
        }
    }
}

/// Solution of a limit analysis run: multiplier, statics and the dual
/// kinematics.
#[derive(Clone, Debug)]
pub struct LimitResult {
    pub formulation: Formulation,
    pub status: LimitStatus,
    /// Collapse multiplier; `f64::INFINITY` when `status == NoCollapse`.
    pub lambda: f64,
    /// Interface forces (T, N, M) per interface, local frame, length 3·N_Im.
    pub x: DVector<f64>,
    /// Support reactions on the eliminated fixed-block DOFs, length 3·N_fix.
    pub v: DVector<f64>,
    /// Reinforcement forces (aggregated over layers), model order.
    pub r: Vec<f64>,
    /// Mechanism rates on free DOFs, normalized to unit live-load work.
    pub u: DVector<f64>,
    /// Interface kinematic parameters (s, Δu⁺, Δu⁻, Θ⁺, Θ⁻) per interface.
    pub beta: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// λ value after each outer iteration.
    pub history: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Residuals of the optimality system at a returned solution.
#[derive(Clone, Copy, Debug)]
pub struct ResidualReport {
    /// ‖equilibrium‖∞ over free DOFs.
    pub equilibrium: f64,
    /// max(0, admissibility rows) with the formulation's own relaxation.
    pub admissibility: f64,
    /// |βᵀ(NᵀX − R̂)| (R̂ only participates for SLA2).
    pub complementarity: f64,
    /// |Uᵀ F_live − 1|.
    pub normalization: f64,
}

impl LimitResult {
    /// Evaluate equilibrium/admissibility/complementarity residuals against
    /// the true (non-linearized) cone.
    pub fn residuals(&self, sys: &SystemMatrices) -> ResidualReport {
        let bt_x = sys.b.transpose() * &self.x;
        let load = &sys.f_dead + &sys.f_live * self.lambda;
        let equilibrium = match self.formulation {
            Formulation::Sla1 => {
                let mut lhs = bt_x;
                for (ri, &force) in self.r.iter().enumerate() {
                    for col in 0..sys.n_free_dofs() {
                        lhs[col] += force * sys.c[(ri, col)];
                    }
                }
                (lhs - load).amax()
            }
            Formulation::Sla2 => (bt_x - load).amax(),
            Formulation::Kla => (bt_x + &sys.c_weighted - load).amax(),
        };
        let rows = sys.n_mat.transpose() * &self.x;
        let relax = matches!(self.formulation, Formulation::Sla2);
        let mut admissibility: f64 = 0.0;
        let mut complementarity = 0.0;
        for q in 0..rows.len() {
            let slack = rows[q] - if relax { sys.r_hat[q] } else { 0.0 };
            admissibility = admissibility.max(slack);
            complementarity += self.beta[q] * slack;
        }
        let normalization = (self.u.dot(&sys.f_live) - 1.0).abs();
        ResidualReport {
            equilibrium,
            admissibility,
            complementarity: complementarity.abs(),
            normalization,
        }
    }
}

/// Maximizes `λ − α Σ R/(N_layers·R_y)` over equilibrium states with explicit
/// reinforcement forces `0 ≤ R ≤ layers·R_y`.
pub fn run_sla1(sys: &SystemMatrices, options: &SlaOptions) -> Result<LimitResult, AnalysisError> {
    run_sla(sys, options, Formulation::Sla1)
}

/// Maximizes λ with reinforcements folded into the admissibility domain
/// (`NᵀX − R̂ ≤ 0`); reinforcement forces are reconstructed a posteriori.
pub fn run_sla2(sys: &SystemMatrices, options: &SlaOptions) -> Result<LimitResult, AnalysisError> {
    run_sla(sys, options, Formulation::Sla2)
}

fn run_sla(
    sys: &SystemMatrices,
    options: &SlaOptions,
    form: Formulation,
) -> Result<LimitResult, AnalysisError> {
    if sys.f_live.amax() == 0.0 {
        return Err(AnalysisError::NoLiveLoad);
    }
    let n_if = sys.n_interfaces();
    let n_free = sys.n_free_dofs();
    let n_r = if form == Formulation::Sla1 { sys.n_reinforcements() } else { 0 };
    let nx = 3 * n_if;
    let nvars = nx + 1 + n_r;
    let col_lambda = nx;

    // Objective: max λ − α Σ R_i/(N_layers · R_y,i). An aggregated entry
    // carries `layers` identical reinforcements, so normalizing the entry
    // force by the per-layer R_y and dividing by the total layer count
    // reproduces the per-layer penalty.
    let mut objective = DVector::zeros(nvars);
    objective[col_lambda] = 1.0;
    if form == Formulation::Sla1 && options.alpha > 0.0 && sys.n_reinforcements() > 0 {
        let total_layers: f64 = sys.reinforcement_slots.iter().map(|s| s.layers as f64).sum();
        for (ri, slot) in sys.reinforcement_slots.iter().enumerate() {
            objective[nx + 1 + ri] = -options.alpha / (total_layers * slot.r_y);
        }
    }

    // Equality rows: BᵀX (+ CᵀR) − λ F_live = F_dead.
    let mut a_eq = DMatrix::zeros(n_free, nvars);
    for row in 0..n_free {
        for q in 0..nx {
            a_eq[(row, q)] = sys.b[(q, row)];
        }
        a_eq[(row, col_lambda)] = -sys.f_live[row];
        for ri in 0..n_r {
            a_eq[(row, nx + 1 + ri)] = sys.c[(ri, row)];
        }
    }
    let b_eq = sys.f_dead.clone();

    let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); nvars];
    for ri in 0..n_r {
        bounds[nx + 1 + ri] = (0.0, sys.reinforcement_limits[ri]);
    }

    let relax =
        if form == Formulation::Sla2 { sys.r_hat.clone() } else { DVector::zeros(5 * n_if) };

    let delta_n = &sys.n_mat - &sys.n_tilde;
    let associative = delta_n.amax() == 0.0;

    let mut x_star: DVector<f64> = DVector::zeros(nx);
    let mut history: Vec<f64> = Vec::new();
    let mut last: Option<(f64, DVector<f64>, LpSolution)> = None;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=options.max_outer_iterations.max(1) {
        iterations = it;
        // Iteration 1 is the associative problem (Ñ := N); afterwards the
        // friction rows are Ñᵀ X + ΔNᵀ X* ≤ R̂.
        let flow = if it == 1 { &sys.n_mat } else { &sys.n_tilde };
        let mut a_in = DMatrix::zeros(5 * n_if, nvars);
        for q in 0..5 * n_if {
            for p in 0..nx {
                a_in[(q, p)] = flow[(p, q)];
            }
        }
        let mut b_in = relax.clone();
        if it > 1 {
            b_in -= delta_n.transpose() * &x_star;
        }

        let problem = LpProblem {
            sense: Sense::Maximize,
            objective: objective.clone(),
            a_eq: a_eq.clone(),
            b_eq: b_eq.clone(),
            a_in,
            b_in,
            bounds: bounds.clone(),
        };
        let sol = lp::solve_with(&problem, &options.lp)?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(AnalysisError::Infeasible),
            LpStatus::Unbounded => return Ok(no_collapse_result(sys, form, history, it)),
            LpStatus::IterationLimit => {
                return Err(AnalysisError::Lp(LpError::Numerical(
                    "simplex iteration limit in outer loop".into(),
                )))
            }
        }
        let lambda = sol.x[col_lambda];
        let x_new = DVector::from_fn(nx, |i, _| sol.x[i]);
        history.push(lambda);
        log::debug!("{form:?} outer iteration {it}: lambda = {lambda:.9}");

        if associative {
            last = Some((lambda, x_new, sol));
            converged = true;
            break;
        }
        if let Some((prev_lambda, prev_x, _)) = &last {
            let dl = (lambda - prev_lambda).abs();
            let dx = (&x_new - prev_x).amax();
            if dl <= options.lambda_tol * lambda.abs().max(1.0)
                && dx <= options.x_tol * x_new.amax().max(1.0)
            {
                last = Some((lambda, x_new.clone(), sol));
                converged = true;
                break;
            }
        }
        x_star = x_new.clone();
        last = Some((lambda, x_new, sol));
    }

    let (lambda, x, sol) = last.expect("at least one iteration");
    let mut warnings = Vec::new();
    if !converged {
        warnings.push(format!(
            "outer loop not converged after {iterations} iterations; last iterate reported"
        ));
    }

    // Kinematics from the duals of the last LP: the λ column fixes the
    // normalization dual_eq·F_live = −1, so U = −dual_eq has unit live work,
    // and the admissibility-row duals are the contact parameters β ≥ 0.
    let u = -sol.dual_eq.clone();
    let beta = sol.dual_in.clone();

    let r = match form {
        Formulation::Sla1 => (0..sys.n_reinforcements()).map(|ri| sol.x[nx + 1 + ri]).collect(),
        Formulation::Sla2 => reconstruct_reinforcement_forces(sys, &x, &mut warnings),
        Formulation::Kla => unreachable!(),
    };

    let v = reactions(sys, form, &x, &r, lambda);

    Ok(LimitResult {
        formulation: form,
        status: if converged { LimitStatus::Converged } else { LimitStatus::NotConverged },
        lambda,
        x,
        v,
        r,
        u,
        beta,
        iterations,
        converged,
        history,
        warnings,
    })
}

/// Support reactions on the eliminated fixed-block DOFs, reported as the
/// external force the constraint applies to the block:
/// `V = BᵀX + CᵀR − F_dead − λ F_live` restricted to fixed columns (so a
/// block resting under gravity shows an upward, positive vertical reaction).
pub(crate) fn reactions(
    sys: &SystemMatrices,
    form: Formulation,
    x: &DVector<f64>,
    r: &[f64],
    lambda: f64,
) -> DVector<f64> {
    let n_fix = 3 * sys.fixed_block_ids.len();
    let mut v = sys.b_fixed.transpose() * x - &sys.f_dead_fixed - &sys.f_live_fixed * lambda;
    let forces: Option<Vec<f64>> = match form {
        Formulation::Sla1 => Some(r.to_vec()),
        Formulation::Kla => Some(sys.reinforcement_limits.clone()),
        Formulation::Sla2 => None, // folded into X already
    };
    if let Some(forces) = forces {
        for (ri, &force) in forces.iter().enumerate() {
            for col in 0..n_fix {
                v[col] += force * sys.c_fixed[(ri, col)];
            }
        }
    }
    v
}

/// SLA2 a-posteriori reconstruction: the folded interface couple (N, M)
/// yields the two end forces f₁ = (ρN − M)/(2ρ) and f₂ = (ρN + M)/(2ρ); a
/// reinforced end carries the tensile part, clipped to its limit. With both
/// ends reinforced and an interior couple the split is not unique; the
/// minimal-norm choice is reported and flagged.
fn reconstruct_reinforcement_forces(
    sys: &SystemMatrices,
    x: &DVector<f64>,
    warnings: &mut Vec<String>,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(sys.n_reinforcements());
    for (ri, slot) in sys.reinforcement_slots.iter().enumerate() {
        let idx = slot.interface_index;
        let rho = sys.frames[idx].rho;
        let n_force = x[3 * idx + 1];
        let m_force = x[3 * idx + 2];
        let end_force = match slot.end {
            End::End1 => (rho * n_force - m_force) / (2.0 * rho),
            End::End2 => (rho * n_force + m_force) / (2.0 * rho),
        };
        let limit = slot.limit();
        let r = end_force.clamp(0.0, limit);
        let both_reinforced = sys
            .reinforcement_slots
            .iter()
            .any(|s| s.interface_index == idx && s.end != slot.end);
        if both_reinforced && r > 0.0 && r < limit {
            warnings.push(format!(
                "reinforcement {ri}: both ends of interface {} reinforced with interior couple; \
                 minimal-norm force reconstruction",
                sys.frames[idx].id
            ));
        }
        out.push(r);
    }
    out
}

fn no_collapse_result(
    sys: &SystemMatrices,
    form: Formulation,
    history: Vec<f64>,
    iterations: usize,
) -> LimitResult {
    LimitResult {
        formulation: form,
        status: LimitStatus::NoCollapse,
        lambda: f64::INFINITY,
        x: DVector::zeros(3 * sys.n_interfaces()),
        v: DVector::zeros(3 * sys.fixed_block_ids.len()),
        r: vec![0.0; sys.n_reinforcements()],
        u: DVector::zeros(sys.n_free_dofs()),
        beta: DVector::zeros(5 * sys.n_interfaces()),
        iterations,
        converged: true,
        history,
        warnings: vec!["live load admits no collapse mechanism".into()],
    }
}
