//! Kinematic limit analysis: upper-bound mechanism computation, optionally
//! with prescribed interface distortions that simulate support settlements.
//!
//! The iterative problem minimizes the work functional
//! `δᵀX* − β*ᵀ ΔNᵀ X* + Uᵀ(c·R_lim − F_dead)` over mechanisms satisfying
//! `B U − δ − N β + ΔN β* = 0`, `Uᵀ F_live = 1`, `β ≥ 0`, where `(X*, β*)`
//! come from the previous iteration and `X*` is recovered as the Lagrange
//! multiplier of the compatibility rows. Iteration 1 starts from
//! `X* = 0, β* = 0`, which is the associative problem. At a fixed point the
//! objective value is the collapse multiplier.
//!
//! Prescribed fixed-block displacements enter through the eliminated-DOF
//! shift `δ_eff = δ − B_fixed·u`; interface forces recovered from the duals
//! remain statically admissible, so λ is insensitive to small settlements.

use crate::assemble::SystemMatrices;
use crate::lp::{self, LpProblem, LpStatus, Sense};
use crate::model::End;
use crate::sla::{AnalysisError, Formulation, LimitResult, LimitStatus, SlaOptions};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Prescribed inelastic relative displacement at an interface
/// (Volterra distortion): (δ_t, δ_n, δ_Θ).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Distortion {
    pub interface_id: u32,
    pub delta: [f64; 3],
}

#[derive(Debug, Error)]
pub enum DistortionError {
    #[error("distortion references missing interface {0}")]
    UnknownInterface(u32),
    #[error("distortion opens end {end:?} of interface {interface} which carries a reinforcement")]
    ReinforcedEnd { interface: u32, end: End },
    #[error("distortion on interface {0} is not finite")]
    NonFinite(u32),
}

/// Normal opening at one interface end.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EndOpening {
    pub interface_id: u32,
    pub end: End,
    pub opening: f64,
}

/// Kinematically admissible rigid-block motion extracted from a limit or
/// settlement analysis.
#[derive(Clone, Debug)]
pub struct Mechanism {
    /// Block motion rates on free DOFs.
    pub u: DVector<f64>,
    /// Interface kinematic parameters, 5 per interface.
    pub beta: DVector<f64>,
    /// Per-end normal openings (all ends, including zeros).
    pub openings: Vec<EndOpening>,
    /// Accumulated sliding Δu⁺ + Δu⁻ per interface.
    pub slidings: Vec<(u32, f64)>,
    /// Interface ends where relative rotation concentrates (the pivot edge):
    /// Θ⁺ pivots at end 1, Θ⁻ pivots at end 2.
    pub hinges: Vec<(u32, End)>,
}

/// Validates distortions against the system: interfaces must exist and a
/// distortion may not open an end that carries a reinforcement.
pub fn validate_distortions(
    sys: &SystemMatrices,
    distortions: &[Distortion],
) -> Result<Vec<(u32, [f64; 3])>, DistortionError> {
    let mut out = Vec::with_capacity(distortions.len());
    for d in distortions {
        if d.delta.iter().any(|v| !v.is_finite()) {
            return Err(DistortionError::NonFinite(d.interface_id));
        }
        let idx = sys
            .interface_index(d.interface_id)
            .ok_or(DistortionError::UnknownInterface(d.interface_id))?;
        let rho = sys.frames[idx].rho;
        // Normal gap contributed by the distortion at the two extremities.
        let gap = [d.delta[1] - rho * d.delta[2], d.delta[1] + rho * d.delta[2]];
        for (slot, end) in [(0usize, End::End1), (1usize, End::End2)] {
            let reinforced = sys
                .reinforcement_slots
                .iter()
                .any(|s| s.interface_index == idx && s.end == end);
            if reinforced && gap[slot] != 0.0 {
                return Err(DistortionError::ReinforcedEnd { interface: d.interface_id, end });
            }
        }
        out.push((d.interface_id, d.delta));
    }
    Ok(out)
}

/// Runs the kinematic limit analysis. Returns the limit state (with interface
/// forces recovered from the compatibility duals) and the collapse mechanism.
pub fn run_kla(
    sys: &SystemMatrices,
    distortions: &[Distortion],
    options: &SlaOptions,
) -> Result<(LimitResult, Mechanism), AnalysisError> {
    if sys.f_live.amax() == 0.0 {
        return Err(AnalysisError::NoLiveLoad);
    }
    let pairs = validate_distortions(sys, distortions)?;
    let delta_eff = sys.delta_effective(&pairs);

    let n_if = sys.n_interfaces();
    let n_free = sys.n_free_dofs();
    let nx = 3 * n_if;
    let nbeta = 5 * n_if;
    let nvars = n_free + nbeta;

    let delta_n = &sys.n_mat - &sys.n_tilde;
    let associative = delta_n.amax() == 0.0;
    let pure_mechanism = associative && delta_eff.amax() == 0.0;

    // Objective: Uᵀ(c·R_lim − F_dead); β enters only through constraints.
    let mut objective = DVector::zeros(nvars);
    for i in 0..n_free {
        objective[i] = sys.c_weighted[i] - sys.f_dead[i];
    }

    // Constraint matrix: [B, −N; F_liveᵀ, 0].
    let mut a_eq = DMatrix::zeros(nx + 1, nvars);
    for r in 0..nx {
        for c in 0..n_free {
            a_eq[(r, c)] = sys.b[(r, c)];
        }
        for c in 0..nbeta {
            a_eq[(r, n_free + c)] = -sys.n_mat[(r, c)];
        }
    }
    for c in 0..n_free {
        a_eq[(nx, c)] = sys.f_live[c];
    }

    let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); nvars];
    for c in 0..nbeta {
        bounds[n_free + c] = (0.0, f64::INFINITY);
    }

    let mut x_star = DVector::zeros(nx);
    let mut beta_star = DVector::zeros(nbeta);
    let mut history: Vec<f64> = Vec::new();
    let mut last: Option<(f64, DVector<f64>, DVector<f64>, DVector<f64>)> = None;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=options.max_outer_iterations.max(1) {
        iterations = it;
        let constant = if it == 1 {
            0.0
        } else {
            delta_eff.dot(&x_star) - beta_star.dot(&(delta_n.transpose() * &x_star))
        };
        let rhs_shift =
            if it == 1 { delta_eff.clone() } else { &delta_eff - &delta_n * &beta_star };
        let mut b_eq = DVector::zeros(nx + 1);
        for r in 0..nx {
            b_eq[r] = rhs_shift[r];
        }
        b_eq[nx] = 1.0;

        let problem = LpProblem {
            sense: Sense::Minimize,
            objective: objective.clone(),
            a_eq: a_eq.clone(),
            b_eq,
            a_in: DMatrix::zeros(0, nvars),
            b_in: DVector::zeros(0),
            bounds: bounds.clone(),
        };
        let sol = lp::solve_with(&problem, &options.lp)?;
        match sol.status {
            LpStatus::Optimal => {}
            // The normalization is unreachable: the live load performs no
            // positive work in any admissible mechanism.
            LpStatus::Infeasible => {
                return Ok((no_collapse(sys, it, history), empty_mechanism(sys)))
            }
            // A mechanism with unbounded negative work: no equilibrium state
            // exists under the dead load alone.
            LpStatus::Unbounded => return Err(AnalysisError::Infeasible),
            LpStatus::IterationLimit => {
                return Err(AnalysisError::Lp(crate::lp::LpError::Numerical(
                    "simplex iteration limit in kinematic loop".into(),
                )))
            }
        }

        let lambda = constant + sol.objective_value;
        history.push(lambda);
        log::debug!("KLA outer iteration {it}: lambda = {lambda:.9}");

        let u = DVector::from_fn(n_free, |i, _| sol.x[i]);
        let beta = DVector::from_fn(nbeta, |i, _| sol.x[n_free + i]);
        // Interface forces are the compatibility multipliers; with our dual
        // convention the admissible cone requires the sign flip.
        let x_new = DVector::from_fn(nx, |i, _| -sol.dual_eq[i]);

        if pure_mechanism {
            last = Some((lambda, u, beta, x_new));
            converged = true;
            break;
        }
        if let Some((prev_lambda, ..)) = &last {
            if (lambda - prev_lambda).abs() <= options.lambda_tol * lambda.abs().max(1.0) {
                last = Some((lambda, u, beta, x_new));
                converged = true;
                break;
            }
        }
        x_star = x_new.clone();
        beta_star = beta.clone();
        last = Some((lambda, u, beta, x_new));
    }

    let (lambda, u, beta, x) = last.expect("at least one iteration");
    let mut warnings = Vec::new();
    if !converged {
        warnings.push(format!(
            "kinematic loop not converged after {iterations} iterations; last iterate reported"
        ));
    }

    let r = sys.reinforcement_limits.clone();
    let v = crate::sla::reactions(sys, Formulation::Kla, &x, &r, lambda);
    let result = LimitResult {
        formulation: Formulation::Kla,
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
    };
    let mechanism = extract_mechanism(&result, sys);
    Ok((result, mechanism))
}

/// Classifies the interface kinematics of a limit state into openings,
/// slidings and hinges. The kinematic tolerance scales with ‖U‖∞.
pub fn extract_mechanism(result: &LimitResult, sys: &SystemMatrices) -> Mechanism {
    classify_kinematics(&result.u, &result.beta, sys)
}

/// Shared classification of a (U, β) kinematic state.
pub(crate) fn classify_kinematics(
    u: &DVector<f64>,
    beta: &DVector<f64>,
    sys: &SystemMatrices,
) -> Mechanism {
    let tol_kin = 1e-8 * u.amax().max(1e-6);
    let mut openings = Vec::with_capacity(2 * sys.n_interfaces());
    let mut slidings = Vec::new();
    let mut hinges = Vec::new();
    for (idx, frame) in sys.frames.iter().enumerate() {
        let s = beta[5 * idx];
        let du_p = beta[5 * idx + 1];
        let du_m = beta[5 * idx + 2];
        let th_p = beta[5 * idx + 3];
        let th_m = beta[5 * idx + 4];
        let dilation = frame.mu_tilde * (du_p + du_m);
        // Gap profile of the contact parameters: Θ⁻ opens end 1, Θ⁺ opens
        // end 2, uniform opening s and dilation raise both.
        let gap1 = s + dilation + 2.0 * frame.rho * th_m;
        let gap2 = s + dilation + 2.0 * frame.rho * th_p;
        openings.push(EndOpening { interface_id: frame.id, end: End::End1, opening: gap1 });
        openings.push(EndOpening { interface_id: frame.id, end: End::End2, opening: gap2 });
        if du_p + du_m > tol_kin {
            slidings.push((frame.id, du_p + du_m));
        }
        // Hinge = the pivot edge of a concentrated rotation.
        if th_p > tol_kin {
            hinges.push((frame.id, End::End1));
        }
        if th_m > tol_kin {
            hinges.push((frame.id, End::End2));
        }
    }
    Mechanism { u: u.clone(), beta: beta.clone(), openings, slidings, hinges }
}

fn empty_mechanism(sys: &SystemMatrices) -> Mechanism {
    Mechanism {
        u: DVector::zeros(sys.n_free_dofs()),
        beta: DVector::zeros(5 * sys.n_interfaces()),
        openings: Vec::new(),
        slidings: Vec::new(),
        hinges: Vec::new(),
    }
}

fn no_collapse(sys: &SystemMatrices, iterations: usize, history: Vec<f64>) -> LimitResult {
    LimitResult {
        formulation: Formulation::Kla,
        status: LimitStatus::NoCollapse,
        lambda: f64::INFINITY,
        x: DVector::zeros(3 * sys.n_interfaces()),
        v: DVector::zeros(3 * sys.fixed_block_ids.len()),
        r: sys.reinforcement_limits.clone(),
        u: DVector::zeros(sys.n_free_dofs()),
        beta: DVector::zeros(5 * sys.n_interfaces()),
        iterations,
        converged: true,
        history,
        warnings: vec!["live load performs no positive work in any admissible mechanism".into()],
    }
}
