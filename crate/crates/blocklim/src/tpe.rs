//! Total-potential-energy minimization: the displaced equilibrium
//! configuration of the (possibly reinforced) structure under dead load, a
//! fixed live multiplier λ_a and prescribed settlements.
//!
//! Each outer iteration minimizes the linearized energy
//! `Π(U) = −(ΔN β*)ᵀX* + Uᵀc·R_lim − Uᵀ(F_dead + λ_a F_live)` subject to
//! `B U − δ − N β + ΔN β* = 0` and `β ≥ 0`, with `(X*, β*)` from the previous
//! iteration. The minimizing LP is bounded exactly when λ_a stays below the
//! collapse multiplier, so an unbounded direction is intercepted and reported
//! as instability instead of being iterated on.

use crate::assemble::SystemMatrices;
use crate::kla::{classify_kinematics, validate_distortions, Distortion, DistortionError, Mechanism};
use crate::lp::{self, LpError, LpProblem, LpStatus, LpTolerances, Sense};
use crate::model::End;
use crate::sla::{run_sla2, AnalysisError, LimitStatus, SlaOptions};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TpeError {
    /// λ_a is not strictly below the collapse multiplier of this configuration.
    #[error("assigned multiplier {lambda_a} is not below the collapse multiplier {lambda_collapse}")]
    AboveCollapse { lambda_a: f64, lambda_collapse: f64 },
    /// A mechanism with unbounded negative work exists: the configuration is
    /// unstable at λ_a (equivalent to `AboveCollapse` diagnostics).
    #[error("energy is unbounded below: unstable configuration at multiplier {lambda_a}")]
    UnboundedEnergy { lambda_a: f64 },
    /// Prescribed distortions/settlements are incompatible with the contact
    /// kinematics.
    #[error("no kinematically admissible configuration for the prescribed settlements")]
    Incompatible,
    #[error("live multiplier {0} needs a nonzero live load")]
    NoLiveLoad(f64),
    #[error(transparent)]
    Distortion(#[from] DistortionError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Clone, Debug)]
pub struct TpeOptions {
    pub max_outer_iterations: usize,
    /// Relative convergence tolerance on the energy.
    pub energy_tol: f64,
    pub lp: LpTolerances,
    /// Skip the collapse-multiplier precheck (used when the caller has
    /// already established it).
    pub skip_collapse_check: bool,
}

impl Default for TpeOptions {
    fn default() -> Self {
        TpeOptions {
            max_outer_iterations: 100,
            energy_tol: 1e-8,
            lp: LpTolerances::default(),
            skip_collapse_check: false,
        }
    }
}

/// Displaced equilibrium configuration from the energy minimization.
#[derive(Clone, Debug)]
pub struct SettlementResult {
    /// Block displacements on free DOFs.
    pub u: DVector<f64>,
    /// Interface kinematic parameters, 5 per interface.
    pub beta: DVector<f64>,
    /// Converged energy value Π.
    pub energy: f64,
    /// Interface ends where rotation concentrates.
    pub hinges: Vec<(u32, End)>,
    /// Full kinematic classification (openings, slidings, hinges).
    pub mechanism: Mechanism,
    /// Reinforced ends that actually open (work at the yield limit).
    pub active_reinforcements: Vec<bool>,
    pub iterations: usize,
    pub converged: bool,
    /// Energy after each outer iteration.
    pub history: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Minimizes the total potential energy under admissible contact kinematics.
/// Settlements enter through the prescribed displacements of fixed blocks
/// and/or explicit interface distortions.
pub fn run_tpe(
    sys: &SystemMatrices,
    lambda_a: f64,
    distortions: &[Distortion],
    options: &TpeOptions,
) -> Result<SettlementResult, TpeError> {
    let pairs = validate_distortions(sys, distortions)?;
    let delta_eff = sys.delta_effective(&pairs);

    if lambda_a != 0.0 && sys.f_live.amax() == 0.0 {
        return Err(TpeError::NoLiveLoad(lambda_a));
    }
    if !options.skip_collapse_check && sys.f_live.amax() > 0.0 {
        let sla = run_sla2(sys, &SlaOptions::default())?;
        if sla.status != LimitStatus::NoCollapse && lambda_a >= sla.lambda {
            return Err(TpeError::AboveCollapse { lambda_a, lambda_collapse: sla.lambda });
        }
    }

    let n_if = sys.n_interfaces();
    let n_free = sys.n_free_dofs();
    let nx = 3 * n_if;
    let nbeta = 5 * n_if;
    let nvars = n_free + nbeta;

    let delta_n = &sys.n_mat - &sys.n_tilde;
    let associative = delta_n.amax() == 0.0;

    // Π gradient on U: c·R_lim − F_dead − λ_a F_live.
    let mut objective = DVector::zeros(nvars);
    for i in 0..n_free {
        objective[i] = sys.c_weighted[i] - sys.f_dead[i] - lambda_a * sys.f_live[i];
    }

    let mut a_eq = DMatrix::zeros(nx, nvars);
    for r in 0..nx {
        for c in 0..n_free {
            a_eq[(r, c)] = sys.b[(r, c)];
        }
        for c in 0..nbeta {
            a_eq[(r, n_free + c)] = -sys.n_mat[(r, c)];
        }
    }
    let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); nvars];
    for c in 0..nbeta {
        bounds[n_free + c] = (0.0, f64::INFINITY);
    }

    let mut x_star = DVector::zeros(nx);
    let mut beta_star = DVector::zeros(nbeta);
    let mut history: Vec<f64> = Vec::new();
    let mut last: Option<(f64, DVector<f64>, DVector<f64>)> = None;
    let mut converged = false;
    let mut iterations = 0;
    let mut warnings = Vec::new();

    for it in 1..=options.max_outer_iterations.max(1) {
        iterations = it;
        let constant = if it == 1 { 0.0 } else { -(&delta_n * &beta_star).dot(&x_star) };
        let rhs_shift =
            if it == 1 { delta_eff.clone() } else { &delta_eff - &delta_n * &beta_star };

        let problem = LpProblem {
            sense: Sense::Minimize,
            objective: objective.clone(),
            a_eq: a_eq.clone(),
            b_eq: rhs_shift,
            a_in: DMatrix::zeros(0, nvars),
            b_in: DVector::zeros(0),
            bounds: bounds.clone(),
        };
        let sol = lp::solve_with(&problem, &options.lp)?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Unbounded => return Err(TpeError::UnboundedEnergy { lambda_a }),
            LpStatus::Infeasible => return Err(TpeError::Incompatible),
            LpStatus::IterationLimit => {
                return Err(TpeError::Lp(LpError::Numerical(
                    "simplex iteration limit in energy loop".into(),
                )))
            }
        }

        let energy = constant + sol.objective_value;
        log::debug!("TPE outer iteration {it}: energy = {energy:.12e}");
        if let Some(&prev) = history.last() {
            if energy > prev + 1e-12 * (1.0 + prev.abs()) {
                warnings
                    .push(format!("energy increased at iteration {it}: {prev:.6e} -> {energy:.6e}"));
            }
        }
        history.push(energy);

        let u = DVector::from_fn(n_free, |i, _| sol.x[i]);
        let beta = DVector::from_fn(nbeta, |i, _| sol.x[n_free + i]);
        let x_new = DVector::from_fn(nx, |i, _| -sol.dual_eq[i]);

        if associative {
            last = Some((energy, u, beta));
            converged = true;
            break;
        }
        if let Some((prev_energy, ..)) = &last {
            if (energy - prev_energy).abs() <= options.energy_tol * energy.abs().max(1.0) {
                last = Some((energy, u, beta));
                converged = true;
                break;
            }
        }
        x_star = x_new;
        beta_star = beta.clone();
        last = Some((energy, u, beta));
    }

    let (energy, u, beta) = last.expect("at least one iteration");
    if !converged {
        warnings.push(format!(
            "energy loop not converged after {iterations} iterations; last iterate reported"
        ));
    }

    let mechanism = classify_kinematics(&u, &beta, sys);

    // Active set of the reinforcements: the energy assumed every tie at
    // yield; ties whose end stays closed contribute zero work, ties whose end
    // opens are genuinely at the limit. A reinforced end must never report a
    // negative opening (β ≥ 0 forbids it up to roundoff).
    let tol_open = 1e-8 * u.amax().max(1e-6);
    let mut active_reinforcements = Vec::with_capacity(sys.n_reinforcements());
    for slot in &sys.reinforcement_slots {
        let opening = mechanism
            .openings
            .iter()
            .find(|o| {
                sys.interface_index(o.interface_id) == Some(slot.interface_index)
                    && o.end == slot.end
            })
            .map_or(0.0, |o| o.opening);
        if opening < -tol_open {
            warnings.push(format!(
                "reinforced end {:?} of interface {} reports negative opening {opening:.3e}",
                slot.end, sys.frames[slot.interface_index].id
            ));
        }
        active_reinforcements.push(opening > tol_open);
    }

    let hinges = mechanism.hinges.clone();
    Ok(SettlementResult {
        u,
        beta,
        energy,
        hinges,
        mechanism,
        active_reinforcements,
        iterations,
        converged,
        history,
        warnings,
    })
}
