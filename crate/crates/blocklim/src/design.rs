//! Weak-reinforcement design: a greedy loop that raises the collapse
//! multiplier to a target by adding one reinforcement layer at a time at the
//! interface end with the largest normal opening in the governing mechanism,
//! then validates that the reinforced structure still adapts to support
//! settlements.
//!
//! The loop runs the static analysis for capacity and forces, the kinematic
//! analysis for the mechanism that decides the next placement, and finally a
//! kinematic and an energy run per settlement scenario. Tension-only edge
//! reinforcements cannot restrain sliding, so a pure-sliding mechanism stops
//! the loop.

use crate::assemble::assemble_system;
use crate::kla::{run_kla, Distortion, Mechanism};
use crate::model::{End, EndTag, ModelError, Reinforcement, StructuralModel, Support};
use crate::sla::{run_sla1, run_sla2, AnalysisError, LimitStatus, SlaOptions};
use crate::tpe::{run_tpe, TpeError, TpeOptions};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which interface ends may receive reinforcement.
#[derive(Clone, Debug, PartialEq)]
pub enum Eligibility {
    All,
    /// Ends tagged `extrados` in the model.
    Extrados,
    /// Ends tagged `intrados` in the model.
    Intrados,
    /// An explicit list of ends.
    Ends(Vec<(u32, End)>),
}

impl Eligibility {
    fn allows(&self, model: &StructuralModel, interface_id: u32, end: End) -> bool {
        match self {
            Eligibility::All => true,
            Eligibility::Ends(list) => list.contains(&(interface_id, end)),
            Eligibility::Extrados | Eligibility::Intrados => {
                let want = if *self == Eligibility::Extrados {
                    EndTag::Extrados
                } else {
                    EndTag::Intrados
                };
                model
                    .interface(interface_id)
                    .and_then(|i| i.end_tags.as_ref().map(|t| t[end.index()] == Some(want)))
                    .unwrap_or(false)
            }
        }
    }
}

/// A support-settlement scenario used to validate the final design.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SettlementScenario {
    pub name: String,
    /// Prescribed displacements overriding the model supports.
    pub supports: Vec<Support>,
    /// Additional interface distortions.
    #[serde(default)]
    pub distortions: Vec<Distortion>,
}

/// Outcome of validating one settlement scenario on the final design.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SettlementCheck {
    pub scenario: String,
    /// Collapse multiplier with the settlement applied (kinematic run).
    pub kla_lambda: f64,
    pub tpe_converged: bool,
    pub hinge_count: usize,
    pub max_beta: f64,
}

/// One reinforcement placement in design order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Placement {
    pub interface_id: u32,
    pub end: End,
    /// Layer count at this end after the placement.
    pub cumulative_layers: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DesignResult {
    /// Placements in the order they were added.
    pub placements: Vec<Placement>,
    /// λ of the configuration with 0, 1, …, n placements.
    pub lambda_history: Vec<f64>,
    /// Reinforcement forces at the final configuration (SLA1, model order).
    pub final_r: Vec<f64>,
    /// Effective limits (layers × R_y) matching `final_r`.
    pub final_r_limits: Vec<f64>,
    pub settlement_checks: Vec<SettlementCheck>,
    pub target_met: bool,
    pub warnings: Vec<String>,
    /// The reinforced model produced by the loop.
    pub model: StructuralModel,
}

#[derive(Debug, Error)]
pub enum DesignError {
    /// The governing mechanism is pure sliding: normal-direction edge
    /// reinforcement cannot raise the capacity.
    #[error("no interface end opens in the governing mechanism")]
    NoOpening,
    #[error("target multiplier unreachable: {reason}")]
    TargetUnreachable { reason: String, result: Box<DesignResult> },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Tpe(#[from] TpeError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug)]
pub struct DesignOptions {
    /// Reinforcement weight for the SLA1 force-reporting runs; the stopping
    /// comparison against the target always uses the unpenalized multiplier.
    pub alpha: f64,
    pub sla: SlaOptions,
    pub tpe: TpeOptions,
}

impl Default for DesignOptions {
    fn default() -> Self {
        DesignOptions { alpha: 0.0, sla: SlaOptions::default(), tpe: TpeOptions::default() }
    }
}

/// Picks the eligible interface end with the largest normal opening in the
/// mechanism. Ties break to the lowest interface id, then `End1` before
/// `End2`. Already-reinforced ends stay eligible (layers stack).
pub fn next_reinforcement_location(
    mechanism: &Mechanism,
    model: &StructuralModel,
    eligibility: &Eligibility,
) -> Result<(u32, End), DesignError> {
    let tol = 1e-8 * mechanism.u.amax().max(1e-6);
    let mut best: Option<(u32, End, f64)> = None;
    for o in &mechanism.openings {
        if o.opening <= tol || !eligibility.allows(model, o.interface_id, o.end) {
            continue;
        }
        let better = match best {
            None => true,
            Some((id, end, val)) => {
                let tie = (o.opening - val).abs() <= 1e-9 * val.abs().max(tol);
                (o.opening > val && !tie)
                    || (tie && (o.interface_id, o.end) < (id, end))
            }
        };
        if better {
            best = Some((o.interface_id, o.end, o.opening));
        }
    }
    best.map(|(id, end, _)| (id, end)).ok_or(DesignError::NoOpening)
}

/// Runs the greedy design loop and the settlement validation.
#[allow(clippy::too_many_arguments)]
pub fn design_weak_reinforcement(
    model: &StructuralModel,
    target_lambda: f64,
    r_y: f64,
    eligibility: &Eligibility,
    max_reinforcements: usize,
    scenarios: &[SettlementScenario],
    options: &DesignOptions,
) -> Result<DesignResult, DesignError> {
    let mut current = model.clone();
    current.validate_and_normalize()?;

    let mut placements: Vec<Placement> = Vec::new();
    let mut lambda_history: Vec<f64> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();
    let mut unreachable_reason: Option<String> = None;

    let sla_stop = SlaOptions { alpha: 0.0, ..options.sla.clone() };
    let sla_forces = SlaOptions { alpha: options.alpha, ..options.sla.clone() };

    let mut final_r: Vec<f64> = Vec::new();
    let mut final_r_limits: Vec<f64> = Vec::new();

    loop {
        let sys = assemble_system(&current)?;
        // Capacity of the current configuration (unpenalized multiplier) and
        // reinforcement forces from the penalized static run.
        let stop_res = run_sla2(&sys, &sla_stop)?;
        let force_res = run_sla1(&sys, &sla_forces)?;
        if !stop_res.converged || !force_res.converged {
            warnings.push(format!(
                "static run not converged at {} placements",
                placements.len()
            ));
        }
        let lambda = stop_res.lambda;
        if let Some(&prev) = lambda_history.last() {
            if lambda < prev - 1e-6 * prev.abs().max(1.0) {
                warnings.push(format!(
                    "multiplier decreased after placement {}: {prev:.6} -> {lambda:.6}",
                    placements.len()
                ));
            }
        }
        lambda_history.push(lambda);
        final_r = force_res.r.clone();
        final_r_limits = sys.reinforcement_limits.clone();
        log::info!(
            "design: {} placements, lambda = {lambda:.6} (target {target_lambda})",
            placements.len()
        );

        if stop_res.status == LimitStatus::NoCollapse || lambda >= target_lambda {
            break;
        }
        if placements.len() >= max_reinforcements {
            unreachable_reason =
                Some(format!("{max_reinforcements} reinforcements placed, λ = {lambda:.6}"));
            break;
        }

        // The governing mechanism decides where the next layer goes.
        let (_, mechanism) = run_kla(&sys, &[], &options.sla)?;
        let (iface, end) = match next_reinforcement_location(&mechanism, &current, eligibility) {
            Ok(loc) => loc,
            Err(DesignError::NoOpening) => {
                unreachable_reason = Some(
                    "governing mechanism is pure sliding; edge reinforcement cannot help".into(),
                );
                break;
            }
            Err(e) => return Err(e),
        };
        let layers = add_layer(&mut current, iface, end, r_y);
        placements.push(Placement { interface_id: iface, end, cumulative_layers: layers });
    }

    // Settlement validation on the final configuration: the kinematic run
    // keeps the multiplier, the energy run must converge to an adaptation
    // mechanism.
    let mut settlement_checks = Vec::with_capacity(scenarios.len());
    for scenario in scenarios {
        let mut settled = current.clone();
        for s in &scenario.supports {
            match settled.supports.iter_mut().find(|x| x.block_id == s.block_id) {
                Some(existing) => existing.prescribed_u = s.prescribed_u,
                None => settled.supports.push(s.clone()),
            }
        }
        let sys = assemble_system(&settled)?;
        let kla_lambda = match run_kla(&sys, &scenario.distortions, &options.sla) {
            Ok((res, _)) => res.lambda,
            Err(e) => {
                warnings.push(format!("scenario {}: kinematic run failed: {e}", scenario.name));
                f64::NAN
            }
        };
        match run_tpe(&sys, 0.0, &scenario.distortions, &options.tpe) {
            Ok(res) => settlement_checks.push(SettlementCheck {
                scenario: scenario.name.clone(),
                kla_lambda,
                tpe_converged: res.converged,
                hinge_count: res.hinges.len(),
                max_beta: res.beta.amax(),
            }),
            Err(e) => {
                warnings.push(format!("scenario {}: energy run failed: {e}", scenario.name));
                settlement_checks.push(SettlementCheck {
                    scenario: scenario.name.clone(),
                    kla_lambda,
                    tpe_converged: false,
                    hinge_count: 0,
                    max_beta: f64::NAN,
                });
            }
        }
    }

    let target_met = lambda_history.last().is_some_and(|&l| l >= target_lambda);
    let result = DesignResult {
        placements,
        lambda_history,
        final_r,
        final_r_limits,
        settlement_checks,
        target_met,
        warnings,
        model: current,
    };
    match unreachable_reason {
        Some(reason) if !target_met => {
            Err(DesignError::TargetUnreachable { reason, result: Box::new(result) })
        }
        _ => Ok(result),
    }
}

/// Adds one layer at the given end, returning the new layer count there.
fn add_layer(model: &mut StructuralModel, interface_id: u32, end: End, r_y: f64) -> u32 {
    if let Some(r) =
        model.reinforcements.iter_mut().find(|r| r.interface_id == interface_id && r.end == end)
    {
        r.layers += 1;
        r.layers
    } else {
        model.reinforcements.push(Reinforcement { interface_id, end, layers: 1, r_y });
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kla::EndOpening;
    use crate::sla::tests::single_block_model;
    use nalgebra::DVector;

    fn synthetic_mechanism(openings: Vec<EndOpening>) -> Mechanism {
        Mechanism {
            u: DVector::from_vec(vec![1.0]),
            beta: DVector::zeros(0),
            openings,
            slidings: vec![],
            hinges: vec![],
        }
    }

    #[test]
    fn picks_single_opened_end() {
        let model = single_block_model(1.0, 1.0);
        let mech = synthetic_mechanism(vec![
            EndOpening { interface_id: 1, end: End::End1, opening: 0.0 },
            EndOpening { interface_id: 1, end: End::End2, opening: 0.4 },
        ]);
        let loc = next_reinforcement_location(&mech, &model, &Eligibility::All).unwrap();
        assert_eq!(loc, (1, End::End2));
    }

    #[test]
    fn tie_breaks_to_lowest_interface_then_end1() {
        let mut model = single_block_model(1.0, 1.0);
        // Duplicate the base interface under two ids so both are "real".
        let mut second = model.interfaces[0].clone();
        second.id = 7;
        model.interfaces.push(second);
        let mech = synthetic_mechanism(vec![
            EndOpening { interface_id: 7, end: End::End1, opening: 0.4 },
            EndOpening { interface_id: 3, end: End::End2, opening: 0.4 },
            EndOpening { interface_id: 3, end: End::End1, opening: 0.4 },
        ]);
        let loc = next_reinforcement_location(&mech, &model, &Eligibility::All).unwrap();
        assert_eq!(loc, (3, End::End1));
    }

    #[test]
    fn pure_sliding_has_no_opening() {
        let model = single_block_model(0.3, 0.3);
        let mech = synthetic_mechanism(vec![
            EndOpening { interface_id: 1, end: End::End1, opening: 0.0 },
            EndOpening { interface_id: 1, end: End::End2, opening: 0.0 },
        ]);
        assert!(matches!(
            next_reinforcement_location(&mech, &model, &Eligibility::All),
            Err(DesignError::NoOpening)
        ));
    }

    #[test]
    fn eligibility_filters_by_tag() {
        let mut model = single_block_model(1.0, 1.0);
        model.interfaces[0].end_tags = Some([Some(EndTag::Intrados), Some(EndTag::Extrados)]);
        let mech = synthetic_mechanism(vec![
            EndOpening { interface_id: 1, end: End::End1, opening: 0.9 },
            EndOpening { interface_id: 1, end: End::End2, opening: 0.4 },
        ]);
        let loc =
            next_reinforcement_location(&mech, &model, &Eligibility::Extrados).unwrap();
        assert_eq!(loc, (1, End::End2), "extrados filter must skip the larger intrados opening");
    }

    #[test]
    fn target_below_capacity_returns_empty_plan() {
        let model = single_block_model(1.0, 1.0);
        let res = design_weak_reinforcement(
            &model,
            0.2, // collapse is 0.5
            0.25,
            &Eligibility::All,
            4,
            &[],
            &DesignOptions::default(),
        )
        .unwrap();
        assert!(res.target_met);
        assert!(res.placements.is_empty());
        assert_eq!(res.lambda_history.len(), 1);
    }

    #[test]
    fn design_loop_reaches_target_by_stacking() {
        // One tie at the heel raises λ from 0.5 to 0.75; a second layer on
        // the same end raises it to 1.0, where sliding (μ = 1) takes over.
        let model = single_block_model(1.0, 1.0);
        let res = design_weak_reinforcement(
            &model,
            0.75,
            0.25,
            &Eligibility::All,
            4,
            &[],
            &DesignOptions::default(),
        )
        .unwrap();
        assert!(res.target_met);
        assert_eq!(res.placements.len(), 1);
        assert_eq!(res.placements[0].interface_id, 1);
        assert_eq!(res.placements[0].end, End::End1);
        assert!(res.lambda_history.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    }

    #[test]
    fn unreachable_target_reports_partial_result() {
        // λ caps at μ = 1 when sliding governs; a target of 2 cannot be met.
        let model = single_block_model(1.0, 1.0);
        let err = design_weak_reinforcement(
            &model,
            2.0,
            0.25,
            &Eligibility::All,
            10,
            &[],
            &DesignOptions::default(),
        )
        .unwrap_err();
        match err {
            DesignError::TargetUnreachable { result, .. } => {
                assert!(!result.target_met);
                assert!(!result.placements.is_empty());
                let last = *result.lambda_history.last().unwrap();
                assert!(last < 2.0);
            }
            other => panic!("expected TargetUnreachable, got {other:?}"),
        }
    }
}
