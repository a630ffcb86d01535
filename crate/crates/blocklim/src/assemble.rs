//! Assembly of compatibility, admissibility and load vectors from geometry.
//!
//! Fixed-block DOFs are eliminated: columns of the compatibility matrices
//! that belong to fixed blocks are kept separately (`b_fixed`, `c_fixed`) so
//! that prescribed displacements turn into right-hand-side shifts and support
//! reactions can be recovered on the eliminated DOFs afterwards.

use crate::geometry::{polygon_properties, segment_frame, Vec2};
use crate::model::{End, LiveLoadRule, ModelError, StructuralModel};
use nalgebra::{DMatrix, DVector, SMatrix};
use std::collections::BTreeMap;

/// Column slot of a block in the assembled system: base index into either the
/// free-DOF vector or the prescribed (fixed) vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DofSlot {
    Free(usize),
    Fixed(usize),
}

/// Reinforcement bookkeeping: which interface end an assembled reinforcement
/// row belongs to.
#[derive(Clone, Copy, Debug)]
pub struct ReinforcementSlot {
    /// Index into `frames`, not the interface id.
    pub interface_index: usize,
    pub end: End,
    pub layers: u32,
    /// Yield limit per layer.
    pub r_y: f64,
}

impl ReinforcementSlot {
    pub fn limit(&self) -> f64 {
        self.layers as f64 * self.r_y
    }
}

/// Per-interface frame data kept for post-processing.
#[derive(Clone, Debug)]
pub struct InterfaceFrame {
    pub id: u32,
    pub block_j: u32,
    pub block_k: u32,
    pub t: Vec2,
    pub n: Vec2,
    pub center: Vec2,
    pub rho: f64,
    pub p1: Vec2,
    pub p2: Vec2,
    pub mu: f64,
    pub mu_tilde: f64,
}

/// Assembled algebraic image of a [`StructuralModel`].
#[derive(Clone, Debug)]
pub struct SystemMatrices {
    pub free_block_ids: Vec<u32>,
    pub fixed_block_ids: Vec<u32>,
    /// Block id → column slot.
    pub dof_map: BTreeMap<u32, DofSlot>,
    pub frames: Vec<InterfaceFrame>,
    /// Compatibility, free columns: (3·N_Im) × (3·N_bf).
    pub b: DMatrix<f64>,
    /// Compatibility, eliminated fixed columns: (3·N_Im) × (3·N_fix).
    pub b_fixed: DMatrix<f64>,
    /// Interface admissibility flow matrix, block diagonal of N_i (friction μ).
    pub n_mat: DMatrix<f64>,
    /// Kinematic flow matrix, block diagonal of Ñ_i (dilatancy μ̃).
    pub n_tilde: DMatrix<f64>,
    /// Reinforcement compatibility rows (one per reinforcement): N_R × (3·N_bf).
    pub c: DMatrix<f64>,
    pub c_fixed: DMatrix<f64>,
    /// Opening rows for every interface end (2·N_Im rows, row = 2·iface + end).
    pub c_ends: DMatrix<f64>,
    pub c_ends_fixed: DMatrix<f64>,
    /// Admissibility relaxation from reinforcements, length 5·N_Im.
    pub r_hat: DVector<f64>,
    pub f_dead: DVector<f64>,
    pub f_live: DVector<f64>,
    pub f_dead_fixed: DVector<f64>,
    pub f_live_fixed: DVector<f64>,
    /// Prescribed displacements of fixed blocks, length 3·N_fix.
    pub prescribed_u: DVector<f64>,
    /// Effective limit force per reinforcement (layers × R_y), model order.
    pub reinforcement_limits: Vec<f64>,
    /// Interface-end bookkeeping per reinforcement, model order.
    pub reinforcement_slots: Vec<ReinforcementSlot>,
    /// Σ_r limit_r · C_r over free DOFs; the reinforcement work vector used by
    /// the kinematic and energy formulations.
    pub c_weighted: DVector<f64>,
    /// Normalization report from model validation.
    pub report: Vec<String>,
}

impl SystemMatrices {
    pub fn n_interfaces(&self) -> usize {
        self.frames.len()
    }

    pub fn n_free_dofs(&self) -> usize {
        3 * self.free_block_ids.len()
    }

    pub fn n_reinforcements(&self) -> usize {
        self.reinforcement_limits.len()
    }

    pub fn interface_index(&self, id: u32) -> Option<usize> {
        self.frames.iter().position(|f| f.id == id)
    }

    /// Normal opening at each interface end for a given free-DOF displacement
    /// vector, including the contribution of prescribed fixed-block motion.
    pub fn end_openings(&self, u_free: &DVector<f64>) -> DVector<f64> {
        &self.c_ends * u_free + &self.c_ends_fixed * &self.prescribed_u
    }

    /// Right-hand side of the compatibility equation: prescribed distortions
    /// minus the motion induced by fixed-block displacements,
    /// `δ_eff = δ − B_fixed · u`.
    pub fn delta_effective(&self, distortions: &[(u32, [f64; 3])]) -> DVector<f64> {
        let mut delta = DVector::zeros(3 * self.n_interfaces());
        for &(iface_id, d) in distortions {
            if let Some(idx) = self.interface_index(iface_id) {
                for c in 0..3 {
                    delta[3 * idx + c] += d[c];
                }
            }
        }
        delta -= &self.b_fixed * &self.prescribed_u;
        delta
    }
}

/// Compatibility matrix B_i of one interface: maps the six DOFs of the joined
/// block pair (j then k) to the relative displacement of k with respect to j
/// at the interface center, expressed in the local (t, n, Θ) frame.
pub fn compatibility_matrix(
    t: Vec2,
    n: Vec2,
    center: Vec2,
    centroid_j: Vec2,
    centroid_k: Vec2,
) -> SMatrix<f64, 3, 6> {
    let q = SMatrix::<f64, 3, 3>::new(t.x, t.y, 0.0, n.x, n.y, 0.0, 0.0, 0.0, 1.0);
    let g = SMatrix::<f64, 3, 6>::new(
        -1.0, 0.0, center.y - centroid_j.y, 1.0, 0.0, -(center.y - centroid_k.y), //
        0.0, -1.0, -(center.x - centroid_j.x), 0.0, 1.0, center.x - centroid_k.x, //
        0.0, 0.0, -1.0, 0.0, 0.0, 1.0,
    );
    q * g
}

/// Flow matrix of one interface with rows (Δu, Δv, Θ) and columns
/// (s, Δu⁺, Δu⁻, Θ⁺, Θ⁻). With the friction coefficient it is N_i (statics
/// admissibility); with the dilatancy coefficient it is Ñ_i (kinematics).
pub fn flow_matrix(coeff: f64, rho: f64) -> SMatrix<f64, 3, 5> {
    SMatrix::<f64, 3, 5>::new(
        0.0, 1.0, -1.0, 0.0, 0.0, //
        1.0, coeff, coeff, rho, rho, //
        0.0, 0.0, 0.0, 1.0, -1.0,
    )
}

/// Opening row of one interface end: maps the six DOFs of the block pair to
/// the normal-direction gap at that end point; positive values are openings.
pub fn reinforcement_row(
    n: Vec2,
    point: Vec2,
    centroid_j: Vec2,
    centroid_k: Vec2,
) -> SMatrix<f64, 1, 6> {
    let lever = SMatrix::<f64, 2, 6>::new(
        -1.0, 0.0, point.y - centroid_j.y, 1.0, 0.0, -point.y + centroid_k.y, //
        0.0, -1.0, -point.x + centroid_j.x, 0.0, 1.0, point.x - centroid_k.x,
    );
    SMatrix::<f64, 1, 2>::new(n.x, n.y) * lever
}

/// Assembles all system matrices and load vectors. The model is cloned,
/// validated and normalized internally; assembly is deterministic, so the
/// same model yields bit-identical matrices.
pub fn assemble_system(model: &StructuralModel) -> Result<SystemMatrices, ModelError> {
    let mut model = model.clone();
    let report = model.validate_and_normalize()?;

    let free_block_ids: Vec<u32> = model.blocks.iter().filter(|b| !b.fixed).map(|b| b.id).collect();
    let fixed_block_ids: Vec<u32> = model.blocks.iter().filter(|b| b.fixed).map(|b| b.id).collect();
    let mut dof_map = BTreeMap::new();
    for (i, &id) in free_block_ids.iter().enumerate() {
        dof_map.insert(id, DofSlot::Free(3 * i));
    }
    for (i, &id) in fixed_block_ids.iter().enumerate() {
        dof_map.insert(id, DofSlot::Fixed(3 * i));
    }

    let n_free = 3 * free_block_ids.len();
    let n_fix = 3 * fixed_block_ids.len();
    let n_if = model.interfaces.len();
    let n_r = model.reinforcements.len();

    let centroids: BTreeMap<u32, (f64, Vec2)> = model
        .blocks
        .iter()
        .map(|b| (b.id, polygon_properties(&b.vertices).expect("validated")))
        .collect();

    let mut frames = Vec::with_capacity(n_if);
    let mut b = DMatrix::zeros(3 * n_if, n_free);
    let mut b_fixed = DMatrix::zeros(3 * n_if, n_fix);
    let mut n_mat = DMatrix::zeros(3 * n_if, 5 * n_if);
    let mut n_tilde = DMatrix::zeros(3 * n_if, 5 * n_if);
    let mut c_ends = DMatrix::zeros(2 * n_if, n_free);
    let mut c_ends_fixed = DMatrix::zeros(2 * n_if, n_fix);

    // Scatter a 3x6 pair matrix into (free | fixed) column groups.
    let scatter = |mat_free: &mut DMatrix<f64>,
                   mat_fixed: &mut DMatrix<f64>,
                   row0: usize,
                   nrows: usize,
                   local: &DMatrix<f64>,
                   slot_j: DofSlot,
                   slot_k: DofSlot| {
        for (half, slot) in [(0usize, slot_j), (1usize, slot_k)] {
            match slot {
                DofSlot::Free(base) => {
                    for r in 0..nrows {
                        for c in 0..3 {
                            mat_free[(row0 + r, base + c)] += local[(r, 3 * half + c)];
                        }
                    }
                }
                DofSlot::Fixed(base) => {
                    for r in 0..nrows {
                        for c in 0..3 {
                            mat_fixed[(row0 + r, base + c)] += local[(r, 3 * half + c)];
                        }
                    }
                }
            }
        }
    };

    for (idx, iface) in model.interfaces.iter().enumerate() {
        let (t, n, center, rho) = segment_frame(iface.p1, iface.p2)
            .map_err(|source| ModelError::BadInterface { interface: iface.id, source })?;
        let cj = centroids[&iface.block_j].1;
        let ck = centroids[&iface.block_k].1;
        let bi = compatibility_matrix(t, n, center, cj, ck);
        let slot_j = dof_map[&iface.block_j];
        let slot_k = dof_map[&iface.block_k];
        scatter(
            &mut b,
            &mut b_fixed,
            3 * idx,
            3,
            &DMatrix::from_iterator(3, 6, bi.iter().copied()),
            slot_j,
            slot_k,
        );
        let ni = flow_matrix(iface.mu, rho);
        let nti = flow_matrix(iface.mu_tilde, rho);
        for r in 0..3 {
            for c in 0..5 {
                n_mat[(3 * idx + r, 5 * idx + c)] = ni[(r, c)];
                n_tilde[(3 * idx + r, 5 * idx + c)] = nti[(r, c)];
            }
        }
        for (e, point) in [(0usize, iface.p1), (1usize, iface.p2)] {
            let row = reinforcement_row(n, point, cj, ck);
            scatter(
                &mut c_ends,
                &mut c_ends_fixed,
                2 * idx + e,
                1,
                &DMatrix::from_iterator(1, 6, row.iter().copied()),
                slot_j,
                slot_k,
            );
        }
        frames.push(InterfaceFrame {
            id: iface.id,
            block_j: iface.block_j,
            block_k: iface.block_k,
            t,
            n,
            center,
            rho,
            p1: iface.p1,
            p2: iface.p2,
            mu: iface.mu,
            mu_tilde: iface.mu_tilde,
        });
    }

    // Reinforcement rows reuse the per-end opening rows; R̂ relaxes the
    // rotation slot of the admissibility domain that opens the reinforced end
    // (Θ⁻ opens end 1, Θ⁺ opens end 2).
    let mut c = DMatrix::zeros(n_r, n_free);
    let mut c_fixed = DMatrix::zeros(n_r, n_fix);
    let mut r_hat = DVector::zeros(5 * n_if);
    let mut reinforcement_limits = Vec::with_capacity(n_r);
    let mut reinforcement_slots = Vec::with_capacity(n_r);
    for (ri, r) in model.reinforcements.iter().enumerate() {
        let idx = frames
            .iter()
            .position(|f| f.id == r.interface_id)
            .ok_or(ModelError::UnknownInterface(r.interface_id))?;
        let end_row = 2 * idx + r.end.index();
        for col in 0..n_free {
            c[(ri, col)] = c_ends[(end_row, col)];
        }
        for col in 0..n_fix {
            c_fixed[(ri, col)] = c_ends_fixed[(end_row, col)];
        }
        let limit = r.limit_force();
        let slot = match r.end {
            End::End1 => 4, // Θ⁻
            End::End2 => 3, // Θ⁺
        };
        r_hat[5 * idx + slot] += 2.0 * frames[idx].rho * limit;
        reinforcement_limits.push(limit);
        reinforcement_slots.push(ReinforcementSlot {
            interface_index: idx,
            end: r.end,
            layers: r.layers,
            r_y: r.r_y,
        });
    }

    // Load vectors.
    let mut f_dead = DVector::zeros(n_free);
    let mut f_live = DVector::zeros(n_free);
    let mut f_dead_fixed = DVector::zeros(n_fix);
    let mut f_live_fixed = DVector::zeros(n_fix);
    for block in &model.blocks {
        let (area, centroid) = centroids[&block.id];
        let mass = block.density * area;
        let mut dead = [mass * model.gravity.x, mass * model.gravity.y, 0.0];
        if let Some(extra) = block.extra_dead_force {
            for i in 0..3 {
                dead[i] += extra[i];
            }
        }
        let mut live = [0.0; 3];
        match &model.live_load_rule {
            Some(LiveLoadRule::HorizontalMassLinear { a, b }) => {
                live[0] += (centroid.y + b) / a * mass;
            }
            Some(LiveLoadRule::Point { block: id, force }) if *id == block.id => {
                for i in 0..3 {
                    live[i] += force[i];
                }
            }
            _ => {}
        }
        if let Some(extra) = block.extra_live_force {
            for i in 0..3 {
                live[i] += extra[i];
            }
        }
        match dof_map[&block.id] {
            DofSlot::Free(base) => {
                for i in 0..3 {
                    f_dead[base + i] += dead[i];
                    f_live[base + i] += live[i];
                }
            }
            DofSlot::Fixed(base) => {
                for i in 0..3 {
                    f_dead_fixed[base + i] += dead[i];
                    f_live_fixed[base + i] += live[i];
                }
            }
        }
    }

    let mut prescribed_u = DVector::zeros(n_fix);
    for s in &model.supports {
        if let DofSlot::Fixed(base) = dof_map[&s.block_id] {
            for i in 0..3 {
                prescribed_u[base + i] = s.prescribed_u[i];
            }
        }
    }

    let mut c_weighted = DVector::zeros(n_free);
    for ri in 0..n_r {
        for col in 0..n_free {
            c_weighted[col] += reinforcement_limits[ri] * c[(ri, col)];
        }
    }

    Ok(SystemMatrices {
        free_block_ids,
        fixed_block_ids,
        dof_map,
        frames,
        b,
        b_fixed,
        n_mat,
        n_tilde,
        c,
        c_fixed,
        c_ends,
        c_ends_fixed,
        r_hat,
        f_dead,
        f_live,
        f_dead_fixed,
        f_live_fixed,
        prescribed_u,
        reinforcement_limits,
        reinforcement_slots,
        c_weighted,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Block, Interface, Reinforcement, Support};
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn rect(id: u32, x0: f64, y0: f64, w: f64, h: f64, fixed: bool) -> Block {
        Block {
            id,
            vertices: vec![
                Vec2::new(x0, y0),
                Vec2::new(x0 + w, y0),
                Vec2::new(x0 + w, y0 + h),
                Vec2::new(x0, y0 + h),
            ],
            density: 2.0,
            extra_dead_force: None,
            extra_live_force: None,
            fixed,
        }
    }

    /// Finite rigid motion of a point belonging to a block with centroid `g`.
    fn move_point(p: Vec2, g: Vec2, u: [f64; 3]) -> Vec2 {
        let (s, c) = u[2].sin_cos();
        let r = p - g;
        Vec2::new(
            g.x + c * r.x - s * r.y + u[0],
            g.y + s * r.x + c * r.y + u[1],
        )
    }

    #[test]
    fn aligned_frame_reduces_to_lever_arms() {
        // Horizontal interface, t = (1,0), n = (0,1): Q is the identity
        // permutation and B_i shows the raw lever arms.
        let t = Vec2::new(1.0, 0.0);
        let n = Vec2::new(0.0, 1.0);
        let center = Vec2::new(0.5, 1.0);
        let cj = Vec2::new(0.5, 0.5);
        let ck = Vec2::new(0.5, 1.5);
        let bi = compatibility_matrix(t, n, center, cj, ck);
        let expect = [
            [-1.0, 0.0, 0.5, 1.0, 0.0, 0.5],
            [0.0, -1.0, 0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, -1.0, 0.0, 0.0, 1.0],
        ];
        for r in 0..3 {
            for c in 0..6 {
                assert_relative_eq!(bi[(r, c)], expect[r][c], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn rigid_motion_is_annihilated() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let p1 = Vec2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let dir = rng.random_range(0.0..std::f64::consts::TAU);
            let len = rng.random_range(0.1..4.0);
            let p2 = p1 + Vec2::new(dir.cos(), dir.sin()).scale(len);
            let (t, n, center, _) = segment_frame(p1, p2).unwrap();
            let cj = center + n.scale(-rng.random_range(0.1..3.0)) + t.scale(rng.random_range(-2.0..2.0));
            let ck = center + n.scale(rng.random_range(0.1..3.0)) + t.scale(rng.random_range(-2.0..2.0));
            let bi = compatibility_matrix(t, n, center, cj, ck);

            // Identical rigid motion about a random pole applied to both blocks.
            let pole = Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let (ux, uy, phi) =
                (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            // Linearized displacement at each centroid for rotation about the pole.
            let motion = |g: Vec2| [ux - phi * (g.y - pole.y), uy + phi * (g.x - pole.x), phi];
            let (mj, mk) = (motion(cj), motion(ck));
            let u = nalgebra::SVector::<f64, 6>::from_iterator(mj.into_iter().chain(mk));
            let eta = bi * u;
            assert!(eta.amax() < 1e-10, "rigid motion leaked {eta:?}");
        }
    }

    #[test]
    fn finite_difference_kinematics_oracle_spot() {
        let mut rng = StdRng::seed_from_u64(11);
        let eps = 1e-6;
        for _ in 0..100 {
            let p1 = Vec2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let dir = rng.random_range(0.0..std::f64::consts::TAU);
            let p2 = p1 + Vec2::new(dir.cos(), dir.sin()).scale(rng.random_range(0.2..4.0));
            let (t, n, center, _) = segment_frame(p1, p2).unwrap();
            let cj = center + n.scale(-rng.random_range(0.1..3.0)) + t.scale(rng.random_range(-2.0..2.0));
            let ck = center + n.scale(rng.random_range(0.1..3.0)) + t.scale(rng.random_range(-2.0..2.0));
            let bi = compatibility_matrix(t, n, center, cj, ck);

            let uj: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let uk: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let scaled = |u: [f64; 3]| [u[0] * eps, u[1] * eps, u[2] * eps];
            let qj = move_point(center, cj, scaled(uj));
            let qk = move_point(center, ck, scaled(uk));
            let rel = qk - qj;
            let fd = [t.dot(rel) / eps, n.dot(rel) / eps, uk[2] - uj[2]];

            let u6 = nalgebra::SVector::<f64, 6>::from_iterator(uj.into_iter().chain(uk));
            let eta = bi * u6;
            for c in 0..3 {
                assert!(
                    (eta[c] - fd[c]).abs() < 1e-5,
                    "component {c}: analytic {} vs fd {}",
                    eta[c],
                    fd[c]
                );
            }
        }
    }

    #[test]
    fn flow_matrix_rows_match_closed_form() {
        let m = flow_matrix(0.0, 1.0);
        let expect = [
            [0.0, 1.0, -1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 1.0, 1.0],
            [0.0, 0.0, 0.0, 1.0, -1.0],
        ];
        for r in 0..3 {
            for c in 0..5 {
                assert_relative_eq!(m[(r, c)], expect[r][c]);
            }
        }
        let m2 = flow_matrix(1.0, 0.5);
        for (c, v) in [1.0, 1.0, 1.0, 0.5, 0.5].into_iter().enumerate() {
            assert_relative_eq!(m2[(1, c)], v);
        }
    }

    #[test]
    fn flow_matrix_expansion_identity() {
        // Ñ_i β_i = {Δu⁺−Δu⁻; s + μ̃(Δu⁺+Δu⁻) + ρ(Θ⁺+Θ⁻); Θ⁺−Θ⁻}
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..1000 {
            let mu_t = rng.random_range(0.0..1.5);
            let rho = rng.random_range(0.05..4.0);
            let m = flow_matrix(mu_t, rho);
            let beta =
                nalgebra::SVector::<f64, 5>::from_fn(|_, _| rng.random_range(0.0..10.0));
            let out = m * beta;
            let (s, dup, dum, tp, tm) = (beta[0], beta[1], beta[2], beta[3], beta[4]);
            assert_relative_eq!(out[0], dup - dum, epsilon = 1e-12);
            assert_relative_eq!(out[1], s + mu_t * (dup + dum) + rho * (tp + tm), epsilon = 1e-12);
            assert_relative_eq!(out[2], tp - tm, epsilon = 1e-12);
        }
    }

    #[test]
    fn opening_row_zero_lever_example() {
        // Horizontal interface with n = (0,1), end at the origin, both
        // centroids at x = 0: the row has no lever terms.
        let row = reinforcement_row(
            Vec2::new(0.0, 1.0),
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, -1.0),
            Vec2::new(0.0, 1.0),
        );
        let expect = [0.0, -1.0, 0.0, 0.0, 1.0, 0.0];
        for c in 0..6 {
            assert_relative_eq!(row[(0, c)], expect[c], epsilon = 1e-14);
        }
    }

    #[test]
    fn rotation_about_one_end_opens_the_other() {
        // Interface from (0,0) to (2,0); block j below, k above. A clockwise
        // rotation of k hinged at end 2 opens end 1: the end-1 row sees the
        // gap, the end-2 row stays at zero, and the relative rotation is the
        // pure Θ⁻ mode of the flow matrix.
        let p1 = Vec2::new(0.0, 0.0);
        let p2 = Vec2::new(2.0, 0.0);
        let (t, n, center, rho) = segment_frame(p1, p2).unwrap();
        let cj = Vec2::new(1.0, -0.7);
        let ck = Vec2::new(1.0, 0.7);
        let phi = 1e-3;
        // Linearized rotation of block k by -φ about the pole p2.
        let uk = [phi * (ck.y - p2.y), -phi * (ck.x - p2.x), -phi];
        let u6 = nalgebra::SVector::<f64, 6>::from_iterator([0.0; 3].into_iter().chain(uk));

        let row1 = reinforcement_row(n, p1, cj, ck);
        let row2 = reinforcement_row(n, p2, cj, ck);
        let g1 = (row1 * u6)[0];
        let g2 = (row2 * u6)[0];
        assert_relative_eq!(g1, 2.0 * rho * phi, epsilon = 1e-12);
        assert_relative_eq!(g2, 0.0, epsilon = 1e-15);

        // Through the interface kinematics: η = (0, ρφ, -φ), i.e. Ñ_i β with
        // β the pure Θ⁻ unit mode scaled by φ.
        let bi = compatibility_matrix(t, n, center, cj, ck);
        let eta = bi * u6;
        assert_relative_eq!(eta[0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(eta[1], rho * phi, epsilon = 1e-12);
        assert_relative_eq!(eta[2], -phi, epsilon = 1e-12);
        let beta = nalgebra::SVector::<f64, 5>::new(0.0, 0.0, 0.0, 0.0, phi);
        let eta_beta = flow_matrix(0.3, rho) * beta;
        for c in 0..3 {
            assert_relative_eq!(eta[c], eta_beta[c], epsilon = 1e-12);
        }

        // Rotating k by +φ about end 1 instead opens end 2 by 2ρφ (pure Θ⁺).
        let uk1 = [-phi * (ck.y - p1.y), phi * (ck.x - p1.x), phi];
        let u6b = nalgebra::SVector::<f64, 6>::from_iterator([0.0; 3].into_iter().chain(uk1));
        assert_relative_eq!((row2 * u6b)[0], 2.0 * rho * phi, epsilon = 1e-12);
        assert_relative_eq!((row1 * u6b)[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn opening_rows_ignore_rigid_motion() {
        let n = Vec2::new(0.3f64, 1.2).scale(1.0 / (0.3f64 * 0.3 + 1.2 * 1.2).sqrt());
        let point = Vec2::new(0.4, 1.7);
        let (cj, ck) = (Vec2::new(-1.0, 0.3), Vec2::new(1.3, 2.0));
        let row = reinforcement_row(n, point, cj, ck);
        let pole = Vec2::new(0.9, -0.4);
        let (ux, uy, phi) = (0.3, -0.8, 0.13);
        let motion = |g: Vec2| [ux - phi * (g.y - pole.y), uy + phi * (g.x - pole.x), phi];
        let u6 = nalgebra::SVector::<f64, 6>::from_iterator(
            motion(cj).into_iter().chain(motion(ck)),
        );
        assert!((row * u6)[0].abs() < 1e-12);
    }

    fn square_on_ground() -> StructuralModel {
        StructuralModel {
            blocks: vec![rect(1, -1.0, -0.5, 3.0, 0.5, true), rect(2, 0.0, 0.0, 1.0, 1.0, false)],
            interfaces: vec![Interface {
                id: 1,
                block_j: 1,
                block_k: 2,
                p1: Vec2::new(0.0, 0.0),
                p2: Vec2::new(1.0, 0.0),
                mu: 0.7,
                mu_tilde: 0.7,
                end_tags: None,
            }],
            reinforcements: vec![],
            supports: vec![Support { block_id: 1, prescribed_u: [0.0; 3] }],
            ..Default::default()
        }
    }

    #[test]
    fn dead_load_is_weight_at_centroid() {
        // Unit square, γ = 2, gravity (0, -1): F_dead = (0, -2, 0).
        let sys = assemble_system(&square_on_ground()).unwrap();
        assert_eq!(sys.f_dead.len(), 3);
        assert_relative_eq!(sys.f_dead[0], 0.0);
        assert_relative_eq!(sys.f_dead[1], -2.0);
        assert_relative_eq!(sys.f_dead[2], 0.0);
    }

    #[test]
    fn linear_live_rule_example() {
        // ω = (y + 0.4) / 8 at centroid y = 3.6 gives a horizontal force of
        // half the mass.
        let mut m = square_on_ground();
        m.blocks[1] = rect(2, 0.0, 3.1, 1.0, 1.0, false);
        m.interfaces.clear();
        m.live_load_rule = Some(LiveLoadRule::HorizontalMassLinear { a: 8.0, b: 0.4 });
        let sys = assemble_system(&m).unwrap();
        let mass = 2.0;
        assert_relative_eq!(sys.f_live[0], mass * 0.5, epsilon = 1e-12);
        assert_relative_eq!(sys.f_live[1], 0.0);
    }

    #[test]
    fn dangling_reference_is_reported() {
        let mut m = square_on_ground();
        m.interfaces[0].block_k = 42;
        assert!(matches!(
            assemble_system(&m),
            Err(ModelError::DanglingReference { .. })
        ));
    }

    #[test]
    fn reinforcement_bounds_vector_patterns() {
        // No reinforcements -> R̂ = 0.
        let sys = assemble_system(&square_on_ground()).unwrap();
        assert_eq!(sys.r_hat.amax(), 0.0);

        // One layer R_y = 10 at end 2 of an interface with ρ = 1: slot Θ⁺
        // carries 2ρ·R_y = 20.
        let mut m = square_on_ground();
        m.blocks[1] = rect(2, 0.0, 0.0, 2.0, 1.0, false);
        m.interfaces[0].p2 = Vec2::new(2.0, 0.0);
        m.reinforcements = vec![Reinforcement { interface_id: 1, end: End::End2, layers: 1, r_y: 10.0 }];
        let sys = assemble_system(&m).unwrap();
        let expect = [0.0, 0.0, 0.0, 20.0, 0.0];
        for (i, v) in expect.into_iter().enumerate() {
            assert_relative_eq!(sys.r_hat[i], v);
        }

        // Two layers R_y = 100 at end 1, ρ = 0.5: slot Θ⁻ carries 200.
        let mut m = square_on_ground();
        m.reinforcements = vec![Reinforcement { interface_id: 1, end: End::End1, layers: 2, r_y: 100.0 }];
        let sys = assemble_system(&m).unwrap();
        let expect = [0.0, 0.0, 0.0, 0.0, 200.0];
        for (i, v) in expect.into_iter().enumerate() {
            assert_relative_eq!(sys.r_hat[i], v);
        }
    }

    #[test]
    fn assembly_transpose_duality() {
        // (B U)ᵀ X == Uᵀ (Bᵀ X) for random vectors.
        let sys = assemble_system(&square_on_ground()).unwrap();
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..50 {
            let u = DVector::from_fn(sys.n_free_dofs(), |_, _| rng.random_range(-1.0..1.0));
            let x = DVector::from_fn(3 * sys.n_interfaces(), |_, _| rng.random_range(-1.0..1.0));
            let lhs = (&sys.b * &u).dot(&x);
            let rhs = u.dot(&(sys.b.transpose() * &x));
            assert_relative_eq!(lhs, rhs, epsilon = 1e-13);
        }
    }

    #[test]
    fn compressive_state_is_strictly_admissible() {
        // X_i = (0, -1, 0) satisfies Nᵀ X < 0 strictly for μ > 0, ρ > 0.
        let ni = flow_matrix(0.7, 0.5);
        let x = nalgebra::SVector::<f64, 3>::new(0.0, -1.0, 0.0);
        let rows = ni.transpose() * x;
        for r in 1..5 {
            assert!(rows[r] < 0.0, "row {r} = {}", rows[r]);
        }
        assert!(rows[0] <= 0.0);
    }

    #[test]
    fn assembly_is_bit_deterministic() {
        let m = square_on_ground();
        let s1 = assemble_system(&m).unwrap();
        let s2 = assemble_system(&m).unwrap();
        assert_eq!(s1.b.as_slice(), s2.b.as_slice());
        assert_eq!(s1.n_mat.as_slice(), s2.n_mat.as_slice());
        assert_eq!(s1.f_dead.as_slice(), s2.f_dead.as_slice());
        assert_eq!(s1.f_live.as_slice(), s2.f_live.as_slice());
    }
}
