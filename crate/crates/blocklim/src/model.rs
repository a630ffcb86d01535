//! Structural data model: blocks, interfaces, reinforcements, supports.
//!
//! All types are plain immutable data; a validated model is safe to share
//! across threads and to assemble concurrently with other models.

use crate::geometry::{
    bbox_diagonal, point_on_boundary, polygon_properties, segment_frame, signed_area, GeometryError,
    Vec2, TOL_GEOM_REL,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("block {block}: {source}")]
    BadPolygon { block: u32, source: GeometryError },
    #[error("interface {interface}: {source}")]
    BadInterface { interface: u32, source: GeometryError },
    #[error("duplicate id {0} in {1}")]
    DuplicateId(u32, &'static str),
    #[error("{kind} {id} references missing {what} {missing}")]
    DanglingReference { kind: &'static str, id: u32, what: &'static str, missing: u32 },
    #[error("interface {0} joins block {1} to itself")]
    SelfInterface(u32, u32),
    #[error("model has no fixed block; global equilibrium is impossible")]
    NoFixedBlock,
    #[error("support on block {0} which is not fixed")]
    SupportOnFreeBlock(u32),
    #[error("support displacement on block {0} is not finite")]
    NonFiniteSupport(u32),
    #[error("interface {interface}: endpoint {point:?} not on boundary of block {block}")]
    EndpointOffBlock { interface: u32, block: u32, point: [f64; 2] },
    #[error("interface {0}: blocks lie on the same side of the interface line")]
    AmbiguousOrientation(u32),
    #[error("interface {interface}: dilatancy {mu_tilde} exceeds friction {mu}")]
    DilatancyAboveFriction { interface: u32, mu: f64, mu_tilde: f64 },
    #[error("reinforcement at interface {0} end {1:?} duplicated; use `layers` to stack")]
    DuplicateReinforcement(u32, End),
    #[error("reinforcement references missing interface {0}")]
    UnknownInterface(u32),
    #[error("reinforcement at interface {0}: layers must be >= 1")]
    ZeroLayers(u32),
    #[error("reinforcement at interface {0} end {1:?}: limit force must be positive")]
    NonPositiveLimit(u32, End),
    #[error("block {0}: density must be non-negative and finite")]
    BadDensity(u32),
    #[error("interface {0}: friction must be non-negative and finite")]
    BadFriction(u32),
}

/// Interface extremity: `End1` at ξ = −L/2 (the `p1` endpoint), `End2` at
/// ξ = +L/2 (the `p2` endpoint).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum End {
    End1,
    End2,
}

impl End {
    pub fn index(self) -> usize {
        match self {
            End::End1 => 0,
            End::End2 => 1,
        }
    }
}

/// Side tag for an interface end, used by reinforcement eligibility filters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndTag {
    Extrados,
    Intrados,
}

/// Rigid polygonal block.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Block {
    pub id: u32,
    /// Polygon vertices; counter-clockwise preferred, clockwise input is
    /// reoriented during validation.
    pub vertices: Vec<Vec2>,
    /// Mass per unit area.
    pub density: f64,
    /// Optional (Fx, Fy, M) dead load applied at the centroid.
    pub extra_dead_force: Option<[f64; 3]>,
    /// Optional (Fx, Fy, M) live load applied at the centroid.
    pub extra_live_force: Option<[f64; 3]>,
    /// Fixed blocks contribute prescribed displacements, never free DOFs.
    pub fixed: bool,
}

/// Zero-thickness rectilinear joint between two blocks, with unilateral
/// contact and Coulomb friction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Interface {
    pub id: u32,
    pub block_j: u32,
    pub block_k: u32,
    /// Extremity at ξ = −L/2.
    pub p1: Vec2,
    /// Extremity at ξ = +L/2.
    pub p2: Vec2,
    /// Friction coefficient μ ≥ 0.
    pub mu: f64,
    /// Dilatancy coefficient μ̃, 0 ≤ μ̃ ≤ μ; μ̃ = μ is the associative case.
    pub mu_tilde: f64,
    /// Optional side tags for the two ends (eligibility filters).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_tags: Option<[Option<EndTag>; 2]>,
}

/// Tension-only reinforcement at one interface extremity. Stacked identical
/// reinforcements are expressed through `layers`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Reinforcement {
    pub interface_id: u32,
    pub end: End,
    pub layers: u32,
    /// Tensile yield limit force per layer.
    pub r_y: f64,
}

impl Reinforcement {
    /// Effective limit force `layers × R_y`.
    pub fn limit_force(&self) -> f64 {
        self.layers as f64 * self.r_y
    }
}

/// Prescribed displacements of a fixed block (all three DOFs).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Support {
    pub block_id: u32,
    /// (u_x, u_y, φ); nonzero values model foundation settlements.
    pub prescribed_u: [f64; 3],
}

/// Rule generating live forces from block masses.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LiveLoadRule {
    /// Horizontal force ω(y)·mass with ω(y) = (y + b) / a evaluated at the
    /// block centroid.
    HorizontalMassLinear { a: f64, b: f64 },
    /// A fixed (fx, fy, m) force on one block.
    Point { block: u32, force: [f64; 3] },
}

/// Complete problem statement: geometry, loads, constraints.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StructuralModel {
    pub blocks: Vec<Block>,
    pub interfaces: Vec<Interface>,
    pub reinforcements: Vec<Reinforcement>,
    pub supports: Vec<Support>,
    /// Gravitational acceleration; dead load of a block is mass × gravity.
    pub gravity: Vec2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub live_load_rule: Option<LiveLoadRule>,
}

impl Default for StructuralModel {
    fn default() -> Self {
        StructuralModel {
            blocks: Vec::new(),
            interfaces: Vec::new(),
            reinforcements: Vec::new(),
            supports: Vec::new(),
            gravity: Vec2::new(0.0, -1.0),
            live_load_rule: None,
        }
    }
}

impl StructuralModel {
    pub fn block(&self, id: u32) -> Option<&Block> {
        self.blocks.iter().find(|b| b.id == id)
    }

    pub fn interface(&self, id: u32) -> Option<&Interface> {
        self.interfaces.iter().find(|i| i.id == id)
    }

    pub fn reinforcement(&self, interface_id: u32, end: End) -> Option<&Reinforcement> {
        self.reinforcements
            .iter()
            .find(|r| r.interface_id == interface_id && r.end == end)
    }

    /// Geometric tolerance: `TOL_GEOM_REL` × model bounding-box diagonal.
    pub fn tol_geom(&self) -> f64 {
        let pts: Vec<Vec2> = self.blocks.iter().flat_map(|b| b.vertices.iter().copied()).collect();
        TOL_GEOM_REL * bbox_diagonal(&pts).max(1.0)
    }

    /// Validates the model and normalizes it in place: clockwise polygons are
    /// reversed and interfaces whose normal points from `block_k` to `block_j`
    /// get their block roles swapped so that the normal always points j → k.
    /// Returns a report of the normalizations performed.
    pub fn validate_and_normalize(&mut self) -> Result<Vec<String>, ModelError> {
        let mut report = Vec::new();

        let mut seen = std::collections::BTreeSet::new();
        for b in &self.blocks {
            if !seen.insert(b.id) {
                return Err(ModelError::DuplicateId(b.id, "blocks"));
            }
            if !(b.density.is_finite() && b.density >= 0.0) {
                return Err(ModelError::BadDensity(b.id));
            }
        }
        seen.clear();
        for i in &self.interfaces {
            if !seen.insert(i.id) {
                return Err(ModelError::DuplicateId(i.id, "interfaces"));
            }
        }

        // Polygon orientation and simplicity.
        for b in &mut self.blocks {
            if signed_area(&b.vertices) < 0.0 {
                b.vertices.reverse();
                report.push(format!("block {}: reoriented clockwise polygon", b.id));
            }
            polygon_properties(&b.vertices)
                .map_err(|source| ModelError::BadPolygon { block: b.id, source })?;
        }

        if !self.blocks.iter().any(|b| b.fixed) {
            return Err(ModelError::NoFixedBlock);
        }

        let tol = self.tol_geom();
        // A generous contact tolerance: endpoints of a zero-thickness joint
        // must lie on both block boundaries, but fixtures are often built
        // from rounded decimals.
        let contact_tol = tol.max(1e-6 * self.tol_geom() / TOL_GEOM_REL);

        let centroids: std::collections::BTreeMap<u32, Vec2> = self
            .blocks
            .iter()
            .map(|b| (b.id, polygon_properties(&b.vertices).expect("validated").1))
            .collect();

        for iface in &mut self.interfaces {
            if iface.block_j == iface.block_k {
                return Err(ModelError::SelfInterface(iface.id, iface.block_j));
            }
            for (what, id) in [("block_j", iface.block_j), ("block_k", iface.block_k)] {
                if !centroids.contains_key(&id) {
                    return Err(ModelError::DanglingReference {
                        kind: "interface",
                        id: iface.id,
                        what,
                        missing: id,
                    });
                }
            }
            if !(iface.mu.is_finite() && iface.mu >= 0.0 && iface.mu_tilde.is_finite() && iface.mu_tilde >= 0.0) {
                return Err(ModelError::BadFriction(iface.id));
            }
            if iface.mu_tilde > iface.mu {
                return Err(ModelError::DilatancyAboveFriction {
                    interface: iface.id,
                    mu: iface.mu,
                    mu_tilde: iface.mu_tilde,
                });
            }
            let (_, n, center, _) = segment_frame(iface.p1, iface.p2)
                .map_err(|source| ModelError::BadInterface { interface: iface.id, source })?;
            for bid in [iface.block_j, iface.block_k] {
                let blk = self.blocks.iter().find(|b| b.id == bid).expect("checked");
                for pt in [iface.p1, iface.p2] {
                    if !point_on_boundary(pt, &blk.vertices, contact_tol) {
                        return Err(ModelError::EndpointOffBlock {
                            interface: iface.id,
                            block: bid,
                            point: [pt.x, pt.y],
                        });
                    }
                }
            }
            // Normal convention: n points from block_j toward block_k.
            let side_j = n.dot(centroids[&iface.block_j] - center);
            let side_k = n.dot(centroids[&iface.block_k] - center);
            if side_j.abs() <= tol || side_k.abs() <= tol || side_j * side_k > 0.0 {
                return Err(ModelError::AmbiguousOrientation(iface.id));
            }
            if side_j > 0.0 {
                std::mem::swap(&mut iface.block_j, &mut iface.block_k);
                if let Some(tags) = &mut iface.end_tags {
                    // End labels are tied to p1/p2, which do not move.
                    let _ = tags;
                }
                report.push(format!(
                    "interface {}: swapped block roles so the normal points j -> k",
                    iface.id
                ));
            }
        }

        for s in &self.supports {
            let Some(b) = self.block(s.block_id) else {
                return Err(ModelError::DanglingReference {
                    kind: "support",
                    id: s.block_id,
                    what: "block",
                    missing: s.block_id,
                });
            };
            if !b.fixed {
                return Err(ModelError::SupportOnFreeBlock(s.block_id));
            }
            if s.prescribed_u.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::NonFiniteSupport(s.block_id));
            }
        }

        let mut pairs = std::collections::BTreeSet::new();
        for r in &self.reinforcements {
            if self.interfaces.iter().all(|i| i.id != r.interface_id) {
                return Err(ModelError::UnknownInterface(r.interface_id));
            }
            if r.layers == 0 {
                return Err(ModelError::ZeroLayers(r.interface_id));
            }
            if !(r.r_y.is_finite() && r.r_y > 0.0) {
                return Err(ModelError::NonPositiveLimit(r.interface_id, r.end));
            }
            if !pairs.insert((r.interface_id, r.end)) {
                return Err(ModelError::DuplicateReinforcement(r.interface_id, r.end));
            }
        }

        if let Some(LiveLoadRule::Point { block, .. }) = self.live_load_rule {
            if self.block(block).is_none() {
                return Err(ModelError::DanglingReference {
                    kind: "live_load_rule",
                    id: block,
                    what: "block",
                    missing: block,
                });
            }
        }

        Ok(report)
    }
}
