//! Built-in demonstration models: a trilithon under seismic-type horizontal
//! live forces and a segmental masonry arch under an eccentric point load.
//!
//! Both are used by the integration tests and ship as JSON files in the
//! repository `fixtures/` directory; the builders here are the source of
//! truth for those files.

use crate::geometry::Vec2;
use crate::model::{
    Block, End, EndTag, Interface, LiveLoadRule, Reinforcement, StructuralModel, Support,
};

fn rect_block(id: u32, x0: f64, y0: f64, w: f64, h: f64, density: f64, fixed: bool) -> Block {
    Block {
        id,
        vertices: vec![
            Vec2::new(x0, y0),
            Vec2::new(x0 + w, y0),
            Vec2::new(x0 + w, y0 + h),
            Vec2::new(x0, y0 + h),
        ],
        density,
        extra_dead_force: None,
        extra_live_force: None,
        fixed,
    }
}

/// Trilithon geometry knobs; `Default` is the documented reference geometry.
#[derive(Clone, Copy, Debug)]
pub struct TrilithonParams {
    pub column_width: f64,
    /// Height of one column block (columns stack two).
    pub block_height: f64,
    pub lintel_depth: f64,
    /// Clear span between the columns.
    pub clear_span: f64,
    pub mu: f64,
    pub mu_tilde: f64,
    pub density: f64,
    pub gravity: f64,
    pub r_y: f64,
}

impl Default for TrilithonParams {
    fn default() -> Self {
        TrilithonParams {
            column_width: 0.36,
            block_height: 1.0,
            lintel_depth: 0.4,
            clear_span: 0.68,
            mu: 1.0,
            mu_tilde: 0.0,
            density: 2.0,
            gravity: 9.81,
            r_y: 10.0,
        }
    }
}

/// Seven-block trilithon: two fixed foundation pads, two columns of two
/// blocks each and a lintel. Horizontal live forces grow linearly with
/// height, ω(y) = (y + 0.4)/8 times the block mass.
///
/// Block ids: 1/2 = left/right foundation, 3/4 = left column bottom/top,
/// 5/6 = right column, 7 = lintel. Interfaces: 1/2/3 = left base/mid/top,
/// 4/5/6 = right base/mid/top.
pub fn trilithon_with(p: &TrilithonParams) -> StructuralModel {
    let b = p.column_width;
    let hb = p.block_height;
    let x_r = b + p.clear_span; // right column left edge
    let lintel_len = 2.0 * b + p.clear_span;
    let top = 2.0 * hb;
    let pad_margin = 0.1 * b;
    let pad_depth = 0.3 * hb;

    let blocks = vec![
        rect_block(1, -pad_margin, -pad_depth, b + 2.0 * pad_margin, pad_depth, p.density, true),
        rect_block(2, x_r - pad_margin, -pad_depth, b + 2.0 * pad_margin, pad_depth, p.density, true),
        rect_block(3, 0.0, 0.0, b, hb, p.density, false),
        rect_block(4, 0.0, hb, b, hb, p.density, false),
        rect_block(5, x_r, 0.0, b, hb, p.density, false),
        rect_block(6, x_r, hb, b, hb, p.density, false),
        rect_block(7, 0.0, top, lintel_len, p.lintel_depth, p.density, false),
    ];
    let joint = |id: u32, j: u32, k: u32, x0: f64, y: f64| Interface {
        id,
        block_j: j,
        block_k: k,
        p1: Vec2::new(x0, y),
        p2: Vec2::new(x0 + b, y),
        mu: p.mu,
        mu_tilde: p.mu_tilde,
        end_tags: None,
    };
    let interfaces = vec![
        joint(1, 1, 3, 0.0, 0.0),
        joint(2, 3, 4, 0.0, hb),
        joint(3, 4, 7, 0.0, top),
        joint(4, 2, 5, x_r, 0.0),
        joint(5, 5, 6, x_r, hb),
        joint(6, 6, 7, x_r, top),
    ];
    StructuralModel {
        blocks,
        interfaces,
        reinforcements: vec![],
        supports: vec![
            Support { block_id: 1, prescribed_u: [0.0; 3] },
            Support { block_id: 2, prescribed_u: [0.0; 3] },
        ],
        gravity: Vec2::new(0.0, -p.gravity),
        live_load_rule: Some(LiveLoadRule::HorizontalMassLinear { a: 8.0, b: 0.4 }),
    }
}

/// The reference trilithon.
pub fn trilithon() -> StructuralModel {
    trilithon_with(&TrilithonParams::default())
}

/// Trilithon with the first `n` reinforcements of the design layout applied
/// (base joints before mid joints, left before right; ties at the windward
/// end 1 of each bed joint).
pub fn trilithon_reinforced(n: usize) -> StructuralModel {
    let mut m = trilithon();
    let layout = [(1u32, End::End1), (4, End::End1), (2, End::End1), (5, End::End1)];
    let r_y = TrilithonParams::default().r_y;
    for &(iface, end) in layout.iter().take(n) {
        m.reinforcements.push(Reinforcement { interface_id: iface, end, layers: 1, r_y });
    }
    m
}

/// Arch geometry knobs; `Default` is the laboratory-scale segmental arch.
#[derive(Clone, Copy, Debug)]
pub struct ArchParams {
    /// Intrados radius [mm].
    pub r_int: f64,
    /// Ring thickness [mm].
    pub thickness: f64,
    /// Internal span at the springing level [mm].
    pub span: f64,
    /// Height of the impost bricks [mm].
    pub impost_height: f64,
    /// Out-of-plane width [mm].
    pub width: f64,
    /// Weight per unit volume [N/mm³].
    pub unit_weight: f64,
    pub mu: f64,
    pub mu_tilde: f64,
    /// Index (1-based block id) of the loaded voussoir.
    pub loaded_block: u32,
}

impl Default for ArchParams {
    fn default() -> Self {
        ArchParams {
            r_int: 456.0,
            thickness: 120.0,
            span: 900.0,
            impost_height: 74.0,
            width: 240.0,
            unit_weight: 1.60e-5,
            mu: 0.5,
            mu_tilde: 0.0,
            loaded_block: 14,
        }
    }
}

/// Segmental arch of 23 blocks (two imposts with horizontal top faces plus
/// 21 radial voussoirs) on two fixed ground pads, loaded by a unit downward
/// point force. The collapse load in Newtons is the collapse multiplier.
///
/// Block ids 1..=23 run left impost → voussoirs → right impost; ground pads
/// are 24 (left) and 25 (right). Interface `i` joins blocks `i` and `i+1`
/// (1..=22); 23/24 are the ground joints. Every arch interface carries end
/// tags: end 1 = intrados, end 2 = extrados.
pub fn arch_with(p: &ArchParams) -> StructuralModel {
    let r_i = p.r_int;
    let r_e = p.r_int + p.thickness;
    // Springing level: the intrados chord at the internal span sits above the
    // circle center by d; the impost top faces are horizontal at that level.
    let d = (r_i * r_i - (p.span / 2.0) * (p.span / 2.0)).sqrt();
    let theta = (d / r_i).asin(); // springing angle
    let n_vouss = 21usize;
    let step = (std::f64::consts::PI - 2.0 * theta) / n_vouss as f64;
    let density = p.unit_weight * p.width; // 2D weight per unit face area
    let y_ground = d - p.impost_height;

    let intrados = |phi: f64| Vec2::new(r_i * phi.cos(), r_i * phi.sin());
    let extrados = |phi: f64| Vec2::new(r_e * phi.cos(), r_e * phi.sin());
    // Springing extremes of the ring at the impost level.
    let x_int = (r_i * r_i - d * d).sqrt();
    let x_ext = (r_e * r_e - d * d).sqrt();

    let mut blocks = Vec::with_capacity(25);
    // Left impost (id 1): rectangle under the left springing patch.
    blocks.push(Block {
        id: 1,
        vertices: vec![
            Vec2::new(-x_ext, y_ground),
            Vec2::new(-x_int, y_ground),
            Vec2::new(-x_int, d),
            Vec2::new(-x_ext, d),
        ],
        density,
        extra_dead_force: None,
        extra_live_force: None,
        fixed: false,
    });
    // Voussoirs 2..=22, left to right: block k spans polar angles
    // [π−θ−(k−1)·step, π−θ−(k−2)·step]; arcs are replaced by chords. The two
    // skewback voussoirs (2 and 22) have a horizontal bottom face at y = d.
    for k in 2..=22u32 {
        let phi_hi = std::f64::consts::PI - theta - (k - 2) as f64 * step;
        let phi_lo = phi_hi - step;
        let (bottom_i, bottom_e) = if k == 2 {
            (Vec2::new(-x_int, d), Vec2::new(-x_ext, d))
        } else {
            (intrados(phi_hi), extrados(phi_hi))
        };
        let (top_i, top_e) = if k == 22 {
            (Vec2::new(x_int, d), Vec2::new(x_ext, d))
        } else {
            (intrados(phi_lo), extrados(phi_lo))
        };
        blocks.push(Block {
            id: k,
            vertices: vec![bottom_i, bottom_e, top_e, top_i],
            density,
            extra_dead_force: None,
            extra_live_force: None,
            fixed: false,
        });
    }
    // Right impost (id 23).
    blocks.push(Block {
        id: 23,
        vertices: vec![
            Vec2::new(x_int, y_ground),
            Vec2::new(x_ext, y_ground),
            Vec2::new(x_ext, d),
            Vec2::new(x_int, d),
        ],
        density,
        extra_dead_force: None,
        extra_live_force: None,
        fixed: false,
    });
    // Ground pads.
    let pad = 40.0;
    blocks.push(rect_block(24, -x_ext - pad, y_ground - 60.0, (x_ext - x_int) + 2.0 * pad, 60.0, density, true));
    blocks.push(rect_block(25, x_int - pad, y_ground - 60.0, (x_ext - x_int) + 2.0 * pad, 60.0, density, true));

    let tags = Some([Some(EndTag::Intrados), Some(EndTag::Extrados)]);
    let mut interfaces = Vec::with_capacity(24);
    // Interface 1: left springing, horizontal at y = d.
    interfaces.push(Interface {
        id: 1,
        block_j: 1,
        block_k: 2,
        p1: Vec2::new(-x_int, d),
        p2: Vec2::new(-x_ext, d),
        mu: p.mu,
        mu_tilde: p.mu_tilde,
        end_tags: tags,
    });
    // Radial joints 2..=21 at angles π−θ−(i−1)·step.
    for i in 2..=21u32 {
        let phi = std::f64::consts::PI - theta - (i - 1) as f64 * step;
        interfaces.push(Interface {
            id: i,
            block_j: i,
            block_k: i + 1,
            p1: intrados(phi),
            p2: extrados(phi),
            mu: p.mu,
            mu_tilde: p.mu_tilde,
            end_tags: tags,
        });
    }
    // Interface 22: right springing, horizontal at y = d.
    interfaces.push(Interface {
        id: 22,
        block_j: 22,
        block_k: 23,
        p1: Vec2::new(x_int, d),
        p2: Vec2::new(x_ext, d),
        mu: p.mu,
        mu_tilde: p.mu_tilde,
        end_tags: tags,
    });
    // Ground joints (untagged: never eligible for reinforcement filters).
    interfaces.push(Interface {
        id: 23,
        block_j: 24,
        block_k: 1,
        p1: Vec2::new(-x_ext, y_ground),
        p2: Vec2::new(-x_int, y_ground),
        mu: p.mu,
        mu_tilde: p.mu_tilde,
        end_tags: None,
    });
    interfaces.push(Interface {
        id: 24,
        block_j: 25,
        block_k: 23,
        p1: Vec2::new(x_int, y_ground),
        p2: Vec2::new(x_ext, y_ground),
        mu: p.mu,
        mu_tilde: p.mu_tilde,
        end_tags: None,
    });

    StructuralModel {
        blocks,
        interfaces,
        reinforcements: vec![],
        supports: vec![
            Support { block_id: 24, prescribed_u: [0.0; 3] },
            Support { block_id: 25, prescribed_u: [0.0; 3] },
        ],
        gravity: Vec2::new(0.0, -1.0),
        live_load_rule: Some(LiveLoadRule::Point {
            block: p.loaded_block,
            force: [0.0, -1.0, 0.0],
        }),
    }
}

/// The reference arch.
pub fn arch() -> StructuralModel {
    arch_with(&ArchParams::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemble::assemble_system;

    #[test]
    fn trilithon_assembles() {
        let sys = assemble_system(&trilithon()).unwrap();
        assert_eq!(sys.free_block_ids.len(), 5);
        assert_eq!(sys.n_interfaces(), 6);
        assert!(sys.report.is_empty(), "no normalization expected: {:?}", sys.report);
    }

    #[test]
    fn arch_assembles() {
        let sys = assemble_system(&arch()).unwrap();
        assert_eq!(sys.free_block_ids.len(), 23);
        assert_eq!(sys.n_interfaces(), 24);
    }

    #[test]
    fn arch_total_weight_is_plausible() {
        // Ring volume ≈ mean arc length × thickness × width at 1.6e-5 N/mm³.
        let m = arch();
        let sys = assemble_system(&m).unwrap();
        let mut w = 0.0;
        for (i, &id) in sys.free_block_ids.iter().enumerate() {
            let _ = id;
            w -= sys.f_dead[3 * i + 1];
        }
        assert!(w > 500.0 && w < 1100.0, "total arch weight {w} N out of range");
    }
}
