//! Rigid-block limit analysis for 2D masonry structures.
//!
//! Structures are modeled as rigid polygonal blocks joined by zero-thickness
//! interfaces with unilateral (no-tension) contact and Coulomb friction, plus
//! optional tension-only reinforcements at interface ends. On top of that
//! model the crate provides:
//!
//! - **Static limit analysis** ([`sla`]): lower-bound collapse multipliers,
//!   either with explicit reinforcement forces (`SLA1`) or with reinforcements
//!   folded into the interface admissibility domain (`SLA2`). Non-associative
//!   friction (dilatancy below the friction coefficient) is handled by a
//!   sequential linearization loop.
//! - **Kinematic limit analysis** ([`kla`]): upper-bound mechanisms, with
//!   optional prescribed interface distortions to simulate settlements.
//! - **Energy minimization** ([`tpe`]): displaced equilibrium configurations
//!   under dead load, a fixed live multiplier and support settlements.
//! - **Weak reinforcement design** ([`design`]): a greedy loop that places
//!   one reinforcement layer at a time at the interface end with the largest
//!   opening until a target capacity is reached, then validates settlement
//!   adaptability.
//!
//! All analyses reduce to linear programs solved by the bounded-variable
//! revised simplex in [`lp`]; alternative backends can be plugged in through
//! [`lp::LpBackend`].
//!
//! Model files are JSON documents (see [`io`]) and results serialize to JSON;
//! [`render`] draws mechanisms as SVG. The `blocklim` binary wires everything
//! into a CLI (see [`cli`]).

pub mod assemble;
pub mod cli;
pub mod design;
pub mod fixtures;
pub mod geometry;
pub mod io;
pub mod kla;
pub mod lp;
pub mod model;
pub mod render;
pub mod sla;
pub mod tpe;

pub use assemble::{assemble_system, SystemMatrices};
pub use kla::{extract_mechanism, run_kla, Distortion, Mechanism};
pub use sla::{run_sla1, run_sla2, LimitResult, SlaOptions};
pub use tpe::{run_tpe, SettlementResult};
pub use design::{design_weak_reinforcement, DesignResult, Eligibility};
pub use geometry::Vec2;
pub use model::{Block, End, Interface, Reinforcement, StructuralModel, Support};
