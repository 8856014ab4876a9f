//! Exact tables, parametrizations and estimators for the concentric-ring
//! family: jointly symmetric binary distributions generated over a star graph
//! in which `Q` leaves depend on one binary root with a common correlation
//! `rho` (equivalently, odds parameter `alpha = (1 + rho) / (1 - rho)`).
//!
//! All tables share a single cell order: leaf 1 in the least significant bit
//! and the root, when present, in the most significant bit.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counts;
pub mod dependence;
pub mod error;
pub mod estimation;
pub mod model;
pub mod sample;
pub mod simulate;
pub mod transforms;

pub use counts::CountTable;
pub use dependence::{measures, MeasureSet, ReversalReport, TwoByTwo};
pub use error::{Error, Result};
pub use estimation::{EmConfig, EmStep, EmTrace, Estimate, Flag};
pub use model::{alpha_to_rho, rho_to_alpha, IndexStats, ModelSpec, ProbVector};
pub use simulate::{SimulationConfig, SimulationReport};
pub use transforms::{BaseMatrix, InteractionKind, InteractionVector};
