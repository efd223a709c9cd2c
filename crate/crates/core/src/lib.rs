//! Confidence regions for quantum state tomography.
//!
//! Outcome counts from any tomographically complete measurement are turned
//! into a linear-inversion estimate together with a region that contains the
//! true state with probability at least `1 − δ`:
//!
//! - kind A: a Hilbert–Schmidt ball of radius `ε·σ_A`,
//! - kind B: an ellipsoid `‖M v(ρ − ρ̂)‖₂ ≤ ε·σ_B`,
//! - kind R: a spectral-norm reference ball for schemes with known constants,
//! - kind G: the Gaussian-approximation ellipsoid used for comparison.
//!
//! The [`feasibility`] module intersects regions with the state space (and
//! with the PPT-mixture relaxation of biseparable states) by Dykstra
//! projections, and [`sim`] runs the Monte Carlo experiments.

// `!(x >= 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bernstein;
pub mod counts;
pub mod error;
pub mod feasibility;
pub mod herm;
pub mod json;
pub mod mmap;
pub mod regions;
pub mod schemes;
pub mod sim;
pub mod special;

pub use error::{Error, Result};
pub use herm::{HermOp, VecRep};
