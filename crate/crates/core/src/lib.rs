//! Finite-volume Monte Carlo solver for scalar stochastic conservation laws
//!
//! ```text
//! du + div A(u) dt = Φ(u) dW    in (0,T) × D
//! u(0) = u_0,   u = u_b on (0,T) × ∂D
//! ```
//!
//! in one space dimension, built by vanishing viscosity with a heat-equation
//! boundary lift, together with kinetic-formulation diagnostics (kinetic
//! function, parabolic kinetic measure, boundary traces and defect measures)
//! and Monte Carlo drivers for the L¹-contraction estimate.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod experiments;
pub mod flux;
pub mod grid;
pub mod kinetic;
pub mod lift;
pub mod noise;
pub mod report;
pub mod solver;

pub use error::{Error, Result};

/// Version string embedded in every artifact.
pub const VERSION: &str = concat!("skl-core ", env!("CARGO_PKG_VERSION"));
