//! Numerical simulator and verification harness for the axisymmetric
//! inviscid model of the 3D Euler equations,
//!
//! ```text
//! ∂_t u = ν L₅u + 2u ∂_zψ,   ∂_t ω = ν L₅ω + ∂_z(u²),   −L₅ψ = ω,
//! L₅ = ∂_r² + (3/r)∂_r + ∂_z²,
//! ```
//!
//! together with runtime monitors for the weighted functionals that govern
//! finite-time blow-up and large-data decay.
//!
//! The numerical code is generic over the [`Scalar`] trait (`f32` or `f64`);
//! the aliases at the bottom of this file fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod dynamics;
pub mod elliptic;
pub mod error;
pub mod grid;
pub mod jet;
pub mod linalg;
pub mod oracle;
pub mod scalar;
pub mod specfun;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Grid64 = grid::Grid<f64>;
pub type Field64 = grid::Field<f64>;
pub type EllipticSolver64 = elliptic::EllipticSolver<f64>;
pub type ModelState64 = dynamics::ModelState<f64>;
pub type DecayState64 = dynamics::DecayState<f64>;
pub type StepControl64 = dynamics::StepControl<f64>;
pub type TestFunctionPair64 = diagnostics::TestFunctionPair<f64>;
pub type FunctionalSeries64 = diagnostics::FunctionalSeries<f64>;
