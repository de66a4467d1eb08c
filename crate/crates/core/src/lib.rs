//! Explicit counterexamples to `W^2_p` and `W^1_p` estimates for elliptic
//! operators whose coefficients are constant on each quadrant of the plane.
//!
//! The crate builds the singular corner harmonic, truncates it with a radial
//! cutoff, shears the sector onto a quadrant and extends by odd reflections,
//! yielding operators with four-quadrant piecewise-constant coefficients.
//! Every field carries exact jets, and the quadrature module integrates the
//! power-law singular integrands needed to certify that `||D^2 u_n||_p^p`
//! grows like `ln n` while the data stay bounded.

// `!(x > 0.0)` rejects NaN on purpose; node loops index several arrays at once.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::large_enum_variant
)]

pub mod cli;
pub mod construct;
pub mod error;
pub mod fields;
pub mod geom;
pub mod jet;
pub mod operators;
pub mod quadrature;
pub mod verify;

pub use error::{CxError, Result};
pub use fields::{eval_jet, JetEval, ScalarField};
pub use geom::{Axis, Mat2, Parity, Quadrant};
