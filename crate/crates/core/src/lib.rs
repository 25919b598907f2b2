//! Partial Dirichlet-to-Neumann maps for warped-product cylinders through
//! one-dimensional spectral reduction, together with explicit isospectral and
//! conformal families of metrics and potentials sharing the same partial data.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[cfg(feature = "cli")]
pub mod cli;
pub mod conformal3d;
pub mod deformations;
pub mod dn_assembler;
pub mod error;
pub mod expr;
pub mod jet;
pub mod ode;
pub mod par;
pub mod profiles;
pub mod quad;
pub mod roots;
pub mod sl_engine;
pub mod spline;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
