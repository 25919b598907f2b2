use thiserror::Error;

use crate::expr::ExprError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("x = {x} lies outside [0, 1]")]
    Domain { x: f64 },

    #[error("derivative order {order} is not supported (maximum 2)")]
    UnsupportedOrder { order: usize },

    #[error("profile `{name}` is not positive: value {value} at x = {x}")]
    NotPositive { name: String, value: f64, x: f64 },

    #[error("profile `{name}` is not finite at x = {x}")]
    NotFinite { name: String, x: f64 },

    #[error("representation error: {0}")]
    Representation(String),

    #[error("ODE integration failed at x = {x}: {reason}")]
    Integration { x: f64, reason: String },

    #[error("spectral parameter z = {z} is within {distance:e} of a Dirichlet eigenvalue (pole guard)")]
    Pole { z: f64, distance: f64 },

    #[error("frequency guard rejected mode (m = {m}, n = {n}): |Delta| = {delta_abs:e}")]
    Frequency { m: i64, n: i64, delta_abs: f64 },

    #[error("eigenvalue search failed: {0}")]
    Search(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("degenerate derivative: {0}")]
    Degenerate(String),

    #[error("boundary data support violation: relative mass {ratio:e} outside the Dirichlet set")]
    Support { ratio: f64 },

    #[error("blow-up while integrating the conformal factor at x = {x}: c = {value}")]
    BlowUp { x: f64, value: f64 },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
