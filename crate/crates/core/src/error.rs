use thiserror::Error;

use crate::quadrature::QuadratureError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CxError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("field is singular at ({}, {})", point[0], point[1])]
    Singular { point: [f64; 2] },
    #[error("non-finite input or result at ({}, {})", point[0], point[1])]
    NonFinite { point: [f64; 2] },
    #[error("derivative order {requested} exceeds the supported maximum")]
    OrderTooHigh { requested: usize },
    #[error("matrix is singular (det = {det})")]
    SingularMatrix { det: f64 },
    #[error("coefficients are not elliptic (smallest symmetric eigenvalue {delta})")]
    NonElliptic { delta: f64 },
    #[error("instance kind {0} does not support this operation")]
    WrongKind(&'static str),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

pub type Result<T, E = CxError> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> CxError {
    CxError::InvalidParameter {
        name,
        value,
        reason,
    }
}
