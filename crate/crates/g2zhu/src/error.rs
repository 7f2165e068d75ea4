use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain violation: {0}")]
    Domain(String),
    #[error("point |z| = {modulus:.6e} outside annulus [{lower:.6e}, {upper:.6e}]")]
    OutsideAnnulus { modulus: f64, lower: f64, upper: f64 },
    #[error("point lies in the excised disc: |z| = {modulus:.6e} < {lower:.6e}")]
    ExcisedDisc { modulus: f64, lower: f64 },
    #[error("coincident points")]
    CoincidentPoints,
    #[error("argument is a lattice point")]
    LatticePoint,
    #[error("series did not converge: {0}")]
    NonConvergence(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("vanishing Wronskian")]
    WronskianZero,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
