use thiserror::Error;

use crate::operator::expr::ParseError;

pub type Result<T> = std::result::Result<T, Error>;

/// Which block of a 2x2 block matrix failed to invert.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    /// The upper-left block `A` (for a Wronskian matrix, `U`).
    UpperLeft,
    /// The Schur complement `D - C A^-1 B`.
    SchurComplement,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("table {origin}: {reason}")]
    Table { origin: String, reason: String },

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("leading coefficient p{index} vanishes at x = {x}")]
    SingularLeadingCoefficient { index: usize, x: f64 },

    #[error("coefficient {name} is not finite at x = {x}")]
    NonFiniteCoefficient { name: String, x: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("solution magnitude exceeded {cap:e} at x = {x}; rescale the problem or shorten the interval")]
    Overflow { x: f64, cap: f64 },

    #[error("argument {value} outside [{a}, {b}]")]
    OutOfInterval { value: f64, a: f64, b: f64 },

    #[error("matrix is singular (zero pivot in column {column})")]
    Singular { column: usize },

    #[error("condition estimate {estimate:e} exceeds limit {limit:e}")]
    IllConditioned { estimate: f64, limit: f64 },

    #[error("block inversion failed: {block:?} block is singular")]
    SingularBlock { block: Block },

    #[error(
        "constant matrix C is singular (rel. condition {condition:e}): the homogeneous \
         boundary-value problem has a nontrivial solution, no Green's matrix exists"
    )]
    SingularConstantMatrix { condition: f64 },

    #[error(
        "boundary matrix D is singular (rel. condition {condition:e}): the boundary-value \
         problem is not well posed"
    )]
    SingularBoundaryMatrix { condition: f64 },

    #[error("continuity system singular at t = {t}")]
    SingularGuessSystem { t: f64 },

    #[error("C is not constant across the grid: relative variation {variation:e} > {tolerance:e}; refine the grid")]
    NonConstantC { variation: f64, tolerance: f64 },
}

impl Error {
    /// Numerical failures as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularLeadingCoefficient { .. }
                | Error::Overflow { .. }
                | Error::Singular { .. }
                | Error::IllConditioned { .. }
                | Error::SingularBlock { .. }
                | Error::SingularConstantMatrix { .. }
                | Error::SingularBoundaryMatrix { .. }
                | Error::SingularGuessSystem { .. }
                | Error::NonConstantC { .. }
                | Error::NonFiniteCoefficient { .. }
        )
    }
}
