//! Green's matrices of second-order self-adjoint matrix differential
//! operators `M = diag(d/dx p_i d/dx + q_i) + V` with homogeneous Dirichlet
//! conditions, built numerically from fundamental solutions of `M y = 0`.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the common double-precision case.

pub mod blockalg;
pub mod error;
pub mod green;
pub mod matrix;
pub mod odeint;
pub mod operator;
pub mod scalar;
pub mod solve;
pub mod verify;

pub use error::{Error, Result};
pub use green::{Branch, GreenOptions, GreensMatrix, Route};
pub use matrix::Matrix;
pub use odeint::{IntegratorOptions, SolutionBundle};
pub use operator::{CoefficientFn, Grid, OperatorSpec};
pub use scalar::Real;
pub use solve::{solve_bvp, BvpSolution};
pub use verify::{CheckRecord, Lattice, Tolerances, VerificationReport};

pub type Matrix64 = Matrix<f64>;
pub type Grid64 = Grid<f64>;
pub type CoefficientFn64 = CoefficientFn<f64>;
pub type OperatorSpec64 = OperatorSpec<f64>;
pub type SolutionBundle64 = SolutionBundle<f64>;
pub type GreensMatrix64 = GreensMatrix<f64>;
