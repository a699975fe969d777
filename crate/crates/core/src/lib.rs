//! Riemann-wave superpositions for the one-dimensional compressible Euler
//! system.
//!
//! The crate is organised bottom-up:
//!
//! * [`scalar`] and [`linalg`]: the generic scalar bound, dual numbers and
//!   small dense linear algebra.
//! * [`fields`]: vector fields on the `(ρ, p, u)` state space with exact
//!   Jacobians, Lie brackets and span decompositions.
//! * [`euler`]: the Euler coefficient matrix, characteristic fields, simple
//!   and double waves, and the reduced `κ = 3` matrix.
//! * [`quasirect`]: quasi-rectifiability tests and rescaling checks.
//! * [`solver`]: characteristic upwind integration of the full and reduced
//!   systems plus exact-solution residuals.
//! * [`interaction`]: superposition region, entering/leaving waves and the
//!   interaction index.
//! * [`liealg`]: truncated closure of the generated Lie algebra.
//! * [`geometry`]: the parametrised superposition region and the curvature
//!   of its leaves.
//!
//! Everything numerical is generic over [`Real`]; the aliases at the bottom of
//! this file fix the scalar to `f64` for everyday use.

// `!(x > 0)` deliberately rejects NaN; index loops over 3-vectors read as math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod euler;
pub mod fields;
pub mod geometry;
pub mod interaction;
pub mod liealg;
pub mod linalg;
pub mod ode;
pub mod quadrature;
pub mod quasirect;
pub mod sampling;
pub mod scalar;
pub mod solver;

pub use scalar::{Dual, Real};

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("state must have rho > 0 and p > 0, got rho = {rho}, p = {p}")]
    NonPositiveState { rho: f64, p: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix has a complex eigenvalue pair")]
    ComplexSpectrum,
    #[error("matrix is not diagonalizable")]
    NotDiagonalizable,
    #[error("field family is wedge-dependent at state {state:?}")]
    DegenerateFamily { state: [f64; 3] },
    #[error("scalar field `{label}` vanishes at state {state:?}")]
    VanishingScale { label: String, state: [f64; 3] },
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("integral curve left the positive cone at {state:?}")]
    LeftPositiveCone { state: [f64; 3] },
    #[error("quadrature did not converge for pair ({i}, {j}) at radius {radius}: successive orders differ by {difference:e}")]
    QuadratureNonConvergence { i: usize, j: usize, radius: f64, difference: f64 },
    #[error("CFL number {cfl} exceeds the limit {limit}")]
    CflViolation { cfl: f64, limit: f64 },
    #[error("non-diagonalizable coefficient matrix at node {node}")]
    NodeNotDiagonalizable { node: usize },
    #[error("positivity lost at node {node}, t = {time}")]
    PositivityLoss { node: usize, time: f64 },
    #[error("non-finite value at node {node}, t = {time}")]
    NonFinite { node: usize, time: f64 },
    #[error("gradient blow-up at t = {time}: max |r_x| grew by a factor {growth:e}")]
    GradientBlowUp { time: f64, growth: f64 },
    #[error("bracket not closed in the graded ansatz: {detail} (residual {residual:e})")]
    NotClosed { detail: String, residual: f64 },
    #[error("surface is not immersed at ({s1}, {s2}): EG - F^2 = {gram}")]
    ImmersionFailure { s1: f64, s2: f64, gram: f64 },
    #[error("wave detection failed: {0}")]
    DetectionFailure(String),
    #[error("leaves collide: {0}")]
    LeafCollision(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Double-precision state.
pub type State = fields::StateVector<f64>;
/// Shared double-precision vector field.
pub type Field = fields::FieldRef<f64>;
/// Shared double-precision scalar field.
pub type Scalar = fields::ScalarRef<f64>;
/// Double-precision gas parameters.
pub type Gas = euler::GasParameters<f64>;
/// Double-precision finite-difference grid.
pub type Grid = solver::Grid1D<f64>;
/// Double-precision time series of grids.
pub type Series = solver::TimeSeries<f64>;
/// Single-precision state, for callers trading accuracy for memory.
pub type State32 = fields::StateVector<f32>;
