//! Boundary-value problems and spectra of ordinary differential operators
//! with integrable and distributional coefficients.
//!
//! The library realizes such operators through quasi-derivative
//! first-order systems: coefficient tables of integrable functions define
//! the trial and test spaces, a lambda-affine coefficient table defines a
//! bounded operator between them, and the equation T Y = F becomes an
//! (n+m)-dimensional linear system of absolutely continuous functions with
//! boundary conditions split between a trace matrix U and the dual
//! conditions carried by the kernel of V. Spectra of the induced
//! unbounded operators are located as the roots of the characteristic
//! boundary determinant of the pencil T - lambda JI.
//!
//! Modules:
//! - [`coeffs`]: piecewise closed-form coefficient functions, quadrature,
//!   antiderivatives;
//! - [`quasisystem`]: coefficient tables, fundamental matrices,
//!   trajectory reconstruction;
//! - [`operator`]: the operator type, Fredholm index, weak form, system
//!   assembly, boundary operator;
//! - [`solver`]: linear IVP/BVP solvers;
//! - [`spectral`]: eigenvalue scans, eigenfunctions, symmetry and
//!   numerical-range diagnostics;
//! - [`problems`]: ready-made problem families;
//! - [`config`]: TOML descriptions of all of the above.

pub mod coeffs;
pub mod config;
pub mod error;
pub mod linalg;
pub mod operator;
pub mod problems;
pub mod quasisystem;
pub mod solver;
pub mod spectral;

pub use coeffs::{CoefficientFunction, Expr, Piece, PieceEnd, QuadOptions};
pub use error::{Error, Result};
pub use operator::{
    apply_t, assemble_system, boundary_matrix, fredholm_index, functional_pairing, validate_spec,
    BoundaryOperator, FirstOrderSystem, FunctionalData, OperatorSpec, PEntry,
};
pub use problems::{
    fourth_order_dirichlet, fourth_order_measure, krein_feller, second_order_dirichlet,
    third_order_periodic, KreinSolver, MeasureFunction, MonotoneMap,
};
pub use quasisystem::{
    boundary_trace, fundamental_matrix, invert_fundamental, reconstruct, validate_system,
    CoefficientSystem, FundamentalMatrix, ValidationReport, VectorTrajectory,
};
pub use solver::{integrate_ivp, solve_bvp, BvpSolution, IvpOptions};
pub use spectral::{
    char_det, check_symmetry, eigenfunction, find_eigenvalues, numerical_range_sector,
    ScanOptions, SpectralResult, SpectralWindow,
};
