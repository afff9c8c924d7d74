//! Semismooth Newton and active-set solvers for
//!
//! ```text
//! min_u ½‖Ku − f‖² + Σ_k w_k |u_k|,   w_k ≥ w0 > 0,
//! ```
//!
//! with an iterated soft-thresholding baseline, duality-gap certificates and
//! generators for three standard test problems.
//!
//! ```
//! use ndarray::array;
//! use ssn_l1::{solve_ssn, LinearMap, Problem, SolveOptions, Weights};
//!
//! let p = Problem::new(
//!     LinearMap::identity(3),
//!     array![3.0, 0.5, -2.0],
//!     Weights::constant(3, 1.0)?,
//!     1.0,
//! )?;
//! let report = solve_ssn(&p, array![0.0, 0.0, 0.0].view(), &SolveOptions::default())?;
//! assert!(report.converged());
//! assert_eq!(report.solution, array![2.0, 0.0, -1.0]);
//! # Ok::<(), ssn_l1::Error>(())
//! ```

pub mod derivative;
pub mod duality;
mod error;
pub mod harness;
pub mod linalg;
pub mod operators;
pub mod problems;
pub mod prox;
pub mod solvers;

pub use derivative::{generalized_derivative_mask, NewtonSystem};
pub use duality::{certify, semismooth_reformulation_check, ConjugateValue, DualCertificate};
pub use error::{Error, Result};
pub use harness::{run_certify, run_experiment, run_scaling, solve_with, OutputFormat, RunConfig, SolverKind};
pub use operators::LinearMap;
pub use problems::{make_instance, ExperimentKind, ExperimentSpec, GroundTruth, Noise};
pub use prox::{
    active_inactive, boundary_margin, objective, optimality_residual, shrink, soft_threshold, ActiveSet, Problem,
    Weights,
};
pub use solvers::{
    compute_report_row, solve_active_set, solve_ista, solve_ssn, IterationRecord, SolveOptions, SolveReport, Status,
    StopReason, StopRule,
};
