//! Randomized block proximal damped Newton (RBPDN) for composite
//! self-concordant minimization `min f(x) + g(x)`, where `f` is smooth and
//! self-concordant and `g` is block separable.
//!
//! * [`sc`]: the `ω`/`ω★` pair and local norms.
//! * [`problems`]: regularized logistic regression (with optional ℓ1) and
//!   synthetic data.
//! * [`subsolvers`]: conjugate gradient and FISTA block solvers with
//!   inexactness certificates.
//! * [`duality`]: dual objectives and the duality-gap stopping test.
//! * [`solver`]: the RBPDN driver; PDN/DN are its single-block case.
//! * [`rbapg`]: accelerated randomized block proximal gradient baseline.
//! * [`bench`]: multi-copy benchmark harness behind the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod data;
pub mod duality;
pub mod error;
pub mod linalg;
pub mod problems;
pub mod rbapg;
pub mod sc;
pub mod solver;
pub mod subsolvers;

pub use error::{Error, Result};
pub use linalg::WeightedNormContext;
pub use problems::{
    generate_dataset, BlockPartition, BlockProblem, Dataset, LogisticProblem, QuadraticProblem,
    ScaleMode,
};
pub use solver::{pdn_solve, rbpdn_solve, SolveResult, SolveStatus, SolverConfig};
