//! Recovery of sparse non-negative vectors from noisy linear measurements
//! taken with biased subgaussian matrices.
//!
//! The crate is organised along the pipeline of a recovery study:
//!
//! - [`ensembles`] draws measurement matrices, signals and noise, and
//!   implements the row-pairing transform that removes a constant bias.
//! - [`solvers`] holds the two recovery programs (non-negative least squares
//!   and basis pursuit denoising) together with an exhaustive NNLS oracle.
//! - [`geometry`] provides best s-term errors, nullspace-property checks and
//!   the closed-form supremum over sparse unit balls.
//! - [`certificates`] computes the positive-orthant (M⁺) witness, Monte Carlo
//!   small-ball quantities and sample-complexity thresholds.
//! - [`bounds`] evaluates the NNLS error bound and checks it on instances.
//! - [`experiments`] reproduces the NMSE-vs-m and width-vs-μ studies.
//!
//! All randomness flows from explicit `u64` seeds; see [`seeding`].

pub mod bounds;
pub mod certificates;
pub mod ensembles;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod seeding;
pub mod solvers;
pub mod stats;

pub use error::{Error, Result};
pub use nalgebra::{DMatrix, DVector};
