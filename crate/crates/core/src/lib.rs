//! Maximum-likelihood estimation for one-dimensional Gaussian-process
//! emulators of deterministic models, with and without a nugget term.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense SPD factorization, solves, log-determinants and
//!   Jacobi condition numbers.
//! - [`kernels`]: exponential and Gaussian correlations and the nugget
//!   matrix `R_ν = (1 − ν)R + νI`.
//! - [`exact_exponential`]: closed forms for the exponential kernel
//!   without nugget, used as an independent oracle.
//! - [`likelihood`]: the profile likelihood of `ψ`, its maximization and
//!   mode detection.
//! - [`predictor`]: the nugget meta-model and its interpolating correction.
//! - [`simulation`]: the seeded Monte-Carlo estimator study.

// `!(x > 0.0)` is used on purpose: it also rejects NaN. Index loops read
// closer to the matrix algebra than iterator chains.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod exact_exponential;
pub mod kernels;
pub mod likelihood;
pub mod linalg;
pub mod models;
pub mod optimize;
pub mod predictor;
pub mod simulation;

pub use error::{GpError, Result};
pub use kernels::{Family, KernelSpec};
pub use likelihood::{
    fit_mle, profile_loglik, scan_profile, Dataset, FitOptions, FitResult, FitStatus, LikelihoodProfile, Mode,
    PointFlag,
};
pub use models::Model;
pub use predictor::Emulator;
