//! Multivariate portmanteau diagnostics for fitted vector autoregressions.
//!
//! Residual autocorrelations of a fitted VAR(p) are summarized by the
//! classical `Q_m`, the modified `Q̃_m`, and the generalized-variance
//! statistic `D_m = −n log|𝕽̂_m|`, where `𝕽̂_m` is the block Toeplitz matrix
//! of residual autocorrelations up to lag `m`. Significance comes either from
//! an `a·χ²_b` approximation or from a Monte-Carlo test that simulates and
//! refits the fitted model.

pub mod asymptotics;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod estimate;
pub mod io;
pub mod matrix;
pub mod montecarlo;
pub mod serde_inf;
pub mod study;
pub mod varma;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use varma::{ModelSpec, Series};
