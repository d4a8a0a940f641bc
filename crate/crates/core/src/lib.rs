//! Simulation and nonparametric estimation for T-periodic, locally stationary
//! AR(1) processes
//!
//! ```text
//! X_t = a_t(t / nT) X_{t-1} + xi_t,   a_{t+T} = a_t,   t = 1..nT,   X_0 = 0
//! ```
//!
//! The crate is organised around the pieces of a typical study:
//!
//! - [`process`]: coefficient families, innovation laws, trajectory simulation
//!   and the closed-form local moments used as oracles.
//! - [`kernels`]: smoothing kernels with the metadata the estimator needs.
//! - [`estimator`]: the ratio kernel estimator of `a_s(u)`, asymptotic
//!   standard errors, the second-order bias term and a Wald-type test.
//! - [`mise`]: the bandwidth scan over `b_n = n^-lambda` and the Monte-Carlo
//!   harness that aggregates it over replications.
//! - [`period`]: cross-validated period selection and the Hölder test
//!   functions (Wiener / fractional Brownian paths).
//! - [`experiments`]: CSV ingestion, seasonal-trend preprocessing,
//!   Jarque-Bera diagnostics and per-season coefficient profiles.

// `!(x > y)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod experiments;
pub mod kernels;
pub mod mise;
pub mod period;
pub mod process;
pub mod rng;

pub use error::{Error, Result};
pub use estimator::{
    asymptotic_ci, bias_mu, estimate, estimate_grid, test_statistic, Estimate, EstimateGrid, TestResult,
};
pub use kernels::{effective_window, KernelModel};
pub use mise::{mise_scan, monte_carlo, McConfig, McReport, MiseScan};
pub use period::{cv_period, fbm_path, make_test_function, CvStyle, PeriodScan, TestFunctionKind};
pub use process::{
    simulate, theoretical_gamma2, theoretical_gamma4, CoefficientFamily, CoefficientFn, NoiseModel, Trajectory,
};
