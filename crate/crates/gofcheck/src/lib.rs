//! Goodness-of-fit testing for linear regression models.
//!
//! The tests standardize the OLS residuals, order them by a key (fitted
//! values for a full model check, a covariate or covariate-subset predictor
//! for partial checks), and accumulate them into a step process. Systematic
//! runs of same-signed residuals show up as large excursions, measured by a
//! KS-type supremum or a CvM-type integral statistic. The null distribution
//! is calibrated by permuting residuals and refitting the model for every
//! replicate; raw-data permutation, a normal-multiplier simulation scheme,
//! the wild bootstrap, and the residual bootstrap are available for
//! comparison.
//!
//! Everything is deterministic under a master seed, independent of worker
//! count.

pub mod engine;
pub mod error;
pub mod linalg;
pub mod linreg;
pub mod nullgen;
pub mod process;
mod seeding;
pub mod simlab;

pub mod cli;

pub use engine::{
    envelope, exhaustive_test, permutation_p_value, run_test, run_test_both, GofTestResult,
    TestSpec, TraceRow, EXHAUSTIVE_MAX_N,
};
pub use error::{Error, Result};
pub use linreg::{fit_ols, refit_on_outcome, Dataset, FitResult, OlsSolver};
pub use nullgen::{
    permuted_outcome, raw_permuted_outcome, residual_bootstrap_outcome, sw_outcome, wild_outcome,
    NullMethod, ReplicateStream, WildDist,
};
pub use process::{
    build_process, cvm_statistic, ks_statistic, ordering_values, plugin_covariance, OrderingKey,
    ResidualProcess, Statistic,
};
pub use simlab::{generate, run_study, McResult, ScenarioFamily, ScenarioSpec};
