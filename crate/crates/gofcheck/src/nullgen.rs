//! Replicate-outcome generators for calibrating the test statistics.
//!
//! The default is permutation of residuals: the replicate outcome is the
//! fitted values plus a uniformly permuted residual vector, and the model is
//! refitted to it. Raw-data permutation, the simulation scheme that
//! multiplies residuals by standard normals, the wild bootstrap, and the
//! residual bootstrap are provided for comparison studies.
//!
//! Every generator draws from a [`ReplicateStream`], so the output of
//! replicate k is a pure function of `(master_seed, k)` regardless of
//! worker count or scheduling.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linreg::{Dataset, FitResult};
use crate::seeding;

/// Weight distribution for the wild bootstrap: mean 0, variance 1, bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WildDist {
    /// +1 or -1 with equal probability.
    Rademacher,
    /// Two-point distribution with third moment 1:
    /// -(sqrt(5)-1)/2 with probability (sqrt(5)+1)/(2 sqrt(5)),
    /// (sqrt(5)+1)/2 otherwise.
    MammenTwoPoint,
}

impl WildDist {
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            WildDist::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            WildDist::MammenTwoPoint => {
                let s5 = 5.0_f64.sqrt();
                let p_low = (s5 + 1.0) / (2.0 * s5);
                if rng.random::<f64>() < p_low {
                    -(s5 - 1.0) / 2.0
                } else {
                    (s5 + 1.0) / 2.0
                }
            }
        }
    }
}

/// How replicate outcomes are generated under the null.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NullMethod {
    /// Fitted values plus permuted residuals, then refit (the default).
    PermuteResiduals,
    /// Permute the raw outcome vector (comparison only; loses power).
    PermuteRawData,
    /// Fitted values plus residuals times iid standard normals, then refit.
    SwSimulation,
    /// Fitted values plus residuals times iid bounded weights, then refit.
    WildBootstrap(WildDist),
    /// Fitted values plus an iid resample of the centered residuals.
    ResidualBootstrap,
}

impl NullMethod {
    /// Generates the replicate outcome for this method.
    pub fn outcome(&self, fit: &FitResult, data: &Dataset, stream: &ReplicateStream) -> Vec<f64> {
        match self {
            NullMethod::PermuteResiduals => permuted_outcome(fit, stream),
            NullMethod::PermuteRawData => raw_permuted_outcome(data, stream),
            NullMethod::SwSimulation => sw_outcome(fit, stream),
            NullMethod::WildBootstrap(dist) => wild_outcome(fit, *dist, stream),
            NullMethod::ResidualBootstrap => residual_bootstrap_outcome(fit, stream),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NullMethod::PermuteResiduals => "perm",
            NullMethod::PermuteRawData => "rawperm",
            NullMethod::SwSimulation => "sw",
            NullMethod::WildBootstrap(_) => "wild",
            NullMethod::ResidualBootstrap => "residboot",
        }
    }
}

/// Addresses the random draws of one replicate: a pure function of the
/// master seed and the replicate index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicateStream {
    master_seed: u64,
    replicate_index: u64,
}

impl ReplicateStream {
    pub fn new(master_seed: u64, replicate_index: u64) -> Self {
        ReplicateStream {
            master_seed,
            replicate_index,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn replicate_index(&self) -> u64 {
        self.replicate_index
    }

    /// The generator for this replicate's draws.
    pub fn rng(&self) -> ChaCha8Rng {
        seeding::rng_from(self.master_seed, &[self.replicate_index])
    }
}

/// Uniform random permutation of `0..n` by Fisher-Yates.
pub fn random_permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    perm
}

/// Permutation of residuals: Y_k = fitted + permuted residuals.
pub fn permuted_outcome(fit: &FitResult, stream: &ReplicateStream) -> Vec<f64> {
    let mut rng = stream.rng();
    let perm = random_permutation(fit.residuals.len(), &mut rng);
    fit.fitted
        .iter()
        .zip(&perm)
        .map(|(f, &pi)| f + fit.residuals[pi])
        .collect()
}

/// Raw-data permutation: a random permutation of the outcome vector.
pub fn raw_permuted_outcome(data: &Dataset, stream: &ReplicateStream) -> Vec<f64> {
    let mut rng = stream.rng();
    let perm = random_permutation(data.n(), &mut rng);
    perm.iter().map(|&pi| data.y()[pi]).collect()
}

/// Simulation scheme: Y_k = fitted + residuals * iid standard normals.
pub fn sw_outcome(fit: &FitResult, stream: &ReplicateStream) -> Vec<f64> {
    let mut rng = stream.rng();
    fit.fitted
        .iter()
        .zip(&fit.residuals)
        .map(|(f, e)| {
            let z: f64 = rng.sample(StandardNormal);
            f + e * z
        })
        .collect()
}

/// Wild bootstrap: Y_k = fitted + residuals * iid bounded weights.
pub fn wild_outcome(fit: &FitResult, v_dist: WildDist, stream: &ReplicateStream) -> Vec<f64> {
    let mut rng = stream.rng();
    fit.fitted
        .iter()
        .zip(&fit.residuals)
        .map(|(f, e)| f + e * v_dist.sample(&mut rng))
        .collect()
}

/// Residual bootstrap: Y_k = fitted + iid draws from the centered residuals.
pub fn residual_bootstrap_outcome(fit: &FitResult, stream: &ReplicateStream) -> Vec<f64> {
    let mut rng = stream.rng();
    let n = fit.residuals.len();
    let mean = fit.residuals.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = fit.residuals.iter().map(|e| e - mean).collect();
    fit.fitted
        .iter()
        .map(|f| f + centered[rng.random_range(0..n)])
        .collect()
}
