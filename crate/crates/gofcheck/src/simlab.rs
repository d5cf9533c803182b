//! Data-generating scenarios and a Monte-Carlo study runner for size and
//! power experiments.
//!
//! Covariates are iid uniform on [0,1]. The returned design is always the
//! model the test will fit, which for the omission families deliberately
//! lacks the quadratic or interaction column that generated the data.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_test_both, TestSpec};
use crate::error::{Error, Result};
use crate::linreg::Dataset;
use crate::process::Statistic;
use crate::seeding;

const SALT_DATA: u64 = 0xda7a;
const SALT_TEST: u64 = 0x7e57;

/// The simulation families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioFamily {
    /// Two covariates, normal errors: y = b0 + b1 x1 + b2 x2 + N(0, sigma2).
    NullNormal,
    /// Two covariates, centered gamma errors with shape `a` and scale `s`.
    NullGamma,
    /// Two covariates, heteroscedastic normal errors with
    /// sd_i = 1 + theta * x_i1.
    NullHetero,
    /// Adds beta3 * x1^2 to the mean; the fitted design omits it.
    QuadraticOmission,
    /// Adds beta3 * x1 * x2 to the mean; the fitted design omits it.
    InteractionOmission,
    /// Five covariates with equal effects 0.25 plus beta6 * x1^2.
    PartialQuadratic5,
    /// Five covariates with equal effects 0.25 plus beta6 * x1 * x2.
    PartialInteraction5,
}

impl ScenarioFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioFamily::NullNormal => "null_normal",
            ScenarioFamily::NullGamma => "null_gamma",
            ScenarioFamily::NullHetero => "null_hetero",
            ScenarioFamily::QuadraticOmission => "quadratic_omission",
            ScenarioFamily::InteractionOmission => "interaction_omission",
            ScenarioFamily::PartialQuadratic5 => "partial_quadratic5",
            ScenarioFamily::PartialInteraction5 => "partial_interaction5",
        }
    }

    fn n_covariates(&self) -> usize {
        match self {
            ScenarioFamily::NullNormal
            | ScenarioFamily::NullGamma
            | ScenarioFamily::NullHetero
            | ScenarioFamily::QuadraticOmission
            | ScenarioFamily::InteractionOmission => 2,
            ScenarioFamily::PartialQuadratic5 | ScenarioFamily::PartialInteraction5 => 5,
        }
    }

    fn required_params(&self) -> &'static [&'static str] {
        match self {
            ScenarioFamily::NullNormal => &["beta1", "beta2", "sigma2"],
            ScenarioFamily::NullGamma => &["beta1", "beta2", "a", "s"],
            ScenarioFamily::NullHetero => &["beta1", "beta2", "theta"],
            ScenarioFamily::QuadraticOmission | ScenarioFamily::InteractionOmission => {
                &["beta1", "beta3"]
            }
            ScenarioFamily::PartialQuadratic5 | ScenarioFamily::PartialInteraction5 => &["beta6"],
        }
    }

    fn optional_params(&self) -> &'static [&'static str] {
        match self {
            ScenarioFamily::NullNormal | ScenarioFamily::NullGamma | ScenarioFamily::NullHetero => {
                &["beta0"]
            }
            ScenarioFamily::QuadraticOmission | ScenarioFamily::InteractionOmission => {
                &["beta0", "beta2", "sigma2"]
            }
            ScenarioFamily::PartialQuadratic5 | ScenarioFamily::PartialInteraction5 => {
                &["beta0", "sigma2"]
            }
        }
    }
}

/// A declarative description of one data-generating process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub family: ScenarioFamily,
    pub n: usize,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(family: ScenarioFamily, n: usize, params: &[(&str, f64)], seed: u64) -> Self {
        ScenarioSpec {
            family,
            n,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            seed,
        }
    }

    fn param(&self, name: &str) -> Result<f64> {
        self.params
            .get(name)
            .copied()
            .ok_or_else(|| Error::InvalidParams(format!("missing parameter '{name}'")))
    }

    fn param_or(&self, name: &str, default: f64) -> f64 {
        self.params.get(name).copied().unwrap_or(default)
    }

    pub fn validate(&self) -> Result<()> {
        for required in self.family.required_params() {
            self.param(required)?;
        }
        for key in self.params.keys() {
            let known = self.family.required_params().contains(&key.as_str())
                || self.family.optional_params().contains(&key.as_str());
            if !known {
                return Err(Error::InvalidParams(format!(
                    "unknown parameter '{key}' for family {}",
                    self.family.name()
                )));
            }
        }
        let p = self.family.n_covariates() + 1;
        if self.n < p + 1 {
            return Err(Error::InvalidParams(format!(
                "n = {} too small for a design with p = {p}",
                self.n
            )));
        }
        match self.family {
            ScenarioFamily::NullNormal => {
                if self.param("sigma2")? < 0.0 {
                    return Err(Error::InvalidParams("sigma2 must be >= 0".into()));
                }
            }
            ScenarioFamily::NullGamma => {
                if self.param("a")? <= 0.0 || self.param("s")? <= 0.0 {
                    return Err(Error::InvalidParams(
                        "gamma shape and scale must be positive".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn uniform_column(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

fn normal_draws(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Generates a dataset under the scenario. The design matrix is the one the
/// test fits; for the omission families it excludes the term that produced
/// the lack of fit.
pub fn generate(scenario: &ScenarioSpec) -> Result<Dataset> {
    scenario.validate()?;
    let mut rng = seeding::rng_from(scenario.seed, &[]);
    let n = scenario.n;
    let q = scenario.family.n_covariates();
    let beta0 = scenario.param_or("beta0", -0.1);

    let columns: Vec<Vec<f64>> = (0..q).map(|_| uniform_column(n, &mut rng)).collect();

    let y: Vec<f64> = match scenario.family {
        ScenarioFamily::NullNormal => {
            let (b1, b2) = (scenario.param("beta1")?, scenario.param("beta2")?);
            let sigma = scenario.param("sigma2")?.sqrt();
            let z = normal_draws(n, &mut rng);
            (0..n)
                .map(|i| beta0 + b1 * columns[0][i] + b2 * columns[1][i] + sigma * z[i])
                .collect()
        }
        ScenarioFamily::NullGamma => {
            let (b1, b2) = (scenario.param("beta1")?, scenario.param("beta2")?);
            let (a, s) = (scenario.param("a")?, scenario.param("s")?);
            let gamma = Gamma::new(a, s)
                .map_err(|e| Error::InvalidParams(format!("gamma parameters: {e}")))?;
            (0..n)
                .map(|i| {
                    let eps = gamma.sample(&mut rng) - a * s;
                    beta0 + b1 * columns[0][i] + b2 * columns[1][i] + eps
                })
                .collect()
        }
        ScenarioFamily::NullHetero => {
            let (b1, b2) = (scenario.param("beta1")?, scenario.param("beta2")?);
            let theta = scenario.param("theta")?;
            let z = normal_draws(n, &mut rng);
            (0..n)
                .map(|i| {
                    let sd = 1.0 + theta * columns[0][i];
                    beta0 + b1 * columns[0][i] + b2 * columns[1][i] + sd * z[i]
                })
                .collect()
        }
        ScenarioFamily::QuadraticOmission => {
            let b1 = scenario.param("beta1")?;
            let b2 = scenario.param_or("beta2", 0.25);
            let b3 = scenario.param("beta3")?;
            let sigma = scenario.param_or("sigma2", 0.1).sqrt();
            let z = normal_draws(n, &mut rng);
            (0..n)
                .map(|i| {
                    beta0
                        + b1 * columns[0][i]
                        + b2 * columns[1][i]
                        + b3 * (columns[0][i] * columns[0][i])
                        + sigma * z[i]
                })
                .collect()
        }
        ScenarioFamily::InteractionOmission => {
            let b1 = scenario.param("beta1")?;
            let b2 = scenario.param_or("beta2", 0.25);
            let b3 = scenario.param("beta3")?;
            let sigma = scenario.param_or("sigma2", 0.1).sqrt();
            let z = normal_draws(n, &mut rng);
            (0..n)
                .map(|i| {
                    beta0
                        + b1 * columns[0][i]
                        + b2 * columns[1][i]
                        + b3 * (columns[0][i] * columns[1][i])
                        + sigma * z[i]
                })
                .collect()
        }
        ScenarioFamily::PartialQuadratic5 | ScenarioFamily::PartialInteraction5 => {
            let b6 = scenario.param("beta6")?;
            let sigma = scenario.param_or("sigma2", 0.1).sqrt();
            let z = normal_draws(n, &mut rng);
            (0..n)
                .map(|i| {
                    let mains: f64 = columns.iter().map(|c| 0.25 * c[i]).sum();
                    let extra = match scenario.family {
                        ScenarioFamily::PartialQuadratic5 => columns[0][i] * columns[0][i],
                        _ => columns[0][i] * columns[1][i],
                    };
                    beta0 + mains + b6 * extra + sigma * z[i]
                })
                .collect()
        }
    };

    let names: Vec<String> = (1..=q).map(|j| format!("x{j}")).collect();
    Dataset::with_intercept(y, columns, names)
}

/// Aggregated rejection rates of one Monte-Carlo study.
#[derive(Debug, Clone, Serialize)]
pub struct McResult {
    pub scenario: ScenarioSpec,
    pub alpha_levels: Vec<f64>,
    /// Statistics in the order of `rejection_rates` rows.
    pub statistics: Vec<Statistic>,
    /// rejection_rates[s][a] = fraction of reps with p <= alpha_levels[a].
    pub rejection_rates: Vec<Vec<f64>>,
    /// sqrt( r (1 - r) / n_reps ) per cell.
    pub mc_stderr: Vec<Vec<f64>>,
    pub n_reps: usize,
}

impl McResult {
    /// Rate for a statistic at one alpha level.
    pub fn rate(&self, statistic: Statistic, alpha: f64) -> Option<f64> {
        let s = self.statistics.iter().position(|x| *x == statistic)?;
        let a = self.alpha_levels.iter().position(|x| *x == alpha)?;
        Some(self.rejection_rates[s][a])
    }

    pub fn stderr(&self, statistic: Statistic, alpha: f64) -> Option<f64> {
        let s = self.statistics.iter().position(|x| *x == statistic)?;
        let a = self.alpha_levels.iter().position(|x| *x == alpha)?;
        Some(self.mc_stderr[s][a])
    }

    /// CSV table with header `scenario,statistic,alpha,rate,stderr,n_reps`.
    pub fn csv_string(&self) -> String {
        let mut out = String::from("scenario,statistic,alpha,rate,stderr,n_reps\n");
        for (s, stat) in self.statistics.iter().enumerate() {
            for (a, alpha) in self.alpha_levels.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    self.scenario.family.name(),
                    stat.name(),
                    alpha,
                    self.rejection_rates[s][a],
                    self.mc_stderr[s][a],
                    self.n_reps
                ));
            }
        }
        out
    }
}

/// Runs `n_reps` independent repetitions of the scenario, testing each with
/// both statistics, and tabulates rejection rates at the given levels.
///
/// `test.master_seed` and `test.collect_traces` are ignored: per-rep seeds
/// are derived from the scenario seed so studies are restartable, and no
/// traces are kept.
pub fn run_study(
    scenario: &ScenarioSpec,
    test: &TestSpec,
    n_reps: usize,
    alphas: &[f64],
) -> Result<McResult> {
    scenario.validate()?;
    if n_reps == 0 {
        return Err(Error::InvalidParams("n_reps must be >= 1".into()));
    }
    if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
        return Err(Error::InvalidParams(
            "alpha levels must lie strictly between 0 and 1".into(),
        ));
    }

    let flags: Vec<[Vec<bool>; 2]> = (0..n_reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut data_scenario = scenario.clone();
            data_scenario.seed = seeding::derive_seed(scenario.seed, &[rep, SALT_DATA]);
            let data = generate(&data_scenario)?;

            let mut spec = test.clone();
            spec.master_seed = seeding::derive_seed(scenario.seed, &[rep, SALT_TEST]);
            spec.collect_traces = 0;
            let (ks, cvm) = run_test_both(&data, &spec)?;
            let ks_flags: Vec<bool> = alphas.iter().map(|a| ks.p_value <= *a).collect();
            let cvm_flags: Vec<bool> = alphas.iter().map(|a| cvm.p_value <= *a).collect();
            Ok([ks_flags, cvm_flags])
        })
        .collect::<Result<_>>()?;

    let statistics = vec![Statistic::Ks, Statistic::Cvm];
    let mut rejection_rates = vec![vec![0.0; alphas.len()]; 2];
    for rep in &flags {
        for (s, stat_flags) in rep.iter().enumerate() {
            for (a, hit) in stat_flags.iter().enumerate() {
                if *hit {
                    rejection_rates[s][a] += 1.0;
                }
            }
        }
    }
    for row in &mut rejection_rates {
        for v in row.iter_mut() {
            *v /= n_reps as f64;
        }
    }
    let mc_stderr = rejection_rates
        .iter()
        .map(|row| {
            row.iter()
                .map(|r| (r * (1.0 - r) / n_reps as f64).sqrt())
                .collect()
        })
        .collect();

    Ok(McResult {
        scenario: scenario.clone(),
        alpha_levels: alphas.to_vec(),
        statistics,
        rejection_rates,
        mc_stderr,
        n_reps,
    })
}
