//! Test orchestration: observed statistic, replicate statistics under a
//! null-generation method, and the permutation p-value.
//!
//! Each replicate builds its outcome from the observed fit, refits the
//! model to it, recomputes the ordering keys from the replicate fit, and
//! standardizes by the replicate's own residual standard deviation.
//! Replicates run concurrently; every replicate's draws are a pure function
//! of `(master_seed, k)`, so the result never depends on worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linreg::{Dataset, FitResult, OlsSolver};
use crate::nullgen::{NullMethod, ReplicateStream};
use crate::process::{
    build_process, cvm_statistic, ks_statistic, ordering_values, OrderingKey, ResidualProcess,
    Statistic,
};

/// Largest n for which the full permutation group is enumerated.
pub const EXHAUSTIVE_MAX_N: usize = 8;

/// Complete description of one test run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestSpec {
    pub ordering: OrderingKey,
    pub statistic: Statistic,
    pub method: NullMethod,
    /// Number of random replicates K (>= 1).
    pub n_perms: usize,
    pub master_seed: u64,
    /// Number of replicate processes to retain for plotting (M <= K).
    pub collect_traces: usize,
    /// Order refitted residuals by the original fit's keys instead of the
    /// replicate fit's keys. Off by default; the default recomputes keys
    /// from each replicate fit.
    pub keys_from_original_fit: bool,
}

impl TestSpec {
    pub fn new(
        ordering: OrderingKey,
        statistic: Statistic,
        method: NullMethod,
        n_perms: usize,
        master_seed: u64,
    ) -> Self {
        TestSpec {
            ordering,
            statistic,
            method,
            n_perms,
            master_seed,
            collect_traces: 0,
            keys_from_original_fit: false,
        }
    }

    pub fn with_traces(mut self, m: usize) -> Self {
        self.collect_traces = m;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_perms == 0 {
            return Err(Error::InvalidParams("n_perms must be >= 1".into()));
        }
        if self.collect_traces > self.n_perms {
            return Err(Error::InvalidParams(format!(
                "collect_traces = {} exceeds n_perms = {}",
                self.collect_traces, self.n_perms
            )));
        }
        Ok(())
    }
}

/// Outcome of a test run.
#[derive(Debug, Clone)]
pub struct GofTestResult {
    /// Observed statistic T.
    pub t_observed: f64,
    /// Replicate statistics T_1..T_K.
    pub t_replicates: Vec<f64>,
    /// (1 + #{k : T_k >= T}) / (K + 1) for random replicates; the plain
    /// proportion over the whole group for the exhaustive test.
    pub p_value: f64,
    /// The observed process.
    pub observed_process: ResidualProcess,
    /// First `collect_traces` replicate processes, by replicate index.
    pub replicate_traces: Vec<ResidualProcess>,
    /// The spec that produced this result.
    pub spec: TestSpec,
}

/// The estimator (1 + #{k : T_k >= T}) / (K + 1).
pub fn permutation_p_value(t_observed: f64, t_replicates: &[f64]) -> f64 {
    let exceed = t_replicates.iter().filter(|&&t| t >= t_observed).count();
    (1 + exceed) as f64 / (t_replicates.len() + 1) as f64
}

struct ReplicateOutcome {
    ks: f64,
    cvm: f64,
    trace: Option<ResidualProcess>,
}

struct RunPass {
    observed_process: ResidualProcess,
    t_observed: [f64; 2], // [ks, cvm]
    t_replicates: [Vec<f64>; 2],
    traces: Vec<ResidualProcess>,
}

/// A process that is identically zero on the replicate's key grid, used for
/// the measure-zero event that a replicate refit is a perfect fit. Its
/// statistic is zero by construction; `sigma_used` is recorded as 0.
fn zero_process(keys_raw: &[f64]) -> ResidualProcess {
    let zeros = vec![0.0; keys_raw.len()];
    // sigma = 1 builds the aggregation; the cum values are all zero anyway
    let mut proc = build_process(&zeros, keys_raw, 1.0).expect("finite keys");
    proc.sigma_used = 0.0;
    proc
}

fn evaluate_replicate(
    solver: &OlsSolver,
    observed: &FitResult,
    observed_keys: &[f64],
    data: &Dataset,
    spec: &TestSpec,
    k: u64,
    keep_trace: bool,
) -> Result<ReplicateOutcome> {
    let stream = ReplicateStream::new(spec.master_seed, k);
    let outcome = spec.method.outcome(observed, data, &stream);
    let refit = solver.fit(&outcome)?;

    if refit.degenerate_variance() {
        // perfect replicate fit: the standardized process is defined as
        // identically zero, contributing a non-extreme statistic
        let trace = if keep_trace {
            let keys = if spec.keys_from_original_fit {
                observed_keys.to_vec()
            } else {
                ordering_values(&refit, data, &spec.ordering)?
            };
            Some(zero_process(&keys))
        } else {
            None
        };
        return Ok(ReplicateOutcome {
            ks: 0.0,
            cvm: 0.0,
            trace,
        });
    }

    let keys = if spec.keys_from_original_fit {
        observed_keys.to_vec()
    } else {
        ordering_values(&refit, data, &spec.ordering)?
    };
    let proc = build_process(&refit.residuals, &keys, refit.sigma_hat)?;
    Ok(ReplicateOutcome {
        ks: ks_statistic(&proc),
        cvm: cvm_statistic(&proc),
        trace: keep_trace.then_some(proc),
    })
}

fn run_pass(data: &Dataset, spec: &TestSpec) -> Result<(RunPass, FitResult)> {
    spec.validate()?;
    let solver = OlsSolver::new(data)?;
    let observed = solver.fit(data.y())?;
    if observed.degenerate_variance() {
        return Err(Error::DegenerateVariance {
            sigma: observed.sigma_hat,
        });
    }
    let observed_keys = ordering_values(&observed, data, &spec.ordering)?;
    let observed_process = build_process(&observed.residuals, &observed_keys, observed.sigma_hat)?;
    let t_observed = [
        ks_statistic(&observed_process),
        cvm_statistic(&observed_process),
    ];

    let m = spec.collect_traces as u64;
    let outcomes: Vec<ReplicateOutcome> = (1..=spec.n_perms as u64)
        .into_par_iter()
        .map(|k| evaluate_replicate(&solver, &observed, &observed_keys, data, spec, k, k <= m))
        .collect::<Result<_>>()?;

    let mut ks = Vec::with_capacity(outcomes.len());
    let mut cvm = Vec::with_capacity(outcomes.len());
    let mut traces = Vec::with_capacity(spec.collect_traces);
    for o in outcomes {
        ks.push(o.ks);
        cvm.push(o.cvm);
        if let Some(t) = o.trace {
            traces.push(t);
        }
    }
    Ok((
        RunPass {
            observed_process,
            t_observed,
            t_replicates: [ks, cvm],
            traces,
        },
        observed,
    ))
}

fn result_for(pass: &RunPass, statistic: Statistic, spec: &TestSpec) -> GofTestResult {
    let idx = match statistic {
        Statistic::Ks => 0,
        Statistic::Cvm => 1,
    };
    let t_observed = pass.t_observed[idx];
    let t_replicates = pass.t_replicates[idx].clone();
    let p_value = permutation_p_value(t_observed, &t_replicates);
    let mut spec = spec.clone();
    spec.statistic = statistic;
    GofTestResult {
        t_observed,
        t_replicates,
        p_value,
        observed_process: pass.observed_process.clone(),
        replicate_traces: pass.traces.clone(),
        spec,
    }
}

/// Runs the full test described by `spec`.
pub fn run_test(data: &Dataset, spec: &TestSpec) -> Result<GofTestResult> {
    let (pass, _) = run_pass(data, spec)?;
    Ok(result_for(&pass, spec.statistic, spec))
}

/// Runs one replicate pass and reports both statistics from it.
///
/// Equivalent to two `run_test` calls with the same seed, at half the cost.
pub fn run_test_both(data: &Dataset, spec: &TestSpec) -> Result<(GofTestResult, GofTestResult)> {
    let (pass, _) = run_pass(data, spec)?;
    Ok((
        result_for(&pass, Statistic::Ks, spec),
        result_for(&pass, Statistic::Cvm, spec),
    ))
}

/// Enumerates the whole permutation group (n! replicates) instead of
/// sampling; only for permutation of residuals and n <= [`EXHAUSTIVE_MAX_N`].
///
/// The p-value is the plain proportion #{pi : T_pi >= T} / n!; the identity
/// permutation reproduces the observed statistic, so p >= 1/n!.
pub fn exhaustive_test(data: &Dataset, spec: &TestSpec) -> Result<GofTestResult> {
    use itertools::Itertools;

    if spec.method != NullMethod::PermuteResiduals {
        return Err(Error::InvalidParams(
            "exhaustive enumeration is defined for permutation of residuals".into(),
        ));
    }
    let n = data.n();
    if n > EXHAUSTIVE_MAX_N {
        return Err(Error::TooLarge {
            n,
            max: EXHAUSTIVE_MAX_N,
        });
    }
    let solver = OlsSolver::new(data)?;
    let observed = solver.fit(data.y())?;
    if observed.degenerate_variance() {
        return Err(Error::DegenerateVariance {
            sigma: observed.sigma_hat,
        });
    }
    let observed_keys = ordering_values(&observed, data, &spec.ordering)?;
    let observed_process = build_process(&observed.residuals, &observed_keys, observed.sigma_hat)?;
    let t_observed = spec.statistic.evaluate(&observed_process);

    let mut t_replicates = Vec::new();
    for (idx, perm) in (0..n).permutations(n).enumerate() {
        if idx == 0 {
            // lexicographically first permutation is the identity: its
            // statistic is the observed one by definition
            debug_assert!(perm.iter().enumerate().all(|(i, &v)| i == v));
            t_replicates.push(t_observed);
            continue;
        }
        let outcome: Vec<f64> = observed
            .fitted
            .iter()
            .zip(&perm)
            .map(|(f, &pi)| f + observed.residuals[pi])
            .collect();
        let refit = solver.fit(&outcome)?;
        if refit.degenerate_variance() {
            t_replicates.push(0.0);
            continue;
        }
        let keys = if spec.keys_from_original_fit {
            observed_keys.clone()
        } else {
            ordering_values(&refit, data, &spec.ordering)?
        };
        let proc = build_process(&refit.residuals, &keys, refit.sigma_hat)?;
        t_replicates.push(spec.statistic.evaluate(&proc));
    }

    let total = t_replicates.len();
    let exceed = t_replicates.iter().filter(|&&t| t >= t_observed).count();
    let p_value = exceed as f64 / total as f64;

    let mut spec_echo = spec.clone();
    spec_echo.n_perms = total;
    spec_echo.collect_traces = 0;
    Ok(GofTestResult {
        t_observed,
        t_replicates,
        p_value,
        observed_process,
        replicate_traces: Vec::new(),
        spec: spec_echo,
    })
}

/// One row of the long-format envelope table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    /// 0 for the observed process, 1..=M for retained replicates.
    pub replicate_id: usize,
    pub key: f64,
    pub cum: f64,
}

/// Flattens the observed process and the retained replicate processes into
/// a long-format table for the envelope plot.
pub fn envelope(result: &GofTestResult) -> Result<Vec<TraceRow>> {
    if result.replicate_traces.is_empty() {
        return Err(Error::NoTraces);
    }
    let mut rows = Vec::new();
    let mut push = |id: usize, proc: &ResidualProcess| {
        for (k, c) in proc.keys.iter().zip(&proc.cum) {
            rows.push(TraceRow {
                replicate_id: id,
                key: *k,
                cum: *c,
            });
        }
    };
    push(0, &result.observed_process);
    for (i, proc) in result.replicate_traces.iter().enumerate() {
        push(i + 1, proc);
    }
    Ok(rows)
}
