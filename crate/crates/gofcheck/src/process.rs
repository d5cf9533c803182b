//! The standardized cumulative-sum residual process and its statistics.
//!
//! Residuals are standardized by the residual standard deviation, ordered by
//! a key (fitted values, one covariate, or a covariate-subset predictor),
//! and accumulated into a step function W(t). Large excursions of W signal
//! systematic runs of same-signed residuals, i.e. lack of fit. The KS
//! statistic is the largest absolute step value; the CvM statistic
//! integrates the squared process against the empirical distribution of the
//! ordering key.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linreg::{Dataset, FitResult, OlsSolver};

/// Which ordering key drives the process.
///
/// Covariate indices are 1-based positions among the non-intercept design
/// columns, i.e. `Covariate(1)` is the first covariate (design column 1).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderingKey {
    /// Order by fitted values — the full model check.
    FullModel,
    /// Order by a single covariate — a partial check for that covariate.
    Covariate(usize),
    /// Order by the partial predictor over a covariate subset,
    /// sum_{j in J} x_ij * theta_j, with the supplied fit's coefficients.
    Subset(Vec<usize>),
}

impl OrderingKey {
    /// Human-readable label for reports and plots.
    pub fn label(&self, column_names: &[String]) -> String {
        match self {
            OrderingKey::FullModel => "fitted values".to_string(),
            OrderingKey::Covariate(j) => column_names
                .get(*j)
                .cloned()
                .unwrap_or_else(|| format!("x{j}")),
            OrderingKey::Subset(js) => {
                let names: Vec<String> = js
                    .iter()
                    .map(|j| {
                        column_names
                            .get(*j)
                            .cloned()
                            .unwrap_or_else(|| format!("x{j}"))
                    })
                    .collect();
                format!("partial predictor ({})", names.join("+"))
            }
        }
    }
}

/// Test statistic computed from the process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statistic {
    /// sup_t |W(t)|.
    Ks,
    /// Integral of W(t)^2 against the empirical distribution of the keys.
    Cvm,
}

impl Statistic {
    pub fn evaluate(&self, proc: &ResidualProcess) -> f64 {
        match self {
            Statistic::Ks => ks_statistic(proc),
            Statistic::Cvm => cvm_statistic(proc),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Statistic::Ks => "ks",
            Statistic::Cvm => "cvm",
        }
    }
}

/// Step-function representation of the standardized cumulative-sum process.
///
/// `cum[j]` is W evaluated at `keys[j]`; the process is right-continuous,
/// zero to the left of `keys[0]`, and `cum[m-1]` is zero (up to rounding)
/// whenever the fit includes an intercept. Residuals at tied keys are summed
/// into a single jump because the indicator I(key <= t) cannot separate
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualProcess {
    /// Strictly increasing unique key values (length m <= n).
    pub keys: Vec<f64>,
    /// W at each key.
    pub cum: Vec<f64>,
    /// Number of observations tied at each key; sums to n.
    pub mult: Vec<usize>,
    /// Number of observations.
    pub n: usize,
    /// The sigma used for standardization.
    pub sigma_used: f64,
}

impl ResidualProcess {
    /// Step evaluation W(t): zero left of the first key, right-continuous.
    pub fn value_at(&self, t: f64) -> f64 {
        // last key <= t
        match self.keys.partition_point(|k| *k <= t) {
            0 => 0.0,
            idx => self.cum[idx - 1],
        }
    }
}

/// The ordering key values, one per observation.
pub fn ordering_values(fit: &FitResult, data: &Dataset, key: &OrderingKey) -> Result<Vec<f64>> {
    let p = data.p();
    let check_index = |j: usize| -> Result<()> {
        if j == 0 || j >= p {
            Err(Error::IndexOutOfRange {
                index: j,
                max: p.saturating_sub(1),
            })
        } else {
            Ok(())
        }
    };
    match key {
        OrderingKey::FullModel => Ok(fit.fitted.clone()),
        OrderingKey::Covariate(j) => {
            check_index(*j)?;
            Ok(data.design().column(*j))
        }
        OrderingKey::Subset(js) => {
            if js.is_empty() {
                return Err(Error::InvalidParams("covariate subset is empty".into()));
            }
            for &j in js {
                check_index(j)?;
            }
            let x = data.design();
            Ok((0..data.n())
                .map(|i| js.iter().map(|&j| x.get(i, j) * fit.coefficients[j]).sum())
                .collect())
        }
    }
}

/// Builds the standardized cumulative-sum process for given residuals and
/// ordering-key values.
///
/// Ties are aggregated: residuals with identical keys form one jump, and the
/// key's empirical mass is its multiplicity over n.
pub fn build_process(residuals: &[f64], keys_raw: &[f64], sigma: f64) -> Result<ResidualProcess> {
    let n = residuals.len();
    if n == 0 || keys_raw.len() != n {
        return Err(Error::LengthMismatch(format!(
            "{} residuals with {} keys",
            n,
            keys_raw.len()
        )));
    }
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::DegenerateVariance { sigma });
    }
    if residuals.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("residuals"));
    }
    if keys_raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ordering keys"));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| keys_raw[a].partial_cmp(&keys_raw[b]).unwrap());

    let norm = sigma * (n as f64).sqrt();
    let mut keys = Vec::with_capacity(n);
    let mut cum = Vec::with_capacity(n);
    let mut mult = Vec::with_capacity(n);
    let mut running = 0.0;
    let mut i = 0;
    while i < n {
        let key = keys_raw[order[i]];
        let mut count = 0;
        while i < n && keys_raw[order[i]] == key {
            running += residuals[order[i]];
            count += 1;
            i += 1;
        }
        keys.push(key);
        cum.push(running / norm);
        mult.push(count);
    }
    Ok(ResidualProcess {
        keys,
        cum,
        mult,
        n,
        sigma_used: sigma,
    })
}

/// KS-type statistic: sup over t of |W(t)|, attained at a jump.
pub fn ks_statistic(proc: &ResidualProcess) -> f64 {
    proc.cum.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// CvM-type statistic: (1/n) * sum_j mult[j] * cum[j]^2.
pub fn cvm_statistic(proc: &ResidualProcess) -> f64 {
    proc.cum
        .iter()
        .zip(&proc.mult)
        .map(|(c, &m)| m as f64 * c * c)
        .sum::<f64>()
        / proc.n as f64
}

/// Finite-sample plug-in of the limiting covariance of the standardized
/// process at `(t, s)`:
///
/// K(t,s) = (1/n) ( #{ i : x_i'theta <= min(t,s) } - h(t) (X'X)^-1 h(s)' ),
/// h(z) = sum_i x_i' I(x_i'theta <= z).
///
/// Used as a diagnostic oracle against the empirical covariance of permuted
/// processes.
pub fn plugin_covariance(data: &Dataset, theta: &[f64], t: f64, s: f64) -> Result<f64> {
    if theta.len() != data.p() {
        return Err(Error::LengthMismatch(format!(
            "theta has {} entries for p = {}",
            theta.len(),
            data.p()
        )));
    }
    let solver = OlsSolver::new(data)?;
    let x = data.design();
    let n = data.n();
    let p = data.p();
    let z: Vec<f64> = (0..n)
        .map(|i| x.row(i).iter().zip(theta).map(|(a, b)| a * b).sum())
        .collect();

    let h_at = |bound: f64| -> Vec<f64> {
        let mut h = vec![0.0; p];
        for i in 0..n {
            if z[i] <= bound {
                for (j, hj) in h.iter_mut().enumerate() {
                    *hj += x.get(i, j);
                }
            }
        }
        h
    };

    let t_min = t.min(s);
    let count = z.iter().filter(|&&zi| zi <= t_min).count() as f64;
    let quad = solver.xtx_inv_quad(&h_at(t), &h_at(s));
    Ok((count - quad) / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linreg::fit_ols;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn hand_computed_process() {
        let proc = build_process(&[-1.0, 0.0, 1.0], &[1.0, 2.0, 3.0], 1.0).unwrap();
        let r3 = 3.0_f64.sqrt();
        assert_eq!(proc.keys, vec![1.0, 2.0, 3.0]);
        assert_eq!(proc.mult, vec![1, 1, 1]);
        assert_close(proc.cum[0], -1.0 / r3, 1e-15);
        assert_close(proc.cum[1], -1.0 / r3, 1e-15);
        assert_close(proc.cum[2], 0.0, 1e-15);

        assert_close(ks_statistic(&proc), 1.0 / r3, 1e-15);
        assert_close(cvm_statistic(&proc), 2.0 / 9.0, 1e-15);
    }

    #[test]
    fn zero_residuals_zero_process() {
        let proc = build_process(&[0.0; 4], &[4.0, 1.0, 3.0, 2.0], 2.0).unwrap();
        assert!(proc.cum.iter().all(|&c| c == 0.0));
        assert_eq!(ks_statistic(&proc), 0.0);
        assert_eq!(cvm_statistic(&proc), 0.0);
    }

    #[test]
    fn ties_aggregate_into_one_jump() {
        let proc = build_process(&[1.0, -1.0], &[5.0, 5.0], 1.0).unwrap();
        assert_eq!(proc.keys, vec![5.0]);
        assert_eq!(proc.mult, vec![2]);
        assert_eq!(proc.cum, vec![0.0]);
    }

    #[test]
    fn row_order_does_not_matter() {
        let a = build_process(&[0.5, -1.5, 2.0, -1.0], &[3.0, 1.0, 2.0, 2.0], 1.3).unwrap();
        let b = build_process(&[-1.0, 2.0, -1.5, 0.5], &[2.0, 2.0, 1.0, 3.0], 1.3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn step_evaluation() {
        let proc = build_process(&[-1.0, 0.0, 1.0], &[1.0, 2.0, 3.0], 1.0).unwrap();
        let r3 = 3.0_f64.sqrt();
        assert_eq!(proc.value_at(0.5), 0.0);
        assert_close(proc.value_at(1.0), -1.0 / r3, 1e-15);
        assert_close(proc.value_at(2.7), -1.0 / r3, 1e-15);
        assert_close(proc.value_at(99.0), 0.0, 1e-15);
    }

    #[test]
    fn degenerate_sigma_rejected() {
        assert!(matches!(
            build_process(&[1.0], &[1.0], 0.0),
            Err(Error::DegenerateVariance { .. })
        ));
        assert!(matches!(
            build_process(&[1.0], &[1.0], f64::NAN),
            Err(Error::DegenerateVariance { .. })
        ));
    }

    #[test]
    fn cvm_bounded_by_ks_squared() {
        let proc = build_process(
            &[0.4, -1.1, 0.9, -0.2, 0.0],
            &[0.1, 0.9, 0.3, 0.3, 0.5],
            0.8,
        )
        .unwrap();
        let ks = ks_statistic(&proc);
        let cvm = cvm_statistic(&proc);
        assert!(cvm <= ks * ks + 1e-15);
        assert!(cvm >= 0.0);
    }

    fn three_covariate_fit() -> (Dataset, FitResult) {
        let x1 = vec![0.0, 1.0, 2.0, 3.0, 1.5];
        let x2 = vec![1.0, -1.0, 0.5, 2.0, 0.0];
        let x3 = vec![0.3, 0.1, -0.2, 0.4, 0.9];
        let y = vec![1.0, 2.0, 2.5, 5.0, 1.2];
        let data = Dataset::with_intercept(
            y,
            vec![x1, x2, x3],
            vec!["x1".into(), "x2".into(), "x3".into()],
        )
        .unwrap();
        let fit = fit_ols(&data).unwrap();
        (data, fit)
    }

    #[test]
    fn ordering_value_variants() {
        let (data, fit) = three_covariate_fit();

        let full = ordering_values(&fit, &data, &OrderingKey::FullModel).unwrap();
        assert_eq!(full, fit.fitted);

        let cov1 = ordering_values(&fit, &data, &OrderingKey::Covariate(1)).unwrap();
        assert_eq!(cov1, data.design().column(1));

        let sub = ordering_values(&fit, &data, &OrderingKey::Subset(vec![1, 2])).unwrap();
        for i in 0..data.n() {
            let want = fit.coefficients[1] * data.design().get(i, 1)
                + fit.coefficients[2] * data.design().get(i, 2);
            assert_close(sub[i], want, 1e-12);
        }

        assert!(matches!(
            ordering_values(&fit, &data, &OrderingKey::Covariate(0)),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            ordering_values(&fit, &data, &OrderingKey::Covariate(4)),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(ordering_values(&fit, &data, &OrderingKey::Subset(vec![])).is_err());
    }

    #[test]
    fn full_subset_matches_full_model_statistics() {
        // ordering by the all-covariate subset shifts keys by the intercept
        // only, so the aggregated process (and both statistics) coincide
        let (data, fit) = three_covariate_fit();
        let full_keys = ordering_values(&fit, &data, &OrderingKey::FullModel).unwrap();
        let sub_keys = ordering_values(&fit, &data, &OrderingKey::Subset(vec![1, 2, 3])).unwrap();
        for (f, s) in full_keys.iter().zip(&sub_keys) {
            assert_close(f - s, fit.coefficients[0], 1e-10);
        }
        let pf = build_process(&fit.residuals, &full_keys, fit.sigma_hat).unwrap();
        let ps = build_process(&fit.residuals, &sub_keys, fit.sigma_hat).unwrap();
        assert_close(ks_statistic(&pf), ks_statistic(&ps), 1e-12);
        assert_close(cvm_statistic(&pf), cvm_statistic(&ps), 1e-12);
    }

    #[test]
    fn endpoint_identity_for_intercept_models() {
        let (data, fit) = three_covariate_fit();
        for key in [
            OrderingKey::FullModel,
            OrderingKey::Covariate(1),
            OrderingKey::Covariate(2),
            OrderingKey::Subset(vec![1, 3]),
        ] {
            let keys = ordering_values(&fit, &data, &key).unwrap();
            let proc = build_process(&fit.residuals, &keys, fit.sigma_hat).unwrap();
            assert!(proc.cum.last().unwrap().abs() < 1e-8);
            assert_eq!(proc.mult.iter().sum::<usize>(), data.n());
        }
    }

    #[test]
    fn scale_and_shift_invariance_of_cum_values() {
        let (data, fit) = three_covariate_fit();
        let keys = ordering_values(&fit, &data, &OrderingKey::FullModel).unwrap();
        let base = build_process(&fit.residuals, &keys, fit.sigma_hat).unwrap();

        let c = 4.0;
        let scaled_y: Vec<f64> = data.y().iter().map(|v| c * v).collect();
        let fit_c = crate::linreg::refit_on_outcome(&data, &scaled_y).unwrap();
        let keys_c = ordering_values(&fit_c, &data, &OrderingKey::FullModel).unwrap();
        let proc_c = build_process(&fit_c.residuals, &keys_c, fit_c.sigma_hat).unwrap();
        for (a, b) in base.cum.iter().zip(&proc_c.cum) {
            assert_close(*a, *b, 1e-10);
        }

        let shifted_y: Vec<f64> = data.y().iter().map(|v| v + c).collect();
        let fit_s = crate::linreg::refit_on_outcome(&data, &shifted_y).unwrap();
        let keys_s = ordering_values(&fit_s, &data, &OrderingKey::FullModel).unwrap();
        let proc_s = build_process(&fit_s.residuals, &keys_s, fit_s.sigma_hat).unwrap();
        for (a, b) in base.cum.iter().zip(&proc_s.cum) {
            assert_close(*a, *b, 1e-10);
        }
        // keys shift, values do not
        for (a, b) in base.keys.iter().zip(&proc_s.keys) {
            assert_close(*a + c, *b, 1e-10);
        }
    }

    #[test]
    fn plugin_covariance_endpoints() {
        let (data, fit) = three_covariate_fit();
        let theta = &fit.coefficients;

        // far right: indicator everywhere true, variance pinned to zero
        let k_inf = plugin_covariance(&data, theta, f64::INFINITY, f64::INFINITY).unwrap();
        assert_close(k_inf, 0.0, 1e-10);

        // below the smallest key: empty indicator set
        let z_min = fit
            .fitted
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        let k_left = plugin_covariance(&data, theta, z_min - 1.0, z_min - 1.0).unwrap();
        assert_eq!(k_left, 0.0);
    }
}
