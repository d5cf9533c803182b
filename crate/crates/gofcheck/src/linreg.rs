//! Ordinary least-squares fitting for fixed full-rank designs with an
//! intercept.
//!
//! The design is factored once (Householder QR, no pivoting) and the factor
//! is reused across refits on new outcome vectors; a permutation run refits
//! the same design thousands of times.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, QrFactor};

/// Rank tolerance: smallest |R[j,j]| must exceed this multiple of the
/// Frobenius norm of the design.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Relative threshold below which a residual standard deviation is treated
/// as numerically zero (perfect fit), relative to the outcome scale.
pub const DEGENERATE_SIGMA_RELATIVE: f64 = 1e-12;

/// A response vector with its fixed design matrix (intercept first).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    x: Matrix,
    column_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from a full design matrix whose first column must be
    /// identically one.
    pub fn from_design(y: Vec<f64>, x: Matrix, column_names: Vec<String>) -> Result<Self> {
        if y.len() != x.rows() {
            return Err(Error::LengthMismatch(format!(
                "y has {} entries but the design has {} rows",
                y.len(),
                x.rows()
            )));
        }
        if x.rows() == 0 || x.cols() == 0 {
            return Err(Error::DegenerateSample {
                n: x.rows(),
                p: x.cols(),
            });
        }
        if column_names.len() != x.cols() {
            return Err(Error::LengthMismatch(format!(
                "{} column names for {} design columns",
                column_names.len(),
                x.cols()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("response vector"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("design matrix"));
        }
        if (0..x.rows()).any(|i| x.get(i, 0) != 1.0) {
            return Err(Error::InvalidParams(
                "first design column must be identically 1 (intercept)".into(),
            ));
        }
        Ok(Dataset { y, x, column_names })
    }

    /// Builds a dataset from covariate columns, prepending the intercept.
    pub fn with_intercept(
        y: Vec<f64>,
        covariates: Vec<Vec<f64>>,
        covariate_names: Vec<String>,
    ) -> Result<Self> {
        if covariates.len() != covariate_names.len() {
            return Err(Error::LengthMismatch(format!(
                "{} covariate columns for {} names",
                covariates.len(),
                covariate_names.len()
            )));
        }
        let n = y.len();
        if covariates.iter().any(|c| c.len() != n) {
            return Err(Error::LengthMismatch(
                "covariate columns must match the response length".into(),
            ));
        }
        let mut columns = Vec::with_capacity(covariates.len() + 1);
        columns.push(vec![1.0; n]);
        columns.extend(covariates);
        let mut names = Vec::with_capacity(covariate_names.len() + 1);
        names.push("intercept".to_string());
        names.extend(covariate_names);
        if n == 0 {
            return Err(Error::DegenerateSample { n: 0, p: names.len() });
        }
        Dataset::from_design(y, Matrix::from_columns(&columns), names)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of design columns, intercept included.
    #[inline]
    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn design(&self) -> &Matrix {
        &self.x
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }
}

/// One OLS fit: coefficients, fitted values, residuals, and the
/// (n-p)-denominator residual standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Coefficient estimates, intercept first.
    pub coefficients: Vec<f64>,
    /// Fitted values X·theta.
    pub fitted: Vec<f64>,
    /// Residuals y - fitted.
    pub residuals: Vec<f64>,
    /// sqrt( sum e_i^2 / (n - p) ).
    pub sigma_hat: f64,
    /// Residual degrees of freedom n - p.
    pub df_resid: usize,
}

impl FitResult {
    /// True when `sigma_hat` is numerically zero relative to the outcome
    /// scale, i.e. the fit is perfect and the standardized process is
    /// undefined.
    pub fn degenerate_variance(&self) -> bool {
        let scale = self
            .fitted
            .iter()
            .zip(&self.residuals)
            .map(|(f, e)| (f + e).abs())
            .fold(0.0, f64::max);
        self.sigma_hat <= DEGENERATE_SIGMA_RELATIVE * scale.max(1.0)
    }
}

/// A cached QR factorization of one design, reusable across outcomes.
///
/// Refitting through the cache is bit-identical to a fresh `fit_ols` on the
/// same design: the factorization is computed once and the per-outcome
/// arithmetic is the same.
#[derive(Debug, Clone)]
pub struct OlsSolver {
    x: Matrix,
    qr: QrFactor,
}

impl OlsSolver {
    /// Validates the dataset, factors the design, and checks numerical rank.
    pub fn new(data: &Dataset) -> Result<Self> {
        let (n, p) = (data.n(), data.p());
        if n <= p {
            return Err(Error::DegenerateSample { n, p });
        }
        let qr = QrFactor::factor(data.design());
        let tol = RANK_TOLERANCE * data.design().frobenius_norm();
        let min_diag = qr.min_abs_r_diag();
        if min_diag < tol {
            return Err(Error::RankDeficient { min_diag, tol });
        }
        Ok(OlsSolver {
            x: data.design().clone(),
            qr,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.x.cols()
    }

    /// Fits the cached design to a new outcome vector.
    pub fn fit(&self, y: &[f64]) -> Result<FitResult> {
        let (n, p) = (self.n(), self.p());
        if y.len() != n {
            return Err(Error::LengthMismatch(format!(
                "outcome has {} entries for a design with {} rows",
                y.len(),
                n
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("outcome vector"));
        }
        let coefficients = self.qr.solve_ls(y);
        let fitted = self.x.mul_vec(&coefficients);
        let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        let df_resid = n - p;
        let rss: f64 = residuals.iter().map(|e| e * e).sum();
        let sigma_hat = (rss / df_resid as f64).sqrt();
        Ok(FitResult {
            coefficients,
            fitted,
            residuals,
            sigma_hat,
            df_resid,
        })
    }

    /// Quadratic form `a (XᵀX)⁻¹ bᵀ` through the triangular factor.
    pub fn xtx_inv_quad(&self, a: &[f64], b: &[f64]) -> f64 {
        let u = self.qr.solve_rt(a);
        let v = self.qr.solve_rt(b);
        u.iter().zip(&v).map(|(x, y)| x * y).sum()
    }
}

/// Fits the model by ordinary least squares.
pub fn fit_ols(data: &Dataset) -> Result<FitResult> {
    OlsSolver::new(data)?.fit(data.y())
}

/// Refits the same design to a new outcome, as a fresh fit would.
pub fn refit_on_outcome(fit_context: &Dataset, new_y: &[f64]) -> Result<FitResult> {
    OlsSolver::new(fit_context)?.fit(new_y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_dataset() -> Dataset {
        Dataset::with_intercept(
            vec![2.0, -0.5, 4.25, 1.75],
            vec![vec![0.3, -1.2, 2.5, 0.9]],
            vec!["x1".into()],
        )
        .unwrap()
    }

    #[test]
    fn mean_model() {
        let data = Dataset::with_intercept(vec![1.0, 2.0, 3.0], vec![], vec![]).unwrap();
        let fit = fit_ols(&data).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-12);
        for (e, want) in fit.residuals.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((e - want).abs() < 1e-12);
        }
        // sigma_hat = sqrt(2 / (3 - 1)) = 1
        assert!((fit.sigma_hat - 1.0).abs() < 1e-12);
        assert_eq!(fit.df_resid, 2);
    }

    #[test]
    fn exact_fit_gives_zero_residuals() {
        let x1 = vec![0.5, 1.5, -2.0, 3.25, 0.0];
        let b = [0.75, -1.5];
        let y: Vec<f64> = x1.iter().map(|v| b[0] + b[1] * v).collect();
        let data = Dataset::with_intercept(y, vec![x1], vec!["x1".into()]).unwrap();
        let fit = fit_ols(&data).unwrap();
        for e in &fit.residuals {
            assert!(e.abs() < 1e-12);
        }
        assert!(fit.sigma_hat < 1e-12);
        assert!(fit.degenerate_variance());
    }

    #[test]
    fn matches_normal_equations_oracle() {
        use crate::linalg::Matrix;
        // independent oracle: theta = (XᵀX)⁻¹ Xᵀ y via dense inversion
        let data = toy_dataset();
        let fit = fit_ols(&data).unwrap();
        let x = data.design();
        let p = x.cols();
        let mut xtx = vec![vec![0.0; p]; p];
        let mut xty = vec![0.0; p];
        for r in 0..p {
            for c in 0..p {
                xtx[r][c] = (0..x.rows()).map(|i| x.get(i, r) * x.get(i, c)).sum();
            }
            xty[r] = (0..x.rows()).map(|i| x.get(i, r) * data.y()[i]).sum();
        }
        let det = xtx[0][0] * xtx[1][1] - xtx[0][1] * xtx[1][0];
        let theta = [
            (xtx[1][1] * xty[0] - xtx[0][1] * xty[1]) / det,
            (-xtx[1][0] * xty[0] + xtx[0][0] * xty[1]) / det,
        ];
        for (a, b) in fit.coefficients.iter().zip(theta) {
            assert!((a - b).abs() < 1e-10, "QR {a} vs normal equations {b}");
        }
        let _ = Matrix::zeros(1, 1);
    }

    #[test]
    fn normal_equations_hold() {
        let data = toy_dataset();
        let fit = fit_ols(&data).unwrap();
        let xte = data.design().transpose_mul_vec(&fit.residuals);
        let ynorm = data.y().iter().map(|v| v.abs()).fold(0.0, f64::max);
        for v in xte {
            assert!(v.abs() <= 1e-8 * ynorm.max(1.0));
        }
        let sum_e: f64 = fit.residuals.iter().sum();
        assert!(sum_e.abs() <= 1e-8 * ynorm.max(1.0));
    }

    #[test]
    fn refit_identity_and_projection() {
        let data = toy_dataset();
        let fit = fit_ols(&data).unwrap();
        let again = refit_on_outcome(&data, data.y()).unwrap();
        assert_eq!(fit, again);

        // fitting the fitted values leaves nothing to explain
        let proj = refit_on_outcome(&data, &fit.fitted).unwrap();
        for e in &proj.residuals {
            assert!(e.abs() < 1e-12);
        }
    }

    #[test]
    fn refit_permuted_outcome_matches_fresh_fit() {
        let y = vec![1.0, 4.0, 2.0, 8.0, 5.0];
        let x1 = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let data = Dataset::with_intercept(y, vec![x1], vec!["x1".into()]).unwrap();
        let fit = fit_ols(&data).unwrap();
        // transposition of residuals 0 <-> 3
        let mut e = fit.residuals.clone();
        e.swap(0, 3);
        let new_y: Vec<f64> = fit.fitted.iter().zip(&e).map(|(f, r)| f + r).collect();

        let solver = OlsSolver::new(&data).unwrap();
        let cached = solver.fit(&new_y).unwrap();
        let fresh = refit_on_outcome(&data, &new_y).unwrap();
        assert_eq!(cached, fresh);
    }

    #[test]
    fn scale_equivariance_and_shift_invariance() {
        let data = toy_dataset();
        let fit = fit_ols(&data).unwrap();

        let c = 3.5;
        let scaled_y: Vec<f64> = data.y().iter().map(|v| c * v).collect();
        let scaled = refit_on_outcome(&data, &scaled_y).unwrap();
        for (a, b) in scaled.coefficients.iter().zip(&fit.coefficients) {
            assert!((a - c * b).abs() <= 1e-10 * (1.0 + b.abs() * c));
        }
        assert!((scaled.sigma_hat - c * fit.sigma_hat).abs() <= 1e-10 * (1.0 + fit.sigma_hat * c));

        let shifted_y: Vec<f64> = data.y().iter().map(|v| v + c).collect();
        let shifted = refit_on_outcome(&data, &shifted_y).unwrap();
        assert!((shifted.coefficients[0] - (fit.coefficients[0] + c)).abs() < 1e-10);
        assert!((shifted.coefficients[1] - fit.coefficients[1]).abs() < 1e-10);
        for (a, b) in shifted.residuals.iter().zip(&fit.residuals) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let err = Dataset::with_intercept(vec![1.0, f64::NAN], vec![vec![1.0, 2.0]], vec!["x".into()])
            .unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));

        // n <= p
        let data =
            Dataset::with_intercept(vec![1.0, 2.0], vec![vec![1.0, 2.0]], vec!["x".into()]).unwrap();
        assert!(matches!(
            fit_ols(&data),
            Err(Error::DegenerateSample { n: 2, p: 2 })
        ));

        // duplicated covariate: rank deficient
        let data = Dataset::with_intercept(
            vec![1.0, 2.0, 3.0, 4.0],
            vec![vec![1.0, 2.0, 3.0, 4.0], vec![2.0, 4.0, 6.0, 8.0]],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert!(matches!(fit_ols(&data), Err(Error::RankDeficient { .. })));

        // missing intercept column
        let x = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0], &[1.0, 3.0]]);
        assert!(Dataset::from_design(vec![1.0, 2.0, 3.0], x, vec!["a".into(), "b".into()]).is_err());
    }
}
