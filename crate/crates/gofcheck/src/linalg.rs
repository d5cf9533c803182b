//! Dense row-major matrices and Householder QR.
//!
//! Only what the least-squares core needs: matrix-vector products and a
//! compact QR factorization that can be applied repeatedly to new
//! right-hand sides (one factorization, many refits).

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from length-`rows` columns.
    ///
    /// Panics if the columns are empty or ragged.
    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        assert!(!columns.is_empty(), "need at least one column");
        let rows = columns[0].len();
        assert!(
            columns.iter().all(|c| c.len() == rows),
            "columns must have equal length"
        );
        let mut m = Matrix::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    /// Builds a matrix from row slices (test convenience).
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        assert!(!rows.is_empty(), "need at least one row");
        let cols = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        let mut m = Matrix::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            m.data[i * cols..(i + 1) * cols].copy_from_slice(row);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().copied()
    }

    /// `A v` for a length-`cols` vector.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .collect()
    }

    /// `Aᵀ v` for a length-`rows` vector.
    pub fn transpose_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for (j, o) in out.iter_mut().enumerate() {
                *o += self.get(i, j) * vi;
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Compact Householder QR of an n x p matrix (n >= p), LAPACK-style storage:
/// R in the upper triangle, the Householder vectors (unit first component
/// implicit) below the diagonal.
#[derive(Debug, Clone)]
pub struct QrFactor {
    n: usize,
    p: usize,
    qr: Vec<f64>,
    tau: Vec<f64>,
}

impl QrFactor {
    /// Factors `x` into QR. Requires `x.rows() >= x.cols() >= 1`.
    pub fn factor(x: &Matrix) -> Self {
        let (n, p) = (x.rows(), x.cols());
        assert!(n >= p && p >= 1, "QR requires n >= p >= 1");
        let mut qr = x.data.clone();
        let mut tau = vec![0.0; p];
        let at = |i: usize, j: usize| i * p + j;

        for k in 0..p {
            let norm = (k..n).map(|i| qr[at(i, k)] * qr[at(i, k)]).sum::<f64>().sqrt();
            if norm == 0.0 {
                // zero column below and at the diagonal: R[k,k] = 0, no reflector
                tau[k] = 0.0;
                continue;
            }
            let akk = qr[at(k, k)];
            let alpha = if akk >= 0.0 { -norm } else { norm };
            let v0 = akk - alpha;
            for i in k + 1..n {
                qr[at(i, k)] /= v0;
            }
            tau[k] = -v0 / alpha;
            qr[at(k, k)] = alpha;

            for j in k + 1..p {
                let mut w = qr[at(k, j)];
                for i in k + 1..n {
                    w += qr[at(i, k)] * qr[at(i, j)];
                }
                w *= tau[k];
                qr[at(k, j)] -= w;
                for i in k + 1..n {
                    qr[at(i, j)] -= w * qr[at(i, k)];
                }
            }
        }
        QrFactor { n, p, qr, tau }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.qr[i * self.p + j]
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.p
    }

    /// Applies Qᵀ to `v` in place (`v.len() == n`).
    pub fn apply_qt(&self, v: &mut [f64]) {
        debug_assert_eq!(v.len(), self.n);
        for k in 0..self.p {
            if self.tau[k] == 0.0 {
                continue;
            }
            let mut w = v[k];
            for i in k + 1..self.n {
                w += self.at(i, k) * v[i];
            }
            w *= self.tau[k];
            v[k] -= w;
            for i in k + 1..self.n {
                v[i] -= w * self.at(i, k);
            }
        }
    }

    /// Smallest |R[j,j]|; zero signals exact rank deficiency.
    pub fn min_abs_r_diag(&self) -> f64 {
        (0..self.p)
            .map(|j| self.at(j, j).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Solves `R theta = rhs[0..p]` by back substitution.
    ///
    /// Caller must have checked the diagonal against a rank tolerance.
    pub fn solve_upper(&self, rhs: &[f64]) -> Vec<f64> {
        debug_assert!(rhs.len() >= self.p);
        let mut theta = vec![0.0; self.p];
        for j in (0..self.p).rev() {
            let mut s = rhs[j];
            for l in j + 1..self.p {
                s -= self.at(j, l) * theta[l];
            }
            theta[j] = s / self.at(j, j);
        }
        theta
    }

    /// Solves `Rᵀ a = b` by forward substitution (`b.len() == p`).
    ///
    /// Together with a second solve this evaluates quadratic forms in
    /// (XᵀX)⁻¹ = R⁻¹ R⁻ᵀ without forming the inverse.
    pub fn solve_rt(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.p);
        let mut a = vec![0.0; self.p];
        for j in 0..self.p {
            let mut s = b[j];
            for l in 0..j {
                s -= self.at(l, j) * a[l];
            }
            a[j] = s / self.at(j, j);
        }
        a
    }

    /// Least-squares solution of `X theta = y` through the stored factors.
    pub fn solve_ls(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.n);
        let mut qty = y.to_vec();
        self.apply_qt(&mut qty);
        self.solve_upper(&qty)
    }
}
