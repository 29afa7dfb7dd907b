//! Small dense kernel shared by the estimators: a row-major matrix,
//! weighted least squares through Householder QR, weighted means, and
//! central finite-difference gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative threshold on the diagonal of R below which a design is rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Dense row-major matrix of finite values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix must have at least one row and column, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite matrix entry at row {}, column {}",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Single-column matrix.
    pub fn column_vector(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    pub(crate) fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub(crate) fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, col)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Prepends a column of ones.
    pub fn with_intercept(&self) -> Matrix {
        let cols = self.cols + 1;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.push(1.0);
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: self.rows,
            cols,
            data,
        }
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// Rows selected by index, in the given order (indices may repeat).
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Result of a weighted least-squares solve.
#[derive(Debug, Clone)]
pub struct WlsFit {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    /// Upper-triangular R of diag(sqrt(w)) X = QR, row-major k x k.
    r: Vec<f64>,
}

impl WlsFit {
    /// Solves (X' W X) z = rhs using the stored triangular factor.
    pub fn solve_gram(&self, rhs: &[f64]) -> Vec<f64> {
        let k = self.coefficients.len();
        assert_eq!(rhs.len(), k, "rhs length must equal the number of coefficients");
        // R' u = rhs
        let mut u = vec![0.0; k];
        for i in 0..k {
            let mut s = rhs[i];
            for j in 0..i {
                s -= self.r[j * k + i] * u[j];
            }
            u[i] = s / self.r[i * k + i];
        }
        back_substitute(&self.r, k, &u)
    }

    /// (X' W X)^{-1} as a dense k x k matrix.
    pub fn gram_inverse(&self) -> Matrix {
        let k = self.coefficients.len();
        let mut inv = Matrix::zeros(k, k);
        let mut e = vec![0.0; k];
        for j in 0..k {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve_gram(&e);
            for (i, v) in col.into_iter().enumerate() {
                inv.set(i, j, v);
            }
        }
        inv
    }
}

fn back_substitute(r: &[f64], k: usize, rhs: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = rhs[i];
        for j in i + 1..k {
            s -= r[i * k + j] * z[j];
        }
        z[i] = s / r[i * k + i];
    }
    z
}

/// Minimizes sum_i w_i (y_i - x_i' b)^2 by Householder QR of diag(sqrt(w)) X.
pub fn weighted_least_squares(design: &Matrix, response: &[f64], weights: &[f64]) -> Result<WlsFit> {
    let (n, k) = (design.rows(), design.cols());
    if response.len() != n || weights.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "design has {n} rows, response {} and weights {}",
            response.len(),
            weights.len()
        )));
    }
    check_weights(weights)?;

    let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    // Column-major working copy; Householder sweeps run down columns.
    let mut a = vec![0.0; n * k];
    for i in 0..n {
        for j in 0..k {
            a[j * n + i] = sqrt_w[i] * design.get(i, j);
        }
    }
    let mut b: Vec<f64> = response.iter().zip(&sqrt_w).map(|(y, s)| y * s).collect();

    let mut diag = vec![0.0; k];
    let mut v = vec![0.0; n];
    for j in 0..k.min(n) {
        let col = &a[j * n..(j + 1) * n];
        let norm = col[j..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if col[j] > 0.0 { -norm } else { norm };
        v[j..].copy_from_slice(&col[j..]);
        v[j] -= alpha;
        let vnorm2: f64 = v[j..].iter().map(|x| x * x).sum();
        diag[j] = alpha;
        if vnorm2 == 0.0 {
            continue;
        }
        for c in j..k {
            let colc = &mut a[c * n..(c + 1) * n];
            let s = 2.0 * dot(&v[j..], &colc[j..]) / vnorm2;
            for (x, vi) in colc[j..].iter_mut().zip(&v[j..]) {
                *x -= s * vi;
            }
        }
        let s = 2.0 * dot(&v[j..], &b[j..]) / vnorm2;
        for (x, vi) in b[j..].iter_mut().zip(&v[j..]) {
            *x -= s * vi;
        }
    }

    let max_diag = diag.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let min_diag = diag.iter().fold(f64::INFINITY, |m, d| m.min(d.abs()));
    if k > n || max_diag == 0.0 || min_diag < RANK_TOLERANCE * max_diag {
        let ratio = if max_diag > 0.0 { min_diag / max_diag } else { 0.0 };
        return Err(Error::RankDeficient { ratio });
    }

    let mut r = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            r[i * k + j] = a[j * n + i];
        }
    }
    let coefficients = back_substitute(&r, k, &b[..k]);
    let fitted = design.mul_vec(&coefficients);
    let residuals = response.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    Ok(WlsFit {
        coefficients,
        residuals,
        fitted,
        r,
    })
}

fn check_weights(weights: &[f64]) -> Result<f64> {
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::DegenerateWeights(format!("invalid weight {w}")));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateWeights("weights sum to zero".into()));
    }
    Ok(total)
}

/// sum_i f_i w_i / sum_i w_i.
pub fn weighted_mean(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} values but {} weights",
            values.len(),
            weights.len()
        )));
    }
    let total = check_weights(weights)?;
    Ok(dot(values, weights) / total)
}

/// Central-difference gradient with step cbrt(eps) * max(1, |x_j|).
pub fn finite_diff_gradient<F>(f: F, at: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let base_step = f64::EPSILON.cbrt();
    let mut point = at.to_vec();
    let mut grad = Vec::with_capacity(at.len());
    for j in 0..at.len() {
        let h = base_step * at[j].abs().max(1.0);
        let (hi, lo) = (at[j] + h, at[j] - h);

        point[j] = hi;
        let f_hi = f(&point);
        point[j] = lo;
        let f_lo = f(&point);
        point[j] = at[j];

        if !f_hi.is_finite() || !f_lo.is_finite() {
            return Err(Error::NonFiniteEvaluation { coordinate: j });
        }
        grad.push((f_hi - f_lo) / (hi - lo));
    }
    Ok(grad)
}
