//! Dense real linear algebra, matrix statistics and Hadamard factorizations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest one count as zero.
pub const RANK_CUTOFF: f64 = 1e-12;

/// A finite, non-empty real matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix(DMatrix<f64>);

impl DenseMatrix {
    pub fn new(inner: DMatrix<f64>) -> Result<Self> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return Err(Error::InvalidArgument("matrix must have at least one row and column".into()));
        }
        if let Some(pos) = inner.iter().position(|v| !v.is_finite()) {
            let (i, j) = (pos % inner.nrows(), pos / inner.nrows());
            return Err(Error::InvalidArgument(format!("non-finite entry at ({}, {})", i + 1, j + 1)));
        }
        Ok(Self(inner))
    }

    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(rows, cols, data))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_slice(rows.len(), cols, &data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows.max(1), cols.max(1)))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n.max(1), n.max(1)))
    }

    pub fn from_diagonal(values: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn abs(&self) -> Self {
        Self(self.0.abs())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().copied().collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.0.column(j).iter().copied().collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols() {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols()
            )));
        }
        Ok((&self.0 * DVector::from_column_slice(x)).iter().copied().collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows() == self.cols() && (&self.0 - self.0.transpose()).amax() <= tol
    }

    /// Nonzero entries as 0-based `(i, j, value)` triples in row-major order.
    pub fn nonzeros(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                let v = self.0[(i, j)];
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }
}

/// Singular triples of a matrix, largest first.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralData {
    pub singular_values: Vec<f64>,
    /// Left singular vectors as columns (`rows × k`).
    pub left: DMatrix<f64>,
    /// Right singular vectors as columns (`cols × k`).
    pub right: DMatrix<f64>,
}

impl SpectralData {
    pub fn len(&self) -> usize {
        self.singular_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.singular_values.is_empty()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let sigma = DMatrix::from_diagonal(&DVector::from_column_slice(&self.singular_values));
        &self.left * sigma * self.right.transpose()
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }
}

pub fn svd(a: &DenseMatrix) -> Result<SpectralData> {
    let decomposition = a
        .as_matrix()
        .clone()
        .try_svd(true, true, f64::EPSILON, 100_000)
        .ok_or(Error::NoConvergence)?;
    let (u, v_t) = match (decomposition.u, decomposition.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::NoConvergence),
    };
    let sigma = decomposition.singular_values;
    if sigma.iter().any(|s| !s.is_finite()) {
        return Err(Error::NoConvergence);
    }

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    let left = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let right = DMatrix::from_fn(v_t.ncols(), order.len(), |r, c| v_t[(order[c], r)]);
    Ok(SpectralData {
        singular_values: order.iter().map(|&k| sigma[k].max(0.0)).collect(),
        left,
        right,
    })
}

/// Singular values paired with a complete orthonormal basis of the row space
/// `ℝⁿ` (columns of the returned matrix). Directions in the kernel carry
/// singular value zero.
pub fn full_right_basis(a: &DenseMatrix) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let (m, n) = (a.rows(), a.cols());
    if m >= n {
        let spec = svd(a)?;
        return Ok((spec.singular_values, spec.right));
    }
    let mut padded = DMatrix::zeros(n, n);
    padded.view_mut((0, 0), (m, n)).copy_from(a.as_matrix());
    let spec = svd(&DenseMatrix(padded))?;
    Ok((spec.singular_values, spec.right))
}

/// Eigenvalues and orthonormal eigenvectors of a symmetric matrix, ordered by
/// decreasing eigenvalue.
pub fn symmetric_eigen(a: &DenseMatrix) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if !a.is_symmetric(1e-9 * a.max_abs().max(1.0)) {
        return Err(Error::Precondition("matrix is not symmetric".into()));
    }
    let sym = (a.as_matrix() + a.as_matrix().transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 100_000).ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let vectors = DMatrix::from_fn(a.rows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((order.iter().map(|&k| eig.eigenvalues[k]).collect(), vectors))
}

/// `s_p(A) = maxᵢ Σⱼ |aᵢⱼ|^p`, the sum running over nonzero entries so that
/// `p = 0` counts them.
pub fn max_row_power_sum(a: &DenseMatrix, p: f64) -> f64 {
    (0..a.rows())
        .map(|i| {
            a.as_matrix()
                .row(i)
                .iter()
                .filter(|v| **v != 0.0)
                .map(|v| v.abs().powf(p))
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// `s_p(Aᵀ)`, the same quantity over columns.
pub fn max_col_power_sum(a: &DenseMatrix, p: f64) -> f64 {
    max_row_power_sum(&a.transpose(), p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSum {
    pub p: f64,
    pub rows: f64,
    pub cols: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixStats {
    pub rows: usize,
    pub cols: usize,
    pub frobenius: f64,
    pub spectral: f64,
    /// `None` when the matrix is zero and the condition number is undefined.
    pub condition: Option<f64>,
    /// Maximum number of nonzeros in a row.
    pub sparsity: usize,
    pub s1: f64,
    pub max_abs: f64,
    pub power_sums: Vec<PowerSum>,
}

pub fn matrix_stats(a: &DenseMatrix, ps: &[f64]) -> Result<MatrixStats> {
    let spec = svd(a)?;
    let sigma_max = spec.sigma_max();
    let condition = if sigma_max == 0.0 {
        None
    } else {
        let sigma_min = spec
            .singular_values
            .iter()
            .copied()
            .filter(|s| *s > RANK_CUTOFF * sigma_max)
            .fold(f64::INFINITY, f64::min);
        Some(sigma_max / sigma_min)
    };
    let sparsity = (0..a.rows())
        .map(|i| a.as_matrix().row(i).iter().filter(|v| **v != 0.0).count())
        .max()
        .unwrap_or(0);
    Ok(MatrixStats {
        rows: a.rows(),
        cols: a.cols(),
        frobenius: a.frobenius(),
        spectral: sigma_max,
        condition,
        sparsity,
        s1: max_row_power_sum(a, 1.0),
        max_abs: a.max_abs(),
        power_sums: ps
            .iter()
            .map(|&p| PowerSum {
                p,
                rows: max_row_power_sum(a, p),
                cols: max_col_power_sum(a, p),
            })
            .collect(),
    })
}

/// How the Hadamard factorization `A/μ = P ∘ Q` splits the entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "p", rename_all = "snake_case")]
pub enum FactorScheme {
    /// `pᵢⱼ ∝ sgn(aᵢⱼ)|aᵢⱼ|^p`, `qᵢⱼ ∝ |aᵢⱼ|^{1−p}`.
    Power(f64),
    /// `pᵢⱼ = aᵢⱼ/‖aᵢ‖`, `qᵢⱼ = ‖aᵢ‖/‖A‖_F`, giving `μ = ‖A‖_F`.
    Frobenius,
}

impl FactorScheme {
    pub fn validate(self) -> Result<Self> {
        match self {
            FactorScheme::Power(p) if !(0.0..=1.0).contains(&p) => {
                Err(Error::InvalidArgument(format!("exponent p = {p} outside [0, 1]")))
            }
            other => Ok(other),
        }
    }
}

/// The normalization `μ_p(A) = √(s_{2p}(A)·s_{2(1−p)}(Aᵀ))`.
pub fn mu_power(a: &DenseMatrix, p: f64) -> f64 {
    (max_row_power_sum(a, 2.0 * p) * max_col_power_sum(a, 2.0 * (1.0 - p))).sqrt()
}

pub fn default_p_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuChoice {
    pub value: f64,
    pub argmin: FactorScheme,
    pub frobenius: f64,
    pub by_p: Vec<(f64, f64)>,
}

/// Grid minimization of `min(‖A‖_F, minₚ μ_p(A))`. Ties go to the power
/// scheme appearing first in the grid.
pub fn mu(a: &DenseMatrix, p_grid: &[f64]) -> Result<MuChoice> {
    if p_grid.is_empty() {
        return Err(Error::InvalidArgument("empty p grid".into()));
    }
    if let Some(p) = p_grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidArgument(format!("p = {p} outside [0, 1]")));
    }
    let frobenius = a.frobenius();
    let by_p: Vec<(f64, f64)> = p_grid.iter().map(|&p| (p, mu_power(a, p))).collect();
    let (best_p, best) = by_p
        .iter()
        .copied()
        .fold((p_grid[0], f64::INFINITY), |acc, (p, v)| if v < acc.1 { (p, v) } else { acc });
    let (value, argmin) = if frobenius < best {
        (frobenius, FactorScheme::Frobenius)
    } else {
        (best, FactorScheme::Power(best_p))
    };
    Ok(MuChoice {
        value,
        argmin,
        frobenius,
        by_p,
    })
}

/// Matrices `P, Q` with `P ∘ Q = A/μ`, unit-bounded rows of `P` and columns of `Q`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorPair {
    pub p: DenseMatrix,
    pub q: DenseMatrix,
    pub scheme: FactorScheme,
    pub mu: f64,
}

impl FactorPair {
    /// `μ·(P ∘ Q)`, which reproduces `A`.
    pub fn reconstruct(&self) -> DenseMatrix {
        DenseMatrix(self.p.as_matrix().component_mul(self.q.as_matrix()) * self.mu)
    }

    pub fn max_row_norm_p(&self) -> f64 {
        (0..self.p.rows())
            .map(|i| self.p.as_matrix().row(i).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_col_norm_q(&self) -> f64 {
        (0..self.q.cols())
            .map(|j| self.q.as_matrix().column(j).norm())
            .fold(0.0, f64::max)
    }
}

fn signed_power(v: f64, p: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum() * v.abs().powf(p)
    }
}

pub fn build_factors(a: &DenseMatrix, p: f64) -> Result<FactorPair> {
    FactorScheme::Power(p).validate()?;
    let row_scale = max_row_power_sum(a, 2.0 * p);
    let col_scale = max_col_power_sum(a, 2.0 * (1.0 - p));
    if row_scale == 0.0 || col_scale == 0.0 {
        return Err(Error::InvalidArgument("zero matrix has no factorization".into()));
    }
    let (rs, cs) = (row_scale.sqrt(), col_scale.sqrt());
    let m = a.as_matrix();
    let pm = m.map(|v| signed_power(v, p) / rs);
    let qm = m.map(|v| if v == 0.0 { 0.0 } else { v.abs().powf(1.0 - p) / cs });
    Ok(FactorPair {
        p: DenseMatrix(pm),
        q: DenseMatrix(qm),
        scheme: FactorScheme::Power(p),
        mu: rs * cs,
    })
}

/// The row-normalized factorization with `μ = ‖A‖_F`.
pub fn build_factors_frobenius(a: &DenseMatrix) -> Result<FactorPair> {
    let frobenius = a.frobenius();
    if frobenius == 0.0 {
        return Err(Error::InvalidArgument("zero matrix has no factorization".into()));
    }
    let m = a.as_matrix();
    let row_norms: Vec<f64> = (0..a.rows()).map(|i| m.row(i).norm()).collect();
    let pm = DMatrix::from_fn(a.rows(), a.cols(), |i, j| {
        if row_norms[i] == 0.0 {
            0.0
        } else {
            m[(i, j)] / row_norms[i]
        }
    });
    let qm = DMatrix::from_fn(a.rows(), a.cols(), |i, _| row_norms[i] / frobenius);
    Ok(FactorPair {
        p: DenseMatrix(pm),
        q: DenseMatrix(qm),
        scheme: FactorScheme::Frobenius,
        mu: frobenius,
    })
}

/// Power-iteration estimate of `‖|A|‖`, the spectral norm of the entrywise
/// absolute value. Starts from the all-ones vector; the estimate never
/// decreases with more iterations.
pub fn abs_spectral_norm(a: &DenseMatrix, iters: usize) -> Result<f64> {
    if iters == 0 {
        return Err(Error::InvalidArgument("need at least one iteration".into()));
    }
    let abs = a.as_matrix().abs();
    let gram = abs.transpose() * &abs;
    let mut x = DVector::from_element(a.cols(), 1.0 / (a.cols() as f64).sqrt());
    for _ in 0..iters {
        let next = &gram * &x;
        let norm = next.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        x = next / norm;
    }
    Ok((&abs * &x).norm())
}

/// Upper bound `√2‖φ − φ̃‖/‖φ‖` on the distance between the normalized vectors.
pub fn normalized_distance(phi: &[f64], phi_tilde: &[f64]) -> Result<f64> {
    if phi.len() != phi_tilde.len() {
        return Err(Error::Dimension("vectors of different length".into()));
    }
    let n = norm(phi);
    if n == 0.0 {
        return Err(Error::ZeroVector("reference vector".into()));
    }
    Ok(std::f64::consts::SQRT_2 * distance(phi, phi_tilde) / n)
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

pub fn normalized(x: &[f64]) -> Result<Vec<f64>> {
    let n = norm(x);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroVector("cannot normalize".into()));
    }
    Ok(x.iter().map(|v| v / n).collect())
}

/// Distance between the unit vectors along `x` and `y`.
pub fn state_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(distance(&normalized(x)?, &normalized(y)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_half() -> DenseMatrix {
        DenseMatrix::from_diagonal(&[1.0, 0.5]).unwrap()
    }

    #[test]
    fn svd_of_identity_and_diagonal() {
        let s = svd(&DenseMatrix::identity(2)).unwrap();
        assert_eq!(s.singular_values, vec![1.0, 1.0]);
        let s = svd(&diag_half()).unwrap();
        assert!((s.singular_values[0] - 1.0).abs() < 1e-15);
        assert!((s.singular_values[1] - 0.5).abs() < 1e-15);
        assert!((s.right[(0, 0)].abs() - 1.0).abs() < 1e-15);
        assert!((s.right[(1, 1)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn svd_reconstructs_random_8x8() {
        let a = crate::gen::random_dense(8, 8, 11);
        let s = svd(&a).unwrap();
        let residual = (s.reconstruct() - a.as_matrix()).norm() / a.frobenius();
        assert!(residual <= 1e-10, "residual {residual}");
        let vtv = s.right.transpose() * &s.right;
        assert!((vtv - DMatrix::identity(8, 8)).amax() < 1e-10);
        let utu = s.left.transpose() * &s.left;
        assert!((utu - DMatrix::identity(8, 8)).amax() < 1e-10);
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn full_right_basis_covers_wide_matrices() {
        let a = crate::gen::random_dense(2, 5, 3);
        let (sigma, v) = full_right_basis(&a).unwrap();
        assert_eq!(sigma.len(), 5);
        assert!((v.transpose() * &v - DMatrix::identity(5, 5)).amax() < 1e-10);
        assert!(sigma[2..].iter().all(|s| s.abs() < 1e-12));
    }

    #[test]
    fn stats_identity_and_ones() {
        let st = matrix_stats(&DenseMatrix::identity(2), &[]).unwrap();
        assert!((st.frobenius - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(st.sparsity, 1);
        assert_eq!(st.s1, 1.0);
        assert_eq!(st.condition, Some(1.0));

        let ones = DenseMatrix::from_row_slice(2, 2, &[1.0; 4]).unwrap();
        let st = matrix_stats(&ones, &[]).unwrap();
        assert!((st.frobenius - 2.0).abs() < 1e-15);
        assert_eq!(st.s1, 2.0);
        assert!((st.spectral - 2.0).abs() < 1e-14);
        // rank one: the zero singular value is dropped
        assert!((st.condition.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stats_zero_matrix_has_undefined_condition() {
        let st = matrix_stats(&DenseMatrix::zeros(3, 3), &[0.5]).unwrap();
        assert_eq!(st.condition, None);
        assert_eq!(st.sparsity, 0);
    }

    #[test]
    fn stats_perturbed_permutation() {
        let a = crate::gen::perturbed_permutation(16, 0.01, 5);
        let st = matrix_stats(&a, &[]).unwrap();
        assert_eq!(st.sparsity, 16);
        assert!(st.s1 <= 1.15, "s1 = {}", st.s1);
    }

    #[test]
    fn mu_identity_beats_frobenius() {
        let choice = mu(&DenseMatrix::identity(5), &[0.5]).unwrap();
        assert_eq!(choice.value, 1.0);
        assert_eq!(choice.argmin, FactorScheme::Power(0.5));
        assert!((choice.frobenius - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mu_symmetric_at_half_is_s1() {
        let a = crate::gen::random_symmetric(6, 2);
        let s1 = max_row_power_sum(&a, 1.0);
        assert!((mu_power(&a, 0.5) - s1).abs() < 1e-12);
        let choice = mu(&a, &default_p_grid()).unwrap();
        assert!(choice.value <= s1 + 1e-12);
        assert!(choice.value <= a.frobenius() + 1e-12);
    }

    #[test]
    fn mu_sign_matrix_grows_like_sqrt_n() {
        let a = crate::gen::sign_matrix(16, 9);
        let choice = mu(&a, &default_p_grid()).unwrap();
        assert!(choice.value >= 16f64.sqrt(), "mu = {}", choice.value);
    }

    #[test]
    fn mu_rejects_bad_grid() {
        assert!(mu(&DenseMatrix::identity(2), &[]).is_err());
        assert!(mu(&DenseMatrix::identity(2), &[1.5]).is_err());
    }

    #[test]
    fn factors_of_diag_half() {
        let f = build_factors(&diag_half(), 0.5).unwrap();
        assert!((f.mu - 1.0).abs() < 1e-15);
        let expect = [1.0, 0.0, 0.0, 0.5f64.sqrt()];
        for (k, e) in expect.iter().enumerate() {
            let (i, j) = (k / 2, k % 2);
            assert!((f.p.get(i, j) - e).abs() < 1e-15);
            assert!((f.q.get(i, j) - e).abs() < 1e-15);
        }
    }

    #[test]
    fn factors_carry_sign_on_p() {
        let a = DenseMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 0.5, -3.0]).unwrap();
        for p in [0.0, 0.3, 0.5, 1.0] {
            let f = build_factors(&a, p).unwrap();
            assert!(f.q.as_matrix().iter().all(|v| *v >= 0.0));
            assert!((f.reconstruct().as_matrix() - a.as_matrix()).amax() < 1e-12);
        }
    }

    #[test]
    fn frobenius_variant_has_mu_frobenius() {
        let a = crate::gen::random_dense(4, 3, 1);
        let f = build_factors_frobenius(&a).unwrap();
        assert!((f.mu - a.frobenius()).abs() < 1e-15);
        assert!((f.reconstruct().as_matrix() - a.as_matrix()).amax() < 1e-12);
        assert!(f.max_row_norm_p() <= 1.0 + 1e-12);
        assert!(f.max_col_norm_q() <= 1.0 + 1e-12);
    }

    #[test]
    fn factors_reject_zero_matrix() {
        assert!(build_factors(&DenseMatrix::zeros(2, 2), 0.5).is_err());
        assert!(build_factors_frobenius(&DenseMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn abs_norm_examples() {
        let ones = DenseMatrix::from_row_slice(3, 3, &[1.0; 9]).unwrap();
        assert!((abs_spectral_norm(&ones, 1).unwrap() - 3.0).abs() < 1e-12);
        assert!((abs_spectral_norm(&diag_half(), 60).unwrap() - 1.0).abs() < 1e-9);
        let sign = crate::gen::sign_matrix(16, 4);
        assert!((abs_spectral_norm(&sign, 3).unwrap() - 16.0).abs() < 1e-9);
    }

    #[test]
    fn abs_norm_is_monotone_and_bounded() {
        let a = crate::gen::random_dense(6, 4, 8);
        let exact = svd(&a.abs()).unwrap().sigma_max();
        let mut last = 0.0;
        for iters in 1..30 {
            let v = abs_spectral_norm(&a, iters).unwrap();
            assert!(v >= last - 1e-12);
            assert!(v <= exact + 1e-12);
            last = v;
        }
    }

    #[test]
    fn normalized_distance_examples() {
        assert_eq!(normalized_distance(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        let bound = normalized_distance(&[1.0, 0.0], &[1.0, 0.1]).unwrap();
        let actual = state_distance(&[1.0, 0.0], &[1.0, 0.1]).unwrap();
        assert!(bound >= actual);
        assert!(normalized_distance(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn dense_matrix_rejects_non_finite() {
        assert!(DenseMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::from_row_slice(1, 2, &[1.0]).is_err());
    }
}
