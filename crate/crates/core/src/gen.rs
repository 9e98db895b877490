//! Seeded matrix families used by tests, experiments and the `gen` command.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matvec::DenseMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    Identity { n: usize },
    Diag { values: Vec<f64> },
    RandomPsd { n: usize, kappa: f64 },
    LowRank { n: usize, rank: usize },
    PerturbedPermutation { n: usize, eps: f64 },
    Sign { n: usize },
    RandomDense { rows: usize, cols: usize },
    RandomSymmetric { n: usize },
}

impl Family {
    pub fn generate(&self, seed: u64) -> Result<DenseMatrix> {
        match self {
            Family::Identity { n } => {
                check_size(*n)?;
                Ok(DenseMatrix::identity(*n))
            }
            Family::Diag { values } => {
                if values.is_empty() {
                    return Err(Error::InvalidArgument("diagonal needs at least one value".into()));
                }
                DenseMatrix::from_diagonal(values)
            }
            Family::RandomPsd { n, kappa } => random_psd(*n, *kappa, seed),
            Family::LowRank { n, rank } => low_rank(*n, *rank, seed),
            Family::PerturbedPermutation { n, eps } => {
                check_size(*n)?;
                if !(0.0..1.0).contains(eps) {
                    return Err(Error::InvalidArgument(format!("perturbation {eps} outside [0, 1)")));
                }
                Ok(perturbed_permutation(*n, *eps, seed))
            }
            Family::Sign { n } => {
                check_size(*n)?;
                Ok(sign_matrix(*n, seed))
            }
            Family::RandomDense { rows, cols } => {
                check_size(*rows)?;
                check_size(*cols)?;
                Ok(random_dense(*rows, *cols, seed))
            }
            Family::RandomSymmetric { n } => {
                check_size(*n)?;
                Ok(random_symmetric(*n, seed))
            }
        }
    }
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidArgument("dimension must be at least 1".into()))
    } else {
        Ok(())
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Haar-like random matrix with orthonormal columns (`rows × cols`, `cols ≤ rows`).
pub fn random_orthonormal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = gaussian_matrix(rows, cols, rng);
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q.columns(0, cols).into_owned();
    for k in 0..cols {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    q
}

/// Gaussian entries scaled by `1/√cols`.
pub fn random_dense(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = rng(seed);
    let scale = 1.0 / (cols as f64).sqrt();
    DenseMatrix::new(gaussian_matrix(rows, cols, &mut rng) * scale).expect("finite gaussian matrix")
}

pub fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
    let g = random_dense(n, n, seed).into_inner();
    DenseMatrix::new((&g + g.transpose()) * 0.5).expect("finite")
}

pub fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn random_unit_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v = random_vector(n, rng);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Spectrum used by [`random_psd`]: `n` values from `1/κ` to `1`, both ends
/// included, geometrically spaced.
pub fn psd_spectrum(n: usize, kappa: f64) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|k| kappa.powf(-(k as f64) / (n - 1) as f64))
        .collect()
}

/// `QΛQᵀ` with a random orthogonal `Q` and eigenvalues spanning `[1/κ, 1]`,
/// so the condition number is exactly `κ` up to rounding.
pub fn random_psd(n: usize, kappa: f64, seed: u64) -> Result<DenseMatrix> {
    check_size(n)?;
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::InvalidArgument(format!("condition number {kappa} must be ≥ 1")));
    }
    if n == 1 && kappa != 1.0 {
        return Err(Error::InvalidArgument("a 1×1 matrix has condition number 1".into()));
    }
    let mut rng = rng(seed);
    let q = random_orthonormal(n, n, &mut rng);
    let lambda = DMatrix::from_diagonal(&DVector::from_vec(psd_spectrum(n, kappa)));
    let a = &q * lambda * q.transpose();
    DenseMatrix::new((&a + a.transpose()) * 0.5)
}

/// `U diag(σ) Vᵀ` with `rank` singular values drawn from `(0, 1]`, so
/// `‖A‖_F ≤ √rank`.
pub fn low_rank(n: usize, rank: usize, seed: u64) -> Result<DenseMatrix> {
    check_size(n)?;
    if rank == 0 || rank > n {
        return Err(Error::InvalidArgument(format!("rank {rank} outside 1..={n}")));
    }
    let mut rng = rng(seed);
    let u = random_orthonormal(n, rank, &mut rng);
    let v = random_orthonormal(n, rank, &mut rng);
    let sigma: Vec<f64> = (0..rank).map(|_| 1.0 - rng.random::<f64>()).collect();
    let s = DMatrix::from_diagonal(&DVector::from_vec(sigma));
    DenseMatrix::new(u * s * v.transpose())
}

/// A random permutation matrix plus off-permutation entries of magnitude in
/// `[ε/2, ε]` with random signs. Every row is fully dense while
/// `s₁(A) ≤ 1 + (n − 1)ε`.
pub fn perturbed_permutation(n: usize, eps: f64, seed: u64) -> DenseMatrix {
    let mut rng = rng(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    for k in (1..n).rev() {
        let j = rng.random_range(0..=k);
        perm.swap(k, j);
    }
    let m = DMatrix::from_fn(n, n, |i, j| {
        if perm[i] == j {
            1.0
        } else {
            let magnitude = eps * (0.5 + 0.5 * rng.random::<f64>());
            if rng.random::<bool>() {
                magnitude
            } else {
                -magnitude
            }
        }
    });
    DenseMatrix::new(m).expect("finite")
}

/// Independent uniformly random `±1` entries.
pub fn sign_matrix(n: usize, seed: u64) -> DenseMatrix {
    let mut rng = rng(seed);
    let m = DMatrix::from_fn(n, n, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
    DenseMatrix::new(m).expect("finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matvec::{matrix_stats, svd};

    #[test]
    fn identity_family() {
        let a = Family::Identity { n: 4 }.generate(0).unwrap();
        assert_eq!(a, DenseMatrix::identity(4));
    }

    #[test]
    fn random_psd_hits_target_condition() {
        for seed in 0..5 {
            let a = random_psd(8, 4.0, seed).unwrap();
            assert!(a.is_symmetric(1e-12));
            let st = matrix_stats(&a, &[]).unwrap();
            assert!((st.spectral - 1.0).abs() < 1e-10);
            assert!((st.condition.unwrap() - 4.0).abs() < 0.4);
        }
    }

    #[test]
    fn low_rank_frobenius_bound() {
        let a = low_rank(32, 2, 7).unwrap();
        assert!(a.frobenius() <= 2f64.sqrt() + 1e-12);
        let s = svd(&a).unwrap();
        assert!(s.singular_values[2] < 1e-10);
        assert!(s.singular_values[1] > 0.0);
    }

    #[test]
    fn sign_entries() {
        let a = sign_matrix(16, 1);
        assert!(a.as_matrix().iter().all(|v| *v == 1.0 || *v == -1.0));
    }

    #[test]
    fn generation_is_deterministic() {
        let f = Family::RandomPsd { n: 5, kappa: 3.0 };
        assert_eq!(f.generate(9).unwrap(), f.generate(9).unwrap());
        assert_ne!(f.generate(9).unwrap(), f.generate(10).unwrap());
    }

    #[test]
    fn invalid_parameters() {
        assert!(Family::Identity { n: 0 }.generate(0).is_err());
        assert!(Family::RandomPsd { n: 4, kappa: 0.5 }.generate(0).is_err());
        assert!(Family::LowRank { n: 4, rank: 5 }.generate(0).is_err());
        assert!(Family::PerturbedPermutation { n: 4, eps: 2.0 }.generate(0).is_err());
    }
}
