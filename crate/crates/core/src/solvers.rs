//! Matrix multiplication and linear systems by conditional rotation on SVE
//! estimates, the affine map `x ↦ b − Ax`, and spectral norm estimation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matvec::{self, DenseMatrix, FactorScheme};
use crate::state::{self, PureState, Register};
use crate::sve::{self, ShiftedPair, SignedOutcome, SimContext, SpectralBasis, StoredMatrix, SveMode};

/// Result of a multiplication or linear-system run, with its oracle check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub output: Vec<f64>,
    pub reference: Vec<f64>,
    pub distance: f64,
    pub bound: f64,
    /// Whether the preconditions behind `bound` hold.
    pub certified: bool,
    pub success_probability: f64,
    pub expected_repetitions: f64,
    /// State preparations used by one simulated amplification run.
    pub sampled_calls: u64,
    pub epsilon1: f64,
    pub kappa: f64,
    pub sve_all_success: bool,
    pub sve_success_lower_bound: f64,
}

impl SolveReport {
    pub fn within_bound(&self) -> bool {
        self.distance <= self.bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rotation {
    Multiply,
    Invert,
}

/// Eigenvalues of a symmetric matrix must lie in `[1/κ, 1]` (to `1e-9`).
pub fn eigen_range_ok(a: &DenseMatrix, kappa: f64) -> Result<bool> {
    let (values, _) = matvec::symmetric_eigen(a)?;
    let tol = 1e-9;
    Ok(values.iter().all(|l| *l >= 1.0 / kappa - tol && *l <= 1.0 + tol))
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::InvalidArgument(format!("κ = {kappa} must be ≥ 1")));
    }
    Ok(())
}

/// Builds `Σᵢ βᵢ|vᵢ⟩(cᵢ|0⟩ + γᵢ|1⟩)` with `γᵢ = √(1 − cᵢ²)` real and
/// nonnegative, then post-selects the flag.
fn rotate_and_select(
    basis: &SpectralBasis,
    beta: &[f64],
    amplitudes: &[f64],
    ctx: &mut SimContext,
) -> Result<(Vec<f64>, f64, f64, u64)> {
    let n = basis.right.nrows();
    let mut good = DVector::zeros(n);
    let mut bad = DVector::zeros(n);
    for k in 0..beta.len() {
        let v = basis.right.column(k);
        let c = amplitudes[k];
        good += v * (beta[k] * c);
        bad += v * (beta[k] * (1.0 - c * c).max(0.0).sqrt());
    }
    let mut amps = Vec::with_capacity(2 * n);
    for s in 0..n {
        amps.push(Complex64::new(good[s], 0.0));
        amps.push(Complex64::new(bad[s], 0.0));
    }
    let full = PureState::normalized(vec![Register::new("vector", n), Register::new("flag", 2)], amps)?;
    let selected = state::amplitude_amplify(&full, "flag")?;
    let sampled = state::amplify_sampled(selected.success_amplitude, &mut ctx.rng)?;
    Ok((
        selected.state.real_parts(),
        selected.success_amplitude * selected.success_amplitude,
        selected.expected_repetitions,
        sampled,
    ))
}

fn rotate(stored: &StoredMatrix, x: &[f64], eps1: f64, kappa: f64, rotation: Rotation, ctx: &mut SimContext) -> Result<SolveReport> {
    check_kappa(kappa)?;
    if !(eps1 > 0.0) {
        return Err(Error::InvalidArgument(format!("ε₁ = {eps1} must be positive")));
    }
    let a = stored.matrix();
    if !a.is_symmetric(1e-10) {
        return Err(Error::Precondition("matrix must be symmetric positive semidefinite".into()));
    }
    let xhat = matvec::normalized(x)?;
    let outcome = sve::sve(stored, &xhat, eps1, ctx)?;
    let basis = stored.basis()?;
    let beta: Vec<f64> = outcome.components.iter().map(|c| c.beta).collect();
    let floor = 1.0 / kappa;
    let amplitudes: Vec<f64> = outcome
        .components
        .iter()
        .map(|c| {
            let lambda = c.estimate.clamp(floor, 1.0);
            match rotation {
                Rotation::Multiply => lambda,
                Rotation::Invert => floor / lambda,
            }
        })
        .collect();
    let (output, success_probability, expected_repetitions, sampled_calls) =
        rotate_and_select(basis, &beta, &amplitudes, ctx)?;

    let exact = match rotation {
        Rotation::Multiply => a.mul_vec(&xhat)?,
        Rotation::Invert => {
            let lu = a.as_matrix().clone().lu();
            lu.solve(&DVector::from_column_slice(&xhat))
                .ok_or_else(|| Error::Precondition("matrix is singular".into()))?
                .iter()
                .copied()
                .collect()
        }
    };
    let reference = matvec::normalized(&exact)?;
    let in_range = eigen_range_ok(a, kappa)?;
    let (bound, certified) = match rotation {
        Rotation::Multiply => (
            std::f64::consts::SQRT_2 * eps1 * kappa,
            in_range && kappa * eps1 < 1.0,
        ),
        Rotation::Invert => (2.0 * std::f64::consts::SQRT_2 * kappa * eps1, in_range),
    };
    Ok(SolveReport {
        distance: matvec::distance(&output, &reference),
        output,
        reference,
        bound,
        certified,
        success_probability,
        expected_repetitions,
        sampled_calls,
        epsilon1: eps1,
        kappa,
        sve_all_success: outcome.all_success,
        sve_success_lower_bound: outcome.success_lower_bound,
    })
}

/// `|z⟩ ≈ |Ax⟩` for positive semidefinite `A` with eigenvalues in
/// `[1/κ, 1]`, rotating each component by its clamped estimate `λ̄ᵢ`.
/// Bound: `√2·ε₁·κ`.
pub fn multiply(stored: &StoredMatrix, x: &[f64], eps1: f64, kappa: f64, ctx: &mut SimContext) -> Result<SolveReport> {
    rotate(stored, x, eps1, kappa, Rotation::Multiply, ctx)
}

/// `|z⟩ ≈ |A⁻¹b⟩`, rotating by `(1/κ)/λ̄ᵢ`. Bound: `2√2·κ·ε₁`, which needs
/// `κε₁ ≤ 1/2`.
pub fn solve(stored: &StoredMatrix, b: &[f64], eps1: f64, kappa: f64, ctx: &mut SimContext) -> Result<SolveReport> {
    check_kappa(kappa)?;
    if kappa * eps1 > 0.5 {
        return Err(Error::Precondition(format!("κ·ε₁ = {} exceeds 1/2", kappa * eps1)));
    }
    rotate(stored, b, eps1, kappa, Rotation::Invert, ctx)
}

/// A symmetric matrix held for signed application to arbitrary vectors.
#[derive(Debug, Clone)]
pub struct SignedOperator {
    pair: ShiftedPair,
}

/// Estimate of `Hy` produced by [`SignedOperator::apply`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AppliedVector {
    pub vector: Vec<f64>,
    pub precision: f64,
    pub all_signs_resolved: bool,
    pub sve_all_success: bool,
}

impl SignedOperator {
    pub fn new(h: &DenseMatrix, p_grid: &[f64]) -> Result<Self> {
        Ok(Self {
            pair: ShiftedPair::new(h, None, p_grid)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.pair.plain.rows()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        self.pair.plain.matrix()
    }

    pub fn mu(&self) -> f64 {
        self.pair.plain.mu().max(self.pair.shifted.mu())
    }

    /// Estimates `Hy` to absolute error `eps`: signed estimation at
    /// precision `eps/(3‖y‖)` bounds each eigenvalue error, ambiguous ones
    /// included, by `eps/‖y‖`.
    pub fn apply(&self, y: &[f64], eps: f64, ctx: &mut SimContext) -> Result<AppliedVector> {
        if y.len() != self.dim() {
            return Err(Error::Dimension(format!("vector of length {} for dimension {}", y.len(), self.dim())));
        }
        let norm = matvec::norm(y);
        if norm == 0.0 {
            return Ok(AppliedVector {
                vector: vec![0.0; y.len()],
                precision: eps,
                all_signs_resolved: true,
                sve_all_success: true,
            });
        }
        let delta = eps / (3.0 * norm);
        let signed: SignedOutcome = sve::signed_eigen_estimate(&self.pair, y, delta, ctx)?;
        let basis = self.pair.plain.basis()?;
        let mut out = DVector::zeros(y.len());
        for (k, c) in signed.components.iter().enumerate() {
            if c.beta.abs() <= 1e-12 {
                continue;
            }
            out += basis.right.column(k) * (norm * c.beta * c.estimate);
        }
        let relevant = |b: f64| b.abs() > 1e-12;
        Ok(AppliedVector {
            vector: out.iter().copied().collect(),
            precision: eps,
            all_signs_resolved: signed
                .components
                .iter()
                .filter(|c| relevant(c.beta) && c.lambda.abs() > 3.0 * delta)
                .all(|c| c.sign != sve::Sign::Ambiguous),
            sve_all_success: signed.unshifted.all_success && signed.shifted.all_success,
        })
    }
}

/// `[[0, A], [Aᵀ, 0]]`.
pub fn symmetrize(a: &DenseMatrix) -> Result<DenseMatrix> {
    let (m, n) = (a.rows(), a.cols());
    let mut h = DMatrix::zeros(m + n, m + n);
    h.view_mut((0, m), (m, n)).copy_from(a.as_matrix());
    h.view_mut((m, 0), (n, m)).copy_from(&a.as_matrix().transpose());
    DenseMatrix::new(h)
}

/// Multiplication by a rectangular (or indefinite) matrix through the
/// symmetric embedding: `H(0, x) = (Ax, 0)`.
#[derive(Debug, Clone)]
pub struct SymmetrizedOperator {
    op: SignedOperator,
    rows: usize,
    cols: usize,
}

impl SymmetrizedOperator {
    pub fn new(a: &DenseMatrix, p_grid: &[f64]) -> Result<Self> {
        Ok(Self {
            op: SignedOperator::new(&symmetrize(a)?, p_grid)?,
            rows: a.rows(),
            cols: a.cols(),
        })
    }

    pub fn mu(&self) -> f64 {
        self.op.mu()
    }

    /// Estimate of `Ax` to absolute error `eps`.
    pub fn apply(&self, x: &[f64], eps: f64, ctx: &mut SimContext) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!("vector of length {} for {} columns", x.len(), self.cols)));
        }
        let mut y = vec![0.0; self.rows];
        y.extend_from_slice(x);
        let out = self.op.apply(&y, eps, ctx)?;
        Ok(out.vector[..self.rows].to_vec())
    }
}

/// The affine map `x ↦ b − Ax`, realized through
/// `A₁ = [[−A, b], [0, 0]]`, `A′ = [[0, A₁], [A₁ᵀ, 0]]` and
/// `x′ = (0^{m+1}, x, 1)`, for which `A′x′ = (b − Ax, 0)`.
#[derive(Debug, Clone)]
pub struct AffineOperator {
    op: SignedOperator,
    a: DenseMatrix,
    b: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AffineResult {
    /// Unnormalized estimate of `b − Ax`.
    pub vector: Vec<f64>,
    pub norm: f64,
    /// Set when the estimate is within the precision of zero, as for `b = Ax`.
    pub zero_norm: bool,
    pub reference: Vec<f64>,
    pub error: f64,
    pub epsilon: f64,
    pub sve_all_success: bool,
}

impl AffineOperator {
    pub fn new(a: &DenseMatrix, b: &[f64], p_grid: &[f64]) -> Result<Self> {
        let (m, n) = (a.rows(), a.cols());
        if b.len() != m {
            return Err(Error::Dimension(format!("b of length {} for {m} rows", b.len())));
        }
        let mut a1 = DMatrix::zeros(m + 1, n + 1);
        a1.view_mut((0, 0), (m, n)).copy_from(&(-a.as_matrix()));
        for (i, v) in b.iter().enumerate() {
            a1[(i, n)] = *v;
        }
        let h = symmetrize(&DenseMatrix::new(a1)?)?;
        Ok(Self {
            op: SignedOperator::new(&h, p_grid)?,
            a: a.clone(),
            b: b.to_vec(),
        })
    }

    pub fn mu(&self) -> f64 {
        self.op.mu()
    }

    pub fn apply(&self, x: &[f64], eps: f64, ctx: &mut SimContext) -> Result<AffineResult> {
        let (m, n) = (self.a.rows(), self.a.cols());
        if x.len() != n {
            return Err(Error::Dimension(format!("x of length {} for {n} columns", x.len())));
        }
        let mut xp = vec![0.0; m + 1];
        xp.extend_from_slice(x);
        xp.push(1.0);
        let out = self.op.apply(&xp, eps, ctx)?;
        let vector = out.vector[..m].to_vec();
        let ax = self.a.mul_vec(x)?;
        let reference: Vec<f64> = self.b.iter().zip(&ax).map(|(b, v)| b - v).collect();
        let norm = matvec::norm(&vector);
        Ok(AffineResult {
            error: matvec::distance(&vector, &reference),
            zero_norm: norm <= eps,
            norm,
            vector,
            reference,
            epsilon: eps,
            sve_all_success: out.sve_all_success,
        })
    }
}

/// One-shot `b − Ax` with precision `eps`; `α` scales the output as in a
/// gradient step `αL̃(x)`.
pub fn affine_apply(a: &DenseMatrix, b: &[f64], x: &[f64], alpha: f64, eps: f64, ctx: &mut SimContext) -> Result<AffineResult> {
    let op = AffineOperator::new(a, b, &matvec::default_p_grid())?;
    let mut r = op.apply(x, eps, ctx)?;
    if alpha != 1.0 {
        for v in r.vector.iter_mut().chain(r.reference.iter_mut()) {
            *v *= alpha;
        }
        r.norm *= alpha.abs();
        r.error *= alpha.abs();
    }
    Ok(r)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchRound {
    pub lower: f64,
    pub upper: f64,
    pub tau: f64,
    pub flagged_mass: f64,
    pub mass_estimate: f64,
    pub zero: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralNormResult {
    pub estimate: f64,
    pub exact: f64,
    pub epsilon: f64,
    pub trace: Vec<SearchRound>,
    pub sve_calls: u64,
    pub amplitude_queries: u64,
}

impl SpectralNormResult {
    /// Every round halves the search interval.
    pub fn trace_halves(&self) -> bool {
        let mut width = 1.0;
        for r in &self.trace {
            let next = r.upper - r.lower;
            if (next - width / 2.0).abs() > 1e-12 {
                return false;
            }
            width = next;
        }
        true
    }
}

/// Binary search for `η = σ_max/‖A‖_F` on `|φ⟩ = Σ aᵢⱼ|i, j⟩/‖A‖_F`, whose
/// singular components carry weight `σₖ²/‖A‖_F²`. Each round estimates
/// singular values to `(ε/2)‖A‖_F`, flags those at or above `τ‖A‖_F`, and
/// amplitude-estimates the flagged mass to relative error `δ_rel`.
pub fn spectral_norm_estimate(a: &DenseMatrix, eps: f64, delta_rel: f64, ctx: &mut SimContext) -> Result<SpectralNormResult> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("ε = {eps} outside (0, 1)")));
    }
    let frob = a.frobenius();
    if frob == 0.0 {
        return Err(Error::InvalidArgument("zero matrix has no spectral norm ratio".into()));
    }
    let stored = StoredMatrix::new(a, FactorScheme::Frobenius)?;
    let spec = matvec::svd(a)?;
    let basis = SpectralBasis {
        sigma: spec.singular_values.clone(),
        right: spec.right.clone(),
        eigenvalues: None,
    };
    let beta: Vec<f64> = spec.singular_values.iter().map(|s| s / frob).collect();
    let mode = if ctx.mode == SveMode::Circuit { SveMode::Analytic } else { ctx.mode };
    let rounds = (1.0 / eps).log2().ceil().max(1.0) as usize;
    let calls_before = ctx.counters.sve_calls;
    let (mut lower, mut upper) = (0.0, 1.0);
    let mut trace = Vec::with_capacity(rounds);
    let mut queries = 0;
    for _ in 0..rounds {
        let tau = 0.5 * (lower + upper);
        let outcome = sve::sve_components(stored.mu(), &basis, &beta, 0.5 * eps * frob, mode, ctx)?;
        let flagged: f64 = outcome
            .components
            .iter()
            .filter(|c| c.estimate >= tau * frob)
            .map(|c| c.beta * c.beta)
            .sum();
        let ae = state::amplitude_estimate(flagged.min(1.0), delta_rel, ctx.config.reps, ctx.config.window, &mut ctx.rng)?;
        queries += ae.queries;
        if ae.zero_amplitude {
            upper = tau;
        } else {
            lower = tau;
        }
        trace.push(SearchRound {
            lower,
            upper,
            tau,
            flagged_mass: flagged,
            mass_estimate: ae.estimate,
            zero: ae.zero_amplitude,
        });
    }
    Ok(SpectralNormResult {
        estimate: 0.5 * (lower + upper),
        exact: spec.sigma_max() / frob,
        epsilon: eps,
        trace,
        sve_calls: ctx.counters.sve_calls - calls_before,
        amplitude_queries: queries,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Normalized {
    pub matrix: DenseMatrix,
    pub scale: f64,
    pub eta_estimate: f64,
    /// `‖A/scale‖` from the classical oracle.
    pub spectral_norm: f64,
    pub certified: bool,
}

/// Divides `A` by `(η̄ + ε)‖A‖_F`, which dominates `σ_max` whenever the
/// estimate is within `ε`.
pub fn normalize_matrix(a: &DenseMatrix, eps: f64, ctx: &mut SimContext) -> Result<Normalized> {
    let est = spectral_norm_estimate(a, eps, 0.1, ctx)?;
    let scale = (est.estimate + eps) * a.frobenius();
    let matrix = a.scaled(1.0 / scale);
    let spectral_norm = matvec::svd(&matrix)?.sigma_max();
    Ok(Normalized {
        matrix,
        scale,
        eta_estimate: est.estimate,
        certified: spectral_norm <= 1.0 + 1e-12,
        spectral_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    fn ctx(seed: u64) -> SimContext {
        SimContext::new(seed, SveMode::Analytic)
    }

    fn stored(a: &DenseMatrix) -> StoredMatrix {
        StoredMatrix::auto(a, &matvec::default_p_grid()).unwrap()
    }

    #[test]
    fn multiply_identity() {
        let s = stored(&DenseMatrix::identity(3));
        let r = multiply(&s, &[0.6, 0.0, 0.8], 0.01, 1.0, &mut ctx(0)).unwrap();
        assert!(r.distance < 1e-12);
        assert!((r.success_probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn multiply_diag_half() {
        let a = DenseMatrix::from_diagonal(&[1.0, 0.5]).unwrap();
        let s = stored(&a);
        let h = 0.5f64.sqrt();
        let mut c = ctx(1);
        for _ in 0..20 {
            let r = multiply(&s, &[h, h], 0.01, 2.0, &mut c).unwrap();
            let expect = matvec::normalized(&[1.0, 0.5]).unwrap();
            assert!(matvec::distance(&r.reference, &expect) < 1e-12);
            assert!(r.distance <= 2f64.sqrt() * 0.01 * 2.0);
            assert!(r.certified);
        }
    }

    #[test]
    fn solve_diag_half_and_identity() {
        let a = DenseMatrix::from_diagonal(&[1.0, 0.5]).unwrap();
        let s = stored(&a);
        let h = 0.5f64.sqrt();
        let mut c = ctx(2);
        let r = solve(&s, &[h, h], 0.05, 2.0, &mut c).unwrap();
        let expect = matvec::normalized(&[1.0, 2.0]).unwrap();
        assert!(matvec::distance(&r.reference, &expect) < 1e-12);
        assert!(r.distance <= 2.0 * 2f64.sqrt() * 2.0 * 0.05);

        let s = stored(&DenseMatrix::identity(2));
        let r = solve(&s, &[1.0, 0.0], 0.05, 1.0, &mut c).unwrap();
        assert!(r.distance < 1e-12);
    }

    #[test]
    fn solve_rejects_large_kappa_eps() {
        let s = stored(&DenseMatrix::identity(2));
        assert!(solve(&s, &[1.0, 0.0], 0.3, 2.0, &mut ctx(0)).is_err());
    }

    #[test]
    fn solve_success_probability_matches_formula() {
        let a = gen::random_psd(6, 4.0, 3).unwrap();
        let s = stored(&a);
        let mut c = SimContext::new(0, SveMode::Oracle);
        let b = gen::random_unit_vector(6, &mut gen::rng(1));
        let r = solve(&s, &b, 0.01, 4.0, &mut c).unwrap();
        let basis = s.basis().unwrap();
        let beta = basis.coefficients(&b);
        let expect: f64 = beta
            .iter()
            .zip(&basis.sigma)
            .map(|(bt, l)| bt * bt * (0.25 / l.clamp(0.25, 1.0)).powi(2))
            .sum();
        assert!((r.success_probability - expect).abs() < 1e-12);
        assert!(r.distance < 1e-10);
    }

    #[test]
    fn affine_examples() {
        let a = DenseMatrix::from_diagonal(&[1.0, 0.5]).unwrap();
        let mut c = ctx(4);
        let r = affine_apply(&a, &[1.0, 0.0], &[0.0, 0.0], 1.0, 0.01, &mut c).unwrap();
        assert!(r.error <= 1e-12 && (r.norm - 1.0).abs() < 1e-12);

        let h = 0.5f64.sqrt();
        let r = affine_apply(&a, &[1.0, 0.0], &[h, h], 1.0, 0.01, &mut c).unwrap();
        assert!(r.error <= 0.01, "error {}", r.error);
        assert!(r.sve_all_success);

        let r = affine_apply(&DenseMatrix::identity(2), &[1.0, 0.0], &[1.0, 0.0], 1.0, 0.01, &mut c).unwrap();
        assert!(r.zero_norm);
    }

    #[test]
    fn affine_oracle_is_exact() {
        let a = gen::random_psd(5, 3.0, 8).unwrap();
        let b = gen::random_unit_vector(5, &mut gen::rng(2));
        let x = gen::random_vector(5, &mut gen::rng(3));
        let mut c = SimContext::new(0, SveMode::Oracle);
        let r = affine_apply(&a, &b, &x, 1.0, 1e-3, &mut c).unwrap();
        assert!(r.error < 1e-10, "{}", r.error);
    }

    #[test]
    fn rectangular_multiply() {
        let a = gen::random_dense(3, 5, 1);
        let op = SymmetrizedOperator::new(&a, &matvec::default_p_grid()).unwrap();
        let x = [0.2, -0.1, 0.5, 0.3, 0.0];
        let mut c = ctx(5);
        let y = op.apply(&x, 0.01, &mut c).unwrap();
        assert!(matvec::distance(&y, &a.mul_vec(&x).unwrap()) <= 0.01);
    }

    #[test]
    fn spectral_norm_examples() {
        let mut c = ctx(6);
        let rank1 = DenseMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        let r = spectral_norm_estimate(&rank1, 0.05, 0.1, &mut c).unwrap();
        assert!(r.estimate >= 0.95);
        assert!(r.trace_halves());

        let d = DenseMatrix::from_diagonal(&[1.0, 0.5]).unwrap();
        let r = spectral_norm_estimate(&d, 0.05, 0.1, &mut c).unwrap();
        assert!((r.exact - 1.0 / 1.25f64.sqrt()).abs() < 1e-12);
        assert!((r.estimate - r.exact).abs() <= 0.05);

        let r = spectral_norm_estimate(&DenseMatrix::identity(4), 0.05, 0.1, &mut c).unwrap();
        assert!((r.estimate - 0.5).abs() <= 0.05);

        assert!(spectral_norm_estimate(&DenseMatrix::zeros(2, 2), 0.05, 0.1, &mut c).is_err());
    }

    #[test]
    fn normalize_examples() {
        let mut c = ctx(7);
        let r = normalize_matrix(&DenseMatrix::from_diagonal(&[2.0, 1.0]).unwrap(), 0.05, &mut c).unwrap();
        assert!(r.certified && r.spectral_norm <= 1.0);
        let r = normalize_matrix(&DenseMatrix::identity(3), 0.05, &mut c).unwrap();
        assert!(r.certified);
        assert!(r.spectral_norm >= 1.0 / (1.0 + 0.05 * 3f64.sqrt()) - 0.1);
        assert!(normalize_matrix(&DenseMatrix::zeros(2, 2), 0.05, &mut c).is_err());
    }
}
