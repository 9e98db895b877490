//! Singular value estimation through the quantum walk
//! `W = (2P̃P̃ᵀ − I)(2Q̃Q̃ᵀ − I)` built from the row and column stores.
//!
//! Each right singular vector `vᵢ` of `A` spans, together with `uᵢ`, a plane
//! invariant under `W` on which `W` acts as a rotation by `θᵢ` with
//! `cos(θᵢ/2) = σᵢ/μ`. Phase estimation of `W` on `Q̃x̄` therefore reads out
//! every `σᵢ` carried by `x`. Three modes are provided: `Circuit` simulates
//! the full state, `Analytic` samples the closed-form phase distribution of
//! each plane, and `Oracle` returns exact singular values.

use std::collections::HashMap;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matvec::{self, DenseMatrix, FactorScheme};
use crate::state::{self, PhaseDistribution, PureState, UnitaryOp};
use crate::store::{CoordEntry, MatrixStore, WeightedStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SveMode {
    Analytic,
    Circuit,
    Oracle,
}

impl std::str::FromStr for SveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(SveMode::Analytic),
            "circuit" | "exact-circuit" => Ok(SveMode::Circuit),
            "oracle" => Ok(SveMode::Oracle),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SveConfig {
    /// Independent angle registers whose median forms each estimate.
    pub reps: usize,
    /// Outcomes tabulated on each side of the peak of a phase distribution.
    pub window: usize,
    /// Largest state the circuit mode will simulate.
    pub max_amplitudes: usize,
}

impl Default for SveConfig {
    fn default() -> Self {
        Self {
            reps: 15,
            window: 256,
            max_amplitudes: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    pub sve_calls: u64,
    pub phase_samples: u64,
}

/// Random source, configuration and instrumentation shared by a run.
#[derive(Debug, Clone)]
pub struct SimContext {
    pub rng: ChaCha8Rng,
    pub config: SveConfig,
    pub mode: SveMode,
    pub counters: Counters,
    cache: HashMap<(u64, u32, usize), PhaseDistribution>,
}

impl SimContext {
    pub fn new(seed: u64, mode: SveMode) -> Self {
        Self::with_config(seed, mode, SveConfig::default())
    }

    pub fn with_config(seed: u64, mode: SveMode, config: SveConfig) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            config,
            mode,
            counters: Counters::default(),
            cache: HashMap::new(),
        }
    }

    fn distribution(&mut self, theta: f64, t: u32) -> &PhaseDistribution {
        let window = self.config.window;
        self.cache
            .entry((theta.to_bits(), t, window))
            .or_insert_with(|| PhaseDistribution::new(theta, t, window))
    }
}

/// Orthonormal right basis of a matrix with the matching singular values.
/// For symmetric matrices the basis consists of eigenvectors and the signed
/// eigenvalues are kept.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub sigma: Vec<f64>,
    pub right: DMatrix<f64>,
    pub eigenvalues: Option<Vec<f64>>,
}

impl SpectralBasis {
    pub fn of(a: &DenseMatrix) -> Result<Self> {
        if a.is_symmetric(1e-12 * a.max_abs().max(1.0)) {
            let (values, vectors) = matvec::symmetric_eigen(a)?;
            Ok(Self {
                sigma: values.iter().map(|v| v.abs()).collect(),
                right: vectors,
                eigenvalues: Some(values),
            })
        } else {
            let (sigma, right) = matvec::full_right_basis(a)?;
            Ok(Self {
                sigma,
                right,
                eigenvalues: None,
            })
        }
    }

    pub fn coefficients(&self, x: &[f64]) -> Vec<f64> {
        (self.right.transpose() * DVector::from_column_slice(x)).iter().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum RowSource {
    Plain(MatrixStore),
    Weighted(WeightedStore),
}

/// A matrix held in the row and column stores that realize one Hadamard
/// factorization `A/μ = P ∘ Q`, together with the classical copy used as
/// the oracle.
#[derive(Debug, Clone)]
pub struct StoredMatrix {
    a: DenseMatrix,
    scheme: FactorScheme,
    mu: f64,
    rows: RowSource,
    cols: MatrixStore,
    basis: OnceLock<SpectralBasis>,
}

fn transformed_entries(a: &DenseMatrix, f: impl Fn(f64) -> f64, transpose: bool) -> Vec<CoordEntry> {
    a.nonzeros()
        .into_iter()
        .map(|(i, j, v)| {
            if transpose {
                CoordEntry::new(j + 1, i + 1, f(v))
            } else {
                CoordEntry::new(i + 1, j + 1, f(v))
            }
        })
        .collect()
}

impl StoredMatrix {
    /// Streams `A` into the two stores of `scheme`: rows hold
    /// `sgn(a)|a|^p` and columns `|a|^{1−p}` for the power scheme; rows hold
    /// `A` and a single row holds the row norms for the Frobenius scheme.
    pub fn new(a: &DenseMatrix, scheme: FactorScheme) -> Result<Self> {
        let scheme = scheme.validate()?;
        let (m, n) = (a.rows(), a.cols());
        let (rows, cols) = match scheme {
            FactorScheme::Power(p) => {
                let signed = |v: f64| v.signum() * v.abs().powf(p);
                let rows = MatrixStore::from_stream(&transformed_entries(a, signed, false), m, n)?;
                let cols = MatrixStore::from_stream(
                    &transformed_entries(a, |v| v.abs().powf(1.0 - p), true),
                    n,
                    m,
                )?;
                (rows, cols)
            }
            FactorScheme::Frobenius => {
                let rows = MatrixStore::from_matrix(a)?;
                let norms: Vec<CoordEntry> = (1..=m)
                    .map(|i| CoordEntry::new(1, i, rows.row_norm_sq(i).expect("row in range").sqrt()))
                    .filter(|e| e.value != 0.0)
                    .collect();
                (rows, MatrixStore::from_stream(&norms, 1, m)?)
            }
        };
        let mu = match scheme {
            FactorScheme::Power(_) => (rows.max_norm_sq() * cols.max_norm_sq()).sqrt(),
            FactorScheme::Frobenius => cols.max_norm_sq().sqrt(),
        };
        if mu == 0.0 {
            return Err(Error::EmptyStore);
        }
        Ok(Self {
            a: a.clone(),
            scheme,
            mu,
            rows: RowSource::Plain(rows),
            cols,
            basis: OnceLock::new(),
        })
    }

    /// Chooses the scheme minimizing `μ` over `p_grid` and the Frobenius variant.
    pub fn auto(a: &DenseMatrix, p_grid: &[f64]) -> Result<Self> {
        let choice = matvec::mu(a, p_grid)?;
        Self::new(a, choice.argmin)
    }

    /// Weighted rows `√wᵢ·xᵢ` from a weighted store, with `p = 1`: the
    /// column store holds the nonzero pattern, so `μ = √(M_w · s₀(Xᵀ))`.
    pub fn weighted(x: &DenseMatrix, w: &[f64]) -> Result<Self> {
        let rows = WeightedStore::from_parts(x, w)?;
        let b = rows.to_weighted_dense()?;
        let cols = MatrixStore::from_stream(&transformed_entries(x, |_| 1.0, true), x.cols(), x.rows())?;
        let mu = (rows.max_weighted_sq() * cols.max_norm_sq()).sqrt();
        if mu == 0.0 {
            return Err(Error::EmptyStore);
        }
        Ok(Self {
            a: b,
            scheme: FactorScheme::Power(1.0),
            mu,
            rows: RowSource::Weighted(rows),
            cols,
            basis: OnceLock::new(),
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn cols(&self) -> usize {
        self.a.cols()
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn scheme(&self) -> FactorScheme {
        self.scheme
    }

    pub fn basis(&self) -> Result<&SpectralBasis> {
        if let Some(b) = self.basis.get() {
            return Ok(b);
        }
        let b = SpectralBasis::of(&self.a)?;
        Ok(self.basis.get_or_init(|| b))
    }

    /// `p̄ᵢ` (0-based `i < m`), a unit vector of length `n + 1`.
    pub fn p_state(&self, i: usize) -> Result<Vec<f64>> {
        match (&self.rows, self.scheme) {
            (RowSource::Weighted(w), _) => w.prepare_weighted_row_state(i + 1),
            (RowSource::Plain(s), FactorScheme::Frobenius) => s.prepare_unit_row_state(i + 1),
            (RowSource::Plain(s), FactorScheme::Power(_)) => s.prepare_row_state(i + 1),
        }
    }

    /// `q̄ʲ` (0-based `j < n`), a unit vector of length `m + 1`.
    pub fn q_state(&self, j: usize) -> Result<Vec<f64>> {
        match self.scheme {
            FactorScheme::Frobenius if matches!(self.rows, RowSource::Plain(_)) => {
                if j >= self.cols() {
                    return Err(Error::IndexOutOfRange(format!("column {}", j + 1)));
                }
                self.cols.prepare_row_state(1)
            }
            _ => self.cols.prepare_row_state(j + 1),
        }
    }

    pub fn walk(&self) -> Result<WalkOperator> {
        WalkOperator::build(self)
    }
}

/// The isometries `P̃`, `Q̃` and the walk `W` on `ℝ^{(m+1)(n+1)}`, with basis
/// index `i·(n+1) + j`. The extra row and column pair `p̄ₘ = eₙ`,
/// `q̄ⁿ = eₘ` pad `A/μ` to `diag(A/μ, 1)`.
#[derive(Debug, Clone)]
pub struct WalkOperator {
    pub p_tilde: DMatrix<f64>,
    pub q_tilde: DMatrix<f64>,
    pub mu: f64,
    pub rows: usize,
    pub cols: usize,
}

impl WalkOperator {
    pub fn build(stored: &StoredMatrix) -> Result<Self> {
        let (m, n) = (stored.rows(), stored.cols());
        let dim = (m + 1) * (n + 1);
        let mut p_tilde = DMatrix::zeros(dim, m + 1);
        let mut q_tilde = DMatrix::zeros(dim, n + 1);
        for i in 0..m {
            let p = stored.p_state(i)?;
            if p.len() != n + 1 {
                return Err(Error::Dimension("row store does not match the column count".into()));
            }
            for (j, v) in p.iter().enumerate() {
                p_tilde[(i * (n + 1) + j, i)] = *v;
            }
        }
        p_tilde[(m * (n + 1) + n, m)] = 1.0;
        for j in 0..n {
            let q = stored.q_state(j)?;
            if q.len() != m + 1 {
                return Err(Error::Dimension("column store does not match the row count".into()));
            }
            for (i, v) in q.iter().enumerate() {
                q_tilde[(i * (n + 1) + j, j)] = *v;
            }
        }
        q_tilde[(m * (n + 1) + n, n)] = 1.0;
        Ok(Self {
            p_tilde,
            q_tilde,
            mu: stored.mu(),
            rows: m,
            cols: n,
        })
    }

    pub fn dim(&self) -> usize {
        self.p_tilde.nrows()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let id = DMatrix::<f64>::identity(self.dim(), self.dim());
        let rp = &self.p_tilde * self.p_tilde.transpose() * 2.0 - &id;
        let rq = &self.q_tilde * self.q_tilde.transpose() * 2.0 - &id;
        rp * rq
    }

    pub fn unitary(&self) -> Result<UnitaryOp> {
        UnitaryOp::from_real(&self.matrix())
    }

    /// `P̃ᵀQ̃ = diag(A/μ, 1)`.
    pub fn extended_matrix(&self) -> DMatrix<f64> {
        self.p_tilde.transpose() * &self.q_tilde
    }

    /// Largest entry of `P̃ᵀP̃ − I` and `Q̃ᵀQ̃ − I`.
    pub fn isometry_error(&self) -> f64 {
        let pp = self.p_tilde.transpose() * &self.p_tilde - DMatrix::<f64>::identity(self.rows + 1, self.rows + 1);
        let qq = self.q_tilde.transpose() * &self.q_tilde - DMatrix::<f64>::identity(self.cols + 1, self.cols + 1);
        pp.amax().max(qq.amax())
    }

    /// `Q̃x̄` for `x̄ = (x, 0)`.
    pub fn embed_right(&self, x: &[f64]) -> DVector<f64> {
        let mut xb = DVector::zeros(self.cols + 1);
        xb.rows_mut(0, self.cols).copy_from_slice(x);
        &self.q_tilde * xb
    }

    /// `P̃ū` for `ū = (u, 0)`.
    pub fn embed_left(&self, u: &[f64]) -> DVector<f64> {
        let mut ub = DVector::zeros(self.rows + 1);
        ub.rows_mut(0, self.rows).copy_from_slice(u);
        &self.p_tilde * ub
    }
}

/// `μ·|cos(θ/2)|` for an eigenphase `θ`.
pub fn sigma_from_angle(theta: f64, mu: f64) -> f64 {
    mu * (theta / 2.0).cos().abs()
}

/// `θ = 2 arccos(σ/μ)`, with the ratio clamped to `[0, 1]`.
pub fn angle_from_sigma(sigma: f64, mu: f64) -> f64 {
    2.0 * (sigma / mu).clamp(0.0, 1.0).acos()
}

/// Unitarity error of the built walk and `max_i min_k |μ·|cos(θₖ/2)| − σᵢ|`
/// over its eigenphases `θₖ`.
pub fn walk_spectrum_error(stored: &StoredMatrix) -> Result<(f64, f64)> {
    let walk = stored.walk()?;
    let w = walk.matrix();
    let unitarity = UnitaryOp::from_real(&w)?.unitarity_error();
    // W is normal, so the singular values of I + W are |1 + e^{iθₖ}| = 2|cos(θₖ/2)|.
    let shifted = DenseMatrix::new(&w + DMatrix::<f64>::identity(w.nrows(), w.nrows()))?;
    let levels: Vec<f64> = matvec::svd(&shifted)?
        .singular_values
        .iter()
        .map(|s| s * walk.mu / 2.0)
        .collect();
    let sigma = matvec::svd(stored.matrix())?.singular_values;
    let err = sigma
        .iter()
        .map(|s| levels.iter().map(|c| (c - s).abs()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    Ok((unitarity, err))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SveComponent {
    /// Coefficient of the input along this right singular vector.
    pub beta: f64,
    pub sigma: f64,
    pub estimate: f64,
    pub success: bool,
    /// Lower bound on the probability that this estimate is within `δ`.
    pub success_lower_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SveOutcome {
    pub mode: SveMode,
    pub delta: f64,
    pub mu: f64,
    /// Angle-register qubits (`0` in oracle mode).
    pub t: u32,
    pub components: Vec<SveComponent>,
    /// `true` when every component with nonzero coefficient is within `δ`.
    pub all_success: bool,
    /// Product of the per-eigenspace lower bounds.
    pub success_lower_bound: f64,
}

impl SveOutcome {
    pub fn max_error(&self) -> f64 {
        self.relevant()
            .map(|c| (c.estimate - c.sigma).abs())
            .fold(0.0, f64::max)
    }

    pub fn relevant(&self) -> impl Iterator<Item = &SveComponent> {
        self.components.iter().filter(|c| c.beta.abs() > COEFF_TOL)
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.estimate).collect()
    }
}

const COEFF_TOL: f64 = 1e-12;

/// Groups indices whose singular values agree to `1e-10·max(1, μ)`.
fn degenerate_groups(sigma: &[f64], mu: f64) -> Vec<Vec<usize>> {
    let tol = 1e-10 * mu.max(1.0);
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[a].total_cmp(&sigma[b]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for k in order {
        match groups.last_mut() {
            Some(g) if (sigma[k] - sigma[g[0]]).abs() <= tol => g.push(k),
            _ => groups.push(vec![k]),
        }
    }
    groups
}

/// Phase-estimation precision `2δ/μ`, capped so the ancilla count stays
/// meaningful for very coarse requests.
fn angle_register_bits(delta: f64, mu: f64) -> Result<u32> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("precision δ = {delta} must be positive")));
    }
    state::ancilla_qubits((2.0 * delta / mu).min(1.0))
}

/// Median over `reps` draws of `μ|cos(θ̄/2)|` from a phase distribution.
fn boosted_estimate(dist: &PhaseDistribution, mu: f64, reps: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut draws: Vec<f64> = (0..reps)
        .map(|_| sigma_from_angle(dist.sample_angle(rng), mu))
        .collect();
    state::median(&mut draws).clamp(0.0, mu)
}

fn boosted_from_table(probs: &[f64], t: u32, mu: f64, reps: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut draws: Vec<f64> = (0..reps)
        .map(|_| sigma_from_angle(state::grid_angle(state::sample_index(probs, rng) as u64, t), mu))
        .collect();
    state::median(&mut draws).clamp(0.0, mu)
}

/// Runs singular value estimation of the stored matrix on `x` in the
/// context's mode.
pub fn sve(stored: &StoredMatrix, x: &[f64], delta: f64, ctx: &mut SimContext) -> Result<SveOutcome> {
    match ctx.mode {
        SveMode::Circuit => Ok(sve_circuit(stored, x, delta, ctx)?.outcome),
        mode => sve_on_basis(stored.mu(), stored.basis()?, x, delta, mode, ctx),
    }
}

fn check_input(x: &[f64], n: usize) -> Result<Vec<f64>> {
    if x.len() != n {
        return Err(Error::Dimension(format!("vector of length {} for {n} columns", x.len())));
    }
    matvec::normalized(x)
}

/// Analytic or oracle estimation given the spectral data directly.
pub fn sve_on_basis(
    mu: f64,
    basis: &SpectralBasis,
    x: &[f64],
    delta: f64,
    mode: SveMode,
    ctx: &mut SimContext,
) -> Result<SveOutcome> {
    let xhat = check_input(x, basis.right.nrows())?;
    let beta = basis.coefficients(&xhat);
    sve_components(mu, basis, &beta, delta, mode, ctx)
}

/// Estimation for an input whose coefficients along the basis are `beta`
/// (a unit vector).
pub fn sve_components(
    mu: f64,
    basis: &SpectralBasis,
    beta: &[f64],
    delta: f64,
    mode: SveMode,
    ctx: &mut SimContext,
) -> Result<SveOutcome> {
    if beta.len() != basis.sigma.len() {
        return Err(Error::Dimension("coefficient count does not match the basis".into()));
    }
    let t = if mode == SveMode::Oracle { 0 } else { angle_register_bits(delta, mu)? };
    ctx.counters.sve_calls += 1;
    let mut components: Vec<SveComponent> = beta
        .iter()
        .zip(&basis.sigma)
        .map(|(b, s)| SveComponent {
            beta: *b,
            sigma: *s,
            estimate: *s,
            success: true,
            success_lower_bound: 1.0,
        })
        .collect();
    let mut overall = 1.0;
    if mode != SveMode::Oracle {
        let reps = ctx.config.reps.max(1);
        for group in degenerate_groups(&basis.sigma, mu) {
            if group.iter().all(|k| beta[*k].abs() <= COEFF_TOL) {
                continue;
            }
            let sigma = basis.sigma[group[0]];
            let theta = angle_from_sigma(sigma, mu);
            let eps = 2.0 * delta / mu;
            let (estimate, single) = {
                let dist = ctx.distribution(theta, t).clone();
                let single = dist.success_probability(theta, eps);
                (boosted_estimate(&dist, mu, reps, &mut ctx.rng), single)
            };
            ctx.counters.phase_samples += reps as u64;
            let bound = state::median_success_lower_bound(single, reps);
            overall *= bound;
            for k in group {
                let c = &mut components[k];
                c.estimate = estimate;
                c.success = (estimate - c.sigma).abs() <= delta;
                c.success_lower_bound = bound;
            }
        }
    }
    let all_success = components
        .iter()
        .filter(|c| c.beta.abs() > COEFF_TOL)
        .all(|c| c.success);
    Ok(SveOutcome {
        mode,
        delta,
        mu,
        t,
        components,
        all_success,
        success_lower_bound: overall,
    })
}

/// Circuit-mode result with the data used to cross-check the analytic mode.
#[derive(Debug, Clone)]
pub struct CircuitSve {
    pub outcome: SveOutcome,
    /// Angle-register distribution of each degenerate group, from projecting
    /// the simulated state onto the group's invariant planes.
    pub group_distributions: Vec<(f64, Vec<f64>)>,
    /// Total-variation distance between each group's circuit distribution
    /// and the closed-form mixture `½P(·; θ) + ½P(·; −θ)`.
    pub tv_distances: Vec<f64>,
    /// The input recovered by uncomputing phase estimation and applying `Q̃ᵀ`.
    pub recovered_input: Vec<f64>,
}

/// Algorithm steps on the full state: prepare `Q̃x̄`, phase-estimate `W`
/// with precision `2δ/μ`, read `σ̄ = μ|cos(θ̄/2)|`, then uncompute.
pub fn sve_circuit(stored: &StoredMatrix, x: &[f64], delta: f64, ctx: &mut SimContext) -> Result<CircuitSve> {
    let xhat = check_input(x, stored.cols())?;
    let mu = stored.mu();
    let t = angle_register_bits(delta, mu)?;
    let walk = stored.walk()?;
    let needed = walk.dim().saturating_mul(1usize << t.min(60));
    if needed > ctx.config.max_amplitudes {
        return Err(Error::OverCap {
            needed,
            cap: ctx.config.max_amplitudes,
        });
    }
    ctx.counters.sve_calls += 1;
    let u = walk.unitary()?;
    let start = walk.embed_right(&xhat);
    let phi = PureState::from_real("walk", start.as_slice())?;
    let est = state::phase_estimation_bits(&u, &phi, t, ctx.config.max_amplitudes)?;
    let m = 1usize << t;

    let basis = stored.basis()?.clone();
    let beta = basis.coefficients(&xhat);
    let a = stored.matrix().as_matrix();
    let reps = ctx.config.reps.max(1);
    let mut components: Vec<SveComponent> = beta
        .iter()
        .zip(&basis.sigma)
        .map(|(b, s)| SveComponent {
            beta: *b,
            sigma: *s,
            estimate: *s,
            success: true,
            success_lower_bound: 1.0,
        })
        .collect();
    let mut group_distributions = Vec::new();
    let mut tv_distances = Vec::new();
    let mut overall = 1.0;
    let amps = est.state.amplitudes();
    for group in degenerate_groups(&basis.sigma, mu) {
        let weight: f64 = group.iter().map(|k| beta[*k] * beta[*k]).sum();
        if weight <= COEFF_TOL * COEFF_TOL {
            continue;
        }
        let sigma = basis.sigma[group[0]];
        // orthonormal basis of the group's invariant planes
        let mut spanning: Vec<DVector<f64>> = Vec::new();
        for &k in &group {
            let v: Vec<f64> = basis.right.column(k).iter().copied().collect();
            spanning.push(walk.embed_right(&v));
            if sigma > 1e-12 {
                let u_vec = (a * DVector::from_column_slice(&v)) / sigma;
                spanning.push(walk.embed_left(u_vec.as_slice()));
            }
        }
        let plane = orthonormalize(&spanning);
        let mut probs = vec![0.0; m];
        for (y, p) in probs.iter_mut().enumerate() {
            for b in &plane {
                let mut overlap = num_complex::Complex64::new(0.0, 0.0);
                for s in 0..walk.dim() {
                    overlap += amps[s * m + y] * b[s];
                }
                *p += overlap.norm_sqr();
            }
        }
        let probs: Vec<f64> = probs.iter().map(|p| p / weight).collect();
        let theta = angle_from_sigma(sigma, mu);
        let plus = PhaseDistribution::new(theta, t, ctx.config.window);
        let minus = PhaseDistribution::new(-theta, t, ctx.config.window);
        let tv = (0..m)
            .map(|y| (probs[y] - 0.5 * plus.probability(y as u64) - 0.5 * minus.probability(y as u64)).abs())
            .sum::<f64>()
            / 2.0;
        let eps = 2.0 * delta / mu;
        let single: f64 = (0..m)
            .filter(|y| {
                let ang = state::grid_angle(*y as u64, t);
                state::angle_distance(ang, theta).min(state::angle_distance(ang, -theta)) <= eps + 1e-15
            })
            .map(|y| probs[y])
            .sum();
        let estimate = boosted_from_table(&probs, t, mu, reps, &mut ctx.rng);
        ctx.counters.phase_samples += reps as u64;
        let bound = state::median_success_lower_bound(single.min(1.0), reps);
        overall *= bound;
        for &k in &group {
            let c = &mut components[k];
            c.estimate = estimate;
            c.success = (estimate - c.sigma).abs() <= delta;
            c.success_lower_bound = bound;
        }
        group_distributions.push((sigma, probs));
        tv_distances.push(tv);
    }

    let back = state::uncompute_phase_estimation(&u, &est)?;
    let back_real = DVector::from_iterator(back.len(), back.iter().map(|z| z.re));
    let xb = walk.q_tilde.transpose() * back_real;
    let recovered_input = xb.rows(0, stored.cols()).iter().copied().collect();

    let all_success = components
        .iter()
        .filter(|c| c.beta.abs() > COEFF_TOL)
        .all(|c| c.success);
    Ok(CircuitSve {
        outcome: SveOutcome {
            mode: SveMode::Circuit,
            delta,
            mu,
            t,
            components,
            all_success,
            success_lower_bound: overall,
        },
        group_distributions,
        tv_distances,
        recovered_input,
    })
}

fn orthonormalize(vectors: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &out {
                let c = b.dot(&w);
                w -= b * c;
            }
        }
        let norm = w.norm();
        if norm > 1e-9 {
            out.push(w / norm);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedComponent {
    pub beta: f64,
    pub lambda: f64,
    /// Estimate of `|λ|` from the unshifted run.
    pub magnitude: f64,
    /// Estimate of `λ + μ′` from the shifted run.
    pub shifted: f64,
    pub sign: Sign,
    /// Signed estimate; `0` when the sign is ambiguous.
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedOutcome {
    pub shift: f64,
    pub delta: f64,
    pub components: Vec<SignedComponent>,
    pub unshifted: SveOutcome,
    pub shifted: SveOutcome,
}

/// A symmetric matrix stored twice: as `A` and as `A + μ′I`.
#[derive(Debug, Clone)]
pub struct ShiftedPair {
    pub plain: StoredMatrix,
    pub shifted: StoredMatrix,
    pub shift: f64,
}

impl ShiftedPair {
    /// `shift` defaults to `s₁(A)`, which makes `A + μ′I` positive
    /// semidefinite by Gershgorin's theorem.
    pub fn new(a: &DenseMatrix, shift: Option<f64>, p_grid: &[f64]) -> Result<Self> {
        if !a.is_symmetric(1e-12 * a.max_abs().max(1.0)) {
            return Err(Error::Precondition("sign recovery needs a symmetric matrix".into()));
        }
        let shift = shift.unwrap_or_else(|| matvec::max_row_power_sum(a, 1.0));
        if !(shift > 0.0) {
            return Err(Error::InvalidArgument(format!("shift {shift} must be positive")));
        }
        let (values, _) = matvec::symmetric_eigen(a)?;
        let lowest = values.iter().copied().fold(f64::INFINITY, f64::min);
        if lowest + shift < -1e-12 {
            return Err(Error::Precondition(format!(
                "A + {shift}·I is not positive semidefinite (lowest eigenvalue {lowest})"
            )));
        }
        let n = a.rows();
        let shifted_matrix = DenseMatrix::new(a.as_matrix() + DMatrix::<f64>::identity(n, n) * shift)?;
        Ok(Self {
            plain: StoredMatrix::auto(a, p_grid)?,
            shifted: StoredMatrix::auto(&shifted_matrix, p_grid)?,
            shift,
        })
    }
}

/// Recovers eigenvalue signs by estimating both `|λ|` and `λ + μ′`. With
/// `s₀ ≈ |λ|`, a positive `λ` predicts `s₀ + μ′` for the shifted run and a
/// negative one `|μ′ − s₀|`; the nearer prediction wins. The two differ by
/// `2·min(s₀, μ′)`, so the sign is reported ambiguous when that gap is not
/// above the combined error `4δ`.
pub fn signed_eigen_estimate(pair: &ShiftedPair, x: &[f64], delta: f64, ctx: &mut SimContext) -> Result<SignedOutcome> {
    let mode = if ctx.mode == SveMode::Circuit { SveMode::Analytic } else { ctx.mode };
    let basis = pair.plain.basis()?.clone();
    let lambdas = basis
        .eigenvalues
        .clone()
        .ok_or_else(|| Error::Precondition("sign recovery needs a symmetric matrix".into()))?;
    let unshifted = sve_on_basis(pair.plain.mu(), &basis, x, delta, mode, ctx)?;
    let shifted_basis = SpectralBasis {
        sigma: lambdas.iter().map(|l| (l + pair.shift).abs()).collect(),
        right: basis.right.clone(),
        eigenvalues: Some(lambdas.iter().map(|l| l + pair.shift).collect()),
    };
    let shifted = sve_on_basis(pair.shifted.mu(), &shifted_basis, x, delta, mode, ctx)?;
    let components = unshifted
        .components
        .iter()
        .zip(&shifted.components)
        .zip(&lambdas)
        .map(|((u, s), &lambda)| {
            let s0 = u.estimate;
            let s1 = s.estimate;
            let sign = if s0.min(pair.shift) <= 2.0 * delta {
                Sign::Ambiguous
            } else if (s1 - (s0 + pair.shift)).abs() <= (s1 - (pair.shift - s0).abs()).abs() {
                Sign::Positive
            } else {
                Sign::Negative
            };
            let estimate = match sign {
                Sign::Positive => s0,
                Sign::Negative => -s0,
                Sign::Ambiguous => 0.0,
            };
            SignedComponent {
                beta: u.beta,
                lambda,
                magnitude: s0,
                shifted: s1,
                sign,
                estimate,
            }
        })
        .collect();
    Ok(SignedOutcome {
        shift: pair.shift,
        delta,
        components,
        unshifted,
        shifted,
    })
}

/// Angle-register size used for a given precision, exposed for reports.
pub fn register_bits(delta: f64, mu: f64) -> Result<u32> {
    angle_register_bits(delta, mu)
}
