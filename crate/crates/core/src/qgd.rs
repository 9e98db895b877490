//! Gradient descent with affine updates `θ_{t+1} = θ_t + α(b − Aθ_t)` run
//! through a history state.
//!
//! Writing `L(θ) = b − Aθ` and `S = I − αA`, the residuals obey
//! `r_{t+1} = S r_t`, so `θ_τ = θ₀ + α Σ_{t=1}^{τ} S^{t−1}L(θ₀)`. The history
//! state holds `θ₀` in time slot `0` and `αS̃^{t−1}L̃(θ₀)` in slot `t`, with
//! the remaining norm of each slot parked in a flagged garbage branch. A
//! Hadamard transform on the time register followed by selecting outcome
//! `0` leaves `θ̃_τ/(τ+1)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matvec::{self, DenseMatrix};
use crate::solvers::AffineOperator;
use crate::state;
use crate::sve::{self, SimContext, StoredMatrix};

/// Smallest norm of `θ̃_τ` accepted before amplification.
pub const NORM_FLOOR: f64 = 0.5;

/// Relative precision of the amplitude estimate of `‖θ̃_τ‖`.
pub const NORM_REL_EPS: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GDConfig {
    pub alpha: f64,
    /// Step count, always of the form `2^ℓ − 1`.
    pub tau: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub kappa: f64,
}

impl GDConfig {
    /// Pads `tau` up so that `τ + 1` is a power of two.
    pub fn new(alpha: f64, tau: usize, epsilon: f64, delta: f64, kappa: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!("step size α = {alpha} outside (0, 1]")));
        }
        if tau == 0 {
            return Err(Error::InvalidArgument("τ must be at least 1".into()));
        }
        if !(epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("ε = {epsilon} must be positive")));
        }
        if !(kappa >= 1.0) {
            return Err(Error::InvalidArgument(format!("κ = {kappa} must be ≥ 1")));
        }
        Ok(Self {
            alpha,
            tau: (tau + 1).next_power_of_two() - 1,
            epsilon,
            delta,
            kappa,
        })
    }

    /// `ε = δ_target/(α·τ²)`, the per-step error keeping the ledger `ατ²ε`
    /// at `δ_target`.
    pub fn with_target(alpha: f64, tau: usize, delta_target: f64, kappa: f64) -> Result<Self> {
        let padded = (tau + 1).next_power_of_two() - 1;
        let epsilon = delta_target / (alpha * (padded * padded) as f64);
        Self::new(alpha, padded, epsilon, delta_target, kappa)
    }

    /// `ℓ` with `τ + 1 = 2^ℓ`.
    pub fn time_qubits(&self) -> u32 {
        (self.tau + 1).trailing_zeros()
    }

    /// The ledger `α·τ²·ε`.
    pub fn ledger(&self) -> f64 {
        self.alpha * (self.tau * self.tau) as f64 * self.epsilon
    }
}

/// Unnormalized estimate produced by an approximate step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepEstimate {
    pub vector: Vec<f64>,
    pub sve_all_success: bool,
}

/// Estimated eigen-components of a vector `r` under the update matrix `A`.
#[derive(Debug, Clone)]
pub struct EigenEstimate {
    pub vectors: DMatrix<f64>,
    pub norm: f64,
    pub beta: Vec<f64>,
    pub estimates: Vec<f64>,
    pub exact: Vec<f64>,
    pub all_success: bool,
}

impl EigenEstimate {
    /// `‖r‖ Σᵢ βᵢ f(λ̄ᵢ) vᵢ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut out = DVector::zeros(self.vectors.nrows());
        for (k, (b, l)) in self.beta.iter().zip(&self.estimates).enumerate() {
            if b.abs() > 1e-14 {
                out += self.vectors.column(k) * (self.norm * b * f(*l));
            }
        }
        out.iter().copied().collect()
    }

    fn zero(n: usize) -> Self {
        Self {
            vectors: DMatrix::identity(n, n),
            norm: 0.0,
            beta: vec![0.0; n],
            estimates: vec![0.0; n],
            exact: vec![0.0; n],
            all_success: true,
        }
    }
}

/// An update `θ ↦ θ + α(b − Aθ)` with positive semidefinite `A`, `‖A‖ ≤ 1`,
/// accessed only through approximate affine steps and eigenvalue estimates.
pub trait IterativeProblem {
    fn dim(&self) -> usize;

    /// `(A_j, b_j)` for each batch applied cyclically; one batch for full GD.
    fn batches(&self) -> Vec<(DMatrix<f64>, Vec<f64>)>;

    /// `L̃(θ)` with `‖L(θ) − L̃(θ)‖ ≤ eps`.
    fn affine(&self, theta: &[f64], eps: f64, ctx: &mut SimContext) -> Result<StepEstimate>;

    /// Eigen-components of `r` with each eigenvalue estimated to `eps`.
    fn eigen_estimate(&self, r: &[f64], eps: f64, ctx: &mut SimContext) -> Result<EigenEstimate>;
}

/// The linear system `Aθ = b` held in stores: `A` for eigenvalue
/// estimation and the affine embedding of `(A, b)` for the first step.
#[derive(Debug, Clone)]
pub struct PsdProblem {
    stored: StoredMatrix,
    affine: AffineOperator,
    b: Vec<f64>,
}

impl PsdProblem {
    pub fn new(a: &DenseMatrix, b: &[f64], p_grid: &[f64]) -> Result<Self> {
        if a.rows() != a.cols() || !a.is_symmetric(1e-10) {
            return Err(Error::Precondition("update matrix must be symmetric".into()));
        }
        if b.len() != a.rows() {
            return Err(Error::Dimension(format!("b of length {} for dimension {}", b.len(), a.rows())));
        }
        Ok(Self {
            stored: StoredMatrix::auto(a, p_grid)?,
            affine: AffineOperator::new(a, b, p_grid)?,
            b: b.to_vec(),
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        self.stored.matrix()
    }

    pub fn stored(&self) -> &StoredMatrix {
        &self.stored
    }

    pub fn affine_mu(&self) -> f64 {
        self.affine.mu()
    }
}

impl IterativeProblem for PsdProblem {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn batches(&self) -> Vec<(DMatrix<f64>, Vec<f64>)> {
        vec![(self.stored.matrix().as_matrix().clone(), self.b.clone())]
    }

    fn affine(&self, theta: &[f64], eps: f64, ctx: &mut SimContext) -> Result<StepEstimate> {
        let r = self.affine.apply(theta, eps, ctx)?;
        Ok(StepEstimate {
            vector: r.vector,
            sve_all_success: r.sve_all_success,
        })
    }

    fn eigen_estimate(&self, r: &[f64], eps: f64, ctx: &mut SimContext) -> Result<EigenEstimate> {
        let norm = matvec::norm(r);
        if norm == 0.0 {
            return Ok(EigenEstimate::zero(r.len()));
        }
        let out = sve::sve(&self.stored, r, eps, ctx)?;
        Ok(EigenEstimate {
            vectors: self.stored.basis()?.right.clone(),
            norm,
            beta: out.components.iter().map(|c| c.beta).collect(),
            estimates: out.components.iter().map(|c| c.estimate).collect(),
            exact: out.components.iter().map(|c| c.sigma).collect(),
            all_success: out.all_success,
        })
    }
}

/// Exact iterates of the cyclic recurrence `r_t = b_j − A_jθ_t`,
/// `θ_{t+1} = θ_t + αr_t` with `j = t mod k`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Iterates {
    pub thetas: Vec<Vec<f64>>,
    pub residuals: Vec<Vec<f64>>,
}

impl Iterates {
    pub fn last(&self) -> &[f64] {
        self.thetas.last().expect("at least θ₀")
    }
}

pub fn cyclic_iterates(batches: &[(DMatrix<f64>, Vec<f64>)], theta0: &[f64], alpha: f64, tau: usize) -> Result<Iterates> {
    if batches.is_empty() {
        return Err(Error::InvalidArgument("no batches".into()));
    }
    let n = theta0.len();
    if batches.iter().any(|(a, b)| a.nrows() != n || a.ncols() != n || b.len() != n) {
        return Err(Error::Dimension("batch dimensions do not match θ₀".into()));
    }
    let mut theta = DVector::from_column_slice(theta0);
    let mut thetas = vec![theta0.to_vec()];
    let mut residuals = Vec::with_capacity(tau);
    for t in 0..tau {
        let (a, b) = &batches[t % batches.len()];
        let r = DVector::from_column_slice(b) - a * &theta;
        theta += &r * alpha;
        residuals.push(r.iter().copied().collect());
        thetas.push(theta.iter().copied().collect());
    }
    Ok(Iterates { thetas, residuals })
}

pub fn classical_iterates<P: IterativeProblem>(problem: &P, theta0: &[f64], config: &GDConfig) -> Result<Iterates> {
    cyclic_iterates(&problem.batches(), theta0, config.alpha, config.tau)
}

/// Output of one application of the step unitary `V`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepOutput {
    /// The flag-0 block.
    pub vector: Vec<f64>,
    /// Norm carried by the flagged garbage branch.
    pub garbage_norm: f64,
    pub sve_all_success: bool,
}

fn eigen_precision(eps: f64, alpha: f64, norm: f64) -> f64 {
    if norm == 0.0 {
        eps
    } else {
        eps / (alpha * norm)
    }
}

/// `V` at time `t`: for `t = 0` the scaled affine step `αL̃(r₀)`, for
/// `t ≥ 1` the contraction `S̃(r) = Σ βᵢ(1 − αλ̄ᵢ)vᵢ`, each within `ε`
/// (before the `α` scaling for `t = 0`).
pub fn step_v<P: IterativeProblem>(t: usize, r: &[f64], problem: &P, config: &GDConfig, ctx: &mut SimContext) -> Result<StepOutput> {
    if r.len() != problem.dim() {
        return Err(Error::Dimension("state does not match the problem dimension".into()));
    }
    let (vector, ok) = if t == 0 {
        let l = problem.affine(r, config.epsilon, ctx)?;
        let scaled: Vec<f64> = l.vector.iter().map(|v| config.alpha * v).collect();
        if matvec::norm(&scaled) > 1.0 + 1e-12 {
            return Err(Error::Precondition(format!(
                "α‖L̃(r₀)‖ = {} exceeds 1; reduce α",
                matvec::norm(&scaled)
            )));
        }
        (scaled, l.sve_all_success)
    } else {
        let norm = matvec::norm(r);
        let est = problem.eigen_estimate(r, eigen_precision(config.epsilon, config.alpha, norm), ctx)?;
        let alpha = config.alpha;
        (est.map(|l| (1.0 - alpha * l).clamp(0.0, 1.0)), est.all_success)
    };
    let input_norm = if t == 0 { 1.0 } else { matvec::norm(r) };
    let garbage_norm = (input_norm * input_norm - matvec::norm(&vector).powi(2)).max(0.0).sqrt();
    Ok(StepOutput {
        vector,
        garbage_norm,
        sve_all_success: ok,
    })
}

/// Fast-path state of `U` for all times at once: one affine step and one
/// eigenvalue estimation, after which slot `t` is
/// `α Σᵢ βᵢ (1 − αλ̄ᵢ)^{t−1} vᵢ ‖L̃‖`.
#[derive(Debug, Clone)]
pub struct FastIterate {
    pub theta0: Vec<f64>,
    pub alpha: f64,
    pub affine: Vec<f64>,
    pub eigen: EigenEstimate,
    pub sve_all_success: bool,
    pub sve_calls: u64,
}

impl FastIterate {
    pub fn prepare<P: IterativeProblem>(theta0: &[f64], problem: &P, config: &GDConfig, ctx: &mut SimContext) -> Result<Self> {
        let before = ctx.counters.sve_calls;
        let l = problem.affine(theta0, config.epsilon, ctx)?;
        let l_norm = matvec::norm(&l.vector);
        if config.alpha * l_norm > 1.0 + 1e-12 {
            return Err(Error::Precondition(format!("α‖L̃(r₀)‖ = {} exceeds 1; reduce α", config.alpha * l_norm)));
        }
        let eigen = problem.eigen_estimate(&l.vector, eigen_precision(config.epsilon, config.alpha, l_norm), ctx)?;
        Ok(Self {
            theta0: theta0.to_vec(),
            alpha: config.alpha,
            sve_all_success: l.sve_all_success && eigen.all_success,
            affine: l.vector,
            eigen,
            sve_calls: ctx.counters.sve_calls - before,
        })
    }

    /// Slot `t` of the history: `θ₀` for `t = 0`, else `αS̃^{t−1}L̃(θ₀)`.
    pub fn block(&self, t: usize) -> Vec<f64> {
        if t == 0 {
            return self.theta0.clone();
        }
        let alpha = self.alpha;
        let power = (t - 1) as i32;
        self.eigen
            .map(|l| alpha * (1.0 - alpha * l).clamp(0.0, 1.0).powi(power))
    }
}

/// `U` at time `t` through the fast path, returning the flag-0 block.
pub fn iterate_u<P: IterativeProblem>(t: usize, r0: &[f64], problem: &P, config: &GDConfig, ctx: &mut SimContext) -> Result<(Vec<f64>, u64)> {
    if t > config.tau {
        return Err(Error::InvalidArgument(format!("t = {t} exceeds τ = {}", config.tau)));
    }
    if t == 0 {
        return Ok((r0.to_vec(), 0));
    }
    let fast = FastIterate::prepare(r0, problem, config, ctx)?;
    Ok((fast.block(t), fast.sve_calls))
}

/// SVE calls spent by `U` and by the whole amplified run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    /// SVE calls in one application of `U`.
    pub u_sve_calls: u64,
    /// Amplification rounds `⌈T⌉`.
    pub amplification_rounds: u64,
    pub total_sve_calls: u64,
    pub norm_estimation_queries: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistoryRun {
    pub config: GDConfig,
    /// `θ̃_τ`, unnormalized, read from the history state.
    pub theta_tilde: Vec<f64>,
    /// `|θ̃_τ⟩` after amplification.
    pub state: Vec<f64>,
    pub norm: f64,
    pub norm_estimate: f64,
    /// `1/T = ‖θ̃_τ‖/(τ+1)`, the amplitude of the selected branch.
    pub success_amplitude: f64,
    pub expected_repetitions: f64,
    pub theta_classical: Vec<f64>,
    pub error: f64,
    pub ledger_bound: f64,
    pub normalized_error: f64,
    pub normalized_bound: f64,
    pub sve_all_success: bool,
    pub costs: CostReport,
}

impl HistoryRun {
    pub fn ledger_holds(&self) -> bool {
        self.error <= self.ledger_bound
    }

    pub fn normalized_holds(&self) -> bool {
        self.normalized_error <= self.normalized_bound
    }
}

/// In-place Walsh–Hadamard transform over the time register (the slowest
/// index) of a `(τ+1) × rest` array.
fn hadamard_time(amps: &mut [f64], slots: usize, rest: usize) {
    let mut h = 1;
    while h < slots {
        for start in (0..slots).step_by(2 * h) {
            for t in start..start + h {
                for k in 0..rest {
                    let a = amps[t * rest + k];
                    let b = amps[(t + h) * rest + k];
                    amps[t * rest + k] = a + b;
                    amps[(t + h) * rest + k] = a - b;
                }
            }
        }
        h *= 2;
    }
    let scale = 1.0 / (slots as f64).sqrt();
    for a in amps.iter_mut() {
        *a *= scale;
    }
}

/// The four-step construction: uniform time superposition, `U` controlled
/// on time, garbage balance in the flag, Hadamard on time. Returns the full
/// amplitude array over `time ⊗ vector ⊗ flag`.
pub fn history_state(blocks: &[Vec<f64>]) -> Result<Vec<f64>> {
    let slots = blocks.len();
    if !slots.is_power_of_two() {
        return Err(Error::InvalidArgument("number of time slots must be a power of two".into()));
    }
    let n = blocks[0].len();
    let rest = 2 * n;
    let mut amps = vec![0.0; slots * rest];
    let h = 1.0 / (slots as f64).sqrt();
    let garbage_amp = 1.0 / (n as f64).sqrt();
    for (t, w) in blocks.iter().enumerate() {
        let norm_sq: f64 = w.iter().map(|v| v * v).sum();
        if norm_sq > 1.0 + 1e-9 {
            return Err(Error::Precondition(format!("slot {t} has norm {} above 1", norm_sq.sqrt())));
        }
        let g = (1.0 - norm_sq).max(0.0).sqrt();
        for (k, v) in w.iter().enumerate() {
            amps[t * rest + 2 * k] = h * v;
            amps[t * rest + 2 * k + 1] = h * g * garbage_amp;
        }
    }
    hadamard_time(&mut amps, slots, rest);
    Ok(amps)
}

/// Runs the history-state construction from precomputed slots and checks
/// the result against the classical iterate `theta_classical`.
pub fn finish_history(
    blocks: &[Vec<f64>],
    theta_classical: &[f64],
    config: &GDConfig,
    sve_all_success: bool,
    u_sve_calls: u64,
    ctx: &mut SimContext,
) -> Result<HistoryRun> {
    let amps = history_state(blocks)?;
    let n = blocks[0].len();
    let slots = config.tau + 1;
    let selected: Vec<f64> = (0..n).map(|k| amps[2 * k]).collect();
    let total: f64 = amps.iter().map(|a| a * a).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("history state has norm² {total}")));
    }
    let amplitude = matvec::norm(&selected);
    let theta_tilde: Vec<f64> = selected.iter().map(|v| v * slots as f64).collect();
    let norm = matvec::norm(&theta_tilde);
    if norm < NORM_FLOOR {
        return Err(Error::Precondition(format!(
            "‖θ̃_τ‖ = {norm} is below the floor {NORM_FLOOR}; amplification cost is unbounded"
        )));
    }
    let ae = state::amplitude_estimate(amplitude * amplitude, NORM_REL_EPS, ctx.config.reps, ctx.config.window, &mut ctx.rng)?;
    let norm_estimate = slots as f64 * ae.estimate.sqrt();
    let state_vec = matvec::normalized(&theta_tilde)?;
    let error = matvec::distance(&theta_tilde, theta_classical);
    let classical_norm = matvec::norm(theta_classical);
    let normalized_error = matvec::state_distance(&theta_tilde, theta_classical)?;
    let ledger_bound = config.ledger();
    let rounds = (1.0 / amplitude).ceil() as u64;
    Ok(HistoryRun {
        config: *config,
        state: state_vec,
        norm,
        norm_estimate,
        success_amplitude: amplitude,
        expected_repetitions: 1.0 / amplitude,
        theta_classical: theta_classical.to_vec(),
        error,
        ledger_bound,
        normalized_error,
        normalized_bound: std::f64::consts::SQRT_2 * ledger_bound / classical_norm,
        sve_all_success,
        costs: CostReport {
            u_sve_calls,
            amplification_rounds: rounds,
            total_sve_calls: u_sve_calls * rounds,
            norm_estimation_queries: ae.queries,
        },
        theta_tilde,
    })
}

/// Full run with the fast path: slots from one [`FastIterate`].
pub fn build_history<P: IterativeProblem>(problem: &P, theta0: &[f64], config: &GDConfig, ctx: &mut SimContext) -> Result<HistoryRun> {
    if theta0.len() != problem.dim() {
        return Err(Error::Dimension("θ₀ does not match the problem dimension".into()));
    }
    if (matvec::norm(theta0) - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition("θ₀ must be a unit vector".into()));
    }
    let fast = FastIterate::prepare(theta0, problem, config, ctx)?;
    let blocks: Vec<Vec<f64>> = (0..=config.tau).map(|t| fast.block(t)).collect();
    let classical = classical_iterates(problem, theta0, config)?;
    finish_history(&blocks, classical.last(), config, fast.sve_all_success, fast.sve_calls, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::sve::SveMode;

    fn grid() -> Vec<f64> {
        matvec::default_p_grid()
    }

    #[test]
    fn config_pads_tau() {
        let c = GDConfig::new(0.1, 5, 1e-3, 0.05, 2.0).unwrap();
        assert_eq!(c.tau, 7);
        assert_eq!(c.time_qubits(), 3);
        assert_eq!(GDConfig::new(0.1, 7, 1e-3, 0.05, 2.0).unwrap().tau, 7);
        assert!(GDConfig::new(0.0, 7, 1e-3, 0.05, 2.0).is_err());
        assert!(GDConfig::new(1.5, 7, 1e-3, 0.05, 2.0).is_err());
        assert!(GDConfig::new(0.5, 0, 1e-3, 0.05, 2.0).is_err());
        let t = GDConfig::with_target(0.5, 3, 0.01, 2.0).unwrap();
        assert!((t.ledger() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn step_identity_halves_eigenvector() {
        let p = PsdProblem::new(&DenseMatrix::identity(2), &[1.0, 0.0], &grid()).unwrap();
        let c = GDConfig::new(0.5, 1, 1e-3, 0.05, 1.0).unwrap();
        let mut ctx = SimContext::new(0, SveMode::Oracle);
        let out = step_v(1, &[0.0, 1.0], &p, &c, &mut ctx).unwrap();
        assert!((out.vector[1] - 0.5).abs() < 1e-12 && out.vector[0].abs() < 1e-12);
        assert!((out.garbage_norm - 0.75f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn oracle_steps_match_recurrence() {
        let a = gen::random_psd(4, 3.0, 1).unwrap();
        let b = gen::random_unit_vector(4, &mut gen::rng(2));
        let p = PsdProblem::new(&a, &b, &grid()).unwrap();
        let c = GDConfig::new(0.3, 7, 1e-4, 0.05, 3.0).unwrap();
        let mut ctx = SimContext::new(0, SveMode::Oracle);
        let r0 = gen::random_unit_vector(4, &mut gen::rng(3));
        let it = classical_iterates(&p, &r0, &c).unwrap();
        let l = step_v(0, &r0, &p, &c, &mut ctx).unwrap();
        let expect: Vec<f64> = it.residuals[0].iter().map(|v| 0.3 * v).collect();
        assert!(matvec::distance(&l.vector, &expect) < 1e-10);
        let s = step_v(1, &it.residuals[0], &p, &c, &mut ctx).unwrap();
        assert!(matvec::distance(&s.vector, &it.residuals[1]) < 1e-10);
    }

    #[test]
    fn analytic_steps_within_epsilon() {
        let a = DenseMatrix::from_diagonal(&[1.0, 0.5]).unwrap();
        let p = PsdProblem::new(&a, &[1.0, 0.0], &grid()).unwrap();
        let c = GDConfig::new(0.5, 3, 1e-3, 0.05, 2.0).unwrap();
        let mut ctx = SimContext::new(4, SveMode::Analytic);
        let r = [0.6, 0.8];
        let exact = [0.6 * 0.5, 0.8 * 0.75];
        for _ in 0..100 {
            let s = step_v(1, &r, &p, &c, &mut ctx).unwrap();
            assert!(matvec::distance(&s.vector, &exact) <= c.epsilon);
            assert!(matvec::norm(&s.vector) <= matvec::norm(&r) + c.epsilon);
        }
    }

    #[test]
    fn iterate_u_base_cases() {
        let a = DenseMatrix::from_diagonal(&[1.0, 0.5]).unwrap();
        let p = PsdProblem::new(&a, &[1.0, 0.0], &grid()).unwrap();
        let c = GDConfig::new(0.5, 3, 1e-6, 0.05, 2.0).unwrap();
        let mut ctx = SimContext::new(0, SveMode::Oracle);
        let r0 = [0.6, 0.8];
        assert_eq!(iterate_u(0, &r0, &p, &c, &mut ctx).unwrap().0, r0.to_vec());
        let (u1, _) = iterate_u(1, &r0, &p, &c, &mut ctx).unwrap();
        let v0 = step_v(0, &r0, &p, &c, &mut ctx).unwrap();
        assert!(matvec::distance(&u1, &v0.vector) < 1e-10);
        // slot 3 is α(I − αA)²(b − Ar₀)
        let (u3, _) = iterate_u(3, &r0, &p, &c, &mut ctx).unwrap();
        let l = [1.0 - 0.6, -0.8 * 0.5];
        let s = [0.5, 0.75];
        let expect = [0.5 * s[0] * s[0] * l[0], 0.5 * s[1] * s[1] * l[1]];
        assert!(matvec::distance(&u3, &expect) < 1e-10);
    }

    #[test]
    fn fast_path_cost_is_constant_in_t() {
        let a = gen::random_psd(4, 2.0, 5).unwrap();
        let b = gen::random_unit_vector(4, &mut gen::rng(1));
        let p = PsdProblem::new(&a, &b, &grid()).unwrap();
        let c = GDConfig::new(0.1, 63, 1e-4, 0.05, 2.0).unwrap();
        let mut ctx = SimContext::new(0, SveMode::Analytic);
        let costs: Vec<u64> = [1, 2, 10, 63]
            .iter()
            .map(|t| iterate_u(*t, &b, &p, &c, &mut ctx).unwrap().1)
            .collect();
        assert!(costs.iter().all(|c| *c == costs[0]));
    }

    #[test]
    fn history_tau_one_identity() {
        let p = PsdProblem::new(&DenseMatrix::identity(2), &[0.6, 0.8], &grid()).unwrap();
        let c = GDConfig::new(0.1, 1, 1e-6, 0.05, 1.0).unwrap();
        let mut ctx = SimContext::new(0, SveMode::Oracle);
        let r0 = [1.0, 0.0];
        let run = build_history(&p, &r0, &c, &mut ctx).unwrap();
        let expect = [1.0 + 0.1 * (0.6 - 1.0), 0.1 * 0.8];
        assert!(matvec::distance(&run.theta_tilde, &expect) < 1e-12);
        assert!((run.success_amplitude - matvec::norm(&expect) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_history_equals_classical() {
        let a = gen::random_psd(5, 4.0, 9).unwrap();
        let b = gen::random_unit_vector(5, &mut gen::rng(7));
        let p = PsdProblem::new(&a, &b, &grid()).unwrap();
        let c = GDConfig::new(0.2, 63, 1e-6, 0.05, 4.0).unwrap();
        let mut ctx = SimContext::new(0, SveMode::Oracle);
        let run = build_history(&p, &b, &c, &mut ctx).unwrap();
        assert!(run.error < 1e-10, "{}", run.error);
    }

    #[test]
    fn history_norm_floor() {
        let a = DenseMatrix::identity(2);
        let p = PsdProblem::new(&a, &[0.0, 1e-3], &grid()).unwrap();
        let c = GDConfig::new(1.0, 1, 1e-6, 0.05, 1.0).unwrap();
        let mut ctx = SimContext::new(0, SveMode::Oracle);
        // one full step from e₁ lands on b, far below the floor
        assert!(build_history(&p, &[1.0, 0.0], &c, &mut ctx).is_err());
    }

    #[test]
    fn cyclic_iterates_contract() {
        let a = gen::random_psd(6, 5.0, 2).unwrap();
        let b = gen::random_unit_vector(6, &mut gen::rng(4));
        let lu = a.as_matrix().clone().lu();
        let star = lu.solve(&DVector::from_column_slice(&b)).unwrap();
        let alpha = 0.5;
        let it = cyclic_iterates(&[(a.as_matrix().clone(), b.clone())], &b, alpha, 50).unwrap();
        let e0 = (DVector::from_column_slice(&b) - &star).norm();
        for (t, th) in it.thetas.iter().enumerate() {
            let e = (DVector::from_column_slice(th) - &star).norm();
            assert!(e <= (1.0 - alpha / 5.0).powi(t as i32) * e0 + 1e-12);
        }
    }

    #[test]
    fn hadamard_is_involutive() {
        let mut v: Vec<f64> = (0..16).map(|k| k as f64).collect();
        let orig = v.clone();
        hadamard_time(&mut v, 8, 2);
        hadamard_time(&mut v, 8, 2);
        assert!(v.iter().zip(&orig).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}
