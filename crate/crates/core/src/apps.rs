//! End-to-end solvers built on the history-state gradient descent: positive
//! definite linear systems, weighted least squares with an optional ridge
//! term, and cyclic stochastic gradient descent over a row partition.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gen;
use crate::matvec::{self, DenseMatrix};
use crate::qgd::{self, EigenEstimate, GDConfig, HistoryRun, IterativeProblem, PsdProblem, StepEstimate};
use crate::solvers::{self, AffineOperator, SymmetrizedOperator};
use crate::sve::{self, SimContext, StoredMatrix};

pub const DEFAULT_ALPHA: f64 = 0.01;

/// Precision of the spectral norm estimate used to rescale least-squares
/// instances.
pub const NORMALIZE_EPS: f64 = 0.01;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AppReport {
    /// `|θ̃_τ⟩`.
    pub output: Vec<f64>,
    /// Normalized direct solution.
    pub reference: Vec<f64>,
    pub distance: f64,
    pub delta: f64,
    /// `2δ`.
    pub bound: f64,
    pub config: GDConfig,
    pub kappa: f64,
    pub mu: f64,
    /// Per-batch `μ`; empty for full-batch runs.
    pub batch_mu: Vec<f64>,
    /// Factor dividing the data matrix before the run (1 for linear systems).
    pub scale: f64,
    /// `‖θ_τ − θ*‖` for the exact recurrence.
    pub classical_error: f64,
    /// `(1 − α/κ)^τ ‖θ₀ − θ*‖`, when the recurrence is full-batch.
    pub classical_bound: Option<f64>,
    pub classical_distance: f64,
    pub history: HistoryRun,
}

impl AppReport {
    pub fn within_bound(&self) -> bool {
        self.distance <= self.bound
    }
}

/// `τ = ⌈(κ/α) ln(√2(1+κ)/δ)⌉`: with `‖θ₀ − θ*‖ ≤ 1 + κ` and `‖θ*‖ ≥ 1` the
/// exact iterate is then within `δ` of `|θ*⟩`.
pub fn gd_steps(kappa: f64, alpha: f64, delta: f64) -> usize {
    let t = (kappa / alpha) * (std::f64::consts::SQRT_2 * (1.0 + kappa) / delta).ln();
    t.ceil().max(1.0) as usize
}

/// `ε = δ/(2ατ²)` on the padded `τ`.
pub fn gd_config(kappa: f64, alpha: f64, delta: f64) -> Result<GDConfig> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("δ = {delta} outside (0, 1)")));
    }
    GDConfig::with_target(alpha, gd_steps(kappa, alpha, delta), 0.5 * delta, kappa)
}

fn smallest_eigenvalue(a: &DMatrix<f64>) -> Result<f64> {
    let (values, _) = matvec::symmetric_eigen(&DenseMatrix::new(a.clone())?)?;
    Ok(values.iter().copied().fold(f64::INFINITY, f64::min))
}

fn resolve_kappa(a: &DMatrix<f64>, kappa: Option<f64>) -> Result<f64> {
    match kappa {
        Some(k) => Ok(k),
        None => {
            let lmin = smallest_eigenvalue(a)?;
            if lmin <= 1e-12 {
                return Err(Error::Precondition("update matrix is singular".into()));
            }
            Ok(1.0 / lmin)
        }
    }
}

fn direct_solve(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    a.clone()
        .lu()
        .solve(&DVector::from_column_slice(b))
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::Precondition("singular system".into()))
}

fn classical_checks(theta0: &[f64], star: &[f64], config: &GDConfig, theta_tau: &[f64]) -> (f64, f64) {
    let e0 = matvec::distance(theta0, star);
    let err = matvec::distance(theta_tau, star);
    (err, (1.0 - config.alpha / config.kappa).powi(config.tau as i32) * e0)
}

fn assemble<P: IterativeProblem>(
    problem: &P,
    theta0: &[f64],
    star: &[f64],
    config: GDConfig,
    delta: f64,
    mu: f64,
    scale: f64,
    ctx: &mut SimContext,
) -> Result<AppReport> {
    let history = qgd::build_history(problem, theta0, &config, ctx)?;
    let (classical_error, classical_bound) = classical_checks(theta0, star, &config, &history.theta_classical);
    Ok(AppReport {
        output: history.state.clone(),
        reference: matvec::normalized(star)?,
        distance: matvec::state_distance(&history.state, star)?,
        delta,
        bound: 2.0 * delta,
        kappa: config.kappa,
        config,
        mu,
        batch_mu: Vec::new(),
        scale,
        classical_error,
        classical_bound: Some(classical_bound),
        classical_distance: matvec::state_distance(&history.theta_classical, star)?,
        history,
    })
}

/// Solves `Aθ = b` for positive definite `A` with eigenvalues in
/// `[1/κ, 1]` and unit `b`, starting from `θ₀ = b`.
pub fn gd_linear_solve(
    a: &DenseMatrix,
    b: &[f64],
    delta: f64,
    alpha: f64,
    kappa: Option<f64>,
    ctx: &mut SimContext,
) -> Result<AppReport> {
    if (matvec::norm(b) - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition("b must be a unit vector".into()));
    }
    let kappa = resolve_kappa(a.as_matrix(), kappa)?;
    if !solvers::eigen_range_ok(a, kappa)? {
        return Err(Error::Precondition(format!("eigenvalues of A outside [1/{kappa}, 1]")));
    }
    let config = gd_config(kappa, alpha, delta)?;
    let problem = PsdProblem::new(a, b, &matvec::default_p_grid())?;
    let star = direct_solve(a.as_matrix(), b)?;
    let mu = problem.stored().mu();
    assemble(&problem, b, &star, config, delta, mu, 1.0, ctx)
}

/// Weighted least squares `min Σ wᵢ(yᵢ − xᵢᵀθ)² + λ‖θ‖²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WLSInstance {
    pub x: DenseMatrix,
    pub w: Vec<f64>,
    pub y: Vec<f64>,
    pub lambda: f64,
}

impl WLSInstance {
    pub fn new(x: DenseMatrix, w: Vec<f64>, y: Vec<f64>, lambda: f64) -> Result<Self> {
        let m = x.rows();
        if w.len() != m || y.len() != m {
            return Err(Error::Dimension(format!(
                "{m} rows with {} weights and {} outcomes",
                w.len(),
                y.len()
            )));
        }
        if let Some((i, v)) = w.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("weight {} of row {} must be positive", v, i + 1)));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("ridge coefficient λ = {lambda} must be ≥ 0")));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("outcomes must be finite".into()));
        }
        Ok(Self { x, w, y, lambda })
    }

    pub fn rows(&self) -> usize {
        self.x.rows()
    }

    pub fn cols(&self) -> usize {
        self.x.cols()
    }

    /// `(XᵀWX + λI, XᵀWy)`.
    pub fn normal_equations(&self) -> (DMatrix<f64>, Vec<f64>) {
        let x = self.x.as_matrix();
        let w = DMatrix::from_diagonal(&DVector::from_column_slice(&self.w));
        let a = x.transpose() * &w * x + DMatrix::identity(self.cols(), self.cols()) * self.lambda;
        let b = x.transpose() * &w * DVector::from_column_slice(&self.y);
        (a, b.iter().copied().collect())
    }

    /// `(XᵀWX + λI)⁻¹XᵀWy`.
    pub fn closed_form(&self) -> Result<Vec<f64>> {
        let (a, b) = self.normal_equations();
        direct_solve(&a, &b)
    }

    /// Rows of `X` extended by `√λ·I` when `λ > 0`, with weight 1 on the
    /// extra rows and outcome 0.
    fn augmented(&self) -> (DMatrix<f64>, Vec<f64>, Vec<f64>) {
        let (m, n) = (self.rows(), self.cols());
        if self.lambda == 0.0 {
            return (self.x.as_matrix().clone(), self.w.clone(), self.y.clone());
        }
        let mut x = DMatrix::zeros(m + n, n);
        x.view_mut((0, 0), (m, n)).copy_from(self.x.as_matrix());
        for j in 0..n {
            x[(m + j, j)] = self.lambda.sqrt();
        }
        let mut w = self.w.clone();
        w.extend(std::iter::repeat_n(1.0, n));
        let mut y = self.y.clone();
        y.extend(std::iter::repeat_n(0.0, n));
        (x, w, y)
    }
}

/// `L(θ) = Bᵀ(c − Bθ)` with `B = √W X`: the affine step runs in two stages
/// and eigenvalues of `BᵀB` are squared singular values of `B`.
#[derive(Debug, Clone)]
pub struct LeastSquaresProblem {
    stored: StoredMatrix,
    affine: AffineOperator,
    adjoint: SymmetrizedOperator,
    a: DMatrix<f64>,
    rhs: Vec<f64>,
}

impl LeastSquaresProblem {
    pub fn new(x: &DenseMatrix, w: &[f64], c: &[f64], p_grid: &[f64]) -> Result<Self> {
        let stored = StoredMatrix::weighted(x, w)?;
        let b = stored.matrix().clone();
        let a = b.as_matrix().transpose() * b.as_matrix();
        let rhs = b.as_matrix().transpose() * DVector::from_column_slice(c);
        Ok(Self {
            affine: AffineOperator::new(&b, c, p_grid)?,
            adjoint: SymmetrizedOperator::new(&b.transpose(), p_grid)?,
            stored,
            a,
            rhs: rhs.iter().copied().collect(),
        })
    }

    pub fn mu(&self) -> f64 {
        self.stored.mu()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }
}

impl IterativeProblem for LeastSquaresProblem {
    fn dim(&self) -> usize {
        self.rhs.len()
    }

    fn batches(&self) -> Vec<(DMatrix<f64>, Vec<f64>)> {
        vec![(self.a.clone(), self.rhs.clone())]
    }

    fn affine(&self, theta: &[f64], eps: f64, ctx: &mut SimContext) -> Result<StepEstimate> {
        let c = self.affine.apply(theta, 0.5 * eps, ctx)?;
        let vector = self.adjoint.apply(&c.vector, 0.5 * eps, ctx)?;
        Ok(StepEstimate {
            vector,
            sve_all_success: c.sve_all_success,
        })
    }

    /// `|σ̄² − σ²| ≤ δ(2σ + δ) ≤ 3δ` for `σ ≤ 1`, so singular values are
    /// estimated to `eps/3`.
    fn eigen_estimate(&self, r: &[f64], eps: f64, ctx: &mut SimContext) -> Result<EigenEstimate> {
        let norm = matvec::norm(r);
        let n = r.len();
        if norm == 0.0 {
            return Ok(EigenEstimate {
                vectors: DMatrix::identity(n, n),
                norm,
                beta: vec![0.0; n],
                estimates: vec![0.0; n],
                exact: vec![0.0; n],
                all_success: true,
            });
        }
        let out = sve::sve(&self.stored, r, eps / 3.0, ctx)?;
        Ok(EigenEstimate {
            vectors: self.stored.basis()?.right.clone(),
            norm,
            beta: out.components.iter().map(|c| c.beta).collect(),
            estimates: out.components.iter().map(|c| c.estimate * c.estimate).collect(),
            exact: out.components.iter().map(|c| c.sigma * c.sigma).collect(),
            all_success: out.all_success,
        })
    }
}

/// An instance rescaled so that `‖B‖ ≤ 1` and `‖Bᵀc‖ = 1`.
#[derive(Debug, Clone)]
struct Scaled {
    x: DenseMatrix,
    w: Vec<f64>,
    c: Vec<f64>,
    scale: f64,
}

fn rescale(instance: &WLSInstance, ctx: &mut SimContext) -> Result<Scaled> {
    let (x, w, y) = instance.augmented();
    let sqrt_w: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let mut b = x.clone();
    for (i, s) in sqrt_w.iter().enumerate() {
        b.row_mut(i).scale_mut(*s);
    }
    let norm = solvers::normalize_matrix(&DenseMatrix::new(b.clone())?, NORMALIZE_EPS, ctx)?;
    let scale = norm.scale;
    let c: Vec<f64> = y.iter().zip(&sqrt_w).map(|(y, s)| y * s).collect();
    let rhs = (b.transpose() / scale) * DVector::from_column_slice(&c);
    let rhs_norm = rhs.norm();
    if rhs_norm == 0.0 {
        return Err(Error::ZeroVector("XᵀWy is zero".into()));
    }
    Ok(Scaled {
        x: DenseMatrix::new(x / scale)?,
        w,
        c: c.iter().map(|v| v / rhs_norm).collect(),
        scale,
    })
}

pub fn wls_solve(instance: &WLSInstance, delta: f64, alpha: f64, kappa: Option<f64>, ctx: &mut SimContext) -> Result<AppReport> {
    let scaled = rescale(instance, ctx)?;
    let problem = LeastSquaresProblem::new(&scaled.x, &scaled.w, &scaled.c, &matvec::default_p_grid())?;
    let kappa = resolve_kappa(problem.matrix(), kappa)?;
    let config = gd_config(kappa, alpha, delta)?;
    let theta0 = problem.rhs().to_vec();
    let star = direct_solve(problem.matrix(), problem.rhs())?;
    let mu = problem.mu();
    assemble(&problem, &theta0, &star, config, delta, mu, scaled.scale, ctx)
}

/// A partition `(S₁, …, S_k)` of the row indices (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub batches: Vec<Vec<usize>>,
}

impl PartitionPlan {
    pub fn new(batches: Vec<Vec<usize>>, rows: usize) -> Result<Self> {
        if batches.is_empty() {
            return Err(Error::InvalidArgument("partition has no batches".into()));
        }
        let mut seen = vec![false; rows];
        for (k, batch) in batches.iter().enumerate() {
            if batch.is_empty() {
                return Err(Error::InvalidArgument(format!("batch {} is empty", k + 1)));
            }
            for &i in batch {
                if i >= rows {
                    return Err(Error::IndexOutOfRange(format!("row {} in batch {}", i + 1, k + 1)));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidArgument(format!("row {} appears twice", i + 1)));
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!("row {} is in no batch", i + 1)));
        }
        Ok(Self { batches })
    }

    /// Rows shuffled under `seed` and dealt into `k` batches whose sizes
    /// differ by at most one.
    pub fn seeded_equal(rows: usize, k: usize, seed: u64) -> Result<Self> {
        if k == 0 || k > rows {
            return Err(Error::InvalidArgument(format!("cannot split {rows} rows into {k} batches")));
        }
        let mut order: Vec<usize> = (0..rows).collect();
        order.shuffle(&mut gen::rng(seed));
        let mut batches = vec![Vec::new(); k];
        for (pos, i) in order.into_iter().enumerate() {
            batches[pos * k / rows].push(i);
        }
        for b in &mut batches {
            b.sort_unstable();
        }
        Self::new(batches, rows)
    }

    /// Contiguous batches of sizes differing by at most one.
    pub fn contiguous(rows: usize, k: usize) -> Result<Self> {
        if k == 0 || k > rows {
            return Err(Error::InvalidArgument(format!("cannot split {rows} rows into {k} batches")));
        }
        Self::new((0..k).map(|j| (j * rows / k..(j + 1) * rows / k).collect()).collect(), rows)
    }

    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }
}

/// Batch `j` as a least-squares problem with `A_j = k·(X_jᵀW_jX_j + (λ/k)I)`,
/// so that the batch matrices average to the full one.
fn batch_problem(scaled: &Scaled, instance: &WLSInstance, rows: &[usize], k: usize) -> Result<LeastSquaresProblem> {
    let n = instance.cols();
    let m = instance.rows();
    let sk = (k as f64).sqrt();
    let ridge = instance.lambda > 0.0;
    let count = rows.len() + if ridge { n } else { 0 };
    let mut x = DMatrix::zeros(count, n);
    let mut w = Vec::with_capacity(count);
    let mut c = Vec::with_capacity(count);
    for (r, &i) in rows.iter().enumerate() {
        x.row_mut(r).copy_from(&(scaled.x.as_matrix().row(i) * sk));
        w.push(scaled.w[i]);
        c.push(scaled.c[i] * sk);
    }
    if ridge {
        // ridge rows of the scaled instance carry √λ/s; the batch share is
        // √(λ/k)/s, times √k
        for j in 0..n {
            x[(rows.len() + j, j)] = scaled.x.get(m + j, j);
            w.push(1.0);
            c.push(0.0);
        }
    }
    LeastSquaresProblem::new(&DenseMatrix::new(x)?, &w, &c, &matvec::default_p_grid())
}

/// Cyclic batch updates `θ_{t+1} = θ_t + α(b_j − A_jθ_t)`, `j = t mod k`.
/// The updates do not commute, so each iterate is prepared from the
/// previous one and one application of `U` costs `τ` steps.
pub fn sgd_solve(
    instance: &WLSInstance,
    plan: &PartitionPlan,
    delta: f64,
    alpha: f64,
    kappa: Option<f64>,
    ctx: &mut SimContext,
) -> Result<AppReport> {
    PartitionPlan::new(plan.batches.clone(), instance.rows())?;
    if plan.len() == 1 {
        let mut report = wls_solve(instance, delta, alpha, kappa, ctx)?;
        report.batch_mu = vec![report.mu];
        return Ok(report);
    }
    let k = plan.len();
    let scaled = rescale(instance, ctx)?;
    let full = LeastSquaresProblem::new(&scaled.x, &scaled.w, &scaled.c, &matvec::default_p_grid())?;
    let kappa = resolve_kappa(full.matrix(), kappa)?;
    let config = gd_config(kappa, alpha, delta)?;
    let problems = plan
        .batches
        .iter()
        .map(|rows| batch_problem(&scaled, instance, rows, k))
        .collect::<Result<Vec<_>>>()?;
    for (j, p) in problems.iter().enumerate() {
        let lmax = matvec::symmetric_eigen(&DenseMatrix::new(p.matrix().clone())?)?.0[0];
        if alpha * lmax > 1.0 + 1e-12 {
            return Err(Error::Precondition(format!(
                "α·λ_max(A_{}) = {} exceeds 1; reduce α",
                j + 1,
                alpha * lmax
            )));
        }
    }
    let batch_mu: Vec<f64> = problems.iter().map(|p| p.mu()).collect();
    let mu = batch_mu.iter().copied().fold(0.0, f64::max);
    let batches: Vec<(DMatrix<f64>, Vec<f64>)> = problems.iter().map(|p| (p.matrix().clone(), p.rhs().to_vec())).collect();

    let theta0 = full.rhs().to_vec();
    let classical = qgd::cyclic_iterates(&batches, &theta0, alpha, config.tau)?;

    let before = ctx.counters.sve_calls;
    let mut theta = theta0.clone();
    let mut blocks = vec![theta0.clone()];
    let mut all_ok = true;
    for t in 0..config.tau {
        let step = problems[t % k].affine(&theta, config.epsilon, ctx)?;
        all_ok &= step.sve_all_success;
        let block: Vec<f64> = step.vector.iter().map(|v| alpha * v).collect();
        for (th, b) in theta.iter_mut().zip(&block) {
            *th += b;
        }
        blocks.push(block);
    }
    let u_calls = ctx.counters.sve_calls - before;
    let history = qgd::finish_history(&blocks, classical.last(), &config, all_ok, u_calls, ctx)?;

    let star = direct_solve(full.matrix(), full.rhs())?;
    Ok(AppReport {
        output: history.state.clone(),
        reference: matvec::normalized(&star)?,
        distance: matvec::state_distance(&history.state, &star)?,
        delta,
        bound: 2.0 * delta,
        kappa,
        config,
        mu,
        batch_mu,
        scale: scaled.scale,
        classical_error: matvec::distance(classical.last(), &star),
        classical_bound: None,
        classical_distance: matvec::state_distance(classical.last(), &star)?,
        history,
    })
}

/// JSON sidecar of a least-squares instance; partition rows are 1-based.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSidecar {
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    pub y: Vec<f64>,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub partition: Option<Vec<Vec<usize>>>,
}

impl InstanceSidecar {
    pub fn instance(&self, x: DenseMatrix) -> Result<WLSInstance> {
        let w = self.weights.clone().unwrap_or_else(|| vec![1.0; x.rows()]);
        WLSInstance::new(x, w, self.y.clone(), self.lambda)
    }

    pub fn plan(&self, rows: usize) -> Result<Option<PartitionPlan>> {
        self.partition
            .as_ref()
            .map(|p| {
                let zero_based = p
                    .iter()
                    .map(|b| {
                        b.iter()
                            .map(|i| {
                                i.checked_sub(1)
                                    .ok_or_else(|| Error::IndexOutOfRange("partition rows are 1-based".into()))
                            })
                            .collect::<Result<Vec<usize>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                PartitionPlan::new(zero_based, rows)
            })
            .transpose()
    }
}
