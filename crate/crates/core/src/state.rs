//! Statevector simulation: multi-register pure states, dense unitaries,
//! phase estimation (full circuit and closed-form outcome distribution), and
//! amplitude amplification/estimation.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub dim: usize,
}

impl Register {
    pub fn new(name: &str, dim: usize) -> Self {
        Self {
            name: name.to_string(),
            dim,
        }
    }
}

/// Unit vector over the product basis of its registers. The first register
/// is the most significant digit of the flat index.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    registers: Vec<Register>,
    amps: Vec<Complex64>,
}

impl PureState {
    pub fn new(registers: Vec<Register>, amps: Vec<Complex64>) -> Result<Self> {
        let dim: usize = registers.iter().map(|r| r.dim).product();
        if registers.is_empty() || registers.iter().any(|r| r.dim == 0) {
            return Err(Error::InvalidArgument("registers must have positive dimension".into()));
        }
        if dim != amps.len() {
            return Err(Error::Dimension(format!(
                "{} amplitudes for a space of dimension {dim}",
                amps.len()
            )));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!("state norm {norm} is not 1")));
        }
        Ok(Self { registers, amps })
    }

    /// Normalizes `amps` first; a zero vector is an error.
    pub fn normalized(registers: Vec<Register>, amps: Vec<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector("state amplitudes".into()));
        }
        Self::new(registers, amps.into_iter().map(|a| a / norm).collect())
    }

    pub fn from_real(name: &str, values: &[f64]) -> Result<Self> {
        Self::normalized(
            vec![Register::new(name, values.len())],
            values.iter().map(|v| Complex64::new(*v, 0.0)).collect(),
        )
    }

    pub fn basis(registers: Vec<Register>, index: usize) -> Result<Self> {
        let dim: usize = registers.iter().map(|r| r.dim).product();
        if index >= dim {
            return Err(Error::IndexOutOfRange(format!("basis index {index} ≥ {dim}")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Self::new(registers, amps)
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.re).collect()
    }

    fn register_position(&self, name: &str) -> Result<(usize, usize, usize)> {
        let pos = self
            .registers
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::InvalidArgument(format!("no register named `{name}`")))?;
        let stride: usize = self.registers[pos + 1..].iter().map(|r| r.dim).product();
        Ok((pos, self.registers[pos].dim, stride))
    }

    /// Probability of each value of register `name`.
    pub fn marginal(&self, name: &str) -> Result<Vec<f64>> {
        let (_, dim, stride) = self.register_position(name)?;
        let mut out = vec![0.0; dim];
        for (k, a) in self.amps.iter().enumerate() {
            out[(k / stride) % dim] += a.norm_sqr();
        }
        Ok(out)
    }

    /// The unnormalized branch where register `name` holds `value`, with that
    /// register removed.
    pub fn branch(&self, name: &str, value: usize) -> Result<(Vec<Register>, Vec<Complex64>)> {
        let (pos, dim, stride) = self.register_position(name)?;
        if value >= dim {
            return Err(Error::IndexOutOfRange(format!("value {value} of register `{name}`")));
        }
        let mut registers = self.registers.clone();
        registers.remove(pos);
        let amps = self
            .amps
            .iter()
            .enumerate()
            .filter(|(k, _)| (k / stride) % dim == value)
            .map(|(_, a)| *a)
            .collect();
        Ok((registers, amps))
    }

    /// Tensor with a fresh register in state `|0⟩`, appended last.
    pub fn append_register(&self, name: &str, dim: usize) -> Result<Self> {
        if self.registers.iter().any(|r| r.name == name) {
            return Err(Error::InvalidArgument(format!("register `{name}` already exists")));
        }
        let mut registers = self.registers.clone();
        registers.push(Register::new(name, dim));
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len() * dim];
        for (k, a) in self.amps.iter().enumerate() {
            amps[k * dim] = *a;
        }
        Self::new(registers, amps)
    }

    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.amps.len() != other.amps.len() {
            return Err(Error::Dimension("states of different dimension".into()));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn distance(&self, other: &PureState) -> Result<f64> {
        if self.amps.len() != other.amps.len() {
            return Err(Error::Dimension("states of different dimension".into()));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// Nonzero amplitudes keyed by basis label `name=value,...`.
    pub fn to_json(&self) -> Result<String> {
        let mut map = BTreeMap::new();
        for (k, a) in self.amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let mut rest = k;
            let mut digits = vec![0; self.registers.len()];
            for (slot, r) in self.registers.iter().enumerate().rev() {
                digits[slot] = rest % r.dim;
                rest /= r.dim;
            }
            let label = self
                .registers
                .iter()
                .zip(&digits)
                .map(|(r, d)| format!("{}={d}", r.name))
                .collect::<Vec<_>>()
                .join(",");
            map.insert(label, [a.re, a.im]);
        }
        Ok(serde_json::to_string_pretty(&map)?)
    }
}

/// A dense unitary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOp {
    matrix: DMatrix<Complex64>,
}

impl UnitaryOp {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::Dimension("unitary must be square and nonempty".into()));
        }
        let op = Self { matrix };
        let drift = op.unitarity_error();
        if drift > NORM_TOL {
            return Err(Error::InvalidArgument(format!("matrix is not unitary (error {drift:e})")));
        }
        Ok(op)
    }

    pub fn from_real(matrix: &DMatrix<f64>) -> Result<Self> {
        Self::new(matrix.map(|v| Complex64::new(v, 0.0)))
    }

    pub fn diagonal_phases(phases: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(phases.len(), phases.iter().map(|t| Complex64::from_polar(1.0, *t)));
        Self::new(DMatrix::from_diagonal(&d))
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    /// The reflection `2ΠΠᵀ − I` about the column span of an isometry `Π`.
    pub fn reflection(isometry: &DMatrix<f64>) -> Result<Self> {
        let n = isometry.nrows();
        let r = isometry * isometry.transpose() * 2.0 - DMatrix::<f64>::identity(n, n);
        Self::from_real(&r)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// `max |U†U − I|`.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.dim();
        (self.matrix.adjoint() * &self.matrix - DMatrix::<Complex64>::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `self · other`, i.e. `other` acts first.
    pub fn compose(&self, other: &UnitaryOp) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension("composing unitaries of different size".into()));
        }
        Ok(Self {
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn pow(&self, mut k: u64) -> Self {
        let mut base = self.matrix.clone();
        let mut acc = DMatrix::<Complex64>::identity(self.dim(), self.dim());
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        Self { matrix: acc }
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::Dimension(format!("vector of length {} for a {}-dim unitary", v.len(), self.dim())));
        }
        let out = &self.matrix * DVector::from_column_slice(v);
        Ok(out.iter().copied().collect())
    }
}

/// Number of ancilla qubits giving phase precision `epsilon`:
/// `⌈log₂(2π/ε)⌉ + 2`.
pub fn ancilla_qubits(epsilon: f64) -> Result<u32> {
    if !(epsilon > 0.0 && epsilon < PI) {
        return Err(Error::InvalidArgument(format!("phase precision {epsilon} outside (0, π)")));
    }
    let t = (2.0 * PI / epsilon).log2().ceil() as u32 + 2;
    if t > 52 {
        return Err(Error::InvalidArgument(format!("phase precision {epsilon} needs {t} qubits")));
    }
    Ok(t)
}

/// Maps the grid outcome `y` of a `2^t` register to an angle in `(−π, π]`.
pub fn grid_angle(y: u64, t: u32) -> f64 {
    let m = (1u64 << t) as f64;
    let theta = 2.0 * PI * y as f64 / m;
    if theta > PI {
        theta - 2.0 * PI
    } else {
        theta
    }
}

/// Wrapped distance between two angles.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Outcome of [`phase_estimation`]: the input system tensored with an angle
/// register of `2^t` values, appended last and named `angle`.
#[derive(Debug, Clone)]
pub struct PhaseEstimate {
    pub state: PureState,
    pub t: u32,
}

pub const ANGLE_REGISTER: &str = "angle";

fn fft_in_place(block: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(block.len())
    } else {
        planner.plan_fft_forward(block.len())
    };
    fft.process(block);
    let scale = 1.0 / (block.len() as f64).sqrt();
    for z in block.iter_mut() {
        *z *= scale;
    }
}

/// Applies `U^{±2^k}` to the system, controlled on bit `k` of the angle register.
fn controlled_powers(u: &UnitaryOp, amps: &mut [Complex64], t: u32, inverse: bool) {
    let d = u.dim();
    let m = 1usize << t;
    let base = if inverse { u.adjoint() } else { u.clone() };
    let mut power = base.matrix.clone();
    for k in 0..t {
        for y in (0..m).filter(|y| (y >> k) & 1 == 1) {
            let column = DVector::from_iterator(d, (0..d).map(|s| amps[s * m + y]));
            let out = &power * column;
            for s in 0..d {
                amps[s * m + y] = out[s];
            }
        }
        power = &power * &power;
    }
}

/// Full-circuit phase estimation of `u` on `phi` (a single-register system):
/// Hadamards on `t = ⌈log₂(2π/ε)⌉ + 2` ancillas, controlled `U^{2^k}`, and
/// the inverse Fourier transform. `cap` bounds the simulated dimension.
pub fn phase_estimation(u: &UnitaryOp, phi: &PureState, epsilon: f64, cap: usize) -> Result<PhaseEstimate> {
    let t = ancilla_qubits(epsilon)?;
    phase_estimation_bits(u, phi, t, cap)
}

pub fn phase_estimation_bits(u: &UnitaryOp, phi: &PureState, t: u32, cap: usize) -> Result<PhaseEstimate> {
    if phi.dim() != u.dim() {
        return Err(Error::Dimension("state and unitary dimensions differ".into()));
    }
    let m = 1usize
        .checked_shl(t)
        .ok_or(Error::OverCap { needed: usize::MAX, cap })?;
    let needed = phi.dim().saturating_mul(m);
    if needed > cap {
        return Err(Error::OverCap { needed, cap });
    }
    let d = phi.dim();
    let h = 1.0 / (m as f64).sqrt();
    let mut amps = vec![Complex64::new(0.0, 0.0); d * m];
    for s in 0..d {
        for y in 0..m {
            amps[s * m + y] = phi.amps[s] * h;
        }
    }
    controlled_powers(u, &mut amps, t, false);
    for s in 0..d {
        fft_in_place(&mut amps[s * m..(s + 1) * m], false);
    }
    let mut registers = phi.registers.clone();
    registers.push(Register::new(ANGLE_REGISTER, m));
    Ok(PhaseEstimate {
        state: PureState::new(registers, amps)?,
        t,
    })
}

/// Runs the phase-estimation circuit backwards on `state`, returning the
/// system amplitudes left when the angle register is projected onto `|0⟩`.
pub fn uncompute_phase_estimation(u: &UnitaryOp, est: &PhaseEstimate) -> Result<Vec<Complex64>> {
    let m = 1usize << est.t;
    let d = u.dim();
    if est.state.dim() != d * m {
        return Err(Error::Dimension("estimate does not match unitary".into()));
    }
    let mut amps = est.state.amps.clone();
    for s in 0..d {
        fft_in_place(&mut amps[s * m..(s + 1) * m], true);
    }
    controlled_powers(u, &mut amps, est.t, true);
    let h = 1.0 / (m as f64).sqrt();
    Ok((0..d)
        .map(|s| amps[s * m..(s + 1) * m].iter().sum::<Complex64>() * h)
        .collect())
}

impl PhaseEstimate {
    pub fn angle_distribution(&self) -> Vec<f64> {
        self.state.marginal(ANGLE_REGISTER).expect("angle register present")
    }

    pub fn sample_angle<R: Rng>(&self, rng: &mut R) -> f64 {
        let y = sample_index(&self.angle_distribution(), rng);
        grid_angle(y as u64, self.t)
    }
}

/// Draws an index from a probability vector (tolerating rounding in the total).
pub fn sample_index<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, p) in probs.iter().enumerate() {
        if u < *p {
            return k;
        }
        u -= p;
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// Closed-form outcome distribution of phase estimation with `t` ancillas on
/// an eigenvector of phase `theta`:
/// `P(y₀ + k) = sin²(πf)/(M² sin²(π(f − k)/M))`, `M = 2^t`, where `y₀ + f`
/// is the exact grid position. Outcomes within `window` of `y₀` are
/// tabulated; farther ones are sampled exactly by rejection.
#[derive(Debug, Clone)]
pub struct PhaseDistribution {
    t: u32,
    y0: u64,
    frac: f64,
    offsets: Vec<i64>,
    probs: Vec<f64>,
    window_mass: f64,
    window: i64,
    full: bool,
}

impl PhaseDistribution {
    pub fn new(theta: f64, t: u32, window: usize) -> Self {
        let m = (1u64 << t) as f64;
        let position = (theta.rem_euclid(2.0 * PI) / (2.0 * PI) * m).rem_euclid(m);
        let mut y0 = position.floor();
        let mut frac = position - y0;
        if frac >= 1.0 {
            frac = 0.0;
            y0 += 1.0;
        }
        let y0 = (y0 as u64) % (1u64 << t);
        let window = window.max(1) as i64;
        let half = (1i64 << t) / 2;
        let full = 2 * window + 1 >= (1i64 << t);
        let (lo, hi) = if full { (1 - half.max(1), half) } else { (-window, window) };
        let (lo, hi) = if t == 0 { (0, 0) } else { (lo, hi) };
        let offsets: Vec<i64> = (lo..=hi).collect();
        let probs: Vec<f64> = offsets.iter().map(|&k| Self::mass(frac, k, m)).collect();
        let window_mass = probs.iter().sum::<f64>().min(1.0);
        Self {
            t,
            y0,
            frac,
            offsets,
            probs,
            window_mass,
            window,
            full,
        }
    }

    fn mass(frac: f64, k: i64, m: f64) -> f64 {
        if frac == 0.0 {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        let num = (PI * frac).sin();
        let den = (PI * (frac - k as f64) / m).sin();
        (num * num) / (m * m * den * den)
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    fn outcome(&self, k: i64) -> u64 {
        let m = 1i64 << self.t;
        ((self.y0 as i64 + k).rem_euclid(m)) as u64
    }

    /// Probability of grid outcome `y`.
    pub fn probability(&self, y: u64) -> f64 {
        let m = 1i64 << self.t;
        let mut k = (y as i64 - self.y0 as i64).rem_euclid(m);
        if k > m / 2 {
            k -= m;
        }
        Self::mass(self.frac, k, m as f64)
    }

    /// Probability that the estimated angle lies within `eps` of `theta`.
    pub fn success_probability(&self, theta: f64, eps: f64) -> f64 {
        self.offsets
            .iter()
            .zip(&self.probs)
            .filter(|(k, _)| angle_distance(grid_angle(self.outcome(**k), self.t), theta) <= eps + 1e-15)
            .map(|(_, p)| *p)
            .sum()
    }

    /// Probability of every outcome, for small registers.
    pub fn full_distribution(&self) -> Vec<f64> {
        (0..(1u64 << self.t)).map(|y| self.probability(y)).collect()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        if self.full || rng.random::<f64>() < self.window_mass {
            let k = self.offsets[sample_index(&self.probs, rng)];
            return self.outcome(k);
        }
        self.sample_tail(rng)
    }

    /// Exact sampling of `|k| > window` by rejection from the proposal
    /// `j = ⌊K/u⌋ + 1` with a random side, whose probability `½K/((j−1)j)`
    /// dominates the tail mass `≤ 1/(4(j−1)²)` up to `C = (K+1)/(2K²)`.
    fn sample_tail<R: Rng>(&self, rng: &mut R) -> u64 {
        let m = 1i64 << self.t;
        let half = m / 2;
        let kk = self.window as f64;
        let c = (kk + 1.0) / (2.0 * kk * kk);
        loop {
            let u: f64 = 1.0 - rng.random::<f64>();
            let j = (kk / u).floor() + 1.0;
            if j > half as f64 {
                continue;
            }
            let j = j as i64;
            let k = if rng.random::<bool>() { j } else { -j };
            if k <= -half {
                continue;
            }
            let g = 0.5 * kk / ((j - 1) as f64 * j as f64);
            let p = Self::mass(self.frac, k, m as f64);
            if rng.random::<f64>() * c * g < p {
                return self.outcome(k);
            }
        }
    }

    pub fn sample_angle<R: Rng>(&self, rng: &mut R) -> f64 {
        grid_angle(self.sample(rng), self.t)
    }
}

/// `P(Binomial(reps, p) > reps/2)`: a lower bound on the probability that
/// the median of `reps` draws lands in an interval holding mass `p`.
pub fn median_success_lower_bound(p: f64, reps: usize) -> f64 {
    let p = p.clamp(0.0, 1.0);
    let mut total = 0.0;
    for k in (reps / 2 + 1)..=reps {
        total += binomial(reps, k) * p.powi(k as i32) * (1.0 - p).powi((reps - k) as i32);
    }
    total.min(1.0)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Result of amplitude estimation on a success probability `a = sin²θ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AmplitudeEstimate {
    pub estimate: f64,
    pub exact: f64,
    /// Grover-register size `M`.
    pub grid: u64,
    pub reps: usize,
    /// Oracle queries: `reps · M`.
    pub queries: u64,
    pub zero_amplitude: bool,
    /// Lower bound on the probability that the estimate is within the target.
    pub success_lower_bound: f64,
}

/// Smallest `M = 2^t` with `2π√(a(1−a))/M + π²/M² ≤ ε·a`.
pub fn amplitude_grid(a: f64, rel_eps: f64) -> u32 {
    let target = rel_eps * a;
    let spread = (a * (1.0 - a)).max(0.0).sqrt();
    let mut t = 1;
    loop {
        let m = (1u64 << t) as f64;
        if 2.0 * PI * spread / m + PI * PI / (m * m) <= target || t >= 40 {
            return t;
        }
        t += 1;
    }
}

/// Amplitude estimation simulated from the exact success probability `a`:
/// phase estimation of the Grover iterate, whose eigenphases are `±2θ`,
/// read out as `sin²(πy/M)`, with the median over `reps` runs.
pub fn amplitude_estimate<R: Rng>(a: f64, rel_eps: f64, reps: usize, window: usize, rng: &mut R) -> Result<AmplitudeEstimate> {
    if !(rel_eps > 0.0 && rel_eps < 1.0) {
        return Err(Error::InvalidArgument(format!("relative precision {rel_eps} outside (0, 1)")));
    }
    if !(0.0..=1.0 + 1e-12).contains(&a) {
        return Err(Error::InvalidArgument(format!("success probability {a} outside [0, 1]")));
    }
    let a = a.min(1.0);
    let reps = reps.max(1);
    if a == 0.0 {
        return Ok(AmplitudeEstimate {
            estimate: 0.0,
            exact: 0.0,
            grid: 1,
            reps,
            queries: reps as u64,
            zero_amplitude: true,
            success_lower_bound: 1.0,
        });
    }
    let t = amplitude_grid(a, rel_eps);
    let m = 1u64 << t;
    let theta = a.sqrt().asin();
    let dist = PhaseDistribution::new(2.0 * theta, t, window);
    let read = |y: u64| (PI * y as f64 / m as f64).sin().powi(2);
    let mut draws: Vec<f64> = (0..reps).map(|_| read(dist.sample(rng))).collect();
    let single: f64 = dist
        .offsets
        .iter()
        .zip(&dist.probs)
        .filter(|(k, _)| (read(dist.outcome(**k)) - a).abs() <= rel_eps * a)
        .map(|(_, p)| *p)
        .sum();
    Ok(AmplitudeEstimate {
        estimate: median(&mut draws),
        exact: a,
        grid: m,
        reps,
        queries: reps as u64 * m,
        zero_amplitude: false,
        success_lower_bound: median_success_lower_bound(single, reps),
    })
}

/// The Grover iterate restricted to `span{good, bad}`: a rotation by `2θ`
/// where `sin²θ = a`.
pub fn grover_rotation(a: f64) -> Result<UnitaryOp> {
    let theta = a.clamp(0.0, 1.0).sqrt().asin();
    let (s, c) = (2.0 * theta).sin_cos();
    UnitaryOp::from_real(&DMatrix::from_row_slice(2, 2, &[c, -s, s, c]))
}

/// Outcome distribution of amplitude estimation computed by running the
/// phase-estimation circuit on the two-dimensional Grover rotation.
pub fn amplitude_estimation_circuit(a: f64, t: u32) -> Result<Vec<f64>> {
    let g = grover_rotation(a)?;
    let theta = a.clamp(0.0, 1.0).sqrt().asin();
    let start = PureState::from_real("system", &[theta.sin(), theta.cos()])?;
    let est = phase_estimation_bits(&g, &start, t, 1 << 22)?;
    Ok(est.angle_distribution())
}

/// The success branch of a state with a flag register.
#[derive(Debug, Clone)]
pub struct Amplified {
    pub state: PureState,
    pub success_amplitude: f64,
    /// `1/sinθ` for success amplitude `sinθ`.
    pub expected_repetitions: f64,
}

/// Post-selects flag value `0`, the outcome amplitude amplification
/// converges to.
pub fn amplitude_amplify(state: &PureState, flag: &str) -> Result<Amplified> {
    let (mut registers, amps) = state.branch(flag, 0)?;
    if registers.is_empty() {
        registers.push(Register::new("scalar", 1));
    }
    let amplitude = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if amplitude == 0.0 {
        return Err(Error::ZeroVector("success branch has zero amplitude".into()));
    }
    Ok(Amplified {
        state: PureState::normalized(registers, amps)?,
        success_amplitude: amplitude,
        expected_repetitions: 1.0 / amplitude,
    })
}

/// Grover-search style amplification: `k = ⌊π/(4θ)⌋` iterations make the
/// success probability `sin²((2k+1)θ)`; runs repeat until one succeeds.
/// Returns the number of state-preparation calls used.
pub fn amplify_sampled<R: Rng>(success_amplitude: f64, rng: &mut R) -> Result<u64> {
    if !(success_amplitude > 0.0 && success_amplitude <= 1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "success amplitude {success_amplitude} outside (0, 1]"
        )));
    }
    let theta = success_amplitude.min(1.0).asin();
    let k = (PI / (4.0 * theta)).floor() as u64;
    let p = ((2 * k + 1) as f64 * theta).sin().powi(2);
    let mut calls = 0;
    loop {
        calls += 2 * k + 1;
        if rng.random::<f64>() < p {
            return Ok(calls);
        }
    }
}
