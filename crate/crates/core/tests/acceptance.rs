//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line each and exits nonzero if any criterion fails.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use qwalk_core::apps::{self, PartitionPlan, WLSInstance};
use qwalk_core::gen;
use qwalk_core::matvec::{self, DenseMatrix, FactorScheme};
use qwalk_core::qgd::{self, GDConfig, PsdProblem};
use qwalk_core::solvers;
use qwalk_core::store::{CoordEntry, MatrixStore};
use qwalk_core::sve::{self, SimContext, StoredMatrix, SveMode};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn fail(detail: impl std::fmt::Display) -> Outcome {
    outcome(false, format!("error: {detail}"))
}

fn nalgebra_singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Store fidelity: replay each stream into a dense oracle with a running
/// maximum of squared row norms.
fn criterion_1() -> Outcome {
    let mut worst_amp: f64 = 0.0;
    let mut touch_violations = 0;
    let mut inserts = 0;
    for seed in 0..50u64 {
        let mut rng = gen::rng(1000 + seed);
        let m = rng.random_range(1..=64);
        let n = rng.random_range(1..=64);
        let count = rng.random_range(1..=3 * m * n.min(8));
        let mut store = MatrixStore::new(m, n).unwrap();
        let mut dense = vec![vec![0.0; n]; m];
        let mut running_max: f64 = 0.0;
        let budget = (n as f64).log2().ceil() as usize + 2;
        for _ in 0..count {
            let (i, j) = (rng.random_range(0..m), rng.random_range(0..n));
            let v: f64 = rng.random_range(-2.0..2.0);
            store.insert(CoordEntry::new(i + 1, j + 1, v)).unwrap();
            inserts += 1;
            if store.counters().last_touches > budget {
                touch_violations += 1;
            }
            dense[i][j] = v;
            running_max = running_max.max(dense[i].iter().map(|x| x * x).sum());
        }
        for (i, row) in dense.iter().enumerate() {
            let norm_sq: f64 = row.iter().map(|x| x * x).sum();
            let mut expect: Vec<f64> = row.iter().map(|a| a / running_max.sqrt()).collect();
            expect.push(((running_max - norm_sq).max(0.0) / running_max).sqrt());
            let got = store.prepare_row_state(i + 1).unwrap();
            let err = got.iter().zip(&expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst_amp = worst_amp.max(err);
        }
    }
    outcome(
        worst_amp <= 1e-12 && touch_violations == 0,
        format!("50 streams, {inserts} inserts; max amplitude error {worst_amp:.2e}; touch-budget violations {touch_violations}"),
    )
}

/// Walk spectrum: levels `μ|cos(θ/2)|` from the eigenvalues `cos θ` of the
/// symmetric part `(W + Wᵀ)/2` of the orthogonal walk.
fn criterion_2() -> Outcome {
    let mut worst_unitary: f64 = 0.0;
    let mut worst_level: f64 = 0.0;
    let mut runs = 0;
    for seed in 0..20u64 {
        let mut rng = gen::rng(2000 + seed);
        let (m, n) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let a = gen::random_dense(m, n, 2100 + seed);
        let sigma = nalgebra_singular_values(a.as_matrix());
        for p in [0.0, 0.25, 0.5, 1.0] {
            let stored = match StoredMatrix::new(&a, FactorScheme::Power(p)) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            let w = stored.walk().unwrap().matrix();
            let d = w.nrows();
            let unitary = (w.transpose() * &w - DMatrix::identity(d, d)).abs().max();
            let sym = (&w + w.transpose()) * 0.5;
            let cosines = sym.symmetric_eigen().eigenvalues;
            let mu = stored.mu();
            let levels: Vec<f64> = cosines.iter().map(|c| mu * ((1.0 + c.clamp(-1.0, 1.0)) / 2.0).sqrt()).collect();
            let err = sigma
                .iter()
                .map(|s| levels.iter().map(|l| (l - s).abs()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max);
            worst_unitary = worst_unitary.max(unitary);
            worst_level = worst_level.max(err);
            runs += 1;
        }
    }
    outcome(
        worst_unitary <= 1e-10 && worst_level <= 1e-8,
        format!("{runs} walks; max unitarity error {worst_unitary:.2e}; max |μcos(θ/2) − σ| {worst_level:.2e}"),
    )
}

/// `|Σ_k e^{ik(θ − 2πy/M)}|²/M²`.
fn fejer(theta: f64, y: usize, big_m: usize) -> f64 {
    let d = theta - 2.0 * PI * y as f64 / big_m as f64;
    let s = (d / 2.0).sin();
    if s.abs() < 1e-12 {
        return 1.0;
    }
    let mf = big_m as f64;
    ((mf * d / 2.0).sin() / (mf * s)).powi(2)
}

fn criterion_3() -> Outcome {
    let delta = 0.05;
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let mut components = 0;
    for seed in 0..100u64 {
        let mut rng = gen::rng(3000 + seed);
        let (m, n) = (rng.random_range(2..=8), rng.random_range(2..=8));
        let a = gen::random_dense(m, n, 3100 + seed);
        let x = gen::random_unit_vector(n, &mut rng);
        let stored = StoredMatrix::auto(&a, &matvec::default_p_grid()).unwrap();
        let mut ctx = SimContext::new(seed, SveMode::Analytic);
        let out = sve::sve(&stored, &x, delta, &mut ctx).unwrap();
        // right vectors beyond the rank of a wide matrix have σ = 0
        let mut sigma = nalgebra_singular_values(a.as_matrix());
        sigma.resize(n, 0.0);
        for c in out.relevant() {
            components += 1;
            let nearest = sigma.iter().map(|s| (s - c.sigma).abs()).fold(f64::INFINITY, f64::min);
            let err = (c.estimate - c.sigma).abs().max(nearest);
            worst = worst.max(err);
            if err > delta {
                failures += 1;
            }
        }
    }
    let analytic_ok = failures == 0;

    let started = Instant::now();
    let mut worst_tv: f64 = 0.0;
    let mut circuit_runs = 0;
    for seed in 0..5u64 {
        let a = gen::random_dense(4, 4, 3500 + seed);
        let x = gen::random_unit_vector(4, &mut gen::rng(3600 + seed));
        let stored = StoredMatrix::auto(&a, &matvec::default_p_grid()).unwrap();
        let mut ctx = SimContext::new(seed, SveMode::Circuit);
        let circ = match sve::sve_circuit(&stored, &x, delta, &mut ctx) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        for (sigma, probs) in &circ.group_distributions {
            let big_m = probs.len();
            let theta = sve::angle_from_sigma(*sigma, stored.mu());
            let tv: f64 = probs
                .iter()
                .enumerate()
                .map(|(y, p)| (p - 0.5 * (fejer(theta, y, big_m) + fejer(-theta, y, big_m))).abs())
                .sum::<f64>()
                / 2.0;
            worst_tv = worst_tv.max(tv);
        }
        circuit_runs += 1;
    }
    let circuit_ok = worst_tv <= 0.05 && started.elapsed().as_secs() <= 600;
    outcome(
        analytic_ok && circuit_ok,
        format!(
            "analytic: 100 runs, {components} components, {failures} over δ=0.05 (max {worst:.4}); circuit 4x4: {circuit_runs} runs, max TV {worst_tv:.2e} in {:.1}s",
            started.elapsed().as_secs_f64()
        ),
    )
}

fn criterion_4() -> Outcome {
    let grid = matvec::default_p_grid();
    let mut worst_gap = f64::NEG_INFINITY;
    let mut count = 0;
    for seed in 0..30u64 {
        let n = 2 + (seed as usize % 30);
        let mats = [
            gen::random_symmetric(n, 4000 + seed),
            gen::random_psd(n, 1.0 + seed as f64, 4100 + seed).unwrap(),
            DenseMatrix::new(gen::sign_matrix(n, 4200 + seed).as_matrix().map(f64::signum)).unwrap(),
        ];
        for a in mats.iter().filter(|a| a.is_symmetric(1e-12)) {
            let mu = matvec::mu(a, &grid).unwrap().value;
            let frob = a.as_matrix().norm();
            let s1 = (0..a.rows()).map(|i| a.as_matrix().row(i).abs().sum()).fold(0.0, f64::max);
            worst_gap = worst_gap.max(mu - frob.min(s1));
            count += 1;
        }
    }
    let symmetric_ok = worst_gap <= 1e-12;

    let pp = gen::perturbed_permutation(64, 0.01, 4300);
    let sparsity = (0..64).map(|i| pp.as_matrix().row(i).iter().filter(|v| **v != 0.0).count()).max().unwrap();
    let s1 = (0..64).map(|i| pp.as_matrix().row(i).abs().sum()).fold(0.0, f64::max);
    let mu_pp = matvec::mu(&pp, &grid).unwrap().value;
    let pp_ok = sparsity == 64 && s1 <= 1.7 && mu_pp <= 1.7;

    let mut min_sign_mu = f64::INFINITY;
    for seed in 0..5u64 {
        let s = gen::sign_matrix(64, 4400 + seed);
        assert!(s.as_matrix().iter().all(|v| v.abs() == 1.0));
        min_sign_mu = min_sign_mu.min(matvec::mu(&s, &grid).unwrap().value);
    }
    let sign_ok = min_sign_mu >= 6.0;
    outcome(
        symmetric_ok && pp_ok && sign_ok,
        format!(
            "{count} symmetric matrices, max μ − min(‖A‖_F, s₁) = {worst_gap:.2e}; perturbed permutation s(A)={sparsity}, s₁={s1:.3}, μ={mu_pp:.3}; sign n=64 min μ={min_sign_mu:.3}"
        ),
    )
}

fn criterion_5() -> Outcome {
    let eps1 = 0.01;
    let (mut checked, mut skipped, mut mult_bad, mut solve_bad) = (0, 0, 0, 0);
    let (mut worst_m, mut worst_s): (f64, f64) = (0.0, 0.0);
    for seed in 0..100u64 {
        let mut rng = gen::rng(5000 + seed);
        let n = rng.random_range(2..=16);
        let kappa = rng.random_range(1.5..=8.0);
        let a = gen::random_psd(n, kappa, 5100 + seed).unwrap();
        let x = gen::random_unit_vector(n, &mut rng);
        let stored = StoredMatrix::auto(&a, &matvec::default_p_grid()).unwrap();
        let mut ctx = SimContext::new(seed, SveMode::Analytic);
        let mr = solvers::multiply(&stored, &x, eps1, kappa, &mut ctx).unwrap();
        let sr = solvers::solve(&stored, &x, eps1, kappa, &mut ctx).unwrap();
        if !(mr.sve_all_success && sr.sve_all_success) {
            skipped += 1;
            continue;
        }
        checked += 1;
        let dense = DVector::from_column_slice(&x);
        let ax = a.as_matrix() * &dense;
        let ainv = a.as_matrix().clone().lu().solve(&dense).unwrap();
        let dm = (DVector::from_column_slice(&mr.output) - ax.normalize()).norm();
        let ds = (DVector::from_column_slice(&sr.output) - ainv.normalize()).norm();
        worst_m = worst_m.max(dm / (2f64.sqrt() * eps1 * kappa));
        worst_s = worst_s.max(ds / (2.0 * 2f64.sqrt() * kappa * eps1));
        if dm > 2f64.sqrt() * eps1 * kappa {
            mult_bad += 1;
        }
        if ds > 2.0 * 2f64.sqrt() * kappa * eps1 {
            solve_bad += 1;
        }
    }
    outcome(
        mult_bad == 0 && solve_bad == 0 && checked > 0,
        format!(
            "{checked} instances checked ({skipped} with an SVE failure flag); multiply over bound {mult_bad} (max ratio {worst_m:.3}); solve over bound {solve_bad} (max ratio {worst_s:.3})"
        ),
    )
}

fn criterion_6() -> Outcome {
    let grid = matvec::default_p_grid();
    let mut exact_worst: f64 = 0.0;
    let mut within = 0;
    let mut contraction_bad = 0;
    let runs = 100;
    for seed in 0..runs as u64 {
        let mut rng = gen::rng(6000 + seed);
        let n = rng.random_range(2..=8);
        let kappa = rng.random_range(1.5..=4.0);
        let a = gen::random_psd(n, kappa, 6100 + seed).unwrap();
        let b = gen::random_unit_vector(n, &mut rng);
        let theta0 = gen::random_unit_vector(n, &mut rng);
        let problem = PsdProblem::new(&a, &b, &grid).unwrap();
        let alpha = 0.2;
        let config = GDConfig::with_target(alpha, 16, 0.01, kappa).unwrap();

        // classical oracle: recurrence written out directly
        let mut th = DVector::from_column_slice(&theta0);
        let bv = DVector::from_column_slice(&b);
        for _ in 0..config.tau {
            th = &th + (&bv - a.as_matrix() * &th) * alpha;
        }
        let star = a.as_matrix().clone().lu().solve(&bv).unwrap();
        let e0 = (DVector::from_column_slice(&theta0) - &star).norm();
        let lmin = a.as_matrix().clone().symmetric_eigen().eigenvalues.min();
        if (&th - &star).norm() > (1.0 - alpha * lmin).powi(config.tau as i32) * e0 + 1e-12 {
            contraction_bad += 1;
        }

        let mut octx = SimContext::new(seed, SveMode::Oracle);
        let exact = qgd::build_history(&problem, &theta0, &config, &mut octx).unwrap();
        let diff = (DVector::from_column_slice(&exact.theta_tilde) - &th).norm();
        exact_worst = exact_worst.max(diff);

        let mut ctx = SimContext::new(seed, SveMode::Analytic);
        let run = qgd::build_history(&problem, &theta0, &config, &mut ctx).unwrap();
        let dist = (DVector::from_column_slice(&run.theta_tilde).normalize() - th.normalize()).norm();
        let bound = 2f64.sqrt() * config.ledger() / th.norm();
        if dist <= bound {
            within += 1;
        }
    }
    outcome(
        exact_worst <= 1e-10 && within >= 95 && contraction_bad == 0,
        format!(
            "oracle history vs classical max {exact_worst:.2e}; normalized ledger held in {within}/{runs}; contraction failures {contraction_bad}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let delta = 0.05;
    let mut gd_ok = 0;
    let mut gd_worst: f64 = 0.0;
    for seed in 0..50u64 {
        let mut rng = gen::rng(7000 + seed);
        let n = rng.random_range(2..=8);
        let kappa = rng.random_range(1.0..=4.0);
        let a = gen::random_psd(n, kappa, 7100 + seed).unwrap();
        let b = gen::random_unit_vector(n, &mut rng);
        let mut ctx = SimContext::new(seed, SveMode::Analytic);
        let r = match apps::gd_linear_solve(&a, &b, delta, apps::DEFAULT_ALPHA, None, &mut ctx) {
            Ok(r) => r,
            Err(e) => return fail(format!("gd seed {seed}: {e}")),
        };
        let star = a.as_matrix().clone().lu().solve(&DVector::from_column_slice(&b)).unwrap();
        let d = (DVector::from_column_slice(&r.output) - star.normalize()).norm();
        gd_worst = gd_worst.max(d);
        if d <= 2.0 * delta {
            gd_ok += 1;
        }
    }

    let mut wls_ok = 0;
    let mut wls_worst: f64 = 0.0;
    let mut sgd_identical = 0;
    for seed in 0..50u64 {
        let mut rng = gen::rng(7500 + seed);
        let (m, n) = (16, 4);
        let x = gen::random_dense(m, n, 7600 + seed);
        let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..2.0)).collect();
        let y = gen::random_vector(m, &mut rng);
        let lambda = if seed % 2 == 0 { 0.1 } else { 0.0 };
        let inst = WLSInstance::new(x.clone(), w.clone(), y.clone(), lambda).unwrap();
        // closed form from the normal equations, built here
        let wm = DMatrix::from_diagonal(&DVector::from_column_slice(&w));
        let xm = x.as_matrix();
        let lhs = xm.transpose() * &wm * xm + DMatrix::identity(n, n) * lambda;
        let rhs = xm.transpose() * &wm * DVector::from_column_slice(&y);
        let closed = lhs.lu().solve(&rhs).unwrap().normalize();
        let mut ctx = SimContext::new(seed, SveMode::Analytic);
        let r = match apps::wls_solve(&inst, delta, apps::DEFAULT_ALPHA, None, &mut ctx) {
            Ok(r) => r,
            Err(e) => return fail(format!("wls seed {seed}: {e}")),
        };
        let d = (DVector::from_column_slice(&r.output) - &closed).norm();
        wls_worst = wls_worst.max(d);
        if d <= 2.0 * delta {
            wls_ok += 1;
        }
        if seed < 10 {
            let plan = PartitionPlan::new(vec![(0..m).collect()], m).unwrap();
            let mut ctx2 = SimContext::new(seed, SveMode::Analytic);
            let s = apps::sgd_solve(&inst, &plan, delta, apps::DEFAULT_ALPHA, None, &mut ctx2).unwrap();
            let same_traj = s.history.theta_classical == r.history.theta_classical
                && s.history.theta_tilde == r.history.theta_tilde
                && s.output == r.output;
            if same_traj {
                sgd_identical += 1;
            }
        }
    }
    outcome(
        gd_ok == 50 && wls_ok == 50 && sgd_identical == 10,
        format!(
            "gd {gd_ok}/50 within 2δ (max {gd_worst:.4}); wls {wls_ok}/50 within 2δ (max {wls_worst:.4}); sgd k=1 bit-identical {sgd_identical}/10"
        ),
    )
}

fn criterion_8() -> Outcome {
    let eps = 0.05;
    let (mut ok, mut halving) = (0, 0);
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let mut rng = gen::rng(8000 + seed);
        let (m, n) = (rng.random_range(2..=12), rng.random_range(2..=12));
        let a = if seed % 3 == 0 {
            gen::low_rank(m.max(2), 1 + seed as usize % 2, 8100 + seed).unwrap()
        } else {
            gen::random_dense(m, n, 8100 + seed)
        };
        let sigma = nalgebra_singular_values(a.as_matrix());
        let eta = sigma[0] / a.as_matrix().norm();
        let mut ctx = SimContext::new(seed, SveMode::Analytic);
        let r = solvers::spectral_norm_estimate(&a, eps, 0.1, &mut ctx).unwrap();
        let err = (r.estimate - eta).abs();
        worst = worst.max(err);
        if err <= eps {
            ok += 1;
        }
        if r.trace_halves() && r.trace.len() == (1.0 / eps).log2().ceil() as usize {
            halving += 1;
        }
    }
    outcome(
        ok == 50 && halving == 50,
        format!("{ok}/50 within ε=0.05 (max error {worst:.4}); halving traces {halving}/50"),
    )
}

fn criterion_9() -> Outcome {
    let grid = matvec::default_p_grid();
    let a = gen::random_psd(6, 3.0, 9000).unwrap();
    let b = gen::random_unit_vector(6, &mut gen::rng(9001));
    let problem = PsdProblem::new(&a, &b, &grid).unwrap();
    let config = GDConfig::with_target(0.1, 255, 0.01, 3.0).unwrap();
    let mut ctx = SimContext::new(9, SveMode::Analytic);
    let mut by_t: HashMap<usize, u64> = HashMap::new();
    for t in [1, 2, 16, 100, 255] {
        by_t.insert(t, qgd::iterate_u(t, &b, &problem, &config, &mut ctx).unwrap().1);
    }
    let first = by_t[&1];
    let fast_constant = by_t.values().all(|c| *c == first) && first > 0;
    let run = qgd::build_history(&problem, &b, &config, &mut ctx).unwrap();
    let fast_total = run.costs.total_sve_calls == run.costs.u_sve_calls * run.costs.amplification_rounds
        && run.costs.u_sve_calls == first;

    // sequential batches: U costs one step per iterate
    let x = gen::random_dense(8, 3, 9100);
    let star = [0.2, -0.5, 0.4];
    let y = x.mul_vec(&star).unwrap();
    let inst = WLSInstance::new(x, vec![1.0; 8], y, 0.0).unwrap();
    let plan = PartitionPlan::contiguous(8, 2).unwrap();
    let mut per_step = Vec::new();
    let mut totals = Vec::new();
    for alpha in [0.2, 0.1] {
        let mut ctx = SimContext::new(10, SveMode::Analytic);
        let r = apps::sgd_solve(&inst, &plan, 0.05, alpha, None, &mut ctx).unwrap();
        let c = &r.history.costs;
        per_step.push((c.u_sve_calls as f64 / r.config.tau as f64, r.config.tau, c.u_sve_calls));
        totals.push((c.total_sve_calls, c.u_sve_calls * c.amplification_rounds));
    }
    let linear_in_tau = per_step.iter().all(|(ratio, _, _)| (*ratio - per_step[0].0).abs() < 1e-12 && *ratio >= 1.0)
        && per_step[0].1 != per_step[1].1;
    let sgd_total = totals.iter().all(|(a, b)| a == b);
    outcome(
        fast_constant && fast_total && linear_in_tau && sgd_total,
        format!(
            "fast-path U calls per t {:?}; history total {} = {} x {} rounds; sgd U calls {:?} (per step {:.0})",
            {
                let mut v: Vec<_> = by_t.iter().map(|(t, c)| (*t, *c)).collect();
                v.sort();
                v
            },
            run.costs.total_sve_calls,
            run.costs.u_sve_calls,
            run.costs.amplification_rounds,
            per_step.iter().map(|(_, tau, u)| (*tau, *u)).collect::<Vec<_>>(),
            per_step[0].0
        ),
    )
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 data structure fidelity", criterion_1),
        ("2 walk spectrum", criterion_2),
        ("3 SVE precision", criterion_3),
        ("4 μ claims", criterion_4),
        ("5 solver bounds", criterion_5),
        ("6 gradient-descent ledger", criterion_6),
        ("7 end-to-end solves", criterion_7),
        ("8 spectral norm", criterion_8),
        ("9 cost accounting", criterion_9),
    ];
    let results: Vec<(&str, Outcome, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|(name, f)| {
                s.spawn(move || {
                    let start = Instant::now();
                    let out = std::panic::catch_unwind(f).unwrap_or_else(|_| fail("panicked"));
                    (*name, out, start.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut failed = 0;
    for (name, out, secs) in &results {
        let tag = if out.pass { "PASS" } else { "FAIL" };
        if !out.pass {
            failed += 1;
        }
        println!("{tag} criterion {name} ({secs:.1}s): {}", out.detail);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
