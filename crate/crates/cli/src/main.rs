//! `qwalk`: generate matrices, build stores and run the simulated quantum
//! linear algebra routines, emitting versioned JSON and CSV reports.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use qwalk_core::apps::{self, InstanceSidecar, PartitionPlan};
use qwalk_core::gen::Family;
use qwalk_core::io;
use qwalk_core::matvec::{self, DenseMatrix};
use qwalk_core::solvers;
use qwalk_core::sve::{self, SimContext, StoredMatrix, SveMode};
use qwalk_core::{Error, MatrixStore};

use report::{Bound, Report};

#[derive(Debug, Parser)]
#[command(name = "qwalk", version, about = "Quantum-walk linear algebra simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
struct Common {
    /// Seed of every random draw in the run.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// analytic, circuit (exact-circuit) or oracle.
    #[arg(long, default_value = "analytic")]
    mode: String,
    /// Comma-separated exponents p in [0, 1] searched for μ.
    #[arg(long)]
    p_grid: Option<String>,
    /// Report path; the CSV goes next to it. Defaults to $QWALK_OUT_DIR/<command>.json.
    #[arg(long)]
    #[serde(skip)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FamilyName {
    Identity,
    Diag,
    RandomPsd,
    LowRank,
    PerturbedPermutation,
    Sign,
    RandomDense,
    RandomSymmetric,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded matrix from one of the generator families.
    Gen {
        #[arg(long, value_enum)]
        family: FamilyName,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        /// Diagonal entries for the `diag` family.
        #[arg(long)]
        values: Option<String>,
        /// Matrix file; `.csv` selects dense CSV, anything else coordinate text.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Stream a coordinate file into a sampling store and save it as JSON.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// μ, Frobenius and spectral norms, s₁ and sparsity of a matrix.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Singular value estimation of a vector.
    Sve {
        #[arg(long)]
        input: PathBuf,
        /// Comma list or `eK` (K-th basis vector, 1-based); normalized before use.
        #[arg(long)]
        x: String,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Prepare |Ax⟩.
    Multiply {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long, default_value_t = 0.01)]
        eps1: f64,
        /// Defaults to the condition number of the input.
        #[arg(long)]
        kappa: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Prepare |A⁻¹b⟩.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = 0.01)]
        eps1: f64,
        #[arg(long)]
        kappa: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Gradient descent for Aθ = b through the history state.
    Gd {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = apps::DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long)]
        kappa: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Weighted least squares with optional ridge term.
    Wls {
        /// Design matrix X.
        #[arg(long)]
        input: PathBuf,
        /// JSON with `y`, optional `weights`, `lambda` and `partition`.
        #[arg(long)]
        sidecar: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = apps::DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long)]
        kappa: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Cyclic stochastic gradient descent over a row partition.
    Sgd {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        sidecar: PathBuf,
        /// Seeded equal split into k batches; overrides the sidecar partition.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = apps::DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long)]
        kappa: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Estimate η = ‖A‖/‖A‖_F by binary search.
    Specnorm {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        delta_rel: f64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug)]
enum CliError {
    Usage { field: String, message: String },
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage { .. } | CliError::Core(Error::Parse { .. }) | CliError::Core(Error::Json(_)) => 2,
            CliError::Core(_) => 1,
        }
    }

    fn record(&self) -> Value {
        let body = match self {
            CliError::Usage { field, message } => json!({"kind": "usage", "field": field, "message": message}),
            CliError::Core(Error::Parse { line, field, message }) => {
                json!({"kind": "parse", "line": line, "field": field, "message": message})
            }
            CliError::Core(Error::Json(e)) => json!({
                "kind": "parse",
                "line": e.line(),
                "field": "json",
                "message": e.to_string(),
            }),
            CliError::Core(Error::Io(e)) => json!({"kind": "io", "message": e.to_string()}),
            CliError::Core(e) => json!({"kind": "error", "message": e.to_string()}),
        };
        json!({ "error": body })
    }
}

fn usage(field: &str, message: impl Into<String>) -> CliError {
    CliError::Usage {
        field: field.to_string(),
        message: message.into(),
    }
}

fn parse_list(field: &str, text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| usage(field, format!("cannot parse `{t}` as a number")))
        })
        .collect()
}

/// A comma list, or `eK` for the K-th standard basis vector of length `dim`.
fn parse_vector(field: &str, text: &str, dim: usize) -> CliResult<Vec<f64>> {
    let v = if let Some(k) = text.strip_prefix('e') {
        let k: usize = k.parse().map_err(|_| usage(field, format!("cannot parse basis index in `{text}`")))?;
        if k == 0 || k > dim {
            return Err(usage(field, format!("basis index {k} outside 1..={dim}")));
        }
        let mut v = vec![0.0; dim];
        v[k - 1] = 1.0;
        v
    } else {
        parse_list(field, text)?
    };
    if v.len() != dim {
        return Err(usage(field, format!("length {} does not match dimension {dim}", v.len())));
    }
    matvec::normalized(&v).map_err(|_| usage(field, "vector is zero"))
}

impl Common {
    fn context(&self) -> CliResult<SimContext> {
        let mode: SveMode = self.mode.parse().map_err(|e: Error| usage("mode", e.to_string()))?;
        Ok(SimContext::new(self.seed, mode))
    }

    fn grid(&self) -> CliResult<Vec<f64>> {
        match &self.p_grid {
            None => Ok(matvec::default_p_grid()),
            Some(t) => {
                let g = parse_list("p-grid", t)?;
                if g.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(usage("p-grid", "exponents must lie in [0, 1]"));
                }
                Ok(g)
            }
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn read_sidecar(path: &Path) -> CliResult<InstanceSidecar> {
    let text = std::fs::read_to_string(path).map_err(Error::Io)?;
    Ok(serde_json::from_str(&text).map_err(Error::Json)?)
}

fn condition(a: &DenseMatrix) -> CliResult<f64> {
    matvec::matrix_stats(a, &[])?
        .condition
        .ok_or_else(|| CliError::Core(Error::Precondition("zero matrix".into())))
}

fn app_bounds(r: &apps::AppReport) -> Vec<Bound> {
    let h = &r.history;
    let mut b = vec![
        Bound::upper("output-distance", "‖|z⟩ − |θ*⟩‖ ≤ 2δ", r.bound, r.distance),
        Bound::upper("ledger", "‖θ_τ − θ̃_τ‖ ≤ α·τ²·ε", h.ledger_bound, h.error),
        Bound::upper(
            "normalized-ledger",
            "‖|θ̃_τ⟩ − |θ_τ⟩‖ ≤ √2·α·τ²·ε/‖θ_τ‖",
            h.normalized_bound,
            h.normalized_error,
        ),
    ];
    if let Some(c) = r.classical_bound {
        b.push(Bound::upper(
            "classical-contraction",
            "‖e_τ‖ ≤ (1 − α/κ)^τ·‖e₀‖",
            c,
            r.classical_error,
        ));
    }
    b
}

fn gen_family(
    family: FamilyName,
    n: Option<usize>,
    rows: Option<usize>,
    cols: Option<usize>,
    kappa: Option<f64>,
    rank: Option<usize>,
    eps: Option<f64>,
    values: Option<&str>,
) -> CliResult<Family> {
    let need_n = || n.ok_or_else(|| usage("n", "required for this family"));
    Ok(match family {
        FamilyName::Identity => Family::Identity { n: need_n()? },
        FamilyName::Diag => Family::Diag {
            values: parse_list("values", values.ok_or_else(|| usage("values", "required for diag"))?)?,
        },
        FamilyName::RandomPsd => Family::RandomPsd {
            n: need_n()?,
            kappa: kappa.unwrap_or(4.0),
        },
        FamilyName::LowRank => Family::LowRank {
            n: need_n()?,
            rank: rank.unwrap_or(2),
        },
        FamilyName::PerturbedPermutation => Family::PerturbedPermutation {
            n: need_n()?,
            eps: eps.unwrap_or(0.01),
        },
        FamilyName::Sign => Family::Sign { n: need_n()? },
        FamilyName::RandomDense => Family::RandomDense {
            rows: rows.or(n).ok_or_else(|| usage("rows", "required for random-dense"))?,
            cols: cols.or(n).ok_or_else(|| usage("cols", "required for random-dense"))?,
        },
        FamilyName::RandomSymmetric => Family::RandomSymmetric { n: need_n()? },
    })
}

fn run(command: Command) -> CliResult<(Report, Option<PathBuf>)> {
    let (name, common, config, result, bounds): (&str, Common, Value, Value, Vec<Bound>) = match command {
        Command::Gen {
            family,
            n,
            rows,
            cols,
            kappa,
            rank,
            eps,
            values,
            out,
            common,
        } => {
            let fam = gen_family(family, n, rows, cols, kappa, rank, eps, values.as_deref())?;
            let a = fam.generate(common.seed)?;
            io::write_matrix(&out, &a)?;
            let stats = matvec::matrix_stats(&a, &[])?;
            let config = json!({"family": to_value(&fam), "out": out, "common": to_value(&common)});
            let result = json!({
                "rows": a.rows(),
                "cols": a.cols(),
                "nonzeros": a.nonzeros().len(),
                "frobenius": stats.frobenius,
                "spectral": stats.spectral,
                "condition": stats.condition,
                "symmetric": a.is_symmetric(1e-12),
            });
            ("gen", common, config, result, Vec::new())
        }
        Command::Ingest { input, out, common } => {
            let text = std::fs::read_to_string(&input).map_err(Error::Io)?;
            let data = io::parse_coordinate(&text)?;
            let store = MatrixStore::from_stream(&data.entries, data.rows, data.cols)?;
            store.save_json(&out)?;
            let counters = store.counters();
            let config = json!({"input": input, "out": out, "common": to_value(&common)});
            let result = json!({
                "rows": store.rows(),
                "cols": store.cols(),
                "entries": data.entries.len(),
                "nodes": store.node_count(),
                "depth": store.depth(),
                "max_norm_sq": store.max_norm_sq(),
                "max_touches": counters.max_touches,
                "consistent": store.is_consistent(1e-12),
            });
            let bounds = vec![Bound::upper(
                "insert-touches",
                "touches per insert ≤ ⌈log₂ n⌉ + 2",
                store.touch_budget() as f64,
                counters.max_touches as f64,
            )];
            ("ingest", common, config, result, bounds)
        }
        Command::Stats { input, common } => {
            let a = io::read_matrix(&input)?;
            let grid = common.grid()?;
            let stats = matvec::matrix_stats(&a, &grid)?;
            let mu = matvec::mu(&a, &grid)?;
            let config = json!({"input": input, "common": to_value(&common)});
            let result = json!({
                "rows": stats.rows,
                "cols": stats.cols,
                "mu": mu.value,
                "mu_scheme": to_value(&mu.argmin),
                "frobenius": stats.frobenius,
                "spectral": stats.spectral,
                "s1": stats.s1,
                "sparsity": stats.sparsity,
                "condition": stats.condition,
                "mu_by_p": mu.by_p,
            });
            let mut bounds = vec![Bound::upper("mu-frobenius", "μ(A) ≤ ‖A‖_F", stats.frobenius, mu.value)];
            if a.is_symmetric(1e-12) {
                bounds.push(Bound::upper(
                    "mu-symmetric",
                    "μ(A) ≤ min(‖A‖_F, s₁(A)) for symmetric A",
                    stats.frobenius.min(stats.s1) + 1e-12,
                    mu.value,
                ));
            }
            ("stats", common, config, result, bounds)
        }
        Command::Sve { input, x, delta, common } => {
            let a = io::read_matrix(&input)?;
            let xv = parse_vector("x", &x, a.cols())?;
            let mut ctx = common.context()?;
            let stored = StoredMatrix::auto(&a, &common.grid()?)?;
            let out = sve::sve(&stored, &xv, delta, &mut ctx)?;
            let config = json!({"input": input, "x": xv, "delta": delta, "common": to_value(&common)});
            let bounds = vec![Bound::upper("sve-precision", "|σ̄ᵢ − σᵢ| ≤ δ", delta, out.max_error())];
            let mut result = to_value(&out);
            result["max_error"] = json!(out.max_error());
            ("sve", common, config, result, bounds)
        }
        Command::Multiply {
            input,
            x,
            eps1,
            kappa,
            common,
        } => {
            let a = io::read_matrix(&input)?;
            let xv = parse_vector("x", &x, a.cols())?;
            let kappa = match kappa {
                Some(k) => k,
                None => condition(&a)?,
            };
            let mut ctx = common.context()?;
            let stored = StoredMatrix::auto(&a, &common.grid()?)?;
            let r = solvers::multiply(&stored, &xv, eps1, kappa, &mut ctx)?;
            let config = json!({"input": input, "x": xv, "eps1": eps1, "kappa": kappa, "common": to_value(&common)});
            let bounds = vec![Bound::upper("multiply-distance", "‖|z⟩ − |Ax⟩‖ ≤ √2·ε₁·κ", r.bound, r.distance)];
            ("multiply", common, config, to_value(&r), bounds)
        }
        Command::Solve {
            input,
            b,
            eps1,
            kappa,
            common,
        } => {
            let a = io::read_matrix(&input)?;
            let bv = parse_vector("b", &b, a.rows())?;
            let kappa = match kappa {
                Some(k) => k,
                None => condition(&a)?,
            };
            let mut ctx = common.context()?;
            let stored = StoredMatrix::auto(&a, &common.grid()?)?;
            let r = solvers::solve(&stored, &bv, eps1, kappa, &mut ctx)?;
            let config = json!({"input": input, "b": bv, "eps1": eps1, "kappa": kappa, "common": to_value(&common)});
            let bounds = vec![Bound::upper("solve-distance", "‖|z⟩ − |A⁻¹b⟩‖ ≤ 2√2·κ·ε₁", r.bound, r.distance)];
            ("solve", common, config, to_value(&r), bounds)
        }
        Command::Gd {
            input,
            b,
            delta,
            alpha,
            kappa,
            common,
        } => {
            let a = io::read_matrix(&input)?;
            let bv = parse_vector("b", &b, a.rows())?;
            let mut ctx = common.context()?;
            let r = apps::gd_linear_solve(&a, &bv, delta, alpha, kappa, &mut ctx)?;
            let config = json!({"input": input, "b": bv, "delta": delta, "alpha": alpha, "kappa": kappa, "common": to_value(&common)});
            ("gd", common, config, to_value(&r), app_bounds(&r))
        }
        Command::Wls {
            input,
            sidecar,
            delta,
            alpha,
            kappa,
            common,
        } => {
            let x = io::read_matrix(&input)?;
            let side = read_sidecar(&sidecar)?;
            let inst = side.instance(x)?;
            let mut ctx = common.context()?;
            let r = apps::wls_solve(&inst, delta, alpha, kappa, &mut ctx)?;
            let config = json!({"input": input, "sidecar": to_value(&side), "delta": delta, "alpha": alpha, "kappa": kappa, "common": to_value(&common)});
            ("wls", common, config, to_value(&r), app_bounds(&r))
        }
        Command::Sgd {
            input,
            sidecar,
            k,
            delta,
            alpha,
            kappa,
            common,
        } => {
            let x = io::read_matrix(&input)?;
            let side = read_sidecar(&sidecar)?;
            let inst = side.instance(x)?;
            let plan = match k {
                Some(k) => PartitionPlan::seeded_equal(inst.rows(), k, common.seed)?,
                None => side
                    .plan(inst.rows())?
                    .ok_or_else(|| usage("k", "give --k or a partition in the sidecar"))?,
            };
            let mut ctx = common.context()?;
            let r = apps::sgd_solve(&inst, &plan, delta, alpha, kappa, &mut ctx)?;
            let config = json!({
                "input": input,
                "sidecar": to_value(&side),
                "partition": plan.batches.iter().map(|b| b.iter().map(|i| i + 1).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "delta": delta,
                "alpha": alpha,
                "kappa": kappa,
                "common": to_value(&common),
            });
            let mut bounds = app_bounds(&r);
            // without a full-batch contraction guarantee the 2δ target is informational
            bounds.retain(|b| b.name != "output-distance");
            let mut result = to_value(&r);
            result["per_step_mu"] = json!(r.mu);
            ("sgd", common, config, result, bounds)
        }
        Command::Specnorm {
            input,
            eps,
            delta_rel,
            common,
        } => {
            let a = io::read_matrix(&input)?;
            let mut ctx = common.context()?;
            let r = solvers::spectral_norm_estimate(&a, eps, delta_rel, &mut ctx)?;
            let config = json!({"input": input, "eps": eps, "delta_rel": delta_rel, "common": to_value(&common)});
            let bounds = vec![
                Bound::upper("additive-error", "|η̄ − η| ≤ ε", eps, (r.estimate - r.exact).abs()),
                Bound {
                    name: "trace-halving".into(),
                    formula: "u − l halves every round".into(),
                    value: r.trace.len() as f64,
                    measured: r.trace.len() as f64,
                    holds: r.trace_halves(),
                },
            ];
            ("specnorm", common, config, to_value(&r), bounds)
        }
    };
    let dest = report::destination(common.report.as_deref(), name);
    Ok((Report::new(name, config, result, bounds), dest))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let record = json!({"error": {"kind": "usage", "message": e.to_string().trim_end()}});
            eprintln!("{record}");
            return ExitCode::from(2);
        }
    };
    match run(cli.command).and_then(|(report, dest)| {
        if let Some(path) = &dest {
            report.write(path)?;
        }
        Ok(report)
    }) {
        Ok(report) => {
            print!("{}", report.to_json());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code())
        }
    }
}
