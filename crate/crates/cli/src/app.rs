//! Argument parsing and command dispatch.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use globcert::demo;
use globcert::linalg::{C64, ComplexMatrix};
use globcert::objective::Objective;
use globcert::oracle;
use globcert::pencils::{PencilError, PencilKind};
use globcert::solver::{self, SolveError, SolveResult, SolverConfig, Status};
use thiserror::Error;

use crate::mm::{self, Layout, MmError};
use crate::output::{self, parse_complex};

#[derive(Debug, Parser)]
#[command(name = "globcert", version, about = "Kreiss constants and distance to uncontrollability with globality certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Continuous-time Kreiss constant of A.
    KreissC {
        a: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
        /// Shift A by the mean imaginary part of its eigenvalues first.
        #[arg(long)]
        shift_center: bool,
    },
    /// Discrete-time Kreiss constant of A.
    KreissD {
        a: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
    },
    /// Distance to uncontrollability of the pair (A, B).
    Dtu {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
    },
    /// Check a quantity against a brute-force grid search.
    Verify {
        #[arg(value_enum)]
        quantity: Quantity,
        a: PathBuf,
        /// Input matrix, for `dtu` only.
        b: Option<PathBuf>,
        /// JSON written by a previous run.
        #[arg(long, conflicts_with = "value")]
        result: Option<PathBuf>,
        /// Claimed value of the quantity.
        #[arg(long)]
        value: Option<f64>,
        /// Grid points per axis.
        #[arg(long, default_value_t = 200)]
        grid: usize,
        /// Relative tolerance for agreement.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Write a demo matrix in Matrix Market format.
    Gen {
        #[arg(value_enum)]
        name: Demo,
        /// Output path for A.
        #[arg(short, long)]
        out: PathBuf,
        /// Output path for B (two-basin-dtu only).
        #[arg(long)]
        b_out: Option<PathBuf>,
        /// Order for kahan and the companion matrices.
        #[arg(short, long, default_value_t = 10)]
        n: usize,
        /// Second entry of B for two-basin-dtu.
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        b2: f64,
        #[arg(long, value_enum, default_value_t = LayoutArg::Array)]
        layout: LayoutArg,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    KreissC,
    KreissD,
    Dtu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Demo {
    Kahan,
    Companion,
    StabilizedCompanion,
    Jordan,
    CoupledDiscrete,
    TwoBasinDiscrete,
    TwoBasinDtu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    Array,
    Coordinate,
}

#[derive(Debug, Args)]
pub struct SolveOpts {
    /// Starting point such as 1+1i, 0.5 or -2i. Repeatable.
    #[arg(long = "start", allow_hyphen_values = true)]
    pub starts: Vec<String>,
    /// Write the result as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Write every certificate evaluation as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub tol_term: Option<f64>,
    #[arg(long)]
    pub tol_restart: Option<f64>,
    #[arg(long)]
    pub gamma_guard: Option<f64>,
    #[arg(long)]
    pub imag_tol: Option<f64>,
    #[arg(long)]
    pub ellipse_delta: Option<f64>,
    /// Threads for certificate evaluations. Defaults to the available parallelism.
    #[arg(long, env = "GLOBCERT_WORKERS")]
    pub workers: Option<usize>,
    /// Initial Chebyshev samples per piece, of the form 2^k + 1.
    #[arg(long)]
    pub min_samples: Option<usize>,
    #[arg(long)]
    pub max_restarts: Option<usize>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Matrix(#[from] MmError),
    #[error(transparent)]
    Input(#[from] PencilError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("{path}: {msg}")]
    File { path: PathBuf, msg: String },
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::File { path: path.into(), msg: e.to_string() })
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn complex(z: C64) -> String {
    format!("{:.16e}{:+.16e}i", z.re, z.im)
}

impl SolveOpts {
    fn config(&self) -> Result<SolverConfig, CliError> {
        let mut cfg = SolverConfig::default();
        if let Some(v) = self.tol_term {
            cfg.term_rel = v;
        }
        if let Some(v) = self.tol_restart {
            cfg.restart_rel = v;
        }
        if let Some(v) = self.gamma_guard {
            cfg.gamma_guard = v;
        }
        if let Some(v) = self.imag_tol {
            cfg.policy.imag_tol = v;
        }
        if let Some(v) = self.ellipse_delta {
            cfg.policy.ellipse_delta = v;
        }
        if let Some(v) = self.min_samples {
            if v < 3 || !(v - 1).is_power_of_two() {
                return Err(CliError::Usage(format!("--min-samples {v}: must be 2^k + 1 with k ≥ 1")));
            }
            cfg.interp.min_samples = v;
        }
        if let Some(v) = self.max_restarts {
            cfg.max_restarts = v;
        }
        cfg.workers = match self.workers {
            Some(0) => return Err(CliError::Usage("--workers must be at least 1".into())),
            Some(w) => w,
            None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        };
        cfg.trace = self.trace.is_some();
        Ok(cfg)
    }

    fn starts(&self, obj: &Objective) -> Result<Vec<C64>, CliError> {
        let mut out = Vec::new();
        for s in &self.starts {
            let z = parse_complex(s).map_err(|e| CliError::Usage(format!("--start {s}: {e}")))?;
            if !obj.is_feasible(z) {
                let domain = match obj.kind {
                    PencilKind::KreissContinuous => "Re z > 0",
                    PencilKind::KreissDiscrete => "|z| > 1",
                    PencilKind::DistUncontrollability => "finite z",
                };
                return Err(CliError::Usage(format!("--start {s}: start infeasible for {}, need {domain}", obj.kind.name())));
            }
            out.push(z);
        }
        Ok(out)
    }
}

fn print_result(res: &SolveResult) {
    let label = if res.kind == PencilKind::DistUncontrollability { "tau" } else { "kreiss" };
    println!("{label:<12} {}", sci(res.quantity));
    println!("{:<12} {}", "gamma_final", sci(res.gamma_final));
    if let Some(z) = res.minimizer {
        println!("{:<12} {}", "minimizer", complex(z));
    }
    println!("{:<12} {}", "status", output::status_name(res.status));
    println!("{:<12} {}", "restarts", res.restarts.len());
    let samples: Vec<String> = res.certificate_samples.iter().map(|s| s.to_string()).collect();
    println!("{:<12} {}", "samples", samples.join(" "));
    for note in &res.notes {
        println!("note: {note}");
    }
}

fn exit_code(status: Status) -> u8 {
    match status {
        Status::Converged | Status::TrivialNormal => 0,
        Status::UnstableInfinite => 2,
        Status::MaxRestarts => 3,
    }
}

fn run_solve(obj: Objective, opts: &SolveOpts, shift_center: bool) -> Result<u8, CliError> {
    let mut cfg = opts.config()?;
    cfg.shift_center = shift_center;
    let starts = opts.starts(&obj)?;
    let t0 = Instant::now();
    let res = solver::solve(&obj, &starts, &cfg)?;
    let wall = t0.elapsed().as_secs_f64();
    print_result(&res);
    if let Some(path) = &opts.json {
        let json = serde_json::to_string_pretty(&output::result_json(&res, wall)).expect("serializable");
        write_file(path, &(json + "\n"))?;
    }
    if let Some(path) = &opts.trace {
        write_file(path, &output::trace_csv(&res.trace))?;
    }
    Ok(exit_code(res.status))
}

fn load_objective(quantity: Quantity, a: &Path, b: Option<&Path>) -> Result<Objective, CliError> {
    let am = mm::read_matrix(a)?;
    Ok(match quantity {
        Quantity::KreissC => Objective::kreiss_continuous(am)?,
        Quantity::KreissD => Objective::kreiss_discrete(am)?,
        Quantity::Dtu => {
            let b = b.ok_or_else(|| CliError::Usage("dtu needs a B matrix".into()))?;
            Objective::dist_uncontrollability(am, mm::read_matrix(b)?)?
        }
    })
}

/// Claimed quantity and minimizer from a result file.
fn read_claim(path: &Path) -> Result<(Option<f64>, Option<C64>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::File { path: path.into(), msg: e.to_string() })?;
    let v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::File { path: path.into(), msg: format!("invalid JSON: {e}") })?;
    let quantity = v.get("quantity").and_then(|q| q.as_f64());
    let minimizer = v
        .get("minimizer")
        .and_then(|m| Some(C64::new(m.get("re")?.as_f64()?, m.get("im")?.as_f64()?)));
    Ok((quantity, minimizer))
}

fn to_quantity(kind: PencilKind, gamma: f64) -> f64 {
    if kind == PencilKind::DistUncontrollability {
        gamma
    } else {
        1.0 / gamma
    }
}

fn run_verify(
    quantity: Quantity,
    a: &Path,
    b: Option<&Path>,
    result: Option<&Path>,
    value: Option<f64>,
    grid: usize,
    tol: f64,
) -> Result<u8, CliError> {
    let obj = load_objective(quantity, a, b)?;
    let reference = oracle::reference_min(&obj, grid).map_err(|e| CliError::Usage(format!("--grid {grid}: {e}")))?;
    let oracle_q = to_quantity(obj.kind, reference.value);
    println!("{:<12} {}", "oracle", sci(oracle_q));
    println!("{:<12} {}", "at", complex(reference.z));
    let (claim, minimizer) = match (result, value) {
        (Some(p), _) => read_claim(p)?,
        (None, v) => (v, None),
    };
    let mut ok = true;
    if let Some(q) = claim {
        let rel = (q - oracle_q).abs() / oracle_q.abs().max(f64::MIN_POSITIVE);
        println!("{:<12} {}", "claimed", sci(q));
        println!("{:<12} {rel:.3e}", "rel_diff");
        ok &= rel <= tol;
    }
    if let Some(z) = minimizer {
        let direct = to_quantity(obj.kind, obj.value(z)?);
        let rel = claim.map_or(0.0, |q| (q - direct).abs() / direct.abs().max(f64::MIN_POSITIVE));
        println!("{:<12} {}", "at_claimed", sci(direct));
        ok &= rel <= tol;
    }
    println!("{:<12} {}", "verdict", if ok { "agree" } else { "disagree" });
    Ok(if ok { 0 } else { 4 })
}

fn run_gen(name: Demo, out: &Path, b_out: Option<&Path>, n: usize, b2: f64, layout: LayoutArg) -> Result<u8, CliError> {
    if n == 0 {
        return Err(CliError::Usage("-n must be at least 1".into()));
    }
    let layout = match layout {
        LayoutArg::Array => Layout::Array,
        LayoutArg::Coordinate => Layout::Coordinate,
    };
    let (a, b): (ComplexMatrix, Option<ComplexMatrix>) = match name {
        Demo::Kahan => (demo::kahan(n), None),
        Demo::Companion => (demo::companion_exp(n), None),
        Demo::StabilizedCompanion => (demo::stabilized_companion(n), None),
        Demo::Jordan => (demo::jordan_continuous(), None),
        Demo::CoupledDiscrete => (demo::coupled_discrete(), None),
        Demo::TwoBasinDiscrete => (demo::two_basin_discrete(), None),
        Demo::TwoBasinDtu => {
            let (a, b) = demo::two_basin_dtu(b2);
            (a, Some(b))
        }
    };
    mm::write_matrix(out, &a, layout)?;
    match (b, b_out) {
        (Some(b), Some(p)) => mm::write_matrix(p, &b, layout)?,
        (Some(_), None) => return Err(CliError::Usage("two-basin-dtu needs --b-out".into())),
        (None, Some(_)) => return Err(CliError::Usage("--b-out only applies to two-basin-dtu".into())),
        (None, None) => {}
    }
    Ok(0)
}

pub fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::KreissC { a, opts, shift_center } => run_solve(load_objective(Quantity::KreissC, &a, None)?, &opts, shift_center),
        Command::KreissD { a, opts } => run_solve(load_objective(Quantity::KreissD, &a, None)?, &opts, false),
        Command::Dtu { a, b, opts } => run_solve(load_objective(Quantity::Dtu, &a, Some(&b))?, &opts, false),
        Command::Verify { quantity, a, b, result, value, grid, tol } => {
            if (quantity == Quantity::Dtu) != b.is_some() {
                return Err(CliError::Usage("B is required for dtu and not accepted otherwise".into()));
            }
            run_verify(quantity, &a, b.as_deref(), result.as_deref(), value, grid, tol)
        }
        Command::Gen { name, out, b_out, n, b2, layout } => run_gen(name, &out, b_out.as_deref(), n, b2, layout),
    }
}

/// Entry point. Usage errors exit with 1, not clap's default of 2, which is
/// reserved for unstable matrices.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
