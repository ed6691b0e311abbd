//! `isacwk` — design and inspect dual-functional radar-communication
//! waveforms from the command line.
//!
//! Exit codes: 0 success, 1 runtime failure (solver divergence, IO, failed
//! experiment checks), 2 argument or spec errors.
//!
//! Set `ISACWK_LOG=debug` (or any `env_logger` filter) for progress logging.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use isacwk_core::error::Error;
use isacwk_core::experiments::{
    emit, emit_plot_data, evaluate_checks, run as run_experiment, table_to_csv_string,
    EmitFormat, ExperimentSpec,
};
use isacwk_core::io;
use isacwk_core::metrics::{from_db, papr, to_db};
use isacwk_core::model::ChirpKind;
use isacwk_core::oracle::{default_weight_grid, pareto_sweep};
use isacwk_core::robust::{robust_solve, RobustConfig};
use isacwk_core::solver::solve;
use isacwk_core::{Constellation, Scenario, SolveOutput, SolverConfig, WaveformFrame};

#[derive(Parser)]
#[command(
    name = "isacwk",
    version,
    about = "Dual-functional radar-communication waveform design",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design a waveform for one random scenario.
    Design(DesignArgs),
    /// Design under imperfect channel knowledge (worst-case surrogate).
    RobustDesign(RobustDesignArgs),
    /// Run a declarative experiment spec.
    Experiment(ExperimentArgs),
    /// Inspect a waveform file and optionally re-check feasibility.
    Metrics(MetricsArgs),
    /// Sweep the communication/similarity trade-off fronts.
    Pareto(ParetoArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Transmit antennas.
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Downlink users.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Samples per frame.
    #[arg(long, default_value_t = 20)]
    l: usize,
    /// Symbol constellation: qpsk, 16qam, 64qam, 256qam.
    #[arg(long, default_value = "qpsk", value_parser = parse_constellation)]
    constellation: Constellation,
    /// Reference chirp family: lfm or mseq.
    #[arg(long, default_value = "lfm")]
    chirp: String,
    /// Feedback taps for --chirp mseq (comma separated).
    #[arg(long, value_delimiter = ',')]
    taps: Option<Vec<u32>>,
    /// Per-user receive SNR in dB (sets the noise floor for rate metrics).
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    snr_db: f64,
    /// RNG seed; omitted seeds are drawn from entropy and echoed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ScenarioArgs {
    fn chirp_kind(&self) -> Result<ChirpKind, Error> {
        chirp_kind(&self.chirp, self.taps.clone())
    }

    fn scenario(&self, seed: u64) -> Result<Scenario, Error> {
        Scenario::generate(
            self.n,
            self.k,
            self.l,
            self.constellation,
            &self.chirp_kind()?,
            self.snr_db,
            seed,
        )
    }
}

fn parse_constellation(s: &str) -> Result<Constellation, String> {
    match s {
        "qpsk" => Ok(Constellation::Qpsk),
        "16qam" => Ok(Constellation::Qam16),
        "64qam" => Ok(Constellation::Qam64),
        "256qam" => Ok(Constellation::Qam256),
        other => Err(format!(
            "unknown constellation {other:?} (expected qpsk, 16qam, 64qam or 256qam)"
        )),
    }
}

fn chirp_kind(name: &str, taps: Option<Vec<u32>>) -> Result<ChirpKind, Error> {
    match name {
        "lfm" => {
            if taps.is_some() {
                return Err(Error::InvalidParameter(
                    "--taps only applies to --chirp mseq".into(),
                ));
            }
            Ok(ChirpKind::OrthogonalLfm)
        }
        "mseq" => Ok(match taps {
            Some(taps) => ChirpKind::MSequence { taps },
            None => ChirpKind::default_mseq(),
        }),
        other => Err(Error::InvalidParameter(format!(
            "unknown chirp {other:?} (expected lfm or mseq)"
        ))),
    }
}

#[derive(Args)]
struct SolverArgs {
    /// ADMM penalty parameter.
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    /// PAPR cap, linear (>= 1). Mutually exclusive with --eta-db.
    #[arg(long, conflicts_with = "eta_db")]
    eta: Option<f64>,
    /// PAPR cap in dB.
    #[arg(long)]
    eta_db: Option<f64>,
    /// Similarity radius around the reference chirp (0 to 2).
    #[arg(long, default_value_t = 1.85)]
    epsilon: f64,
    /// Iteration budget.
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    /// Primal stall tolerance for early exit.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Consecutive stalled iterations before stopping (0 disables).
    #[arg(long, default_value_t = 20)]
    stall_window: usize,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig, Error> {
        let eta = match (self.eta, self.eta_db) {
            (Some(e), None) => e,
            (None, Some(db)) => from_db(db),
            (None, None) => from_db(9.0),
            (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
        };
        let cfg = SolverConfig {
            rho: self.rho,
            eta,
            epsilon: self.epsilon,
            max_iter: self.max_iter,
            primal_tol: self.tol,
            stall_window: self.stall_window,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct DesignArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Waveform output path (.csv, or .bin for the binary format).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-iteration diagnostics CSV.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args)]
struct RobustDesignArgs {
    #[command(flatten)]
    design: DesignArgs,
    /// Channel uncertainty norm bound, linear. Mutually exclusive with
    /// --sigma-delta-db.
    #[arg(long, conflicts_with = "sigma_delta_db")]
    sigma_delta: Option<f64>,
    /// Channel uncertainty norm bound in dB.
    #[arg(long, allow_negative_numbers = true)]
    sigma_delta_db: Option<f64>,
    /// Budget for the fixed-point x-update.
    #[arg(long, default_value_t = 50)]
    inner_iters: usize,
    /// Step tolerance for the fixed-point x-update.
    #[arg(long, default_value_t = 1e-10)]
    inner_tol: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment spec (TOML).
    #[arg(long)]
    spec: PathBuf,
    /// Result table output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format for --out.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Also emit long-format series,x,y plot data to this path.
    #[arg(long)]
    plot_data: Option<PathBuf>,
    /// Override the spec's trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the spec's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the trial pool (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Waveform file written by `design` (.csv or .bin).
    #[arg(long = "in")]
    input: PathBuf,
    /// Reference chirp family used for the similarity distance.
    #[arg(long, default_value = "lfm")]
    chirp: String,
    /// Feedback taps for --chirp mseq.
    #[arg(long, value_delimiter = ',')]
    taps: Option<Vec<u32>>,
    /// Re-check PAPR against this linear cap. Mutually exclusive with
    /// --eta-db.
    #[arg(long, conflicts_with = "eta_db")]
    eta: Option<f64>,
    /// Re-check PAPR against this cap in dB.
    #[arg(long)]
    eta_db: Option<f64>,
    /// Re-check the similarity distance against this radius.
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct ParetoArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// PAPR caps for the clipped and constrained fronts, linear
    /// (comma separated). Mutually exclusive with --eta-db.
    #[arg(long, value_delimiter = ',', conflicts_with = "eta_db")]
    eta: Option<Vec<f64>>,
    /// PAPR caps in dB (comma separated).
    #[arg(long, value_delimiter = ',')]
    eta_db: Option<Vec<f64>>,
    /// Scalarization weights (comma separated; default: 32-point log grid).
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    /// Front table output path (CSV).
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe closes early (`isacwk ... | head`)
    // instead of panicking on EPIPE, like other line-oriented tools.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    env_logger::Builder::from_env(env_logger::Env::new().filter("ISACWK_LOG")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Design(args) => cmd_design(args),
        Command::RobustDesign(args) => cmd_robust_design(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Metrics(args) => cmd_metrics(args),
        Command::Pareto(args) => cmd_pareto(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                // Bad parameter values are argument errors, same class as a
                // flag clap itself would have rejected.
                Error::InvalidParameter(_) | Error::InvalidSpec(_) => {
                    eprintln!("run with --help for usage");
                    ExitCode::from(2)
                }
                _ => ExitCode::from(1),
            }
        }
    }
}

/// Echo the seed so every stochastic run is reproducible from its log.
fn resolve_seed(seed: Option<u64>) -> u64 {
    match seed {
        Some(s) => s,
        None => {
            let s: u64 = rand::random();
            println!("seed={s} (auto-chosen; pass --seed {s} to reproduce)");
            s
        }
    }
}

fn write_waveform(path: &Path, frame: &WaveformFrame) -> Result<(), Error> {
    if path.extension().is_some_and(|e| e == "bin") {
        io::write_waveform_binary(path, frame)
    } else {
        io::write_waveform_csv(path, frame)
    }
}

fn read_waveform(path: &Path) -> Result<WaveformFrame, Error> {
    if path.extension().is_some_and(|e| e == "bin") {
        io::read_waveform_binary(path)
    } else {
        io::read_waveform_csv(path)
    }
}

fn print_solve_summary(seed: u64, out: &SolveOutput) {
    let objective_db = out
        .diagnostics
        .objective
        .last()
        .map(|&o| to_db(o.max(1e-300)))
        .unwrap_or(f64::NAN);
    println!(
        "seed={} iterations={} converged={} objective_db={:.3} papr_db={:.3} similarity={:.4}",
        seed,
        out.iterations,
        out.converged,
        objective_db,
        out.metrics.papr_db,
        out.metrics.similarity_dist
    );
}

fn finish_design(args: &DesignArgs, seed: u64, out: &SolveOutput) -> Result<ExitCode, Error> {
    if let Some(path) = &args.out {
        write_waveform(path, &out.waveform)?;
        log::info!("waveform written to {}", path.display());
    }
    if let Some(path) = &args.diagnostics {
        io::write_diagnostics_csv(path, &out.diagnostics)?;
        log::info!("diagnostics written to {}", path.display());
    }
    print_solve_summary(seed, out);
    Ok(ExitCode::SUCCESS)
}

fn cmd_design(args: DesignArgs) -> Result<ExitCode, Error> {
    let cfg = args.solver.config()?;
    let seed = resolve_seed(args.scenario.seed);
    let scenario = args.scenario.scenario(seed)?;
    let out = solve(&scenario, &cfg)?;
    finish_design(&args, seed, &out)
}

fn cmd_robust_design(args: RobustDesignArgs) -> Result<ExitCode, Error> {
    let base = args.design.solver.config()?;
    let sigma_delta = match (args.sigma_delta, args.sigma_delta_db) {
        (Some(s), None) => s,
        (None, Some(db)) => from_db(db),
        (None, None) => 0.0,
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    };
    let cfg = RobustConfig {
        base,
        sigma_delta,
        inner_iters: args.inner_iters,
        inner_tol: args.inner_tol,
    };
    cfg.validate()?;
    let seed = resolve_seed(args.design.scenario.seed);
    let scenario = args.design.scenario.scenario(seed)?;
    let out = robust_solve(&scenario, &cfg)?;
    finish_design(&args.design, seed, &out)
}

fn cmd_experiment(args: ExperimentArgs) -> Result<ExitCode, Error> {
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(Error::InvalidParameter("--jobs must be >= 1".into()));
        }
        // Ignore the error if a pool already exists (e.g. repeated calls in
        // one test process); the experiment still runs.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let format = match args.format.as_str() {
        "csv" => EmitFormat::Csv,
        "json" => EmitFormat::Json,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown format {other:?} (expected csv or json)"
            )))
        }
    };
    let mut spec = ExperimentSpec::load(&args.spec)?;
    if let Some(trials) = args.trials {
        spec.trials = trials;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.validate()?;

    let table = run_experiment(&spec)?;
    match &args.out {
        Some(path) => {
            emit(&table, path, format)?;
            log::info!("results written to {}", path.display());
        }
        None => print!("{}", table_to_csv_string(&table)),
    }
    if let Some(path) = &args.plot_data {
        emit_plot_data(&table, path)?;
        log::info!("plot data written to {}", path.display());
    }

    println!(
        "seed={} kind={} rows={} spec_hash={} diverged_trials={}",
        spec.seed,
        spec.kind.name(),
        table.rows.len(),
        table.metadata.spec_hash,
        table.metadata.diverged_trials
    );
    let outcomes = evaluate_checks(&spec, &table)?;
    let mut failed = false;
    for o in &outcomes {
        println!(
            "check {}: {} (actual {:.6})",
            o.description,
            if o.passed { "pass" } else { "FAIL" },
            o.actual
        );
        failed |= !o.passed;
    }
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn cmd_metrics(args: MetricsArgs) -> Result<ExitCode, Error> {
    let frame = read_waveform(&args.input)?;
    let chirp = chirp_kind(&args.chirp, args.taps.clone())?;
    let x0 = chirp.generate(frame.n_antennas(), frame.n_samples())?;
    let norm = frame.norm();
    let papr_lin = papr(frame.vec())?;
    let similarity = {
        let d: f64 = frame
            .vec()
            .iter()
            .zip(x0.vec())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        d.sqrt()
    };
    println!("n={} l={}", frame.n_antennas(), frame.n_samples());
    println!("norm={norm:.9}");
    println!("papr={:.9} papr_db={:.6}", papr_lin, to_db(papr_lin));
    println!("similarity={similarity:.9}");

    let eta = match (args.eta, args.eta_db) {
        (Some(e), None) => Some(e),
        (None, Some(db)) => Some(from_db(db)),
        (None, None) => None,
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    };
    if eta.is_none() && args.epsilon.is_none() {
        return Ok(ExitCode::SUCCESS);
    }

    // Feasibility re-checks at the library tolerances.
    let mut failed = false;
    let mut report = |name: &str, ok: bool, detail: String| {
        println!("check {name}: {} ({detail})", if ok { "pass" } else { "FAIL" });
        failed |= !ok;
    };
    report(
        "unit-norm",
        (norm - 1.0).abs() <= 1e-6,
        format!("|norm - 1| = {:.3e}", (norm - 1.0).abs()),
    );
    if let Some(eta) = eta {
        if eta < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "eta {eta} is infeasible: PAPR is always >= 1"
            )));
        }
        report(
            "papr-cap",
            papr_lin <= eta * (1.0 + 1e-6),
            format!("papr {:.6} vs cap {:.6}", papr_lin, eta),
        );
    }
    if let Some(eps) = args.epsilon {
        report(
            "similarity-ball",
            similarity <= eps + 1e-6,
            format!("distance {:.6} vs radius {:.6}", similarity, eps),
        );
    }
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn cmd_pareto(args: ParetoArgs) -> Result<ExitCode, Error> {
    let etas = match (&args.eta, &args.eta_db) {
        (Some(v), None) => v.clone(),
        (None, Some(v)) => v.iter().map(|&db| from_db(db)).collect(),
        (None, None) => vec![from_db(3.0)],
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    };
    let weights = args.weights.clone().unwrap_or_else(default_weight_grid);
    let seed = resolve_seed(args.scenario.seed);
    let scenario = args.scenario.scenario(seed)?;
    let study = pareto_sweep(&scenario, &etas, &weights)?;
    io::write_pareto_csv(&args.out, &study)?;
    let points: usize = study.unconstrained.len()
        + study.clipped.iter().map(|(_, f)| f.len()).sum::<usize>()
        + study.constrained.iter().map(|(_, f)| f.len()).sum::<usize>();
    println!(
        "seed={} fronts={} points={} out={}",
        seed,
        1 + study.clipped.len() + study.constrained.len(),
        points,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}
