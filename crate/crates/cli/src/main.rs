//! `lstf`: spectra, semiclassical landscapes, closed/open dynamics,
//! benchmark campaigns and the single-instance heuristic.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{Builtin, RunConfig, ScheduleKind, TwoQubitConfig};

#[derive(Parser, Debug)]
#[command(name = "lstf", version, about = "Locally suppressed transverse-field annealing simulator")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 1 runs everything serially.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct ProblemArgs {
    /// Two-qubit model with frustration f.
    #[arg(long)]
    f: Option<f64>,
    /// Energy scale R in GHz for the two-qubit model.
    #[arg(long)]
    r: Option<f64>,
    /// Transverse field of qubit 1 in the two-qubit model (defaults to R).
    #[arg(long)]
    h_x2: Option<f64>,
    /// Problem instance file (JSON).
    #[arg(long, conflicts_with_all = ["f", "builtin"])]
    instance: Option<PathBuf>,
    /// Frozen reference instance.
    #[arg(long, value_enum)]
    builtin: Option<BuiltinArg>,
    /// LSTF target qubit (0-based); selects the LSTF schedule.
    #[arg(long)]
    target: Option<usize>,
    #[arg(long)]
    s_x: Option<f64>,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum BuiltinArg {
    SevenQubit,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Instantaneous spectrum, gaps and magnetizations.
    Spectrum {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Two-qubit semiclassical potential, minima and line profile.
    Semiclassical {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Closed or open evolution over a t_an sweep.
    Dynamics {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Comma-separated anneal durations in ns.
        #[arg(long, value_delimiter = ',')]
        t_an: Option<Vec<f64>>,
        /// Solve the adiabatic master equation.
        #[arg(long)]
        open: bool,
        #[arg(long)]
        eta_g2: Option<f64>,
    },
    /// Randomized benchmark campaign.
    Benchmark {
        #[arg(long)]
        samples: Option<usize>,
    },
    /// AQA against LSTF on every eligible qubit of one instance.
    Heuristic {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        t_an: Option<f64>,
    },
}

/// Failures, each with its own exit status.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Lib(lstf::Error),
    Io(std::io::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        use lstf::Error as E;
        match self {
            Failure::Config(_) => 2,
            Failure::Lib(E::Integrator { .. } | E::Positivity(_)) => 4,
            Failure::Lib(E::Io(_) | E::Csv(_) | E::Json(_)) | Failure::Io(_) => 1,
            Failure::Lib(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<lstf::Error> for Failure {
    fn from(e: lstf::Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Lib(e.into())
    }
}

fn apply_problem(cfg: &mut RunConfig, a: &ProblemArgs) -> Result<(), Failure> {
    if let Some(f) = a.f {
        let prev = cfg.problem.two_qubit;
        cfg.problem.two_qubit = Some(TwoQubitConfig {
            f,
            r: prev.map_or(1.0, |p| p.r),
            h_x2: prev.and_then(|p| p.h_x2),
            coupler: prev.map(|p| p.coupler).unwrap_or_default(),
        });
        cfg.problem.instance = None;
        cfg.problem.builtin = None;
    }
    if a.r.is_some() || a.h_x2.is_some() {
        let tq = cfg
            .problem
            .two_qubit
            .as_mut()
            .ok_or_else(|| Failure::Config("--r and --h-x2 need a two-qubit problem (--f)".into()))?;
        if let Some(r) = a.r {
            tq.r = r;
        }
        if let Some(h) = a.h_x2 {
            tq.h_x2 = Some(h);
        }
    }
    if let Some(path) = &a.instance {
        cfg.problem.instance = Some(path.clone());
        cfg.problem.two_qubit = None;
        cfg.problem.builtin = None;
    }
    if let Some(BuiltinArg::SevenQubit) = a.builtin {
        cfg.problem.builtin = Some(Builtin::SevenQubit);
        cfg.problem.two_qubit = None;
        cfg.problem.instance = None;
    }
    if let Some(k) = a.target {
        cfg.plan.schedule = ScheduleKind::Lstf;
        cfg.plan.target = Some(k);
    }
    if let Some(s_x) = a.s_x {
        cfg.plan.s_x = s_x;
    }
    Ok(())
}

fn resolve(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.common.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.common.out {
        cfg.out = Some(o.clone());
    }
    if let Some(s) = cli.common.seed {
        cfg.seed = Some(s);
    }
    if let Some(w) = cli.common.workers {
        cfg.workers = Some(w);
    }
    match &cli.command {
        Command::Spectrum { problem, grid } => {
            apply_problem(&mut cfg, problem)?;
            if let Some(g) = grid {
                cfg.spectrum.grid = *g;
            }
        }
        Command::Semiclassical { problem, resolution } => {
            apply_problem(&mut cfg, problem)?;
            if let Some(r) = resolution {
                cfg.semiclassical.resolution = *r;
            }
        }
        Command::Dynamics { problem, t_an, open, eta_g2 } => {
            apply_problem(&mut cfg, problem)?;
            if let Some(t) = t_an {
                cfg.dynamics.t_an = t.clone();
            }
            cfg.dynamics.open |= *open;
            if let Some(e) = eta_g2 {
                cfg.bath.eta_g2 = *e;
            }
        }
        Command::Benchmark { samples } => {
            if let Some(n) = samples {
                cfg.benchmark.samples_per_group = *n;
            }
            if let Some(s) = cfg.seed {
                cfg.benchmark.seed = s;
            }
        }
        Command::Heuristic { problem, t_an } => {
            apply_problem(&mut cfg, problem)?;
            if let Some(t) = t_an {
                cfg.heuristic.t_an = *t;
            }
            if let Some(s_x) = problem.s_x {
                cfg.heuristic.s_x = s_x;
            }
        }
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = resolve(&cli)?;
    if let Some(n) = cfg.workers.filter(|&n| n > 0) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("cannot start {n} workers: {e}")))?;
    }
    match cli.command {
        Command::Spectrum { .. } => commands::spectrum(&cfg),
        Command::Semiclassical { .. } => commands::semiclassical(&cfg),
        Command::Dynamics { .. } => commands::dynamics(&cfg),
        Command::Benchmark { .. } => commands::benchmark(&cfg),
        Command::Heuristic { .. } => commands::heuristic(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lstf: {e}");
            ExitCode::from(e.code())
        }
    }
}
