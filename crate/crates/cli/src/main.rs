//! `gridlock` — batch experiment runner for the random-walk parking process.
//!
//! Exit codes: 0 = all assertions passed, 1 = assertion failure,
//! 2 = usage error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use gridlock_core::harness::{self, output, ExperimentSpec, Mode, RemovalKind, StrategyKind};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "gridlock",
    version,
    about = "Simulation laboratory for the random-walk parking process on the integer line"
)]
struct Cli {
    #[command(subcommand)]
    mode: ModeCmd,
}

#[derive(Subcommand)]
enum ModeCmd {
    /// Journey-length scaling at the critical density (log-log slope fit).
    Scaling(RunArgs),
    /// Supercritical drift of E[tau wedge t] / t.
    Drift(RunArgs),
    /// Subcritical plateau of E[tau wedge t] with the series upper bound.
    Plateau(RunArgs),
    /// Interval-assignment strategy structure and dominance studies.
    #[command(name = "strategy-t")]
    StrategyT(RunArgs),
    /// Modified swap-process invariants and barrier-removal comparison.
    Modified(RunArgs),
    /// Pathwise coupling, majorization, conservation, and equivalence suites.
    Verify(RunArgs),
    /// Analytic bounds: series, tails, stationarity, excess law, J radius.
    Bounds(RunArgs),
    /// Exhaustive small-cycle engine equivalence with exact rationals.
    Enumerate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Car density p of the Bernoulli environment.
    #[arg(long)]
    p: Option<f64>,
    /// Horizon list (comma separated, ascending).
    #[arg(long = "t", value_delimiter = ',')]
    t: Vec<u32>,
    /// Independent replicas per estimate.
    #[arg(long)]
    replicas: Option<u32>,
    /// Master seed; everything in a run derives from it.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Parking strategy for strategy-sensitive modes.
    #[arg(long, value_enum, default_value_t = StrategyArg::Greedy)]
    strategy: StrategyArg,
    /// Car removal strategy.
    #[arg(long, value_enum, default_value_t = RemovalArg::None)]
    removal: RemovalArg,
    /// Barrier parameter k (> 8).
    #[arg(long, default_value_t = 9)]
    k: u32,
    /// Barrier parameter l (> 4).
    #[arg(long, default_value_t = 5)]
    ell: u32,
    /// Output directory for CSV tables, manifest, and plot script.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Load the experiment spec from a previously written manifest.
    #[arg(long = "from-manifest")]
    from_manifest: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Greedy,
    T,
    Never,
}

#[derive(Clone, Copy, ValueEnum)]
enum RemovalArg {
    None,
    Barrier,
}

fn default_horizons(mode: Mode) -> Vec<u32> {
    match mode {
        Mode::Scaling => vec![256, 512, 1024, 2048, 4096, 8192, 16384],
        Mode::Drift => vec![1024, 4096, 8192],
        Mode::Plateau => vec![64, 128, 256, 512],
        Mode::StrategyT => vec![512, 10_000],
        Mode::Modified => vec![64],
        Mode::Verify => vec![20],
        Mode::Bounds => vec![10_000],
        Mode::Enumerate => vec![2],
    }
}

fn default_p(mode: Mode) -> f64 {
    match mode {
        Mode::Scaling | Mode::StrategyT | Mode::Modified | Mode::Verify => 0.5,
        Mode::Drift => 0.75,
        Mode::Plateau => 0.45,
        Mode::Bounds => 0.25,
        Mode::Enumerate => 0.5,
    }
}

fn default_replicas(mode: Mode) -> u32 {
    match mode {
        Mode::Scaling => 4000,
        Mode::Drift => 2000,
        Mode::Plateau => 4000,
        Mode::StrategyT => 2000,
        Mode::Modified => 10_000,
        Mode::Verify => 10_000,
        Mode::Bounds => 100_000,
        Mode::Enumerate => 1,
    }
}

fn build_spec(mode: Mode, args: &RunArgs) -> Result<ExperimentSpec, String> {
    if let Some(path) = &args.from_manifest {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read manifest {}: {e}", path.display()))?;
        let mut spec = ExperimentSpec::from_manifest_json(&text).map_err(|e| e.to_string())?;
        if spec.mode != mode {
            return Err(format!(
                "manifest is for mode '{}', invoked as '{}'",
                spec.mode.name(),
                mode.name()
            ));
        }
        if args.out.is_some() {
            spec.out_dir = args.out.clone();
        }
        spec.validate().map_err(|e| e.to_string())?;
        return Ok(spec);
    }
    let mut horizons = if args.t.is_empty() {
        default_horizons(mode)
    } else {
        args.t.clone()
    };
    horizons.dedup();
    let spec = ExperimentSpec {
        mode,
        p: args.p.unwrap_or_else(|| default_p(mode)),
        horizons,
        replicas: args.replicas.unwrap_or_else(|| default_replicas(mode)),
        seed: args.seed,
        strategy: match args.strategy {
            StrategyArg::Greedy => StrategyKind::Greedy,
            StrategyArg::T => StrategyKind::T,
            StrategyArg::Never => StrategyKind::Never,
        },
        removal: match args.removal {
            RemovalArg::None => RemovalKind::None,
            RemovalArg::Barrier => RemovalKind::Barrier,
        },
        k: args.k,
        ell: args.ell,
        out_dir: args.out.clone(),
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match &cli.mode {
        ModeCmd::Scaling(a) => (Mode::Scaling, a),
        ModeCmd::Drift(a) => (Mode::Drift, a),
        ModeCmd::Plateau(a) => (Mode::Plateau, a),
        ModeCmd::StrategyT(a) => (Mode::StrategyT, a),
        ModeCmd::Modified(a) => (Mode::Modified, a),
        ModeCmd::Verify(a) => (Mode::Verify, a),
        ModeCmd::Bounds(a) => (Mode::Bounds, a),
        ModeCmd::Enumerate(a) => (Mode::Enumerate, a),
    };
    let spec = match build_spec(mode, args) {
        Ok(spec) => spec,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    match harness::run(&spec) {
        Ok(report) => {
            print!("{}", report.render());
            if let Some(dir) = &spec.out_dir {
                match output::write_outputs(&spec, &report, dir) {
                    Ok(paths) => {
                        for p in paths {
                            println!("wrote {}", p.display());
                        }
                    }
                    Err(e) => {
                        eprintln!("error writing outputs: {e}");
                        return ExitCode::from(1);
                    }
                }
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
