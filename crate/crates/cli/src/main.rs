//! `hzreach` command-line front end.
//!
//! Exit codes: 0 on success or a Safe verdict, 1 on configuration and IO
//! errors, 2 on an Unsafe verdict, 3 on an Unknown verdict.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hzreach::HullMode;

#[derive(Parser)]
#[command(name = "hzreach", version, about = "Hybrid-zonotope reachability for closed-loop ReLU RNNs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Forward reachable sets of an initial set for t = 2..=T.
    Forward(RunArgs),
    /// Backward reachable sets of a target set within a domain for t = 2..=T.
    Backward(RunArgs),
    /// Safety of an initial set against an unsafe set over T steps.
    Verify(RunArgs),
    /// 2-D projection polygons of a stored hybrid zonotope.
    Project(ProjectArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum HullArg {
    /// Interval hulls from per-coordinate MILPs.
    Exact,
    /// Interval hulls from the generators alone.
    Relaxed,
}

impl From<HullArg> for HullMode {
    fn from(h: HullArg) -> Self {
        match h {
            HullArg::Exact => HullMode::Exact,
            HullArg::Relaxed => HullMode::GeneratorRelaxed,
        }
    }
}

#[derive(Args)]
pub struct RunArgs {
    /// Model JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Domain set over which state pairs are built.
    #[arg(long)]
    pub domain: Option<PathBuf>,
    /// Initial set.
    #[arg(long)]
    pub initial: Option<PathBuf>,
    /// Target set for backward runs.
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Unsafe set for verification.
    #[arg(long = "unsafe")]
    pub unsafe_set: Option<PathBuf>,
    /// Horizon T (at least 2).
    #[arg(short = 'T', long = "horizon", default_value_t = 5)]
    pub horizon: usize,
    /// Binary limit; omit for exact sets.
    #[arg(long)]
    pub nb: Option<usize>,
    /// How exact runs tighten ReLU input intervals.
    #[arg(long, value_enum, default_value_t = HullArg::Relaxed)]
    pub hull: HullArg,
    /// Coordinates to project, as `i,j`.
    #[arg(long, value_parser = parse_dims, default_value = "0,1")]
    pub dims: (usize, usize),
    /// Directions of the initial projection fan.
    #[arg(long, default_value_t = 64)]
    pub dirs: usize,
    /// Seed for sampled member points.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sampled member points per projected set.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Tolerance for confirming witnesses.
    #[arg(long, default_value_t = hzreach::verify::WITNESS_TOL)]
    pub tol: f64,
}

#[derive(Args)]
pub struct ProjectArgs {
    /// Hybrid zonotope JSON.
    #[arg(long)]
    pub set: PathBuf,
    #[arg(long, value_parser = parse_dims, default_value = "0,1")]
    pub dims: (usize, usize),
    #[arg(long, default_value_t = 64)]
    pub dirs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (i, j) = s.split_once(',').ok_or_else(|| format!("expected `i,j`, got `{s}`"))?;
    let i = i.trim().parse().map_err(|e| format!("bad index `{i}`: {e}"))?;
    let j = j.trim().parse().map_err(|e| format!("bad index `{j}`: {e}"))?;
    Ok((i, j))
}

/// Caps rayon at `HZREACH_THREADS` when set.
fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("HZREACH_THREADS") {
        let n: usize = v.parse().map_err(|_| anyhow::anyhow!("HZREACH_THREADS must be a positive integer, got `{v}`"))?;
        anyhow::ensure!(n > 0, "HZREACH_THREADS must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match cli.command {
        Command::Forward(a) => commands::forward(&a).map(|()| 0),
        Command::Backward(a) => commands::backward(&a).map(|()| 0),
        Command::Verify(a) => commands::verify(&a),
        Command::Project(a) => commands::project(&a).map(|()| 0),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
