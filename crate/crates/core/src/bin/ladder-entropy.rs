use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ladder_entropy::cli::{self, parse_values, RunConfig, ShotFormat};
use ladder_entropy::{Error, Result};

#[derive(Parser)]
#[command(name = "ladder-entropy", version, about = "Rydberg ladder ground states and filtered entanglement estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Overrides for every key of the config file.
#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Flat TOML file with run settings; flags below take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, alias = "n_rungs", global = true)]
    n_rungs: Option<usize>,
    #[arg(long, alias = "rb_over_a", global = true)]
    rb_over_a: Option<f64>,
    #[arg(long, alias = "delta_over_omega", global = true, allow_negative_numbers = true)]
    delta_over_omega: Option<f64>,
    #[arg(long, alias = "size_a", global = true)]
    size_a: Option<usize>,
    #[arg(long, alias = "grid_min_exp", global = true, allow_negative_numbers = true)]
    grid_min_exp: Option<f64>,
    #[arg(long, alias = "grid_max_exp", global = true, allow_negative_numbers = true)]
    grid_max_exp: Option<f64>,
    #[arg(long, alias = "grid_points", global = true)]
    grid_points: Option<usize>,
    #[arg(long, alias = "grid_zero", global = true)]
    grid_zero: Option<bool>,
    #[arg(long, global = true)]
    shots: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, alias = "max_iterations", global = true)]
    max_iterations: Option<usize>,
    #[arg(long, alias = "max_basis", global = true)]
    max_basis: Option<usize>,
    /// Exact-solve ceiling. Raising it accepts 2^N·8 bytes per Krylov vector.
    #[arg(long, alias = "max_atoms", global = true)]
    max_atoms: Option<usize>,
    #[arg(long, global = true)]
    subsamples: Option<usize>,
    #[arg(long, alias = "sub_size", global = true)]
    sub_size: Option<usize>,
    #[arg(long, alias = "out_dir", global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, alias = "cache_dir", global = true)]
    cache_dir: Option<PathBuf>,
}

macro_rules! overlay {
    ($cfg:ident, $args:ident, $($field:ident),*) => {
        $(if let Some(v) = $args.$field.clone() { $cfg.$field = v; })*
    };
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        overlay!(
            cfg, self, n_rungs, rb_over_a, delta_over_omega, grid_min_exp, grid_max_exp, grid_points,
            grid_zero, seed, epsilon, tol, max_iterations, max_basis, max_atoms, out_dir
        );
        if self.size_a.is_some() {
            cfg.size_a = self.size_a;
        }
        if self.shots.is_some() {
            cfg.shots = self.shots;
        }
        if self.subsamples.is_some() {
            cfg.subsamples = self.subsamples;
        }
        if self.sub_size.is_some() {
            cfg.sub_size = self.sub_size;
        }
        if self.cache_dir.is_some() {
            cfg.cache_dir = self.cache_dir.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve (or load from cache) and print energy, gap and S^vN.
    GroundState {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Filtered mutual-information estimate from the exact or sampled distribution.
    Estimate {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Estimates for several ladder lengths.
    SweepVolume {
        /// Comma-separated rung counts.
        #[arg(long, value_delimiter = ',', required = true)]
        rungs: Vec<usize>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Estimates for several blockade ratios, e.g. `--rb 1.0:3.0:0.25`.
    SweepSpacing {
        #[arg(long, required = true)]
        rb: String,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Estimates for several cut positions (default: every cut).
    SweepBipartition {
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Unfiltered entropies over a blockade ratio × detuning grid.
    PhaseScan {
        #[arg(long, required = true)]
        rb: String,
        #[arg(long, required = true, allow_hyphen_values = true)]
        delta: String,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Estimate from a measured shot file.
    Ingest {
        file: PathBuf,
        /// auto, lines or counts.
        #[arg(long, default_value = "auto", value_parser = parse_format)]
        format: ShotFormat,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Write a sampled shot file (counts format) from the exact state.
    Sample {
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn parse_format(s: &str) -> std::result::Result<ShotFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn print<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GroundState { cfg } => print(&cli::cmd_ground_state(&cfg.resolve()?)?.summary),
        Command::Estimate { cfg } => print(&cli::cmd_estimate(&cfg.resolve()?)?.0.report),
        Command::SweepVolume { rungs, cfg } => print(&cli::cmd_sweep_volume(&cfg.resolve()?, &rungs)?.rows),
        Command::SweepSpacing { rb, cfg } => {
            print(&cli::cmd_sweep_spacing(&cfg.resolve()?, &parse_values(&rb)?)?.rows)
        }
        Command::SweepBipartition { sizes, cfg } => {
            let cfg = cfg.resolve()?;
            let sizes = if sizes.is_empty() { (1..cfg.n_atoms()).collect() } else { sizes };
            print(&cli::cmd_sweep_bipartition(&cfg, &sizes)?.rows)
        }
        Command::PhaseScan { rb, delta, cfg } => {
            let cells = cli::cmd_phase_scan(&cfg.resolve()?, &parse_values(&rb)?, &parse_values(&delta)?)?;
            print!("{}", cli::phase_csv(&cells));
            Ok(())
        }
        Command::Ingest { file, format, cfg } => {
            print(&cli::cmd_ingest(&cfg.resolve()?, &file, format)?.0.report)
        }
        Command::Sample { output, cfg } => {
            let cfg = cfg.resolve()?;
            let shots = cfg.shots.ok_or_else(|| Error::Config("sample needs --shots".into()))?;
            let counts = cli::cmd_sample(&cfg, shots, &output)?;
            eprintln!("wrote {} shots over {} bitstrings to {}", counts.total(), counts.len(), output.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind().exit_code() as u8)
        }
    }
}
