//! `sslkit`: batch front-end for the interception, tracking, tactics, radio
//! and simulation experiments.

mod commands;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use sslkit::simworld::{PassExperiment, SweepParam};

#[derive(Parser, Debug)]
#[command(name = "sslkit", version, about = "Small-size robot soccer planning and perception experiments")]
pub struct Cli {
    /// TOML experiment config: [sim], [scenario], [tracker], [intercept] tables.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output path; stdout when omitted. `heatmap` also accepts `csv` or `pgm`
    /// here to pick the stdout format.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<String>,
    /// RNG seed for the simulator; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Interception time for a robot at rest at every cell of a field grid.
    Heatmap(HeatmapArgs),
    /// One interception prediction from a scenario file.
    Intercept {
        /// JSON or TOML with `ball` and `robot`, each {position, velocity} in mm, mm/s.
        #[arg(long, value_name = "FILE")]
        scenario: PathBuf,
    },
    /// Pass success rate of the simulated receiver against one noise parameter.
    Passrate(PassrateArgs),
    /// Filter a detection stream into world-state snapshots (one JSON line per tick).
    Track(TrackArgs),
    /// Radio packet encoder and decoder.
    Codec {
        #[arg(value_enum)]
        direction: CodecDirection,
        /// Command JSON to encode, or hex text to decode.
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
    },
    /// Optimal robot-to-role matching table.
    Assign {
        /// JSON or TOML with `robots` [{position, velocity}], `targets` and optional `mode`.
        #[arg(long, value_name = "FILE")]
        scenario: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct HeatmapArgs {
    /// Ball x [mm; cm with --units cm].
    #[arg(long, allow_negative_numbers = true)]
    pub ball_x: f64,
    /// Ball y [mm; cm with --units cm].
    #[arg(long, allow_negative_numbers = true)]
    pub ball_y: f64,
    /// Ball velocity x [mm/s].
    #[arg(long, allow_negative_numbers = true, conflicts_with = "ball_speed")]
    pub ball_vx: Option<f64>,
    /// Ball velocity y [mm/s].
    #[arg(long, allow_negative_numbers = true, conflicts_with = "ball_speed")]
    pub ball_vy: Option<f64>,
    /// Ball speed [mm/s], along --ball-heading.
    #[arg(long)]
    pub ball_speed: Option<f64>,
    /// Ball direction [deg], counter-clockwise from +x.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub ball_heading: f64,
    /// Grid size, columns x rows.
    #[arg(long, default_value = "120x90", value_parser = parse_grid)]
    pub grid: (usize, usize),
    /// Unit of --ball-x/--ball-y.
    #[arg(long, value_enum, default_value_t = Units::Mm)]
    pub units: Units,
    /// Origin of --ball-x/--ball-y: bottom-left field corner or field center.
    #[arg(long, value_enum, default_value_t = Origin::Corner)]
    pub origin: Origin,
    /// Field length [mm]; overrides the config.
    #[arg(long)]
    pub field_length: Option<f64>,
    /// Field width [mm]; overrides the config.
    #[arg(long)]
    pub field_width: Option<f64>,
    /// Output format when --out is a path; inferred from its extension otherwise.
    #[arg(long, value_enum)]
    pub format: Option<HeatFormat>,
    /// Evaluate cells on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args, Debug)]
pub struct PassrateArgs {
    /// Parameter to sweep: sigma_xy [mm], sigma_theta [rad] or loss [probability].
    #[arg(long, value_parser = |s: &str| s.parse::<SweepParam>())]
    pub sweep: SweepParam,
    /// Values of the swept parameter, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub values: Vec<f64>,
    /// Passes per value.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Run trials on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["frames", "udp"])))]
pub struct TrackArgs {
    /// Detection log: one JSON record per line [mm, rad, s].
    #[arg(long, value_name = "FILE")]
    pub frames: Option<PathBuf>,
    /// Listen for one JSON record per UDP datagram on this port.
    #[arg(long, value_name = "PORT")]
    pub udp: Option<u16>,
    /// Address to bind with --udp.
    #[arg(long, default_value = "0.0.0.0", requires = "udp")]
    pub bind: String,
    /// Stop after this many datagrams with --udp.
    #[arg(long, requires = "udp")]
    pub max_frames: Option<usize>,
    /// Camera list: [{"id", "center": [x, y], "coverage_radius"}] in mm.
    #[arg(long, value_name = "FILE")]
    pub cameras: Option<PathBuf>,
    /// Emit only objects that pass the confidence gate.
    #[arg(long)]
    pub valid_only: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Units {
    Mm,
    Cm,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    Corner,
    Center,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeatFormat {
    Csv,
    Pgm,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodecDirection {
    Encode,
    Decode,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected COLSxROWS, got `{s}`"))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|e| format!("bad grid dimension `{v}`: {e}"))
    };
    Ok((parse(a)?, parse(b)?))
}

fn experiment(cli: &Cli) -> Result<PassExperiment> {
    let mut exp: PassExperiment = match &cli.config {
        Some(path) => files::load(path)?,
        None => PassExperiment::default(),
    };
    if let Some(seed) = cli.seed {
        exp.sim.seed = seed;
    }
    if !exp.sim.is_valid() {
        bail!("config [sim] holds an invalid value (non-positive dt or limits, negative noise, or loss outside [0, 1])");
    }
    Ok(exp)
}

fn run(cli: Cli) -> Result<()> {
    let exp = experiment(&cli)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Heatmap(args) => commands::heatmap(args, &exp, out),
        Command::Intercept { scenario } => commands::intercept(scenario, &exp, out),
        Command::Passrate(args) => commands::passrate(args, &exp, out),
        Command::Track(args) => commands::track(args, &exp, out),
        Command::Codec { direction, input } => commands::codec(*direction, input, out),
        Command::Assign { scenario } => commands::assign(scenario, &exp, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
