//! Command-line front end: network files in, JSON reports, CSV trajectories
//! and SVG figures out.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod document;
pub mod report;
pub mod svg;

pub use document::{Network, NetworkDocument};
pub use report::{ConfigEcho, RunReport, EXIT_ERROR, EXIT_OK, EXIT_REGION_FAILED, EXIT_VIOLATIONS};

/// Environment variable consulted for `--seed` when the flag is absent.
pub const SEED_ENV: &str = "TORIC_SEED";

#[derive(Debug, Parser)]
#[command(name = "toric", version, about = "Toric differential inclusions for embedded reaction graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: Global,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Numerical tolerance; each command has its own default.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Exact rational arithmetic for all geometry.
    #[arg(long, global = true)]
    pub rational: bool,
    /// Directory for the report and any other files.
    #[arg(long, global = true, default_value = ".")]
    pub output_dir: PathBuf,
    /// Print the report JSON instead of the summary.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SemanticsArg {
    Hyperplane,
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RateMode {
    /// Every rate in `[ε, 1/ε]`.
    Absolute,
    /// Rate ratios within a linkage class in `[ε, 1/ε]`.
    Ratio,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Structural properties of a network.
    Check {
        network: PathBuf,
    },
    /// Builds the toric inclusion and writes `inclusion.json`.
    BuildInclusion {
        network: PathBuf,
        #[arg(long)]
        epsilon: f64,
    },
    /// Samples states and rates and checks membership in the inclusion.
    Verify {
        network: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SemanticsArg::Hyperplane)]
        semantics: SemanticsArg,
        #[arg(long, value_enum, default_value_t = RateMode::Absolute)]
        mode: RateMode,
        /// Half width of the sampling box in log coordinates.
        #[arg(long)]
        box_half_width: Option<f64>,
        #[arg(long, default_value_t = 10)]
        max_witnesses: usize,
        /// Accept networks that are not weakly reversible and search for violations.
        #[arg(long)]
        allow_counterexample: bool,
    },
    /// Integrates the network and writes `trajectory.csv`.
    Simulate {
        network: PathBuf,
        /// Rate bound for sampled schedules.
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// constant (document rates), piecewise-constant, sinusoidal or corner-adversarial.
        #[arg(long, default_value = "constant")]
        schedule: String,
        /// Initial state as comma-separated positive numbers; all ones by default.
        #[arg(long)]
        x0: Option<String>,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
        /// Trajectory file name inside the output directory.
        #[arg(long, default_value = "trajectory.csv")]
        out: PathBuf,
    },
    /// Vertex-balanced equilibrium for the document rates.
    Equilibrium {
        network: PathBuf,
    },
    /// Builds and verifies an invariant region in the plane.
    Region {
        network: PathBuf,
        #[arg(long)]
        epsilon: f64,
        /// Starting scale; `4δ` by default.
        #[arg(long)]
        tau: Option<f64>,
        /// Log-space box `x_min,x_max,y_min,y_max`; builds an open separating curve.
        #[arg(long = "box", allow_hyphen_values = true)]
        clip_box: Option<String>,
        /// Direction the separating curve must face.
        #[arg(long, default_value = "-1,-1", allow_hyphen_values = true)]
        side: String,
        /// Figure file name inside the output directory.
        #[arg(long, default_value = "region.svg")]
        out: PathBuf,
    },
}

/// Runs a parsed command, writes `<command>-report.json` to the output
/// directory and returns the report.
pub fn execute(cli: &Cli) -> anyhow::Result<RunReport> {
    let start = Instant::now();
    std::fs::create_dir_all(&cli.global.output_dir)?;
    let mut report = commands::dispatch(&cli.command, &cli.global)?;
    report.timing.wall_seconds = start.elapsed().as_secs_f64();
    let name = format!("{}-report.json", report.command);
    report.write(&cli.global.output_dir.join(name))?;
    Ok(report)
}

/// Parses `args`, runs the command and prints the outcome; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(report) => {
            if cli.global.json {
                println!("{}", report.to_json());
            } else {
                for line in &report.summary {
                    println!("{line}");
                }
                println!("status: {} (exit {})", report.status, report.exit_code);
            }
            report.exit_code
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}
