//! `heraldkit`: trade-off curves, transmissivity sweeps, table reproduction,
//! GPS parameter planning, the Fock-oracle cross-check and synthetic
//! homodyne tomography.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use heraldkit::{LossBudget, PhaseGrid};

use output::{CliResult, Format};

#[derive(Debug, Parser)]
#[command(
    name = "heraldkit",
    version,
    about = "Heralded squeezed single-photon simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// PS and GPS best trade-off curves for each target output squeezing.
    Tradeoff(TradeoffArgs),
    /// Wigner grids and metrics over a transmissivity sweep.
    Sweep(SweepArgs),
    /// Model predictions for the twelve measured operating points.
    Tables(TablesArgs),
    /// GPS parameters on the best trade-off for a target.
    Plan(PlanArgs),
    /// Closed form vs truncated Fock space on random specs.
    OracleCheck(OracleArgs),
    /// Synthetic homodyne data and maximum-likelihood reconstruction.
    TomoSim(TomoArgs),
}

/// Loss flags. Unset flags fall back to the command's default budget.
#[derive(Debug, Args, Clone, Copy)]
struct LossArgs {
    /// Fraction lost on the heralded signal.
    #[arg(long)]
    signal_loss: Option<f64>,
    /// Fraction lost before the trigger detector, detector inefficiency included.
    #[arg(long)]
    trigger_loss: Option<f64>,
    /// Fraction of heralds that are spurious.
    #[arg(long)]
    fake_fraction: Option<f64>,
}

impl LossArgs {
    fn any(&self) -> bool {
        self.signal_loss.is_some() || self.trigger_loss.is_some() || self.fake_fraction.is_some()
    }

    fn resolve(&self, default: LossBudget) -> CliResult<LossBudget> {
        Ok(LossBudget::new(
            self.trigger_loss.unwrap_or(default.trigger),
            self.signal_loss.unwrap_or(default.signal),
            self.fake_fraction.unwrap_or(default.fake_trigger_fraction),
        )?)
    }
}

#[derive(Debug, Args, Clone, Copy)]
struct GridArgs {
    /// Half-width of the square phase-space grid.
    #[arg(long)]
    grid_extent: Option<f64>,
    /// Points per axis (odd, so the origin is on the grid).
    #[arg(long)]
    grid_points: Option<usize>,
}

impl GridArgs {
    fn resolve(&self, default: PhaseGrid) -> CliResult<PhaseGrid> {
        Ok(PhaseGrid::new(
            self.grid_extent.unwrap_or(default.extent),
            self.grid_points.unwrap_or(default.points),
        )?)
    }
}

#[derive(Debug, Args, Clone)]
struct OutArgs {
    /// Output directory.
    #[arg(long, env = "HERALDKIT_OUT")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Args)]
struct TradeoffArgs {
    /// Target output squeezing levels in dB; repeat or comma-separate.
    #[arg(
        long = "r-out-db",
        required = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    r_out_db: Vec<f64>,
    #[command(flatten)]
    losses: LossArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long = "r1-db", allow_negative_numbers = true)]
    r1_db: f64,
    #[arg(long = "r2-db", allow_negative_numbers = true)]
    r2_db: f64,
    /// Explicit transmissivities; overrides --t-step.
    #[arg(long = "t", value_delimiter = ',')]
    t: Vec<f64>,
    /// Sweep T = step, 2·step, …, 1 − step.
    #[arg(long, default_value_t = 0.1)]
    t_step: f64,
    /// Write metrics only, no per-T Wigner grids.
    #[arg(long)]
    no_grids: bool,
    #[command(flatten)]
    losses: LossArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct TablesArgs {
    /// Counts per unit click probability for the 2 dB rows.
    #[arg(long)]
    calibration_2db: Option<f64>,
    /// Counts per unit click probability for the 4 dB rows.
    #[arg(long)]
    calibration_4db: Option<f64>,
    /// Also report rates divided by the measurement duty cycle.
    #[arg(long)]
    duty_corrected: bool,
    #[command(flatten)]
    losses: LossArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("target").required(true).args(["p_on", "w00"])))]
struct PlanArgs {
    #[arg(long = "r-out-db", allow_negative_numbers = true)]
    r_out_db: f64,
    /// Lossless click probability.
    #[arg(long)]
    p_on: Option<f64>,
    /// Lossless W(0, 0) on the best trade-off.
    #[arg(long, allow_negative_numbers = true)]
    w00: Option<f64>,
    /// Swap the roles of the two inputs.
    #[arg(long)]
    mirrored: bool,
    /// Rate calibration for the predicted counts per second.
    #[arg(long)]
    calibration: Option<f64>,
    #[arg(long)]
    duty_corrected: bool,
    #[command(flatten)]
    losses: LossArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Output directory.
    #[arg(long, env = "HERALDKIT_OUT")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 50)]
    cases: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Largest |r| drawn for either input.
    #[arg(long, default_value_t = 0.7)]
    max_r: f64,
    /// Fock cutoff of the oracle.
    #[arg(long, default_value_t = heraldkit::fock::DEFAULT_TRUNCATION)]
    truncation: usize,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    /// Flip the sign of r2 in the closed form only; every case should fail.
    #[arg(long)]
    inject_sign_flip: bool,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct TomoArgs {
    /// Generate from a named operating point, e.g. GPS-2.
    #[arg(long, conflicts_with_all = ["r1_db", "r2_db", "t", "vacuum"])]
    row: Option<String>,
    #[arg(long = "r1-db", allow_negative_numbers = true, requires_all = ["r2_db", "t"])]
    r1_db: Option<f64>,
    #[arg(long = "r2-db", allow_negative_numbers = true)]
    r2_db: Option<f64>,
    #[arg(long = "t")]
    t: Option<f64>,
    /// Reconstruct the vacuum instead of a heralded state.
    #[arg(long, conflicts_with_all = ["r1_db", "r2_db", "t"])]
    vacuum: bool,
    /// Samples per phase.
    #[arg(long, default_value_t = heraldkit::tomography::DEFAULT_SAMPLES_PER_PHASE)]
    samples: usize,
    #[arg(long, default_value_t = heraldkit::tomography::DEFAULT_PHASES)]
    phases: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Photon-number cutoff of the reconstruction.
    #[arg(long, default_value_t = 10)]
    truncation: usize,
    #[command(flatten)]
    losses: LossArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Output directory.
    #[arg(long, env = "HERALDKIT_OUT")]
    out: Option<PathBuf>,
}

fn run(cli: Cli, args: &[String]) -> CliResult {
    match cli.command {
        Command::Tradeoff(a) => commands::tradeoff(&a, args),
        Command::Sweep(a) => commands::sweep(&a, args),
        Command::Tables(a) => commands::tables(&a, args),
        Command::Plan(a) => commands::plan(&a, args),
        Command::OracleCheck(a) => commands::oracle_check(&a, args),
        Command::TomoSim(a) => commands::tomo_sim(&a, args),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                output::EXIT_USAGE
            } else {
                0
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli, &args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
