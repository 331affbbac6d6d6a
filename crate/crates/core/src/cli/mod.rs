//! The `disclose` command-line tool.

mod commands;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::disclosure::{Estimator, Method};

#[derive(Debug, Parser)]
#[command(name = "disclose", version, about = "Selective price disclosure for comparison shopping agents")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a price density and write it as JSON with a plotting grid.
    Fit(FitArgs),
    /// Critical query cost of a dataset, or a sweep over q or N.
    CriticalCost(CriticalCostArgs),
    /// Choose which prices to disclose.
    Disclose(DiscloseArgs),
    /// Run a market experiment described by a JSON config.
    Simulate(SimulateArgs),
    /// Time individual subset evaluations of each method.
    Bench(BenchArgs),
    /// Candidate counts for n prices and minimum size rho.
    Counts(CountsArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct DataSource {
    /// Price CSV path, or the name of a bundled dataset (used as is).
    #[arg(long)]
    pub data: Option<String>,
    /// Bundled product: printer, mouse, monitor or camera. `disclose` and
    /// `bench` use its evaluation instance (see --initial-n).
    #[arg(long)]
    pub builtin: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Kde,
    Parametric,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Kde => Estimator::Kde,
            EstimatorArg::Parametric => Estimator::Parametric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Brute,
    Mc,
    Interval,
    Minimal,
    Full,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Brute => Method::BruteForce,
            MethodArg::Mc => Method::MonteCarlo,
            MethodArg::Interval => Method::Interval,
            MethodArg::Minimal => Method::Minimal,
            MethodArg::Full => Method::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepArg {
    Q,
    N,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub source: DataSource,
    /// Only use listings from this source label.
    #[arg(long = "source")]
    pub source_label: Option<String>,
    #[arg(long, value_enum, default_value = "kde")]
    pub method: EstimatorArg,
    /// KDE bandwidth; Silverman's rule when omitted.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Output JSON path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CriticalCostArgs {
    #[command(flatten)]
    pub source: DataSource,
    #[arg(long = "source")]
    pub source_label: Option<String>,
    /// Best price so far; defaults to the dataset minimum.
    #[arg(long)]
    pub q: Option<f64>,
    /// Expected number of new prices per query.
    #[arg(long)]
    pub n_new: u32,
    #[arg(long, value_enum, default_value = "kde")]
    pub method: EstimatorArg,
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Vary q or N over [--from, --to] in steps of --step.
    #[arg(long, value_enum, requires_all = ["from", "to", "step"])]
    pub sweep: Option<SweepArg>,
    #[arg(long)]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Sweep CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiscloseArgs {
    #[command(flatten)]
    pub source: DataSource,
    #[arg(long = "source")]
    pub source_label: Option<String>,
    /// Size of the equal-mass instance built from --builtin.
    #[arg(long, default_value_t = 30)]
    pub initial_n: usize,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Minimum number of prices to disclose.
    #[arg(long)]
    pub rho: usize,
    /// Expected number of new prices per query.
    #[arg(long)]
    pub n_new: u32,
    /// Monte-Carlo iterations.
    #[arg(long, default_value_t = 1000, conflicts_with = "deadline_ms")]
    pub budget: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Calibrate the Monte-Carlo budget to roughly this many milliseconds.
    /// The resulting budget depends on machine speed.
    #[arg(long)]
    pub deadline_ms: Option<u64>,
    #[arg(long)]
    pub max_size: Option<usize>,
    /// Write (evaluation, best_cost) rows to this CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the disclosed prices to this CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "kde")]
    pub estimator: EstimatorArg,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Position of the disclosing CSA in the query sequence.
    #[arg(long, default_value_t = 1)]
    pub position: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "mc,interval,minimal,full")]
    pub methods: Vec<MethodArg>,
    #[arg(long, value_delimiter = ',', default_value = "10,50,100,200,1000")]
    pub budgets: Vec<u64>,
    /// Override the config's trial count.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Override the config's base seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: DataSource,
    #[arg(long = "source")]
    pub source_label: Option<String>,
    /// Size of the equal-mass instance built from --builtin.
    #[arg(long, default_value_t = 30)]
    pub initial_n: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "mc,interval,minimal")]
    pub methods: Vec<MethodArg>,
    #[arg(long, default_value_t = 10)]
    pub rho: usize,
    #[arg(long, default_value_t = 18)]
    pub n_new: u32,
    /// Monte-Carlo evaluations to time.
    #[arg(long, default_value_t = 100)]
    pub budget: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "kde")]
    pub estimator: EstimatorArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CountsArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub rho: usize,
}

/// Parses `args` (program name first) and runs the command.
///
/// Returns the exit status: 0 on success, 1 when the computation fails and
/// 2 for usage errors.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return if code == 0 { 0 } else { 2 };
        }
    };
    match commands::execute(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
