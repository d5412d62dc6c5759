//! `ldp-chisq`: locally private chi-square tests from the command line.
//!
//! Exit codes: 0 fail-to-reject (or success), 3 reject, 1 usage, 2 data,
//! validation, config or I/O failure.

mod error;
mod io;
mod report;

use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ldp_chisq::gof::{GofData, GofNull, GofProcedure, McConfig};
use ldp_chisq::independence::{ind_test, ContingencyTable, IndData, NoisyTable};
use ldp_chisq::mechanisms::{aggregate, randomize_all, MechanismKind, MechanismName, OneHotRecord};
use ldp_chisq::sim::{emit_fig1_table, fig1_csv, run_power, run_type1, ExperimentConfig, Fig1Config};
use ldp_chisq::stats::{NoisyHistogram, RngStream};

use crate::error::{data, usage, CliError, CliResult};
use crate::io::PrivatizedMeta;
use crate::report::Report;

const SEED_ENV: &str = "LDP_CHISQ_SEED";
const MC_STREAM: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "ldp-chisq", version, about = "Locally differentially private chi-square tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Randomize a record file report by report.
    Privatize(PrivatizeArgs),
    /// Goodness-of-fit test against a null distribution.
    Gof(GofArgs),
    /// Independence test on a two-way table.
    Ind(IndArgs),
    /// Power experiment from a config file.
    Power(ExperimentArgs),
    /// Type-I calibration experiment (η forced to 0).
    Calibrate(ExperimentArgs),
    /// Uniform-null noncentrality coefficient table.
    Noncentral(NoncentralArgs),
}

#[derive(Debug, Args)]
struct MechanismArgs {
    /// gaussian, laplace, exponential or bitflip.
    #[arg(long)]
    mechanism: Option<String>,
    /// Pure LDP budget (laplace, exponential, bitflip).
    #[arg(long)]
    epsilon: Option<f64>,
    /// zCDP budget (gaussian).
    #[arg(long)]
    rho: Option<f64>,
    /// Reported (ε, δ) conversion slack for gaussian.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
}

#[derive(Debug, Args)]
struct SeedArg {
    /// Master seed; falls back to $LDP_CHISQ_SEED, then a random seed.
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct PrivatizeArgs {
    /// Record CSV: `category` column, or `row,col` with --rows/--cols.
    #[arg(long)]
    input: String,
    /// Number of categories for a `category` file.
    #[arg(long, conflicts_with_all = ["rows", "cols"])]
    d: Option<usize>,
    #[arg(long, requires = "cols")]
    rows: Option<usize>,
    #[arg(long, requires = "rows")]
    cols: Option<usize>,
    #[command(flatten)]
    mechanism: MechanismArgs,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    output: Option<String>,
}

#[derive(Debug, Args)]
struct TestArgs {
    /// Raw record CSV, privatized here report by report.
    #[arg(long, conflicts_with = "privatized", required_unless_present = "privatized")]
    input: Option<String>,
    /// Output of `privatize`; the mechanism is read from its header.
    #[arg(long)]
    privatized: Option<String>,
    #[command(flatten)]
    mechanism: MechanismArgs,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    seed: SeedArg,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<String>,
}

#[derive(Debug, Args)]
struct GofArgs {
    /// Null probabilities separated by commas or whitespace.
    #[arg(long, conflicts_with = "uniform", required_unless_present = "uniform")]
    null: Option<String>,
    /// Uniform null over this many categories.
    #[arg(long)]
    uniform: Option<usize>,
    /// Monte-Carlo reference size (required for laplace).
    #[arg(long)]
    mc_samples: Option<usize>,
    #[command(flatten)]
    common: TestArgs,
}

#[derive(Debug, Args)]
struct IndArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    #[command(flatten)]
    common: TestArgs,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: String,
    /// Overrides `output` in the config.
    #[arg(long)]
    output: Option<String>,
    /// Overrides `workers` in the config.
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Debug, Args)]
struct NoncentralArgs {
    /// Optional `d_list` / `epsilons` / `output` config.
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    output: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("ldp-chisq: {e}");
            e.exit_code()
        }
    }
}

fn run(command: Command) -> CliResult<ExitCode> {
    match command {
        Command::Privatize(args) => cmd_privatize(args).map(|_| ExitCode::SUCCESS),
        Command::Gof(args) => finish(cmd_gof(args)?),
        Command::Ind(args) => finish(cmd_ind(args)?),
        Command::Power(args) => cmd_experiment(args, false).map(|_| ExitCode::SUCCESS),
        Command::Calibrate(args) => cmd_experiment(args, true).map(|_| ExitCode::SUCCESS),
        Command::Noncentral(args) => cmd_noncentral(args).map(|_| ExitCode::SUCCESS),
    }
}

fn finish((report, output): (Report, Option<String>)) -> CliResult<ExitCode> {
    io::write_output(output.as_deref(), &report.to_json())?;
    Ok(if report.is_reject() { ExitCode::from(3) } else { ExitCode::SUCCESS })
}

fn resolve_seed(arg: &SeedArg, fallback: Option<u64>) -> u64 {
    arg.seed.or(fallback).unwrap_or_else(rand::random)
}

fn mechanism_kind(args: &MechanismArgs) -> CliResult<MechanismKind> {
    let Some(name) = &args.mechanism else {
        return usage("--mechanism is required");
    };
    let name: MechanismName = name.parse().map_err(|e: ldp_chisq::Error| CliError::Usage(e.to_string()))?;
    let parameter = match name {
        MechanismName::Gaussian => {
            if args.epsilon.is_some() {
                return usage("gaussian takes --rho, not --epsilon");
            }
            args.rho.ok_or_else(|| CliError::Usage("gaussian requires --rho".into()))?
        }
        _ => {
            if args.rho.is_some() {
                return usage(format!("{name} takes --epsilon, not --rho"));
            }
            args.epsilon.ok_or_else(|| CliError::Usage(format!("{name} requires --epsilon")))?
        }
    };
    if !(0.0..1.0).contains(&args.delta) {
        return usage(format!("--delta must lie in [0, 1), got {}", args.delta));
    }
    MechanismKind::from_name(name, parameter).map_err(|e| CliError::Usage(e.to_string()))
}

/// Mechanism of a privatized file; flags, if given, must agree with it.
fn privatized_kind(args: &MechanismArgs, meta: &PrivatizedMeta) -> CliResult<MechanismKind> {
    if args.mechanism.is_some() {
        let flagged = mechanism_kind(args)?;
        if flagged != meta.mechanism {
            return data(format!(
                "file was privatized with {} {}, flags say {} {}",
                meta.mechanism.name(),
                meta.mechanism.parameter(),
                flagged.name(),
                flagged.parameter()
            ));
        }
    }
    Ok(meta.mechanism)
}

fn check_alpha(alpha: f64) -> CliResult<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return usage(format!("--alpha must lie in (0, 1), got {alpha}"));
    }
    Ok(())
}

fn cmd_privatize(args: PrivatizeArgs) -> CliResult<()> {
    let kind = mechanism_kind(&args.mechanism)?;
    let seed = resolve_seed(&args.seed, None);
    let (records, meta) = match (args.d, args.rows, args.cols) {
        (Some(d), None, None) => {
            (io::read_categories(&args.input, d)?, PrivatizedMeta { mechanism: kind, d, table: None })
        }
        (None, Some(rows), Some(cols)) => {
            if rows < 2 || cols < 2 {
                return data(format!("table must be at least 2x2, got {rows}x{cols}"));
            }
            let d = rows * cols;
            let records = io::read_pairs(&args.input, rows, cols)?
                .into_iter()
                .map(|(i, j)| OneHotRecord::new(i * cols + j, d))
                .collect::<ldp_chisq::Result<Vec<_>>>()?;
            (records, PrivatizedMeta { mechanism: kind, d, table: Some((rows, cols)) })
        }
        _ => return usage("give --d for a category file or --rows and --cols for a table"),
    };
    let reports = randomize_all(&records, kind, RngStream::new(seed, 0))?;
    io::write_output(args.output.as_deref(), &io::write_privatized(&meta, &reports)?)
}

fn load_null(args: &GofArgs) -> CliResult<GofNull> {
    match (&args.null, args.uniform) {
        (Some(path), None) => Ok(GofNull::new(io::read_null(path)?)?),
        (None, Some(d)) => Ok(GofNull::uniform(d)?),
        _ => usage("give exactly one of --null and --uniform"),
    }
}

fn cmd_gof(args: GofArgs) -> CliResult<(Report, Option<String>)> {
    let common = &args.common;
    check_alpha(common.alpha)?;
    let null = load_null(&args)?;
    let d = null.dim();
    let seed = resolve_seed(&common.seed, None);
    let stream = RngStream::new(seed, 0);

    let (kind, records, privatized): (_, Option<Vec<OneHotRecord>>, Option<NoisyHistogram>) =
        match (&common.input, &common.privatized) {
            (Some(path), None) => (mechanism_kind(&common.mechanism)?, Some(io::read_categories(path, d)?), None),
            (None, Some(path)) => {
                let (meta, reports) = io::read_privatized(path)?;
                let kind = privatized_kind(&common.mechanism, &meta)?;
                if meta.d != d {
                    return data(format!("{path}: reports have dimension {}, null has {d}", meta.d));
                }
                (kind, None, Some(aggregate(&reports)?))
            }
            _ => return usage("give exactly one of --input and --privatized"),
        };

    let mc = match (kind, args.mc_samples) {
        (MechanismKind::LaplaceNoise { .. }, None) => return usage("laplace requires --mc-samples"),
        (MechanismKind::LaplaceNoise { .. }, Some(m)) => {
            let mc = McConfig::new(m, RngStream::new(seed, MC_STREAM));
            mc.validate(common.alpha).map_err(|e| CliError::Usage(e.to_string()))?;
            Some(mc)
        }
        (_, Some(_)) => return usage("--mc-samples applies only to laplace"),
        (_, None) => None,
    };

    let procedure = GofProcedure::new(&null, kind, common.alpha)?;
    let input = match (&records, &privatized) {
        (Some(r), _) => GofData::Records(r),
        (_, Some(h)) => GofData::Privatized(h),
        _ => unreachable!("one data source is always loaded"),
    };
    let result = procedure.run(input, stream, mc.as_ref())?;
    let report = Report::gof(&result, common.mechanism.delta, mc.map(|m| m.samples), seed)?;
    Ok((report, common.output.clone()))
}

fn cmd_ind(args: IndArgs) -> CliResult<(Report, Option<String>)> {
    let common = &args.common;
    check_alpha(common.alpha)?;
    let (rows, cols) = (args.rows, args.cols);
    if rows < 2 || cols < 2 {
        return data(format!("table must be at least 2x2, got {rows}x{cols}"));
    }
    let seed = resolve_seed(&common.seed, None);
    let stream = RngStream::new(seed, 0);

    let result = match (&common.input, &common.privatized) {
        (Some(path), None) => {
            let kind = mechanism_kind(&common.mechanism)?;
            if matches!(kind, MechanismKind::LaplaceNoise { .. }) {
                return usage("independence tests support gaussian, exponential and bitflip");
            }
            let table = ContingencyTable::from_pairs(rows, cols, io::read_pairs(path, rows, cols)?)?;
            ind_test(IndData::TableByRecord(&table), kind, common.alpha, stream)?
        }
        (None, Some(path)) => {
            let (meta, reports) = io::read_privatized(path)?;
            let kind = privatized_kind(&common.mechanism, &meta)?;
            if meta.table != Some((rows, cols)) {
                return data(format!("{path}: reports are not for a {rows}x{cols} table"));
            }
            if matches!(kind, MechanismKind::LaplaceNoise { .. }) {
                return usage("independence tests support gaussian, exponential and bitflip");
            }
            let table = NoisyTable::new(rows, cols, aggregate(&reports)?)?;
            ind_test(IndData::Privatized(&table), kind, common.alpha, stream)?
        }
        _ => return usage("give exactly one of --input and --privatized"),
    };
    let report = Report::ind(&result, common.mechanism.delta, seed)?;
    Ok((report, common.output.clone()))
}

fn read_text(path: &str) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Writes `body` and, when it goes to a file, a `.meta` sidecar.
fn emit(output: Option<&str>, body: &str, meta: &str) -> CliResult<()> {
    io::write_output(output, body)?;
    if let Some(path) = output {
        let sidecar = format!("{path}.meta");
        fs::write(&sidecar, meta).map_err(|e| CliError::io(sidecar, e))?;
    }
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs, calibrate: bool) -> CliResult<()> {
    let mut config = ExperimentConfig::parse(&read_text(&args.config)?)?;
    if args.workers.is_some() {
        config.workers = args.workers;
    }
    if args.output.is_some() {
        config.output = args.output.clone();
    }
    if calibrate {
        config.eta = 0.0;
    }
    config.validate()?;
    let seed = resolve_seed(&args.seed, config.seed);
    let curve = if calibrate { run_type1(&config, seed)? } else { run_power(&config, seed)? };
    emit(config.output.as_deref(), &curve.to_csv(), &config.render(seed))
}

fn cmd_noncentral(args: NoncentralArgs) -> CliResult<()> {
    let mut config = match &args.config {
        Some(path) => Fig1Config::parse(&read_text(path)?)?,
        None => Fig1Config::parse("")?,
    };
    if args.output.is_some() {
        config.output = args.output.clone();
    }
    let rows = emit_fig1_table(&config.d_list, &config.epsilons)?;
    emit(config.output.as_deref(), &fig1_csv(&rows), &config.render())
}
