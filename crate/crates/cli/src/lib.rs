//! `gaitxai` command-line pipeline.
//!
//! ```text
//! gaitxai synth   --out run            # run/dataset.csv
//! gaitxai train   --out run            # run/report.{json,txt}, run/checkpoints/
//! gaitxai explain --out run            # run/relevance/
//! gaitxai spm     --out run            # run/spm/
//! gaitxai report  --out run            # run/report/panel_{a,b,c,d}.svg, overlap.txt
//! ```
//!
//! Every subcommand reads its inputs from and writes its outputs under the output
//! directory (the dataset path can point elsewhere). Failures print a single
//! `error[Class]: message` line to stderr and exit with 1 (unexpected), 2 (input
//! missing), 3 (precondition violated) or 4 (config or flag error).

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;
pub use error::{CliError, ExitStatus, Result};

#[derive(Debug, Parser)]
#[command(name = "gaitxai", version, about = "Explainable CNN gait classification with LRP and 1D SPM")]
struct Cli {
    /// key=value configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for data generation, folds and training.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides one config key, e.g. `--set train.epochs=50`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a planted-feature synthetic dataset to <out>/dataset.csv.
    Synth(SynthArgs),
    /// Cross-validate the CNN, writing the report and one checkpoint per fold.
    Train,
    /// Explain every trial with its own fold's model.
    Explain(ExplainArgs),
    /// Two-sample SPM per GRF channel.
    Spm(SpmArgs),
    /// Render panels A to D and the region-overlap table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Subjects per class.
    #[arg(long)]
    subjects: Option<usize>,
    /// Trials per subject.
    #[arg(long)]
    trials: Option<usize>,
    /// Nodes per curve.
    #[arg(long)]
    len: Option<usize>,
    /// Bump center node.
    #[arg(long)]
    center: Option<usize>,
    /// Bump half-width in nodes.
    #[arg(long)]
    width: Option<usize>,
    /// Bump amplitude added to male left-vertical curves.
    #[arg(long, allow_negative_numbers = true)]
    amplitude: Option<f64>,
    /// Noise standard deviation.
    #[arg(long)]
    noise: Option<f64>,
}

#[derive(Debug, Args)]
struct ExplainArgs {
    /// Checkpoint directory [default: <out>/checkpoints].
    #[arg(long, value_name = "DIR")]
    checkpoints: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SpmArgs {
    /// `trial` or `subject_mean`.
    #[arg(long)]
    unit: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Test only for female > male.
    #[arg(long)]
    one_sided: bool,
    /// Run on min-max normalized curves.
    #[arg(long)]
    normalized: bool,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Literature regions file (`name,channel,start,end,provenance`).
    #[arg(long, value_name = "PATH")]
    regions: Option<PathBuf>,
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut pairs = Vec::new();
    if let Some(path) = &cli.config {
        pairs.extend(config::parse_kv(&config::read_text(path, "ConfigError")?)?);
    }
    for s in &cli.set {
        let (k, v) = s.split_once('=').ok_or_else(|| CliError::new("BadFlag", format!("--set expects KEY=VALUE, got `{s}`")))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    let push = |pairs: &mut Vec<(String, String)>, k: &str, v: Option<String>| {
        if let Some(v) = v {
            pairs.push((k.to_string(), v));
        }
    };
    push(&mut pairs, "seed", cli.seed.map(|s| s.to_string()));
    push(&mut pairs, "out", cli.out.as_ref().map(|p| p.to_string_lossy().into_owned()));
    match &cli.command {
        Command::Synth(a) => {
            push(&mut pairs, "synth.subjects", a.subjects.map(|v| v.to_string()));
            push(&mut pairs, "synth.trials", a.trials.map(|v| v.to_string()));
            push(&mut pairs, "synth.len", a.len.map(|v| v.to_string()));
            push(&mut pairs, "synth.center", a.center.map(|v| v.to_string()));
            push(&mut pairs, "synth.width", a.width.map(|v| v.to_string()));
            push(&mut pairs, "synth.amplitude", a.amplitude.map(|v| v.to_string()));
            push(&mut pairs, "synth.noise", a.noise.map(|v| v.to_string()));
        }
        Command::Spm(a) => {
            push(&mut pairs, "spm.unit", a.unit.clone());
            push(&mut pairs, "spm.alpha", a.alpha.map(|v| v.to_string()));
            push(&mut pairs, "spm.two_sided", a.one_sided.then(|| "false".to_string()));
            push(&mut pairs, "spm.normalized", a.normalized.then(|| "true".to_string()));
        }
        Command::Report(a) => {
            push(&mut pairs, "regions.literature", a.regions.as_ref().map(|p| p.to_string_lossy().into_owned()));
        }
        Command::Train | Command::Explain(_) => {}
    }
    let cfg = RunConfig::default().apply(&pairs)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `args` (program name first) and runs the subcommand. `Ok` output is what
/// the command printed for the user.
pub fn run<I, T>(args: I) -> Result<String>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            return Ok(e.to_string());
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            return Err(CliError::new("BadFlag", first.to_string()));
        }
    };
    let cfg = resolve(&cli)?;
    match &cli.command {
        Command::Synth(_) => commands::synth(&cfg),
        Command::Train => commands::train(&cfg),
        Command::Explain(a) => commands::explain(&cfg, a.checkpoints.as_deref()),
        Command::Spm(_) => commands::spm(&cfg),
        Command::Report(_) => commands::report(&cfg),
    }
}

/// Entry point used by the binary: prints the output or the error line and maps the
/// outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match run(args) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.status() as u8)
        }
    }
}
