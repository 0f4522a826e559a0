use std::fs::{self, File};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use csabench::baseline::run_stage;
use csabench::contract::{InvokeOptions, ModelSpec, StageKind};
use csabench::curves::{build_response_table, read_measurements, write_response_table, TableConfig};
use csabench::data::{generate_splits, generate_synthetic_benchmark, write_split_files, BenchmarkIndex, SynthSpec};
use csabench::metrics::{write_metrics, StdKind};
use csabench::report::write_report;
use csabench::scheduler::{build_plan, execute, ExecuteOptions};

#[derive(Parser)]
#[command(name = "csabench", version, about = "Cross-dataset drug response benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit dose-response curves and write a response table.
    Curvefit(CurvefitArgs),
    /// Generate split files for one dataset of a benchmark.
    Splitgen(SplitgenArgs),
    /// Write a synthetic benchmark.
    Synth(SynthArgs),
    /// Run every model over all source × target pairs and splits.
    Run(RunArgs),
    /// Compute G, Ga, Gn and Gna for a finished run.
    Metrics(MetricsArgs),
    /// Render heatmaps and tables for a finished run.
    Report(ReportArgs),
    /// Run one stage of a built-in model.
    #[command(hide = true)]
    Stage {
        model: String,
        stage: StageKind,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        args: Vec<String>,
    },
}

#[derive(Args)]
struct CurvefitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Defaults to `<output>.fitlog.json`.
    #[arg(long)]
    fit_log: Option<PathBuf>,
    /// Defaults to the input file stem.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long, default_value_t = 0.3)]
    r2_min: f64,
    #[arg(long, default_value_t = 1e-10)]
    dose_lo: f64,
    #[arg(long, default_value_t = 1e-4)]
    dose_hi: f64,
    /// 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct SplitgenArgs {
    #[arg(long, default_value = ".")]
    benchmark: PathBuf,
    #[arg(long)]
    dataset: String,
    #[arg(long, default_value_t = 10)]
    n_splits: usize,
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
struct SynthArgs {
    /// JSON synthetic benchmark description.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    benchmark: PathBuf,
    /// Built-in model names or model spec JSON files.
    #[arg(long, num_args = 1.., required = true)]
    models: Vec<String>,
    #[arg(long, default_value_t = 10)]
    n_splits: usize,
    /// Defaults to the available parallelism.
    #[arg(long)]
    slots: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    resume: bool,
    /// Train once per (source, target, split) instead of once per (source, split).
    #[arg(long)]
    no_reuse: bool,
    /// Per-stage timeout in seconds, overriding the model spec.
    #[arg(long)]
    timeout: Option<u64>,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    rundir: PathBuf,
    #[arg(long, default_value = "r2")]
    metric: String,
    #[arg(long)]
    out: PathBuf,
    /// Divide by n − 1 instead of n.
    #[arg(long)]
    sample_std: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    rundir: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "r2")]
    metric: String,
}

enum Failure {
    Usage(anyhow::Error),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn curvefit(a: CurvefitArgs) -> anyhow::Result<()> {
    let file = File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let (measurements, row_errors) = read_measurements(file).with_context(|| a.input.display().to_string())?;
    for e in &row_errors {
        eprintln!("{}:{}: {}", a.input.display(), e.line, e.message);
    }
    let dataset = a
        .dataset
        .unwrap_or_else(|| a.input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    let mut config = TableConfig::default();
    config.fit.r2_min = a.r2_min;
    config.dose_lo = a.dose_lo;
    config.dose_hi = a.dose_hi;
    config.workers = a.workers;
    let (samples, log) = build_response_table(measurements, &dataset, &config);
    let out = File::create(&a.output).with_context(|| format!("creating {}", a.output.display()))?;
    write_response_table(out, &samples)?;
    let log_path = a.fit_log.unwrap_or_else(|| {
        let mut p = a.output.clone().into_os_string();
        p.push(".fitlog.json");
        p.into()
    });
    fs::write(&log_path, serde_json::to_string_pretty(&log)? + "\n")
        .with_context(|| format!("writing {}", log_path.display()))?;
    println!(
        "{dataset}: {} samples, {} rejected, {} errored, {} bad rows",
        log.fitted,
        log.rejected,
        log.errored,
        row_errors.len()
    );
    Ok(())
}

fn splitgen(a: SplitgenArgs) -> anyhow::Result<()> {
    let index = BenchmarkIndex::load(&a.benchmark)?;
    let table = index.load_response(&a.dataset)?;
    let splits = generate_splits(table.len(), a.n_splits, a.seed)?;
    let written = write_split_files(&splits, &a.dataset, index.split_dir(&a.dataset))?;
    println!("{}: {} files for {} samples", a.dataset, written.len(), table.len());
    Ok(())
}

fn synth(a: SynthArgs) -> anyhow::Result<()> {
    let text = fs::read_to_string(&a.spec).with_context(|| format!("reading {}", a.spec.display()))?;
    let spec: SynthSpec = serde_json::from_str(&text).with_context(|| a.spec.display().to_string())?;
    let manifest = generate_synthetic_benchmark(&spec, a.seed, &a.out)?;
    println!("{}: {}", a.out.display(), manifest.datasets.join(", "));
    Ok(())
}

fn run(a: RunArgs) -> anyhow::Result<bool> {
    let harness = std::env::current_exe().context("locating the harness executable")?;
    let index = BenchmarkIndex::load(&a.benchmark)?;
    let models = a
        .models
        .iter()
        .map(|m| ModelSpec::resolve(m, &harness))
        .collect::<Result<Vec<_>, _>>()?;
    let slots = a
        .slots
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let plan = build_plan(&index, models, a.n_splits, slots, !a.no_reuse)?;
    let opts = ExecuteOptions {
        resume: a.resume,
        invoke: InvokeOptions {
            timeout: a.timeout.map(Duration::from_secs),
            ..Default::default()
        },
    };
    let result = execute(&plan, &a.out, &opts)?;
    println!(
        "{} tasks: {} done, {} skipped, {} invoked, {} failed",
        plan.tasks.len(),
        result.done,
        result.skipped,
        result.invoked,
        result.failed.len()
    );
    for f in &result.failed {
        eprintln!("{} [{}] {}", f.task_id, f.error_class, f.message);
    }
    Ok(result.success())
}

fn metrics(a: MetricsArgs) -> anyhow::Result<()> {
    let kind = if a.sample_std { StdKind::Sample } else { StdKind::Population };
    let all = write_metrics(&a.rundir, &a.metric, kind, &a.out)?;
    for g in &all {
        println!("{}: {}", g.model, a.out.join(&g.model).display());
    }
    Ok(())
}

fn report(a: ReportArgs) -> anyhow::Result<()> {
    let out = write_report(&a.rundir, &a.out, &a.metric)?;
    println!("{} files in {}, {} missing entries", out.files.len(), a.out.display(), out.missing);
    Ok(())
}

fn stage(model: &str, stage: StageKind, args: &[String]) -> Result<(), Failure> {
    run_stage(model, stage, args).map_err(|e| {
        if e.is_usage() {
            Failure::Usage(e.into())
        } else {
            Failure::Other(e.into())
        }
    })
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Curvefit(a) => curvefit(a)?,
        Command::Splitgen(a) => splitgen(a)?,
        Command::Synth(a) => synth(a)?,
        Command::Run(a) => {
            if !run(a)? {
                return Err(Failure::Other(anyhow::anyhow!("some tasks failed")));
            }
        }
        Command::Metrics(a) => metrics(a)?,
        Command::Report(a) => report(a)?,
        Command::Stage { model, stage: s, args } => stage(&model, s, &args)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
