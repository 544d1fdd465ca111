use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use distractor_core::model::{KeywordRuleConfig, LinearBagConfig};
use distractor_core::pipeline::{
    locate_traces, read_manifest, reaggregate, run, ReaggregateConfig, RunConfig, RunError,
};
use distractor_core::report::{ReportFormat, DEFAULT_TOP_K};
use distractor_core::trace_io::SampleOutcome;
use distractor_core::{Language, ModelSpec, Threshold};

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "distractor",
    version,
    about = "Find distractor tokens in code-model predictions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce every sample of a corpus, persist traces and emit reports.
    Run(RunArgs),
    /// Re-apply a threshold to persisted traces without querying any model.
    Reanalyze(ReanalyzeArgs),
    /// Rebuild the reports of a finished run from its traces.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    LinearBag,
    KeywordRule,
    External,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Md,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Md => ReportFormat::Markdown,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Directory of source files or a JSONL file of {"id", "code", "label"?}.
    #[arg(long, env = "DISTRACTOR_CORPUS")]
    corpus: PathBuf,
    #[arg(long, env = "DISTRACTOR_LANG")]
    lang: Language,
    #[arg(long, value_enum, env = "DISTRACTOR_MODEL")]
    model: ModelArg,
    /// JSON parameters for the builtin models.
    #[arg(long, env = "DISTRACTOR_MODEL_CONFIG")]
    model_config: Option<PathBuf>,
    /// Adapter command line, split with shell quoting rules.
    #[arg(long, env = "DISTRACTOR_ADAPTER_CMD")]
    adapter_cmd: Option<String>,
    /// Per-request adapter timeout in milliseconds.
    #[arg(long, default_value_t = 30_000, env = "DISTRACTOR_ADAPTER_TIMEOUT_MS")]
    adapter_timeout_ms: u64,
    #[arg(long, default_value_t = 0.1, env = "DISTRACTOR_TAU")]
    tau: f64,
    /// Random subset size; all samples when omitted.
    #[arg(long, env = "DISTRACTOR_SAMPLES")]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0, env = "DISTRACTOR_SEED")]
    seed: u64,
    #[arg(long, default_value_t = 1, env = "DISTRACTOR_JOBS")]
    jobs: usize,
    /// Candidate evaluations allowed per sample.
    #[arg(long, default_value_t = distractor_core::ddmin::DEFAULT_QUERY_BUDGET, env = "DISTRACTOR_BUDGET")]
    budget: u64,
    #[arg(long, env = "DISTRACTOR_OUT")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "json", env = "DISTRACTOR_FORMAT")]
    format: FormatArg,
    #[arg(long, default_value_t = DEFAULT_TOP_K, env = "DISTRACTOR_TOP_K")]
    top_k: usize,
    /// Query the model for every candidate even if it was seen before.
    #[arg(long, env = "DISTRACTOR_NO_CACHE")]
    no_cache: bool,
    /// Suppress per-sample progress lines.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct ReanalyzeArgs {
    /// Run directory or its traces/ subdirectory.
    trace_dir: PathBuf,
    #[arg(long, default_value_t = 0.1, env = "DISTRACTOR_TAU")]
    tau: f64,
    /// Needed only when the run manifest is missing.
    #[arg(long, env = "DISTRACTOR_LANG")]
    lang: Option<Language>,
    #[arg(long, value_enum, default_value = "json", env = "DISTRACTOR_FORMAT")]
    format: FormatArg,
    #[arg(long, default_value_t = DEFAULT_TOP_K, env = "DISTRACTOR_TOP_K")]
    top_k: usize,
    /// Defaults to <run-dir>/reanalysis/tau-<tau>.
    #[arg(long, env = "DISTRACTOR_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directory or its traces/ subdirectory.
    trace_dir: PathBuf,
    /// Needed only when the run manifest is missing.
    #[arg(long, env = "DISTRACTOR_LANG")]
    lang: Option<Language>,
    /// Defaults to the run's format.
    #[arg(long, value_enum, env = "DISTRACTOR_FORMAT")]
    format: Option<FormatArg>,
    /// Defaults to <run-dir>/report.
    #[arg(long, env = "DISTRACTOR_OUT")]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("reading model config `{}`: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Config(format!("parsing model config `{}`: {e}", path.display())))
}

fn model_spec(args: &RunArgs) -> Result<ModelSpec, Failure> {
    let config_path = || {
        args.model_config
            .as_deref()
            .ok_or_else(|| Failure::Config("--model-config is required for builtin models".into()))
    };
    match args.model {
        ModelArg::LinearBag => Ok(ModelSpec::LinearBag(read_json::<LinearBagConfig>(
            config_path()?,
        )?)),
        ModelArg::KeywordRule => Ok(ModelSpec::KeywordRule(read_json::<KeywordRuleConfig>(
            config_path()?,
        )?)),
        ModelArg::External => {
            let line = args.adapter_cmd.as_deref().ok_or_else(|| {
                Failure::Config("--adapter-cmd is required for external models".into())
            })?;
            let command = shlex::split(line)
                .filter(|c| !c.is_empty())
                .ok_or_else(|| Failure::Config(format!("cannot parse adapter command {line:?}")))?;
            Ok(ModelSpec::External {
                command,
                timeout_ms: args.adapter_timeout_ms,
            })
        }
    }
}

fn threshold(tau: f64) -> Result<Threshold, Failure> {
    Threshold::new(tau).map_err(Failure::Config)
}

fn cmd_run(args: RunArgs) -> Result<bool, Failure> {
    if args.budget == 0 {
        return Err(Failure::Config("--budget must be at least 1".into()));
    }
    let config = RunConfig {
        corpus: args.corpus.clone(),
        language: args.lang,
        model: model_spec(&args)?,
        tau: threshold(args.tau)?,
        sample_count: args.samples,
        seed: args.seed,
        jobs: args.jobs,
        budget: Some(args.budget),
        out: args.out.clone(),
        format: args.format.into(),
        cache: !args.no_cache,
        top_k: args.top_k,
    };
    let quiet = args.quiet;
    let progress = move |done: usize, total: usize, outcome: &SampleOutcome| {
        if !quiet {
            let status = if outcome.is_failure() { "failed" } else { "ok" };
            eprintln!("[{done}/{total}] {} {status}", outcome.source_id());
        }
    };
    let report = run(&config, &progress)?;
    let counts = &report.manifest.counts;
    for f in &counts.ingest_failures {
        log::warn!("skipped {}: {}", f.location, f.message);
    }
    for o in report.outcomes.iter().filter(|o| o.is_failure()) {
        log::warn!("sample {} failed", o.source_id());
    }
    let s = &report.aggregate.summary;
    println!(
        "{} samples analyzed, {} failed, {} ingest failures; PI {:.2}% PD {:.2}% PI∪PD {:.2}%; reports in {}",
        s.n_samples,
        s.n_failed,
        counts.ingest_failures.len(),
        s.pct_pi,
        s.pct_pd,
        s.pct_union,
        config.out.display()
    );
    Ok(!counts.is_partial())
}

fn resolve_language(
    run_dir: &Path,
    lang: Option<Language>,
) -> Result<(Language, Option<RunConfig>), Failure> {
    let recorded = read_manifest(run_dir).map(|m| m.config);
    match (lang, &recorded) {
        (Some(l), _) => Ok((l, recorded)),
        (None, Some(c)) => Ok((c.language, recorded)),
        (None, None) => Err(Failure::Config(format!(
            "no readable manifest in `{}`; pass --lang",
            run_dir.display()
        ))),
    }
}

fn cmd_reanalyze(args: ReanalyzeArgs) -> Result<bool, Failure> {
    let tau = threshold(args.tau)?;
    let (run_dir, trace_dir) = locate_traces(&args.trace_dir)?;
    let (language, _) = resolve_language(&run_dir, args.lang)?;
    let out = args.out.unwrap_or_else(|| {
        run_dir
            .join("reanalysis")
            .join(format!("tau-{}", tau.value()))
    });
    let settings = ReaggregateConfig {
        language,
        tau,
        top_k: args.top_k,
        format: args.format.into(),
        out,
    };
    let agg = reaggregate(&trace_dir, &settings)?;
    println!(
        "tau {}: {} distractor records over {} samples; reports in {}",
        tau.value(),
        agg.records.len(),
        agg.summary.n_samples,
        settings.out.display()
    );
    Ok(true)
}

fn cmd_report(args: ReportArgs) -> Result<bool, Failure> {
    let (run_dir, trace_dir) = locate_traces(&args.trace_dir)?;
    let (language, recorded) = resolve_language(&run_dir, args.lang)?;
    let settings = ReaggregateConfig {
        language,
        tau: recorded.as_ref().map_or(Threshold::DEFAULT, |c| c.tau),
        top_k: recorded.as_ref().map_or(DEFAULT_TOP_K, |c| c.top_k),
        format: args
            .format
            .map(ReportFormat::from)
            .or(recorded.as_ref().map(|c| c.format))
            .unwrap_or(ReportFormat::Json),
        out: args.out.unwrap_or_else(|| run_dir.join("report")),
    };
    reaggregate(&trace_dir, &settings)?;
    println!("reports in {}", settings.out.display());
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DISTRACTOR_LOG", "warn"))
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Reanalyze(args) => cmd_reanalyze(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_PARTIAL),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
