//! End-to-end orchestration: ingest → tokenize → reduce → persist → analyze
//! → report.
//!
//! With the `parallel` feature the batch runs on a rayon pool. Each worker
//! checks a model instance out of a shared pool and returns it afterwards.
//! Outputs are sorted by source id before aggregation.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ingest, CorpusSample, IngestError, IngestFailure};
use crate::ddmin::{reduce, ReduceError, TraceStatus};
use crate::distractor::{analyze, DistractorRecord, SampleStats, Threshold};
use crate::model::{ModelError, ModelHandle, ModelSpec, QueryCache};
use crate::report::{
    emit, max_change_distribution, summarize, top_distractors, CorpusSummary, Documents,
    MaxChangeDistribution, ReportFormat, TopDistractors, DEFAULT_TOP_K,
};
use crate::tokens::{tokenize, Language};
use crate::trace_io::{
    read_outcomes, to_json_bytes, write_outcome, FailedSample, FailureStage, SampleOutcome,
    TraceIoError,
};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRACES_DIR: &str = "traces";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub language: Language,
    pub model: ModelSpec,
    pub tau: Threshold,
    pub sample_count: Option<usize>,
    pub seed: u64,
    pub jobs: usize,
    pub budget: Option<u64>,
    pub out: PathBuf,
    pub format: ReportFormat,
    pub cache: bool,
    pub top_k: usize,
}

impl RunConfig {
    pub fn new(
        corpus: impl Into<PathBuf>,
        language: Language,
        model: ModelSpec,
        out: impl Into<PathBuf>,
    ) -> Self {
        RunConfig {
            corpus: corpus.into(),
            language,
            model,
            tau: Threshold::DEFAULT,
            sample_count: None,
            seed: 0,
            jobs: 1,
            budget: Some(crate::ddmin::DEFAULT_QUERY_BUDGET),
            out: out.into(),
            format: ReportFormat::Json,
            cache: true,
            top_k: DEFAULT_TOP_K,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Traces(#[from] TraceIoError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl RunError {
    pub fn is_config(&self) -> bool {
        matches!(self, RunError::Config(_) | RunError::Ingest(_))
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Lends model instances to workers, creating new ones on demand.
pub struct ModelPool<'a> {
    spec: &'a ModelSpec,
    idle: Mutex<Vec<ModelHandle>>,
}

impl<'a> ModelPool<'a> {
    pub fn new(spec: &'a ModelSpec) -> Self {
        ModelPool {
            spec,
            idle: Mutex::new(Vec::new()),
        }
    }

    /// Pool seeded with an already started instance.
    pub fn with_instance(spec: &'a ModelSpec, handle: ModelHandle) -> Self {
        let pool = ModelPool::new(spec);
        pool.idle.lock().expect("pool lock").push(handle);
        pool
    }

    pub fn checkout(&self) -> Result<ModelHandle, ModelError> {
        let idle = self.idle.lock().expect("pool lock").pop();
        match idle {
            Some(handle) => Ok(handle),
            None => self.spec.instantiate(),
        }
    }

    pub fn checkin(&self, handle: ModelHandle) {
        self.idle.lock().expect("pool lock").push(handle);
    }

    /// `(queries answered, calls that reached the model)` over the checked-in
    /// instances.
    pub fn counters(&self) -> (u64, u64) {
        let idle = self.idle.lock().expect("pool lock");
        idle.iter()
            .fold((0, 0), |(q, c), h| (q + h.queries(), c + h.model_calls()))
    }
}

pub fn process_sample(
    sample: &CorpusSample,
    language: Language,
    model: &mut ModelHandle,
    cache: &QueryCache,
    budget: Option<u64>,
) -> SampleOutcome {
    let failed = |stage, error: String| {
        SampleOutcome::Failed(FailedSample {
            source_id: sample.source_id.clone(),
            stage,
            error,
        })
    };
    let program = match tokenize(sample.source_id.clone(), &sample.code, language) {
        Ok(p) => p,
        Err(e) => return failed(FailureStage::Lex, e.to_string()),
    };
    match reduce(&program, model, cache, budget) {
        Ok(trace) => SampleOutcome::Reduced(trace),
        Err(e @ ReduceError::Query(_)) => failed(FailureStage::Model, e.to_string()),
        Err(e) => failed(FailureStage::Reduce, e.to_string()),
    }
}

fn process_with_pool(
    sample: &CorpusSample,
    language: Language,
    pool: &ModelPool<'_>,
    cache: &QueryCache,
    budget: Option<u64>,
) -> SampleOutcome {
    match pool.checkout() {
        Ok(mut model) => {
            let outcome = process_sample(sample, language, &mut model, cache, budget);
            pool.checkin(model);
            outcome
        }
        Err(e) => SampleOutcome::Failed(FailedSample {
            source_id: sample.source_id.clone(),
            stage: FailureStage::Model,
            error: e.to_string(),
        }),
    }
}

/// Called after each sample with `(completed, total, outcome)`.
pub type Progress<'a> = &'a (dyn Fn(usize, usize, &SampleOutcome) + Sync);

pub fn process_corpus_sequential(
    samples: &[CorpusSample],
    language: Language,
    pool: &ModelPool<'_>,
    cache: &QueryCache,
    budget: Option<u64>,
    progress: Progress<'_>,
) -> Vec<SampleOutcome> {
    let total = samples.len();
    let mut outcomes: Vec<SampleOutcome> = samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let outcome = process_with_pool(s, language, pool, cache, budget);
            progress(i + 1, total, &outcome);
            outcome
        })
        .collect();
    outcomes.sort_by(|a, b| a.source_id().cmp(b.source_id()));
    outcomes
}

#[cfg(feature = "parallel")]
pub fn process_corpus_parallel(
    samples: &[CorpusSample],
    language: Language,
    pool: &ModelPool<'_>,
    cache: &QueryCache,
    budget: Option<u64>,
    jobs: usize,
    progress: Progress<'_>,
) -> Vec<SampleOutcome> {
    use rayon::prelude::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    let total = samples.len();
    let done = AtomicUsize::new(0);
    let work = || {
        samples
            .par_iter()
            .map(|s| {
                let outcome = process_with_pool(s, language, pool, cache, budget);
                progress(done.fetch_add(1, Ordering::Relaxed) + 1, total, &outcome);
                outcome
            })
            .collect::<Vec<_>>()
    };
    let mut outcomes = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(threads) => threads.install(work),
        Err(e) => {
            log::warn!("could not build a {jobs}-thread pool ({e}); using the global pool");
            work()
        }
    };
    outcomes.sort_by(|a, b| a.source_id().cmp(b.source_id()));
    outcomes
}

/// Runs the batch with `jobs` workers; falls back to sequential processing
/// when `jobs == 1` or the `parallel` feature is off.
pub fn process_corpus(
    samples: &[CorpusSample],
    language: Language,
    pool: &ModelPool<'_>,
    cache: &QueryCache,
    budget: Option<u64>,
    jobs: usize,
    progress: Progress<'_>,
) -> Vec<SampleOutcome> {
    #[cfg(feature = "parallel")]
    if jobs > 1 {
        return process_corpus_parallel(samples, language, pool, cache, budget, jobs, progress);
    }
    #[cfg(not(feature = "parallel"))]
    if jobs > 1 {
        log::warn!("built without the `parallel` feature; ignoring --jobs {jobs}");
    }
    process_corpus_sequential(samples, language, pool, cache, budget, progress)
}

/// Everything derived from a set of sample outcomes at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub stats: Vec<SampleStats>,
    pub records: Vec<DistractorRecord>,
    pub summary: CorpusSummary,
    pub distribution: MaxChangeDistribution,
    pub tops: TopDistractors,
}

impl Aggregate {
    pub fn documents(&self, format: ReportFormat) -> Documents {
        emit(&self.summary, &self.distribution, &self.tops, format)
    }
}

/// Analyzes complete traces; everything else counts as failed.
pub fn aggregate(
    outcomes: &[SampleOutcome],
    language: Language,
    tau: Threshold,
    top_k: usize,
) -> Aggregate {
    let mut sorted: Vec<&SampleOutcome> = outcomes.iter().collect();
    sorted.sort_by(|a, b| a.source_id().cmp(b.source_id()));
    let mut stats = Vec::new();
    let mut records = Vec::new();
    let mut failed = 0;
    for outcome in sorted {
        match outcome.complete_trace() {
            Some(trace) => {
                let analysis = analyze(trace, tau);
                stats.push(analysis.stats);
                records.extend(analysis.records);
            }
            None => failed += 1,
        }
    }
    let mut summary =
        summarize(&stats, &records, tau).unwrap_or_else(|_| CorpusSummary::empty(tau, 0));
    summary.n_failed = failed;
    Aggregate {
        distribution: max_change_distribution(&stats),
        tops: top_distractors(&records, language, top_k),
        stats,
        records,
        summary,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunCounts {
    pub corpus_size: usize,
    pub selected: usize,
    pub ingest_failures: Vec<IngestFailure>,
    pub complete: usize,
    pub budget_exhausted: usize,
    pub adapter_failed: usize,
    pub lex_failed: usize,
    pub other_failed: usize,
}

impl RunCounts {
    pub fn failed_samples(&self) -> usize {
        self.budget_exhausted + self.adapter_failed + self.lex_failed + self.other_failed
    }

    pub fn is_partial(&self) -> bool {
        self.failed_samples() > 0 || !self.ingest_failures.is_empty()
    }

    fn tally(&mut self, outcomes: &[SampleOutcome]) {
        for o in outcomes {
            match o {
                SampleOutcome::Reduced(t) => match t.status {
                    TraceStatus::Complete => self.complete += 1,
                    TraceStatus::BudgetExhausted => self.budget_exhausted += 1,
                    TraceStatus::AdapterFailed => self.adapter_failed += 1,
                },
                SampleOutcome::Failed(f) => match f.stage {
                    FailureStage::Lex => self.lex_failed += 1,
                    FailureStage::Model => self.adapter_failed += 1,
                    FailureStage::Reduce => self.other_failed += 1,
                },
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCounts {
    /// Model queries including cache hits (original programs and candidates).
    pub queries: u64,
    /// Queries that reached a model instance.
    pub model_calls: u64,
    pub cache_hits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub counts: RunCounts,
    pub queries: QueryCounts,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub aggregate: Aggregate,
    pub outcomes: Vec<SampleOutcome>,
}

fn write_documents(dir: &Path, docs: &Documents) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (name, bytes) in docs {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
    }
    Ok(())
}

/// Full run. Configuration problems surface before any model query or any
/// output is written; per-sample problems are recorded and never abort.
pub fn run(config: &RunConfig, progress: Progress<'_>) -> Result<RunReport, RunError> {
    if config.jobs == 0 {
        return Err(RunError::Config("worker count must be at least 1".into()));
    }
    config
        .model
        .validate()
        .map_err(|e| RunError::Config(e.to_string()))?;
    let ingested = ingest(
        &config.corpus,
        config.language,
        config.sample_count,
        config.seed,
    )?;
    let first = config
        .model
        .instantiate()
        .map_err(|e| RunError::Config(e.to_string()))?;

    let traces_dir = config.out.join(TRACES_DIR);
    if traces_dir.exists() {
        fs::remove_dir_all(&traces_dir).map_err(io_err(&traces_dir))?;
    }
    fs::create_dir_all(&traces_dir).map_err(io_err(&traces_dir))?;

    let cache = if config.cache {
        QueryCache::new()
    } else {
        QueryCache::disabled()
    };
    let pool = ModelPool::with_instance(&config.model, first);
    let outcomes = process_corpus(
        &ingested.samples,
        config.language,
        &pool,
        &cache,
        config.budget,
        config.jobs,
        progress,
    );
    for outcome in &outcomes {
        write_outcome(&traces_dir, outcome)?;
    }

    let aggregate = aggregate(&outcomes, config.language, config.tau, config.top_k);
    write_documents(&config.out, &aggregate.documents(config.format))?;

    let mut counts = RunCounts {
        corpus_size: ingested.corpus_size,
        selected: ingested.samples.len(),
        ingest_failures: ingested.failures,
        ..Default::default()
    };
    counts.tally(&outcomes);
    let (queries, model_calls) = pool.counters();
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        counts,
        queries: QueryCounts {
            queries,
            model_calls,
            cache_hits: cache.hits(),
        },
    };
    let manifest_path = config.out.join(MANIFEST_FILE);
    fs::write(&manifest_path, to_json_bytes(&manifest)).map_err(io_err(&manifest_path))?;
    Ok(RunReport {
        manifest,
        aggregate,
        outcomes,
    })
}

/// Accepts either a run directory (containing `traces/`) or the trace
/// directory itself; returns `(run_dir, trace_dir)`.
pub fn locate_traces(path: &Path) -> Result<(PathBuf, PathBuf), RunError> {
    if !path.is_dir() {
        return Err(RunError::Config(format!(
            "trace directory `{}` does not exist",
            path.display()
        )));
    }
    let nested = path.join(TRACES_DIR);
    if nested.is_dir() {
        Ok((path.to_path_buf(), nested))
    } else {
        let run_dir = path
            .parent()
            .map_or_else(|| path.to_path_buf(), Path::to_path_buf);
        Ok((run_dir, path.to_path_buf()))
    }
}

pub fn read_manifest(run_dir: &Path) -> Option<RunManifest> {
    let bytes = fs::read(run_dir.join(MANIFEST_FILE)).ok()?;
    serde_json::from_slice(&bytes).ok()
}

/// Settings for rebuilding reports from persisted traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReaggregateConfig {
    pub language: Language,
    pub tau: Threshold,
    pub top_k: usize,
    pub format: ReportFormat,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReanalysisManifest {
    pub tool: String,
    pub version: String,
    pub trace_dir: PathBuf,
    pub settings: ReaggregateConfig,
    pub samples: usize,
    pub n_records: usize,
    /// Always zero: reports are rebuilt from traces without a model.
    pub model_queries: u64,
}

pub const REANALYSIS_FILE: &str = "reanalysis.json";

/// Rebuilds reports from a trace directory. Never touches a model.
pub fn reaggregate(trace_dir: &Path, settings: &ReaggregateConfig) -> Result<Aggregate, RunError> {
    let outcomes = read_outcomes(trace_dir)?;
    let agg = aggregate(&outcomes, settings.language, settings.tau, settings.top_k);
    write_documents(&settings.out, &agg.documents(settings.format))?;
    let manifest = ReanalysisManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        trace_dir: trace_dir.to_path_buf(),
        settings: settings.clone(),
        samples: outcomes.len(),
        n_records: agg.records.len(),
        model_queries: 0,
    };
    let path = settings.out.join(REANALYSIS_FILE);
    fs::write(&path, to_json_bytes(&manifest)).map_err(io_err(&path))?;
    Ok(agg)
}
