//! Corpus-level aggregation: the probability-change summary, the per-sample
//! maximum increase/decrease distribution, and the top distractor tokens by
//! category. Every emitter is deterministic for identical inputs.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distractor::{Direction, DistractorRecord, SampleStats, Threshold};
use crate::tokens::{categorize, Language, TokenCategory};

/// Default size of the top-token list.
pub const DEFAULT_TOP_K: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("no analyzed samples to summarize")]
    EmptyCorpus,
    #[error("unknown report format `{0}` (expected json, csv or md)")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PoolStats {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl PoolStats {
    fn from_values(mut values: Vec<f64>) -> Self {
        if values.is_empty() {
            return PoolStats::default();
        }
        values.sort_by(f64::total_cmp);
        let sum: f64 = values.iter().sum();
        PoolStats {
            count: values.len(),
            min: values[0],
            max: values[values.len() - 1],
            mean: sum / values.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub tau: f64,
    pub n_samples: usize,
    pub n_failed: usize,
    pub n_records: usize,
    /// Pooled significant positive step deltas.
    pub pi_stats: PoolStats,
    /// Pooled significant negative step deltas, as magnitudes.
    pub pd_stats: PoolStats,
    pub pct_pi: f64,
    pub pct_pd: f64,
    pub pct_union: f64,
}

impl CorpusSummary {
    /// Summary of a corpus with no analyzed samples.
    pub fn empty(tau: Threshold, n_failed: usize) -> Self {
        CorpusSummary {
            tau: tau.value(),
            n_samples: 0,
            n_failed,
            n_records: 0,
            pi_stats: PoolStats::default(),
            pd_stats: PoolStats::default(),
            pct_pi: 0.0,
            pct_pd: 0.0,
            pct_union: 0.0,
        }
    }
}

pub fn summarize(
    stats: &[SampleStats],
    records: &[DistractorRecord],
    tau: Threshold,
) -> Result<CorpusSummary, ReportError> {
    if stats.is_empty() {
        return Err(ReportError::EmptyCorpus);
    }
    let pool = |dir| {
        PoolStats::from_values(
            records
                .iter()
                .filter(|r| r.direction == dir)
                .map(|r| r.magnitude)
                .collect(),
        )
    };
    let n = stats.len();
    let pct = |count: usize| 100.0 * count as f64 / n as f64;
    Ok(CorpusSummary {
        tau: tau.value(),
        n_samples: n,
        n_failed: 0,
        n_records: records.len(),
        pi_stats: pool(Direction::Increase),
        pd_stats: pool(Direction::Decrease),
        pct_pi: pct(stats.iter().filter(|s| s.has_pi).count()),
        pct_pd: pct(stats.iter().filter(|s| s.has_pd).count()),
        pct_union: pct(stats.iter().filter(|s| s.has_pi || s.has_pd).count()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxChangeRow {
    pub source_id: String,
    pub mpi: f64,
    pub mpd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxChangeDistribution {
    /// Ordered by source id.
    pub rows: Vec<MaxChangeRow>,
    /// Ascending, for plotting.
    pub mpi_sorted: Vec<f64>,
    pub mpd_sorted: Vec<f64>,
}

pub fn max_change_distribution(stats: &[SampleStats]) -> MaxChangeDistribution {
    let mut rows: Vec<MaxChangeRow> = stats
        .iter()
        .map(|s| MaxChangeRow {
            source_id: s.source_id.clone(),
            mpi: s.max_increase,
            mpd: s.max_decrease,
        })
        .collect();
    rows.sort_by(|a, b| a.source_id.cmp(&b.source_id));
    let sorted = |f: fn(&MaxChangeRow) -> f64| {
        let mut v: Vec<f64> = rows.iter().map(f).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    MaxChangeDistribution {
        mpi_sorted: sorted(|r| r.mpi),
        mpd_sorted: sorted(|r| r.mpd),
        rows,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedToken {
    pub text: String,
    pub category: TokenCategory,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopDistractors {
    pub language: Language,
    pub k: usize,
    /// Token occurrences across all records, before truncation.
    pub total_occurrences: usize,
    /// Count descending, ties by lexeme ascending; at most `k` entries.
    pub ranking: Vec<RankedToken>,
    /// `ranking` grouped by category, preserving rank order.
    pub by_category: BTreeMap<TokenCategory, Vec<RankedToken>>,
}

pub fn top_distractors(
    records: &[DistractorRecord],
    language: Language,
    k: usize,
) -> TopDistractors {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut total = 0;
    for token in records.iter().flat_map(|r| &r.tokens) {
        *counts.entry(token.text.as_str()).or_default() += 1;
        total += 1;
    }
    let mut ranking: Vec<RankedToken> = counts
        .into_iter()
        .map(|(text, count)| RankedToken {
            text: text.to_string(),
            category: categorize(text, language),
            count,
        })
        .collect();
    ranking.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.text.cmp(&b.text)));
    ranking.truncate(k);

    let mut by_category: BTreeMap<TokenCategory, Vec<RankedToken>> = BTreeMap::new();
    for entry in &ranking {
        by_category
            .entry(entry.category)
            .or_default()
            .push(entry.clone());
    }
    TopDistractors {
        language,
        k,
        total_occurrences: total,
        ranking,
        by_category,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    #[serde(rename = "md")]
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

/// Emitted report files, keyed by file name.
pub type Documents = BTreeMap<String, Vec<u8>>;

pub const SUMMARY_MD_HEADER: &str = "| tau | samples | failed | PI min | PI max | PI mean | PD min | PD max | PD mean | PI (%) | PD (%) | PI ∪ PD (%) |";
pub const SUMMARY_CSV_HEADER: &str = "tau,n_samples,n_failed,n_records,pi_count,pi_min,pi_max,pi_mean,pd_count,pd_min,pd_max,pd_mean,pct_pi,pct_pd,pct_union";
pub const TOP_TOKENS_MD_HEADER: &str = "| Category | Tokens |";

/// Summary as written to disk: decreases carry a negative sign.
#[derive(Serialize)]
struct SummaryView {
    tau: f64,
    n_samples: usize,
    n_failed: usize,
    n_records: usize,
    pi: PoolStats,
    pd: PoolStats,
    pct_pi: f64,
    pct_pd: f64,
    pct_union: f64,
}

fn negated(p: PoolStats) -> PoolStats {
    PoolStats {
        count: p.count,
        min: -p.min + 0.0,
        max: -p.max + 0.0,
        mean: -p.mean + 0.0,
    }
}

impl From<&CorpusSummary> for SummaryView {
    fn from(s: &CorpusSummary) -> Self {
        SummaryView {
            tau: s.tau,
            n_samples: s.n_samples,
            n_failed: s.n_failed,
            n_records: s.n_records,
            pi: s.pi_stats,
            pd: negated(s.pd_stats),
            pct_pi: s.pct_pi,
            pct_pd: s.pct_pd,
            pct_union: s.pct_union,
        }
    }
}

pub fn emit(
    summary: &CorpusSummary,
    distribution: &MaxChangeDistribution,
    tops: &TopDistractors,
    format: ReportFormat,
) -> Documents {
    let mut docs = Documents::new();
    docs.insert("max_changes.csv".into(), max_changes_csv(distribution));
    match format {
        ReportFormat::Json => {
            docs.insert("summary.json".into(), to_json(&SummaryView::from(summary)));
            docs.insert("top_tokens.json".into(), to_json(tops));
        }
        ReportFormat::Csv => {
            docs.insert("summary.csv".into(), summary_csv(summary));
            docs.insert("top_tokens.csv".into(), top_tokens_csv(tops));
        }
        ReportFormat::Markdown => {
            docs.insert("summary.md".into(), summary_md(summary).into_bytes());
            docs.insert("top_tokens.md".into(), top_tokens_md(tops).into_bytes());
        }
    }
    docs
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report serializes");
    out.push(b'\n');
    out
}

fn csv_bytes(rows: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    rows(&mut w).expect("in-memory csv write");
    w.into_inner().expect("in-memory csv flush")
}

fn max_changes_csv(d: &MaxChangeDistribution) -> Vec<u8> {
    csv_bytes(|w| {
        w.write_record(["source_id", "mpi", "mpd"])?;
        for row in &d.rows {
            w.write_record([
                row.source_id.clone(),
                row.mpi.to_string(),
                row.mpd.to_string(),
            ])?;
        }
        Ok(())
    })
}

fn summary_csv(s: &CorpusSummary) -> Vec<u8> {
    let pd = negated(s.pd_stats);
    csv_bytes(|w| {
        w.write_record(SUMMARY_CSV_HEADER.split(','))?;
        w.write_record([
            s.tau.to_string(),
            s.n_samples.to_string(),
            s.n_failed.to_string(),
            s.n_records.to_string(),
            s.pi_stats.count.to_string(),
            s.pi_stats.min.to_string(),
            s.pi_stats.max.to_string(),
            s.pi_stats.mean.to_string(),
            pd.count.to_string(),
            pd.min.to_string(),
            pd.max.to_string(),
            pd.mean.to_string(),
            s.pct_pi.to_string(),
            s.pct_pd.to_string(),
            s.pct_union.to_string(),
        ])
    })
}

fn top_tokens_csv(t: &TopDistractors) -> Vec<u8> {
    csv_bytes(|w| {
        w.write_record(["rank", "token", "category", "count"])?;
        for (i, entry) in t.ranking.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                entry.text.clone(),
                entry.category.to_string(),
                entry.count.to_string(),
            ])?;
        }
        Ok(())
    })
}

fn summary_md(s: &CorpusSummary) -> String {
    let pd = negated(s.pd_stats);
    let mut out = String::from("# Probability change summary\n\n");
    out.push_str(SUMMARY_MD_HEADER);
    out.push('\n');
    out.push_str("|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n");
    let _ = writeln!(
        out,
        "| {:.2} | {} | {} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2} |",
        s.tau,
        s.n_samples,
        s.n_failed,
        s.pi_stats.min,
        s.pi_stats.max,
        s.pi_stats.mean,
        pd.min,
        pd.max,
        pd.mean,
        s.pct_pi,
        s.pct_pd,
        s.pct_union
    );
    out
}

fn md_escape(text: &str) -> String {
    text.replace('\\', "\\\\")
        .replace('|', "\\|")
        .replace('\n', "\\n")
}

fn top_tokens_md(t: &TopDistractors) -> String {
    let mut out = format!(
        "# Top distractor tokens ({}, k = {})\n\n{TOP_TOKENS_MD_HEADER}\n|---|---|\n",
        t.language, t.k
    );
    for category in TokenCategory::ALL {
        let Some(entries) = t.by_category.get(&category) else {
            continue;
        };
        let list: Vec<String> = entries
            .iter()
            .map(|e| format!("`{}` ({})", md_escape(&e.text), e.count))
            .collect();
        let _ = writeln!(out, "| {} | {} |", category, list.join(", "));
    }
    out
}
