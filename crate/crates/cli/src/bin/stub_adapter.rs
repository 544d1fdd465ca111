//! Minimal external adapter for testing the line-delimited JSON protocol.
//!
//! Answers each request with a fixed `--label`/`--score`, or with a linear-bag
//! model loaded from `--weights`. `--crash-on-id` exits without answering and
//! `--bad-score-on-id` answers with score 1.2 when the request id matches.
//! `--log` appends the id of every request to a file.

use std::fs::OpenOptions;
use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use distractor_core::model::{AdapterRequest, AdapterResponse, LinearBag, LinearBagConfig};

#[derive(Parser)]
struct Opts {
    #[arg(long, default_value = "1")]
    label: String,
    #[arg(long, default_value_t = 0.9)]
    score: f64,
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    crash_on_id: Option<String>,
    #[arg(long)]
    bad_score_on_id: Option<String>,
    #[arg(long)]
    log: Option<PathBuf>,
}

fn main() -> ExitCode {
    let opts = Opts::parse();
    let model = match &opts.weights {
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("stub-adapter: {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            };
            let config: LinearBagConfig = match serde_json::from_str(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("stub-adapter: {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            };
            match LinearBag::from_config(&config) {
                Ok(m) => Some(m),
                Err(e) => {
                    eprintln!("stub-adapter: {e}");
                    return ExitCode::from(2);
                }
            }
        }
        None => None,
    };
    let mut log = match &opts.log {
        Some(path) => match OpenOptions::new().create(true).append(true).open(path) {
            Ok(f) => Some(f),
            Err(e) => {
                eprintln!("stub-adapter: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => None,
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for line in io::stdin().lock().lines() {
        let Ok(line) = line else { break };
        let request: AdapterRequest = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("stub-adapter: bad request: {e}");
                return ExitCode::from(1);
            }
        };
        if let Some(f) = log.as_mut() {
            let _ = writeln!(f, "{}", request.id);
        }
        if opts.crash_on_id.as_deref() == Some(request.id.as_str()) {
            return ExitCode::from(101);
        }
        let mut response = match &model {
            Some(m) => {
                let p = m.score(request.tokens.iter().map(String::as_str));
                AdapterResponse {
                    label: p.label,
                    score: p.score,
                }
            }
            None => AdapterResponse {
                label: opts.label.clone(),
                score: opts.score,
            },
        };
        if opts.bad_score_on_id.as_deref() == Some(request.id.as_str()) {
            response.score = 1.2;
        }
        let encoded = serde_json::to_string(&response).expect("response serializes");
        if writeln!(out, "{encoded}")
            .and_then(|()| out.flush())
            .is_err()
        {
            break;
        }
    }
    ExitCode::SUCCESS
}
