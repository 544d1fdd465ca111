//! Writes the bundled toy corpus and weights:
//! `cargo run -p distractor-core --example synth_corpus -- <dir> [n] [seed]`

use std::path::PathBuf;

use distractor_core::corpus::to_jsonl;
use distractor_core::synth::{toy_corpus, toy_weights};

fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| ".".into()));
    let n = args
        .next()
        .map_or(1000, |s| s.parse().expect("sample count"));
    let seed = args.next().map_or(42, |s| s.parse().expect("seed"));
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("toy_corpus.jsonl"), to_jsonl(&toy_corpus(n, seed)))?;
    let mut weights = serde_json::to_string_pretty(&toy_weights())?;
    weights.push('\n');
    std::fs::write(dir.join("toy_weights.json"), weights)?;
    Ok(())
}
