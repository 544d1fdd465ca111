//! Seeded synthetic C corpora for tests, benchmarks and demos.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::CorpusSample;
use crate::model::LinearBagConfig;

const NAMES: &[&str] = &["a", "b", "i", "n", "x", "y", "buf", "len", "tmp"];
const TYPES: &[&str] = &["int", "char", "long", "float"];

fn pick<'a>(rng: &mut ChaCha8Rng, from: &[&'a str]) -> &'a str {
    from.choose(rng).copied().expect("non-empty table")
}

fn statement(rng: &mut ChaCha8Rng) -> String {
    let v = pick(rng, NAMES);
    let w = pick(rng, NAMES);
    let k = rng.random_range(0..100);
    match rng.random_range(0..8) {
        0 => format!("{} {v} = {k} ;", pick(rng, TYPES)),
        1 => format!("if ( {v} < {k} ) {{ {w} = {v} ; }}"),
        2 => format!("if ( {v} ) {w} ++ ; else {w} -- ;"),
        3 => format!("for ( {v} = 0 ; {v} < {k} ; {v} ++ ) {w} += {v} ;"),
        4 => format!("while ( {v} > {k} ) {v} = {v} / 2 ;"),
        5 => format!("{v} = rand ( ) % {k} ;"),
        6 => format!("return {v} ;"),
        _ => format!("{v} = {w} * {k} + 1 ;"),
    }
}

/// `n` small C functions, ids `toy-00000`, `toy-00001`, ...
pub fn toy_corpus(n: usize, seed: u64) -> Vec<CorpusSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let body: Vec<String> = (0..rng.random_range(1..=4))
                .map(|_| statement(&mut rng))
                .collect();
            CorpusSample {
                source_id: format!("toy-{i:05}"),
                code: format!("int f ( int a ) {{ {} }}", body.join(" ")),
                expected_label: None,
            }
        })
        .collect()
}

/// Weights that give the toy corpus a mix of increases and decreases.
pub fn toy_weights() -> LinearBagConfig {
    let weights: BTreeMap<String, f64> = [
        ("if", 1.2),
        ("for", 0.9),
        ("while", 0.7),
        ("return", 0.4),
        ("rand", 0.8),
        ("int", -0.3),
        ("char", -0.6),
        ("else", -0.5),
        ("=", 0.15),
        ("<", -0.25),
        ("++", 0.35),
        (";", -0.05),
        ("0", -0.4),
        ("1", 0.2),
        ("buf", 0.5),
        ("tmp", -0.45),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    LinearBagConfig {
        bias: -0.3,
        weights,
    }
}

/// Filler tokens drawn from every category except control flow.
const FILLER: &[&str] = &[
    "x", "y", "=", "+", "42", "7", "int", "char", "const", "static", ";", "\"s\"",
];

/// Programs where the single planted `if` is the only token carrying weight.
/// `if` is never the first token.
pub fn planted_corpus(n: usize, seed: u64) -> Vec<CorpusSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let len = rng.random_range(3..=24);
            let at = rng.random_range(1..len);
            let tokens: Vec<&str> = (0..len)
                .map(|j| {
                    if j == at {
                        "if"
                    } else {
                        pick(&mut rng, FILLER)
                    }
                })
                .collect();
            CorpusSample {
                source_id: format!("planted-{i:04}"),
                code: tokens.join(" "),
                expected_label: None,
            }
        })
        .collect()
}
