use std::collections::BTreeMap;

use distractor_core::ddmin::{reduce, TraceStatus};
use distractor_core::distractor::analyze;
use distractor_core::model::{make_keyword_rule, make_linear_bag, KeywordRuleConfig, QueryCache};
use distractor_core::tokens::{render, tokenize, Language};
use distractor_core::trace_io::SampleOutcome;
use distractor_core::Threshold;
use proptest::prelude::*;

const C_LEXEMES: &[&str] = &[
    "if", "else", "while", "int", "char", "x", "y_1", "0", "42", "0x1f", "3.5e-2", "=", "==", "<",
    "<=", "++", "->", "&&", ";", "(", ")", "{", "}", "\"s t\"", "'c'", "static", "NUMBER",
];
const JAVA_LEXEMES: &[&str] = &[
    "public",
    "final",
    "String",
    "new",
    "this",
    "@",
    "Override",
    "qname",
    "$v",
    ">>>=",
    "::",
    "->",
    "1L",
    "2.0f",
    "!",
    ".",
    ":",
    "\"q\\\"\"",
    "instanceof",
];
const VOCAB: &[&str] = &["a", "b", "c", "if", "x", "0", ";"];

fn lexemes(table: &'static [&'static str]) -> impl Strategy<Value = Vec<&'static str>> {
    prop::collection::vec(prop::sample::select(table), 1..30)
}

fn weights() -> impl Strategy<Value = (f64, BTreeMap<String, f64>)> {
    (
        -1.5..1.5f64,
        prop::collection::vec(-2.0..2.0f64, VOCAB.len()).prop_map(|ws| {
            VOCAB
                .iter()
                .map(|t| t.to_string())
                .zip(ws)
                .collect::<BTreeMap<_, _>>()
        }),
    )
}

fn program_text() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(VOCAB), 1..24).prop_map(|v| v.join(" "))
}

proptest! {
    #[test]
    fn c_and_java_tokens_round_trip(c in lexemes(C_LEXEMES), j in lexemes(JAVA_LEXEMES)) {
        for (lang, toks) in [(Language::C, &c), (Language::Java, &j)] {
            let program = tokenize("p", &toks.join(" "), lang).unwrap();
            prop_assert_eq!(program.texts().collect::<Vec<_>>(), toks.clone());
            let again = tokenize("p", &render(&program), lang).unwrap();
            prop_assert_eq!(again, program);
        }
    }

    #[test]
    fn reductions_are_consistent((bias, w) in weights(), src in program_text()) {
        let program = tokenize("p", &src, Language::C).unwrap();
        let mut model = make_linear_bag(w, bias).unwrap();
        let trace = reduce(&program, &mut model, &QueryCache::new(), None).unwrap();
        prop_assert_eq!(trace.status, TraceStatus::Complete);

        let mut surviving: Vec<usize> = (0..program.len()).collect();
        for step in &trace.steps {
            prop_assert_eq!(&step.prediction.label, &trace.original_prediction.label);
            prop_assert!((0.0..=1.0).contains(&step.prediction.score));
            prop_assert!(!step.removed_tokens.is_empty());
            prop_assert!(!step.surviving_token_indices.is_empty());
            // removed tokens are exactly the set difference, in program order
            let removed: Vec<usize> = surviving
                .iter()
                .copied()
                .filter(|i| !step.surviving_token_indices.contains(i))
                .collect();
            let got: Vec<usize> = step.removed_tokens.iter().map(|t| t.index).collect();
            prop_assert_eq!(got, removed);
            prop_assert!(step.surviving_token_indices.windows(2).all(|p| p[0] < p[1]));
            prop_assert!(step.surviving_token_indices.iter().all(|i| surviving.contains(i)));
            surviving = step.surviving_token_indices.clone();
        }
        prop_assert_eq!(trace.final_indices(), surviving);
    }

    #[test]
    fn deltas_telescope((bias, w) in weights(), src in program_text()) {
        let program = tokenize("p", &src, Language::C).unwrap();
        let mut model = make_linear_bag(w, bias).unwrap();
        let trace = reduce(&program, &mut model, &QueryCache::new(), None).unwrap();
        let a = analyze(&trace, Threshold::DEFAULT);
        let sum: f64 = a.deltas.iter().map(|d| d.delta).sum();
        prop_assert!((sum - a.stats.end_to_end_delta).abs() < 1e-12);
        prop_assert!(a.stats.max_change <= 1.0);
        prop_assert!(a.stats.avg_change <= a.stats.max_change + 1e-15);
    }

    #[test]
    fn records_shrink_as_threshold_grows(
        (bias, w) in weights(),
        src in program_text(),
        t1 in 0.01..0.99f64,
        t2 in 0.01..0.99f64,
    ) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let program = tokenize("p", &src, Language::C).unwrap();
        let mut model = make_linear_bag(w, bias).unwrap();
        let trace = reduce(&program, &mut model, &QueryCache::new(), None).unwrap();
        let low = analyze(&trace, Threshold::new(lo).unwrap());
        let high = analyze(&trace, Threshold::new(hi).unwrap());
        prop_assert!(high.records.len() <= low.records.len());
        prop_assert!(high.records.iter().all(|r| low.records.contains(r)));
    }

    #[test]
    fn cache_does_not_change_traces((bias, w) in weights(), src in program_text()) {
        let program = tokenize("p", &src, Language::C).unwrap();
        let mut a = make_linear_bag(w.clone(), bias).unwrap();
        let mut b = make_linear_bag(w, bias).unwrap();
        let cache = QueryCache::new();
        let cached = reduce(&program, &mut a, &cache, None).unwrap();
        let again = reduce(&program, &mut a, &cache, None).unwrap();
        let uncached = reduce(&program, &mut b, &QueryCache::disabled(), None).unwrap();
        prop_assert_eq!(&cached, &uncached);
        prop_assert_eq!(&cached, &again);
        prop_assert!(a.model_calls() <= b.model_calls());
    }

    #[test]
    fn traces_survive_json_exactly((bias, w) in weights(), src in program_text()) {
        let program = tokenize("p", &src, Language::C).unwrap();
        let mut model = make_linear_bag(w, bias).unwrap();
        let outcome = SampleOutcome::Reduced(reduce(&program, &mut model, &QueryCache::new(), None).unwrap());
        let bytes = serde_json::to_vec(&outcome).unwrap();
        let back: SampleOutcome = serde_json::from_slice(&bytes).unwrap();
        prop_assert_eq!(back, outcome);
    }

    #[test]
    fn budget_caps_evaluations(src in program_text(), budget in 1u64..12) {
        let program = tokenize("p", &src, Language::C).unwrap();
        let mut model = make_keyword_rule(KeywordRuleConfig::new(["if"])).unwrap();
        let trace = reduce(&program, &mut model, &QueryCache::new(), Some(budget)).unwrap();
        prop_assert!(trace.total_queries <= budget);
        if trace.status == TraceStatus::BudgetExhausted {
            prop_assert!(!trace.final_is_one_minimal);
            prop_assert_eq!(trace.total_queries, budget);
        }
    }
}
