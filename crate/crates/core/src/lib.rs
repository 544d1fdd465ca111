//! Prediction-preserving program reduction for code models.
//!
//! A program is lexed into tokens, reduced with delta debugging while the
//! model keeps predicting the same label, and every accepted reduction step
//! is scored. Steps whose confidence shift reaches a threshold identify
//! distractor tokens, which are then aggregated into corpus-level reports.

pub mod corpus;
pub mod ddmin;
pub mod distractor;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod synth;
pub mod tokens;
pub mod trace_io;

pub use ddmin::{
    reduce, verify_one_minimal, ReduceError, ReductionStep, ReductionTrace, TraceStatus,
};
pub use distractor::{analyze, Analysis, DistractorRecord, SampleStats, StepDelta, Threshold};
pub use model::{ModelError, ModelHandle, ModelSpec, Prediction, QueryCache};
pub use tokens::{categorize, render, tokenize, Language, Program, Token, TokenCategory};
