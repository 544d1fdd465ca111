use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use sha2::{Digest, Sha256};

use super::Prediction;
use crate::tokens::Program;

/// SHA-256 over the language id and the length-prefixed token texts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fingerprint([u8; 32]);

impl Fingerprint {
    pub fn of(program: &Program) -> Self {
        let mut hasher = Sha256::new();
        let lang = program.language.as_str().as_bytes();
        hasher.update((lang.len() as u64).to_le_bytes());
        hasher.update(lang);
        for text in program.texts() {
            hasher.update((text.len() as u64).to_le_bytes());
            hasher.update(text.as_bytes());
        }
        Fingerprint(hasher.finalize().into())
    }
}

/// Memoizes predictions by program fingerprint. Shareable across workers;
/// one cache must only ever front a single model configuration.
#[derive(Debug, Default)]
pub struct QueryCache {
    enabled: bool,
    entries: RwLock<HashMap<Fingerprint, Prediction>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl QueryCache {
    pub fn new() -> Self {
        QueryCache {
            enabled: true,
            ..Default::default()
        }
    }

    /// A cache that stores nothing; every lookup is a miss.
    pub fn disabled() -> Self {
        QueryCache::default()
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn get(&self, key: &Fingerprint) -> Option<Prediction> {
        let found = if self.enabled {
            self.entries
                .read()
                .expect("cache lock poisoned")
                .get(key)
                .cloned()
        } else {
            None
        };
        let counter = if found.is_some() {
            &self.hits
        } else {
            &self.misses
        };
        counter.fetch_add(1, Ordering::Relaxed);
        found
    }

    pub fn insert(&self, key: Fingerprint, prediction: Prediction) {
        if self.enabled {
            self.entries
                .write()
                .expect("cache lock poisoned")
                .insert(key, prediction);
        }
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
