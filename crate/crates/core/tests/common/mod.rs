#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use triggernet::ngd::{CorpusProvider, HitProvider, ProviderError, ScaleBasis};
use triggernet::pipeline::{PipelineConfig, ProviderConfig};
use triggernet::QuadrantMode;
use triggernet::WindowConfig;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn article() -> PathBuf {
    fixtures().join("article.xml")
}

pub fn corpus_dir() -> PathBuf {
    fixtures().join("corpus")
}

pub fn config(out: &Path, cache: Option<PathBuf>) -> PipelineConfig {
    PipelineConfig {
        dump: article(),
        title: None,
        window: WindowConfig::default(),
        threshold: 0.5,
        quadrant_mode: QuadrantMode::ByRevision,
        provider: ProviderConfig::Corpus {
            dir: corpus_dir(),
            words_multiplier: 1.0,
        },
        cache,
        out_dir: out.to_path_buf(),
        jobs: 1,
        strength_cap: 100.0,
    }
}

/// Wraps a provider and counts the queries that reach it.
pub struct Counting<P> {
    pub inner: P,
    pub calls: AtomicUsize,
}

impl<P> Counting<P> {
    pub fn new(inner: P) -> Self {
        Counting {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<P: HitProvider> HitProvider for Counting<P> {
    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }
    fn hits(&self, phrase: &str) -> Result<u64, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.hits(phrase)
    }
    fn pair_hits(&self, a: &str, b: &str) -> Result<u64, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.pair_hits(a, b)
    }
    fn scale_basis(&self) -> ScaleBasis {
        self.inner.scale_basis()
    }
    fn words_multiplier(&self) -> f64 {
        self.inner.words_multiplier()
    }
}

pub fn corpus() -> CorpusProvider {
    CorpusProvider::load(corpus_dir(), 1.0).unwrap()
}

pub fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}
