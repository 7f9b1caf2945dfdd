//! Python bindings: `import triggernet_py`.

use pyo3::prelude::*;

#[pymodule]
mod triggernet_py {
    use std::fs::File;
    use std::io::BufReader;
    use std::path::PathBuf;

    use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
    use pyo3::prelude::*;
    use pyo3::types::PyDict;

    use triggernet::dump::{format_timestamp, order_revisions, parse_dump as parse};
    use triggernet::ngd::{HitCounts, HitProvider};
    use triggernet::pipeline::{self, PipelineConfig, ProviderConfig};
    use triggernet::{QuadrantMode, WindowConfig};

    fn json_to_py<'py>(
        py: Python<'py>,
        value: &impl serde::Serialize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let text =
            serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        py.import("json")?.call_method1("loads", (text,))
    }

    /// Canonical factoid for a link target, or None when it is not an article link.
    #[pyfunction]
    fn normalize_target(raw: &str) -> Option<String> {
        triggernet::normalize_target(raw).map(|f| f.into_string())
    }

    /// Sorted, de-duplicated factoids linked from a piece of wikitext.
    #[pyfunction]
    fn extract_internal_links(text: &str) -> Vec<String> {
        triggernet::extract_internal_links(text)
            .into_iter()
            .map(|f| f.into_string())
            .collect()
    }

    #[pyfunction]
    fn ngd(h_a: u64, h_b: u64, h_ab: u64, n: f64) -> PyResult<f64> {
        triggernet::ngd(&HitCounts::new(h_a, h_b, h_ab, n))
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Revisions of one page in chronological order, as dicts.
    #[pyfunction]
    #[pyo3(signature = (path, title=None, with_text=false))]
    fn parse_dump<'py>(
        py: Python<'py>,
        path: PathBuf,
        title: Option<&str>,
        with_text: bool,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let file = File::open(&path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        let revisions =
            parse(BufReader::new(file), title).map_err(|e| PyValueError::new_err(e.to_string()))?;
        order_revisions(revisions)
            .into_iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("ordinal", r.ordinal)?;
                d.set_item("revision_id", r.revision_id)?;
                d.set_item("timestamp", format_timestamp(&r.timestamp))?;
                d.set_item("contributor", r.contributor.to_string())?;
                d.set_item("byte_size", r.byte_size)?;
                if with_text {
                    d.set_item("text", r.text)?;
                }
                Ok(d)
            })
            .collect()
    }

    /// Final factoids, their first-introduction ordinals and quadrant counts.
    #[pyfunction]
    #[pyo3(signature = (path, title=None, quadrant_mode="by_revision"))]
    fn build_timeline<'py>(
        py: Python<'py>,
        path: PathBuf,
        title: Option<String>,
        quadrant_mode: &str,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mode: QuadrantMode = quadrant_mode.parse().map_err(PyValueError::new_err)?;
        let loaded = pipeline::load_timeline(&pipeline::RevisionSource::Dump { path, title })
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        let stamps: Vec<_> = loaded.metas.iter().map(|m| m.timestamp).collect();
        let shares = triggernet::quadrant_shares(&loaded.timeline, mode, Some(&stamps))
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        let d = PyDict::new(py);
        d.set_item("title", loaded.title)?;
        d.set_item("revisions", loaded.metas.len())?;
        let first = PyDict::new(py);
        for (f, ord) in &loaded.timeline.first_intro {
            first.set_item(f.as_str(), ord)?;
        }
        d.set_item("first_intro", first)?;
        d.set_item("quadrant_counts", shares.counts.to_vec())?;
        d.set_item("quadrant_shares", shares.as_array().to_vec())?;
        Ok(d)
    }

    /// Runs the whole pipeline against a local corpus; returns the run summary.
    #[pyfunction]
    #[pyo3(signature = (dump, corpus_dir, out, title=None, window=5, threshold=0.5, cache=None, jobs=1))]
    #[allow(clippy::too_many_arguments)]
    fn run<'py>(
        py: Python<'py>,
        dump: PathBuf,
        corpus_dir: PathBuf,
        out: PathBuf,
        title: Option<String>,
        window: usize,
        threshold: f64,
        cache: Option<PathBuf>,
        jobs: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let config = PipelineConfig {
            dump,
            title,
            window: WindowConfig {
                size: window,
                distinct_users: true,
            },
            threshold,
            quadrant_mode: QuadrantMode::ByRevision,
            provider: ProviderConfig::Corpus {
                dir: corpus_dir,
                words_multiplier: 1.0,
            },
            cache,
            out_dir: out,
            jobs,
            strength_cap: triggernet::network::DEFAULT_STRENGTH_CAP,
        };
        let outcome = py
            .detach(|| pipeline::run(&config))
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        json_to_py(py, &outcome.summary)
    }

    /// Hit counts over a directory of plain-text documents.
    #[pyclass(frozen)]
    struct CorpusProvider {
        inner: triggernet::ngd::CorpusProvider,
    }

    #[pymethods]
    impl CorpusProvider {
        #[new]
        #[pyo3(signature = (directory, words_multiplier=1.0))]
        fn new(directory: PathBuf, words_multiplier: f64) -> PyResult<Self> {
            triggernet::ngd::CorpusProvider::load(directory, words_multiplier)
                .map(|inner| CorpusProvider { inner })
                .map_err(|e| PyIOError::new_err(e.to_string()))
        }

        fn hits(&self, phrase: &str) -> PyResult<u64> {
            self.inner
                .hits(phrase)
                .map_err(|e| PyRuntimeError::new_err(e.to_string()))
        }

        fn pair_hits(&self, a: &str, b: &str) -> PyResult<u64> {
            self.inner
                .pair_hits(a, b)
                .map_err(|e| PyRuntimeError::new_err(e.to_string()))
        }

        fn scale(&self) -> PyResult<f64> {
            self.inner
                .scale()
                .map_err(|e| PyRuntimeError::new_err(e.to_string()))
        }

        #[getter]
        fn document_count(&self) -> u64 {
            self.inner.document_count()
        }

        /// NGD of two phrases over this corpus.
        fn ngd(&self, a: &str, b: &str) -> PyResult<f64> {
            let counts = HitCounts::new(
                self.hits(a)?,
                self.hits(b)?,
                self.pair_hits(a, b)?,
                self.scale()?,
            );
            triggernet::ngd(&counts).map_err(|e| PyValueError::new_err(e.to_string()))
        }

        fn __repr__(&self) -> String {
            format!("CorpusProvider(documents={})", self.inner.document_count())
        }
    }
}
