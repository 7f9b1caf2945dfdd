//! End-to-end run: dump, timeline, RFFR, NGD scoring, network, report.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::dump::{read_records, RevisionMeta, RevisionReader};
use crate::network::{self, build_network, TriggerNetwork, DEFAULT_STRENGTH_CAP};
use crate::ngd::{
    self, score_pairs, threshold_filter, CorpusProvider, HitCache, HitProvider, NgdScore,
    ProviderError, ScoreError, ScoreOptions, WebConfig, WebProvider,
};
use crate::rffr::{
    self, build_rffr, cross_product, filter_nonempty, FactoidPair, RffrRow, WindowConfig,
};
use crate::timeline::{
    self, quadrant_shares, FactoidTimeline, QuadrantMode, QuadrantShares, TimelineBuilder,
};

/// Output file names inside the run directory.
pub mod files {
    pub const COUNTS: &str = "counts.csv";
    pub const QUADRANTS: &str = "quadrants.csv";
    pub const RFFR_ALL: &str = "rffr_all.csv";
    pub const RFFR: &str = "rffr.csv";
    pub const RFFR_CROSS: &str = "rffr_cross.csv";
    pub const RFFRG: &str = "rffrg.csv";
    pub const RFFRG_KEPT: &str = "rffrg_kept.csv";
    pub const NETWORK_CSV: &str = "network.csv";
    pub const NETWORK_DOT: &str = "network.dot";
    pub const NETWORK_GRAPHML: &str = "network.graphml";
    pub const SUMMARY_JSON: &str = "summary.json";
    pub const SUMMARY_TXT: &str = "summary.txt";
}

pub const PARTIAL_SUFFIX: &str = ".partial";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{stage}: {source}")]
    Input {
        stage: &'static str,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("{stage}: {source}")]
    Provider {
        stage: &'static str,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
}

impl PipelineError {
    fn input(stage: &'static str, e: impl std::error::Error + Send + Sync + 'static) -> Self {
        PipelineError::Input {
            stage,
            source: Box::new(e),
        }
    }

    fn provider(stage: &'static str, e: impl std::error::Error + Send + Sync + 'static) -> Self {
        PipelineError::Provider {
            stage,
            source: Box::new(e),
        }
    }

    /// Process exit code: 1 usage, 2 input, 3 provider.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Input { .. } => 2,
            PipelineError::Provider { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProviderConfig {
    Corpus {
        dir: PathBuf,
        words_multiplier: f64,
    },
    Web {
        endpoint: String,
        api_key_env: Option<String>,
        requests_per_second: f64,
        max_attempts: u32,
        words_multiplier: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub dump: PathBuf,
    pub title: Option<String>,
    pub window: WindowConfig,
    pub threshold: f64,
    pub quadrant_mode: QuadrantMode,
    pub provider: ProviderConfig,
    pub cache: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub jobs: usize,
    pub strength_cap: f64,
}

/// Recognized keys of the flat `key = value` config file; CLI flags use the
/// same names with `-` in place of `_`.
pub const CONFIG_KEYS: &[&str] = &[
    "dump",
    "title",
    "window",
    "window_dedup",
    "threshold",
    "quadrant_mode",
    "provider",
    "corpus_dir",
    "words_multiplier",
    "endpoint",
    "api_key_env",
    "rate_limit",
    "max_attempts",
    "cache",
    "out",
    "jobs",
    "strength_cap",
];

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_config_file(text: &str) -> Result<HashMap<String, String>, PipelineError> {
    let mut out = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            PipelineError::Config(format!("config line {}: expected key = value", idx + 1))
        })?;
        let key = key.trim().replace('-', "_");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(PipelineError::Config(format!(
                "config line {}: unknown key {key:?}",
                idx + 1
            )));
        }
        let value = value.trim().trim_matches('"').to_owned();
        out.insert(key, value);
    }
    Ok(out)
}

fn parse_flag<T: FromStr>(
    settings: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>, PipelineError> {
    settings
        .get(key)
        .map(|raw| {
            raw.parse()
                .map_err(|_| PipelineError::Config(format!("invalid value for {key}: {raw:?}")))
        })
        .transpose()
}

fn parse_switch(
    settings: &HashMap<String, String>,
    key: &str,
) -> Result<Option<bool>, PipelineError> {
    settings
        .get(key)
        .map(|raw| match raw.to_ascii_lowercase().as_str() {
            "on" | "true" | "yes" | "1" => Ok(true),
            "off" | "false" | "no" | "0" => Ok(false),
            _ => Err(PipelineError::Config(format!(
                "invalid value for {key}: {raw:?} (on|off)"
            ))),
        })
        .transpose()
}

impl PipelineConfig {
    /// Builds a config from a settings map, falling back to defaults.
    ///
    /// Layer the config file under the CLI flags before calling this:
    /// flags override file values, which override defaults.
    pub fn from_settings(settings: &HashMap<String, String>) -> Result<Self, PipelineError> {
        let get = |k: &str| settings.get(k).cloned();
        let dump = get("dump")
            .map(PathBuf::from)
            .ok_or_else(|| PipelineError::Config("a dump path is required".into()))?;
        let window = WindowConfig {
            size: parse_flag(settings, "window")?.unwrap_or(rffr::DEFAULT_WINDOW),
            distinct_users: parse_switch(settings, "window_dedup")?.unwrap_or(true),
        };
        let quadrant_mode = match get("quadrant_mode") {
            Some(m) => m.parse().map_err(PipelineError::Config)?,
            None => QuadrantMode::default(),
        };
        let provider = match get("provider").as_deref().unwrap_or("corpus") {
            "corpus" => ProviderConfig::Corpus {
                dir: get("corpus_dir").map(PathBuf::from).ok_or_else(|| {
                    PipelineError::Config("the corpus provider needs corpus_dir".into())
                })?,
                words_multiplier: parse_flag(settings, "words_multiplier")?.unwrap_or(1.0),
            },
            "web" => ProviderConfig::Web {
                endpoint: get("endpoint").ok_or_else(|| {
                    PipelineError::Config("the web provider needs an endpoint".into())
                })?,
                api_key_env: get("api_key_env"),
                requests_per_second: parse_flag(settings, "rate_limit")?.unwrap_or(1.0),
                max_attempts: parse_flag(settings, "max_attempts")?.unwrap_or(5),
                words_multiplier: parse_flag(settings, "words_multiplier")?
                    .unwrap_or(ngd::WEB_WORDS_MULTIPLIER),
            },
            other => {
                return Err(PipelineError::Config(format!(
                    "unknown provider {other:?} (corpus|web)"
                )))
            }
        };
        let config = PipelineConfig {
            dump,
            title: get("title"),
            window,
            threshold: parse_flag(settings, "threshold")?.unwrap_or(ngd::DEFAULT_THRESHOLD),
            quadrant_mode,
            provider,
            cache: get("cache").map(PathBuf::from),
            out_dir: get("out")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("out")),
            jobs: parse_flag(settings, "jobs")?.unwrap_or(1),
            strength_cap: parse_flag(settings, "strength_cap")?.unwrap_or(DEFAULT_STRENGTH_CAP),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.window.size == 0 {
            return Err(PipelineError::Config("window must be at least 1".into()));
        }
        if self.threshold.is_nan() || self.threshold < 0.0 {
            return Err(PipelineError::Config(
                "threshold must be non-negative".into(),
            ));
        }
        if self.jobs == 0 {
            return Err(PipelineError::Config("jobs must be at least 1".into()));
        }
        if self.strength_cap.is_nan() || self.strength_cap <= 0.0 {
            return Err(PipelineError::Config(
                "strength cap must be positive".into(),
            ));
        }
        Ok(())
    }
}

pub fn build_provider(config: &ProviderConfig) -> Result<Box<dyn HitProvider>, ProviderError> {
    Ok(match config {
        ProviderConfig::Corpus {
            dir,
            words_multiplier,
        } => Box::new(CorpusProvider::load(dir, *words_multiplier)?),
        ProviderConfig::Web {
            endpoint,
            api_key_env,
            requests_per_second,
            max_attempts,
            words_multiplier,
        } => {
            let mut cfg = WebConfig::new(endpoint.clone());
            cfg.api_key_env = api_key_env.clone();
            cfg.requests_per_second = *requests_per_second;
            cfg.max_attempts = *max_attempts;
            cfg.words_multiplier = *words_multiplier;
            cfg.initial_backoff = Duration::from_millis(500);
            Box::new(WebProvider::new(cfg)?)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub title: Option<String>,
    pub revisions: usize,
    pub final_factoids: usize,
    pub rffr_rows: usize,
    pub rffr_rows_nonempty: usize,
    pub cross_pairs: usize,
    pub scored_pairs: usize,
    pub failed_pairs: usize,
    pub pairs_within_threshold: usize,
    pub pairs_over_threshold: usize,
    pub network_nodes: usize,
    pub network_edges: usize,
    pub quadrant_mode: QuadrantMode,
    pub quadrants: QuadrantShares,
    pub min_ngd: Option<f64>,
    pub max_ngd: Option<f64>,
    pub threshold: f64,
    pub window: usize,
}

/// Summary plus run facts that are not part of the deterministic outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub provider_queries: usize,
    pub out_dir: PathBuf,
}

/// Files are written as `<name>.partial` and renamed by [`OutputDir::commit`].
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, PipelineError> {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::input("output", e))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn partial_path(&self, name: &str) -> PathBuf {
        self.dir.join(format!("{name}{PARTIAL_SUFFIX}"))
    }

    pub fn write_with<E, F>(
        &mut self,
        stage: &'static str,
        name: &str,
        f: F,
    ) -> Result<(), PipelineError>
    where
        E: std::error::Error + Send + Sync + 'static,
        F: FnOnce(&mut BufWriter<File>) -> Result<(), E>,
    {
        let path = self.partial_path(name);
        let file = File::create(&path).map_err(|e| PipelineError::input(stage, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w).map_err(|e| PipelineError::input(stage, e))?;
        w.flush().map_err(|e| PipelineError::input(stage, e))?;
        self.written.push(name.to_owned());
        Ok(())
    }

    pub fn write_str(
        &mut self,
        stage: &'static str,
        name: &str,
        text: &str,
    ) -> Result<(), PipelineError> {
        self.write_with(stage, name, |w| w.write_all(text.as_bytes()))
    }

    /// Renames every file written so far to its final name.
    pub fn commit(self) -> Result<(), PipelineError> {
        for name in &self.written {
            std::fs::rename(self.partial_path(name), self.dir.join(name))
                .map_err(|e| PipelineError::input("output", e))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RevisionSource {
    Dump {
        path: PathBuf,
        title: Option<String>,
    },
    /// NDJSON revision records written by the `ingest` command.
    Records(PathBuf),
}

#[derive(Debug, Clone)]
pub struct LoadedTimeline {
    pub title: Option<String>,
    pub metas: Vec<RevisionMeta>,
    pub timeline: FactoidTimeline,
}

/// Streams revisions into a timeline; only one revision text is held at a time.
pub fn load_timeline(source: &RevisionSource) -> Result<LoadedTimeline, PipelineError> {
    let mut builder = TimelineBuilder::new();
    let title = match source {
        RevisionSource::Dump { path, title } => {
            let file = File::open(path).map_err(|e| PipelineError::input("ingest", e))?;
            let mut reader = RevisionReader::new(BufReader::new(file), title.as_deref());
            for rev in reader.by_ref() {
                builder.push_revision(rev.map_err(|e| PipelineError::input("ingest", e))?);
            }
            reader.page_title().map(str::to_owned)
        }
        RevisionSource::Records(path) => {
            let file = File::open(path).map_err(|e| PipelineError::input("ingest", e))?;
            for rev in
                read_records(BufReader::new(file)).map_err(|e| PipelineError::input("ingest", e))?
            {
                builder.push_revision(rev);
            }
            None
        }
    };
    let (metas, timeline) = builder
        .finish()
        .map_err(|e| PipelineError::input("timeline", e))?;
    Ok(LoadedTimeline {
        title,
        metas,
        timeline,
    })
}

/// Writes `counts.csv` and `quadrants.csv`.
pub fn timeline_stage(
    out: &mut OutputDir,
    loaded: &LoadedTimeline,
    mode: QuadrantMode,
) -> Result<QuadrantShares, PipelineError> {
    let timestamps: Vec<_> = loaded.metas.iter().map(|m| m.timestamp).collect();
    let quadrants = quadrant_shares(&loaded.timeline, mode, Some(&timestamps))
        .map_err(|e| PipelineError::input("timeline", e))?;
    if !quadrants.defined {
        log::warn!("final revision has no factoids; quadrant shares are undefined");
    }
    out.write_with("timeline", files::COUNTS, |w| {
        timeline::write_counts_csv(w, &loaded.timeline, &loaded.metas)
    })?;
    out.write_with("timeline", files::QUADRANTS, |w| {
        timeline::write_quadrants_csv(w, &quadrants)
    })?;
    Ok(quadrants)
}

#[derive(Debug, Clone)]
pub struct RffrOutput {
    pub total_rows: usize,
    pub rows: Vec<RffrRow>,
    pub pairs: Vec<FactoidPair>,
}

/// Writes `rffr_all.csv`, `rffr.csv` and `rffr_cross.csv`.
pub fn rffr_stage(
    out: &mut OutputDir,
    loaded: &LoadedTimeline,
    window: WindowConfig,
) -> Result<RffrOutput, PipelineError> {
    let rows = build_rffr(&loaded.timeline, &loaded.metas, window)
        .map_err(|e| PipelineError::input("rffr", e))?;
    let total_rows = rows.len();
    out.write_with("rffr", files::RFFR_ALL, |w| rffr::write_rffr_csv(w, &rows))?;
    let rows = filter_nonempty(rows);
    out.write_with("rffr", files::RFFR, |w| rffr::write_rffr_csv(w, &rows))?;
    let pairs = cross_product(&rows);
    out.write_with("rffr", files::RFFR_CROSS, |w| {
        rffr::write_cross_csv(w, &pairs)
    })?;
    if rows.is_empty() {
        log::warn!("no RFFR rows survived filtering; the network will be empty");
    }
    Ok(RffrOutput {
        total_rows,
        rows,
        pairs,
    })
}

/// Scores pairs and writes `rffrg.csv`; returns the scores and provider calls made.
pub fn score_stage(
    out: &mut OutputDir,
    pairs: &[FactoidPair],
    provider: &dyn HitProvider,
    cache: Option<&Path>,
    jobs: usize,
) -> Result<(Vec<NgdScore>, usize), PipelineError> {
    let cache = match cache {
        Some(path) => HitCache::open(path).map_err(|e| PipelineError::input("score", e))?,
        None => HitCache::in_memory(),
    };
    let (scores, queries) = if pairs.is_empty() {
        (Vec::new(), 0)
    } else {
        let outcome =
            score_pairs(pairs, provider, &cache, ScoreOptions { jobs }).map_err(|e| match e {
                ScoreError::Provider(p) => provider_stage_error("score", p),
                other => PipelineError::provider("score", other),
            })?;
        if outcome.provider_failures > 0 {
            log::warn!(
                "{} of {} pairs could not be scored",
                outcome.provider_failures,
                pairs.len()
            );
        }
        (outcome.scores, outcome.queries)
    };
    out.write_with("score", files::RFFRG, |w| ngd::write_rffrg_csv(w, &scores))?;
    Ok((scores, queries))
}

/// Thresholds scores and writes `rffrg_kept.csv` plus the network exports.
pub fn network_stage(
    out: &mut OutputDir,
    scores: &[NgdScore],
    threshold: f64,
    strength_cap: f64,
) -> Result<(Vec<NgdScore>, TriggerNetwork), PipelineError> {
    let kept = threshold_filter(scores, threshold);
    out.write_with("network", files::RFFRG_KEPT, |w| {
        ngd::write_rffrg_csv(w, &kept)
    })?;
    let net = build_network(&kept, threshold, strength_cap);
    out.write_str("network", files::NETWORK_CSV, &network::export_csv(&net))?;
    out.write_str("network", files::NETWORK_DOT, &network::export_dot(&net))?;
    out.write_str(
        "network",
        files::NETWORK_GRAPHML,
        &network::export_graphml(&net),
    )?;
    Ok((kept, net))
}

/// Runs every stage with the configured provider.
pub fn run(config: &PipelineConfig) -> Result<RunOutcome, PipelineError> {
    config.validate()?;
    let provider =
        build_provider(&config.provider).map_err(|e| provider_stage_error("score", e))?;
    run_with_provider(config, provider.as_ref())
}

fn provider_stage_error(stage: &'static str, e: ProviderError) -> PipelineError {
    match e {
        ProviderError::Config(msg) => PipelineError::Config(msg),
        other => PipelineError::provider(stage, other),
    }
}

/// Runs every stage against an explicit provider.
pub fn run_with_provider(
    config: &PipelineConfig,
    provider: &dyn HitProvider,
) -> Result<RunOutcome, PipelineError> {
    config.validate()?;
    let mut out = OutputDir::create(&config.out_dir)?;
    let loaded = load_timeline(&RevisionSource::Dump {
        path: config.dump.clone(),
        title: config.title.clone(),
    })?;
    let quadrants = timeline_stage(&mut out, &loaded, config.quadrant_mode)?;
    let rffr = rffr_stage(&mut out, &loaded, config.window)?;
    let (scores, provider_queries) = score_stage(
        &mut out,
        &rffr.pairs,
        provider,
        config.cache.as_deref(),
        config.jobs,
    )?;
    let (kept, net) = network_stage(&mut out, &scores, config.threshold, config.strength_cap)?;

    let finite: Vec<f64> = scores
        .iter()
        .filter_map(|s| s.value)
        .filter(|v| v.is_finite())
        .collect();
    let summary = RunSummary {
        title: loaded.title.clone(),
        revisions: loaded.metas.len(),
        final_factoids: loaded.timeline.final_factoids.len(),
        rffr_rows: rffr.total_rows,
        rffr_rows_nonempty: rffr.rows.len(),
        cross_pairs: rffr.pairs.len(),
        scored_pairs: scores.iter().filter(|s| s.value.is_some()).count(),
        failed_pairs: scores.iter().filter(|s| s.value.is_none()).count(),
        pairs_within_threshold: kept.len(),
        pairs_over_threshold: scores
            .iter()
            .filter(|s| matches!(s.value, Some(v) if v > config.threshold))
            .count(),
        network_nodes: net.nodes.len(),
        network_edges: net.edges.len(),
        quadrant_mode: config.quadrant_mode,
        quadrants,
        min_ngd: finite.iter().copied().reduce(f64::min),
        max_ngd: finite.iter().copied().reduce(f64::max),
        threshold: config.threshold,
        window: config.window.size,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    out.write_str("summary", files::SUMMARY_JSON, &(json + "\n"))?;
    out.write_str(
        "summary",
        files::SUMMARY_TXT,
        &report(std::slice::from_ref(&summary)),
    )?;
    out.commit()?;

    Ok(RunOutcome {
        summary,
        provider_queries,
        out_dir: config.out_dir.clone(),
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}"))
        .unwrap_or_else(|| "-".to_owned())
}

type Field = (&'static str, fn(&RunSummary) -> Option<f64>, bool);

const FIELDS: &[Field] = &[
    ("revisions", |s| Some(s.revisions as f64), true),
    ("final factoids", |s| Some(s.final_factoids as f64), true),
    ("rffr rows", |s| Some(s.rffr_rows as f64), true),
    (
        "rffr rows (non-empty)",
        |s| Some(s.rffr_rows_nonempty as f64),
        true,
    ),
    ("rffr_cross pairs", |s| Some(s.cross_pairs as f64), true),
    ("scored pairs", |s| Some(s.scored_pairs as f64), true),
    ("failed pairs", |s| Some(s.failed_pairs as f64), true),
    (
        "pairs <= threshold",
        |s| Some(s.pairs_within_threshold as f64),
        true,
    ),
    (
        "pairs > threshold",
        |s| Some(s.pairs_over_threshold as f64),
        true,
    ),
    ("network nodes", |s| Some(s.network_nodes as f64), true),
    ("network edges", |s| Some(s.network_edges as f64), true),
    ("min ngd", |s| s.min_ngd, false),
    ("max ngd", |s| s.max_ngd, false),
    (
        "q1 share",
        |s| s.quadrants.defined.then_some(s.quadrants.q1),
        false,
    ),
    (
        "q2 share",
        |s| s.quadrants.defined.then_some(s.quadrants.q2),
        false,
    ),
    (
        "q3 share",
        |s| s.quadrants.defined.then_some(s.quadrants.q3),
        false,
    ),
    (
        "q4 share",
        |s| s.quadrants.defined.then_some(s.quadrants.q4),
        false,
    ),
];

/// Human-readable table of one or more run summaries.
///
/// With several summaries, each field also gets its min, mean and max across
/// articles, and quadrant shares are aggregated both per article (macro) and
/// over pooled counts (micro).
pub fn report(summaries: &[RunSummary]) -> String {
    let mut out = String::new();
    let width = 24;
    let fmt_val = |v: Option<f64>, integer: bool| match v {
        Some(x) if integer => format!("{}", x as u64),
        other => fmt_opt(other),
    };
    if let [s] = summaries {
        let _ = writeln!(out, "article: {}", s.title.as_deref().unwrap_or("-"));
        let _ = writeln!(
            out,
            "window: {}  threshold: {:.4}  quadrants: {}",
            s.window, s.threshold, s.quadrant_mode
        );
        let _ = writeln!(out, "{:<width$} {:>12}", "field", "value");
        for (name, get, integer) in FIELDS {
            let _ = writeln!(out, "{name:<width$} {:>12}", fmt_val(get(s), *integer));
        }
        return out;
    }

    let mut header = format!("{:<width$}", "field");
    for (i, s) in summaries.iter().enumerate() {
        let label = s.title.clone().unwrap_or_else(|| format!("#{}", i + 1));
        let _ = write!(header, " {label:>12}");
    }
    let _ = write!(header, " {:>12} {:>12} {:>12}", "min", "mean", "max");
    let _ = writeln!(out, "{}", header.trim_end());
    for (name, get, integer) in FIELDS {
        let values: Vec<Option<f64>> = summaries.iter().map(get).collect();
        let mut line = format!("{name:<width$}");
        for v in &values {
            let _ = write!(line, " {:>12}", fmt_val(*v, *integer));
        }
        let present: Vec<f64> = values.iter().flatten().copied().collect();
        let (min, mean, max) = if present.is_empty() {
            (None, None, None)
        } else {
            (
                present.iter().copied().reduce(f64::min),
                Some(present.iter().sum::<f64>() / present.len() as f64),
                present.iter().copied().reduce(f64::max),
            )
        };
        let _ = write!(
            line,
            " {:>12} {:>12} {:>12}",
            fmt_val(min, *integer),
            fmt_opt(mean),
            fmt_val(max, *integer)
        );
        let _ = writeln!(out, "{line}");
    }

    let defined: Vec<&QuadrantShares> = summaries
        .iter()
        .map(|s| &s.quadrants)
        .filter(|q| q.defined)
        .collect();
    if !defined.is_empty() {
        let mut macro_avg = [0.0; 4];
        let mut pooled = [0usize; 4];
        for q in &defined {
            for (k, v) in q.as_array().iter().enumerate() {
                macro_avg[k] += v / defined.len() as f64;
            }
            for (k, c) in q.counts.iter().enumerate() {
                pooled[k] += c;
            }
        }
        let micro = QuadrantShares::from_counts(pooled).as_array();
        let row = |xs: [f64; 4]| {
            xs.iter()
                .map(|x| format!("{x:.4}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(out, "{:<width$} {}", "quadrants (macro)", row(macro_avg));
        let _ = writeln!(out, "{:<width$} {}", "quadrants (micro)", row(micro));
    }
    out
}

/// Reads a `summary.json` written by [`run`].
pub fn read_summary(path: &Path) -> Result<RunSummary, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::input("report", e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::input("report", e))
}
