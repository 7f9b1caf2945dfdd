//! Normalized Google Distance over factoid pairs.
//!
//! ```text
//!              max(log h(a), log h(b)) - log h(a,b)
//! NGD(a, b) = --------------------------------------
//!                 log N - min(log h(a), log h(b))
//! ```
//!
//! `h` counts come from a [`HitProvider`]; `N` is the provider's scale
//! estimate. The value is a ratio of log differences and therefore does not
//! depend on the logarithm base; base 10 is used throughout.

mod cache;
mod corpus;
mod provider;
mod web;

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::factoid::Factoid;
use crate::rffr::FactoidPair;

pub use cache::{normalize_phrase, CacheError, HitCache};
pub use corpus::{tokenize, CorpusProvider};
pub use provider::{HitProvider, ProviderError, ScaleBasis};
pub use web::{WebConfig, WebProvider};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Words-per-page multiplier applied to a web page-count estimate.
pub const WEB_WORDS_MULTIPLIER: f64 = 1000.0;

/// Largest tolerated share of pairs whose lookups failed before a run aborts.
pub const MAX_FAILURE_RATIO: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NgdError {
    #[error("zero hits for phrase {}", match .0 { Side::A => "a", Side::B => "b" })]
    ZeroHits(Side),
    #[error("scale {scale} must exceed the largest single-phrase count {max}")]
    InvalidScale { scale: f64, max: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitCounts {
    pub h_a: u64,
    pub h_b: u64,
    pub h_ab: u64,
    pub n_scale: f64,
}

impl HitCounts {
    pub fn new(h_a: u64, h_b: u64, h_ab: u64, n_scale: f64) -> Self {
        HitCounts {
            h_a,
            h_b,
            h_ab,
            n_scale,
        }
    }

    /// Caps `h_ab` at `min(h_a, h_b)`; the flag reports whether the cap applied.
    pub fn clamped(self) -> (HitCounts, bool) {
        let cap = self.h_a.min(self.h_b);
        if self.h_ab > cap {
            (HitCounts { h_ab: cap, ..self }, true)
        } else {
            (self, false)
        }
    }
}

/// Evaluates NGD for one set of counts; `h_ab == 0` yields `+inf`.
pub fn ngd(counts: &HitCounts) -> Result<f64, NgdError> {
    if counts.h_a == 0 {
        return Err(NgdError::ZeroHits(Side::A));
    }
    if counts.h_b == 0 {
        return Err(NgdError::ZeroHits(Side::B));
    }
    let max_h = counts.h_a.max(counts.h_b);
    if counts.n_scale.is_nan() || counts.n_scale <= max_h as f64 {
        return Err(NgdError::InvalidScale {
            scale: counts.n_scale,
            max: max_h,
        });
    }
    let (c, _) = counts.clamped();
    if c.h_ab == 0 {
        return Ok(f64::INFINITY);
    }
    let la = (c.h_a as f64).log10();
    let lb = (c.h_b as f64).log10();
    let lab = (c.h_ab as f64).log10();
    let numerator = (la.max(lb) - lab).max(0.0);
    let denominator = c.n_scale.log10() - la.min(lb);
    Ok(numerator / denominator)
}

/// One scored factoid pair; a row of RFFRG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgdScore {
    pub pair: FactoidPair,
    /// Raw counts as reported by the provider, before clamping.
    pub counts: Option<HitCounts>,
    pub value: Option<f64>,
    /// Whether `h_ab` exceeded `min(h_a, h_b)` and was capped.
    pub clamped: bool,
    pub error: Option<String>,
}

impl NgdScore {
    pub fn is_ok(&self) -> bool {
        self.value.is_some()
    }
}

/// Keeps scores with a value at most `tau`, preserving order.
pub fn threshold_filter(scores: &[NgdScore], tau: f64) -> Vec<NgdScore> {
    scores
        .iter()
        .filter(|s| matches!(s.value, Some(v) if v <= tau))
        .cloned()
        .collect()
}

/// `N` for a provider, routing any probe query through the cache.
pub fn estimate_scale(provider: &dyn HitProvider, cache: &HitCache) -> Result<f64, ProviderError> {
    scale_with_probe(provider, cache).map(|(n, _)| n)
}

fn scale_with_probe(
    provider: &dyn HitProvider,
    cache: &HitCache,
) -> Result<(f64, bool), ProviderError> {
    let multiplier = provider.words_multiplier();
    let mut probed = false;
    let pages = match provider.scale_basis() {
        ScaleBasis::Documents(n) => n,
        ScaleBasis::ProbeTerm(term) => {
            let fp = provider.fingerprint();
            match cache.get_term(&fp, &term) {
                Some(n) => n,
                None => {
                    probed = true;
                    let n = provider
                        .hits(&term)
                        .map_err(|e| ProviderError::ScaleUnavailable(e.to_string()))?;
                    cache.put_term(&fp, &term, n)?;
                    n
                }
            }
        }
    };
    if pages == 0 {
        return Err(ProviderError::ScaleUnavailable(
            "scale probe reported zero pages".into(),
        ));
    }
    Ok((pages as f64 * multiplier, probed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoreOptions {
    /// Provider queries in flight at once.
    pub jobs: usize,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        ScoreOptions { jobs: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreOutcome {
    pub scores: Vec<NgdScore>,
    pub scale: f64,
    /// Provider calls issued during this run (cache misses).
    pub queries: usize,
    /// Pairs whose counts could not be obtained from the provider.
    pub provider_failures: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum ScoreError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("{failed} of {total} pairs failed provider lookups; aborting")]
    TooManyFailures { failed: usize, total: usize },
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Query {
    Term(String),
    Pair(String, String),
}

fn pair_key(a: &str, b: &str) -> (String, String) {
    let (a, b) = (normalize_phrase(a), normalize_phrase(b));
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Runs `queries` against the provider with up to `jobs` in flight and stores
/// each answer in the cache. Returns the failures by query.
fn run_queries(
    provider: &dyn HitProvider,
    cache: &HitCache,
    fingerprint: &str,
    queries: &[(Query, &str, &str)],
    jobs: usize,
) -> Result<HashMap<Query, String>, ProviderError> {
    let next = AtomicUsize::new(0);
    let failures = Mutex::new(HashMap::new());
    let fatal = Mutex::new(None);
    std::thread::scope(|s| {
        for _ in 0..jobs.max(1).min(queries.len().max(1)) {
            s.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                let Some((query, a, b)) = queries.get(idx) else {
                    break;
                };
                let answer = match query {
                    Query::Term(_) => provider.hits(a),
                    Query::Pair(..) => provider.pair_hits(a, b),
                };
                let stored = match answer {
                    Ok(n) => match query {
                        Query::Term(_) => cache.put_term(fingerprint, a, n),
                        Query::Pair(..) => cache.put_pair(fingerprint, a, b, n),
                    },
                    Err(e) => {
                        failures
                            .lock()
                            .unwrap()
                            .insert(query.clone(), e.to_string());
                        Ok(())
                    }
                };
                if let Err(e) = stored {
                    fatal.lock().unwrap().get_or_insert(ProviderError::from(e));
                }
            });
        }
    });
    if let Some(e) = fatal.into_inner().unwrap() {
        return Err(e);
    }
    Ok(failures.into_inner().unwrap())
}

/// Scores each pair, consulting the cache before the provider.
///
/// Each distinct phrase and unordered phrase pair is queried at most once.
/// Pair counts are only requested when both phrases have hits. Output order
/// matches input order.
pub fn score_pairs(
    pairs: &[FactoidPair],
    provider: &dyn HitProvider,
    cache: &HitCache,
    options: ScoreOptions,
) -> Result<ScoreOutcome, ScoreError> {
    let fp = provider.fingerprint();
    let (scale, probed) = scale_with_probe(provider, cache)?;

    let mut terms: BTreeSet<(String, &str)> = BTreeSet::new();
    for p in pairs {
        terms.insert((normalize_phrase(p.a.as_str()), p.a.as_str()));
        terms.insert((normalize_phrase(p.b.as_str()), p.b.as_str()));
    }
    let mut seen = BTreeSet::new();
    let term_queries: Vec<(Query, &str, &str)> = terms
        .iter()
        .filter(|(key, _)| seen.insert(key.clone()))
        .filter(|(_, raw)| cache.get_term(&fp, raw).is_none())
        .map(|(key, raw)| (Query::Term(key.clone()), *raw, ""))
        .collect();
    let mut queries = term_queries.len() + usize::from(probed);
    let mut failures = run_queries(provider, cache, &fp, &term_queries, options.jobs)?;

    let term_hits = |raw: &str| cache.get_term(&fp, raw);
    let mut seen = BTreeSet::new();
    let pair_queries: Vec<(Query, &str, &str)> = pairs
        .iter()
        .filter(|p| matches!(term_hits(p.a.as_str()), Some(n) if n > 0))
        .filter(|p| matches!(term_hits(p.b.as_str()), Some(n) if n > 0))
        .filter(|p| seen.insert(pair_key(p.a.as_str(), p.b.as_str())))
        .filter(|p| cache.get_pair(&fp, p.a.as_str(), p.b.as_str()).is_none())
        .map(|p| {
            let (x, y) = pair_key(p.a.as_str(), p.b.as_str());
            (Query::Pair(x, y), p.a.as_str(), p.b.as_str())
        })
        .collect();
    queries += pair_queries.len();
    failures.extend(run_queries(
        provider,
        cache,
        &fp,
        &pair_queries,
        options.jobs,
    )?);

    let mut provider_failures = 0;
    let mut scores = Vec::with_capacity(pairs.len());
    for p in pairs {
        let (a, b) = (p.a.as_str(), p.b.as_str());
        let lookup_failure = [
            Query::Term(normalize_phrase(a)),
            Query::Term(normalize_phrase(b)),
        ]
        .into_iter()
        .chain({
            let (x, y) = pair_key(a, b);
            std::iter::once(Query::Pair(x, y))
        })
        .find_map(|q| failures.get(&q).cloned());
        if let Some(err) = lookup_failure {
            provider_failures += 1;
            scores.push(NgdScore {
                pair: p.clone(),
                counts: None,
                value: None,
                clamped: false,
                error: Some(format!("provider: {err}")),
            });
            continue;
        }
        let h_a = term_hits(a).unwrap_or(0);
        let h_b = term_hits(b).unwrap_or(0);
        let h_ab = if h_a > 0 && h_b > 0 {
            cache.get_pair(&fp, a, b).unwrap_or(0)
        } else {
            0
        };
        let counts = HitCounts::new(h_a, h_b, h_ab, scale);
        let (_, clamped) = counts.clamped();
        let score = match ngd(&counts) {
            Ok(v) => NgdScore {
                pair: p.clone(),
                counts: Some(counts),
                value: Some(v),
                clamped,
                error: None,
            },
            Err(e) => {
                let message = match e {
                    NgdError::ZeroHits(Side::A) => format!("no hits for {a:?}"),
                    NgdError::ZeroHits(Side::B) => format!("no hits for {b:?}"),
                    other => other.to_string(),
                };
                NgdScore {
                    pair: p.clone(),
                    counts: Some(counts),
                    value: None,
                    clamped,
                    error: Some(message),
                }
            }
        };
        scores.push(score);
    }

    if !pairs.is_empty() && provider_failures as f64 > MAX_FAILURE_RATIO * pairs.len() as f64 {
        return Err(ScoreError::TooManyFailures {
            failed: provider_failures,
            total: pairs.len(),
        });
    }
    Ok(ScoreOutcome {
        scores,
        scale,
        queries,
        provider_failures,
    })
}

/// Shortest text that parses back to the same `f64`; `inf` for infinity.
pub fn format_value(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_owned()
    } else {
        format!("{v}")
    }
}

pub fn parse_value(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" => Some(f64::INFINITY),
        other => other.parse().ok(),
    }
}

const RFFRG_HEADER: [&str; 13] = [
    "rev_i", "rev_i_id", "a", "b", "rev_j", "rev_j_id", "h_a", "h_b", "h_ab", "n", "ngd",
    "clamped", "error",
];

#[derive(Debug, thiserror::Error)]
pub enum RffrgError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },
}

pub fn write_rffrg_csv<W: Write>(out: W, scores: &[NgdScore]) -> Result<(), RffrgError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RFFRG_HEADER)?;
    for s in scores {
        let p = &s.pair;
        let (h_a, h_b, h_ab, n) = match &s.counts {
            Some(c) => (
                c.h_a.to_string(),
                c.h_b.to_string(),
                c.h_ab.to_string(),
                format_value(c.n_scale),
            ),
            None => Default::default(),
        };
        w.write_record([
            p.rev_i.to_string(),
            p.rev_i_id.to_string(),
            p.a.to_string(),
            p.b.to_string(),
            p.rev_j.to_string(),
            p.rev_j_id.to_string(),
            h_a,
            h_b,
            h_ab,
            n,
            s.value.map(format_value).unwrap_or_default(),
            s.clamped.to_string(),
            s.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a file written by [`write_rffrg_csv`].
pub fn read_rffrg_csv<R: Read>(input: R) -> Result<Vec<NgdScore>, RffrgError> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |message: String| RffrgError::BadRow {
            row: idx + 1,
            message,
        };
        if rec.len() != RFFRG_HEADER.len() {
            return Err(bad(format!(
                "expected {} fields, found {}",
                RFFRG_HEADER.len(),
                rec.len()
            )));
        }
        let int = |k: usize| -> Result<u64, RffrgError> {
            rec[k].parse().map_err(|_| {
                bad(format!(
                    "{} is not an integer: {:?}",
                    RFFRG_HEADER[k], &rec[k]
                ))
            })
        };
        let factoid = |k: usize| -> Result<Factoid, RffrgError> {
            Factoid::new(&rec[k]).ok_or_else(|| bad(format!("invalid factoid {:?}", &rec[k])))
        };
        let pair = FactoidPair {
            rev_i: int(0)? as usize,
            rev_i_id: int(1)?,
            a: factoid(2)?,
            b: factoid(3)?,
            rev_j: int(4)? as usize,
            rev_j_id: int(5)?,
        };
        let counts = if rec[6].is_empty() {
            None
        } else {
            let n = parse_value(&rec[9]).ok_or_else(|| bad(format!("bad scale {:?}", &rec[9])))?;
            Some(HitCounts::new(int(6)?, int(7)?, int(8)?, n))
        };
        let value = if rec[10].is_empty() {
            None
        } else {
            Some(parse_value(&rec[10]).ok_or_else(|| bad(format!("bad ngd {:?}", &rec[10])))?)
        };
        out.push(NgdScore {
            pair,
            counts,
            value,
            clamped: &rec[11] == "true",
            error: (!rec[12].is_empty()).then(|| rec[12].to_owned()),
        });
    }
    Ok(out)
}
