//! First-introduction timeline of the factoids that survive to the final revision.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::dump::{order_revisions, Revision, RevisionMeta};
use crate::factoid::{extract_internal_links, Factoid};

#[derive(Debug, thiserror::Error)]
pub enum TimelineError {
    #[error("article has no revisions")]
    NoRevisions,
    #[error(
        "time-based quadrants need one timestamp per revision (got {got}, expected {expected})"
    )]
    Timestamps { got: usize, expected: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactoidTimeline {
    pub final_factoids: BTreeSet<Factoid>,
    /// Ordinal of the first revision containing each final factoid.
    pub first_intro: BTreeMap<Factoid, usize>,
    /// Inverse of `first_intro`; ordinals with no introductions are absent.
    pub added_at: BTreeMap<usize, BTreeSet<Factoid>>,
    pub revision_count: usize,
}

impl FactoidTimeline {
    fn from_first_seen(
        final_factoids: BTreeSet<Factoid>,
        mut ordinal_of: impl FnMut(&Factoid) -> usize,
        revision_count: usize,
    ) -> Self {
        let mut first_intro = BTreeMap::new();
        let mut added_at: BTreeMap<usize, BTreeSet<Factoid>> = BTreeMap::new();
        for f in &final_factoids {
            let ord = ordinal_of(f);
            first_intro.insert(f.clone(), ord);
            added_at.entry(ord).or_default().insert(f.clone());
        }
        FactoidTimeline {
            final_factoids,
            first_intro,
            added_at,
            revision_count,
        }
    }

    /// Factoids first introduced at `ordinal` (empty when none).
    pub fn added(&self, ordinal: usize) -> &BTreeSet<Factoid> {
        static EMPTY: BTreeSet<Factoid> = BTreeSet::new();
        self.added_at.get(&ordinal).unwrap_or(&EMPTY)
    }
}

pub fn final_factoids(last: &Revision) -> BTreeSet<Factoid> {
    extract_internal_links(&last.text)
}

/// Builds the timeline of an ordered, nonempty revision sequence.
///
/// A factoid's first introduction is the earliest revision containing it,
/// even if it was later removed and re-added.
pub fn build_timeline(revisions: &[Revision]) -> Result<FactoidTimeline, TimelineError> {
    let last = revisions.last().ok_or(TimelineError::NoRevisions)?;
    let finals = final_factoids(last);
    let mut first_seen: HashMap<Factoid, usize> = HashMap::new();
    for (ord, rev) in revisions.iter().enumerate() {
        for f in extract_internal_links(&rev.text) {
            if finals.contains(&f) {
                first_seen.entry(f).or_insert(ord);
            }
        }
    }
    Ok(FactoidTimeline::from_first_seen(
        finals,
        |f| first_seen[f],
        revisions.len(),
    ))
}

type RevisionKey = (DateTime<Utc>, u64);

/// Accumulates a timeline from revisions arriving in any order.
///
/// Keeps the earliest `(timestamp, revision_id)` at which each factoid was
/// seen plus the link set of the latest revision so far, and drops the text.
#[derive(Debug, Default)]
pub struct TimelineBuilder {
    first_seen: HashMap<Factoid, RevisionKey>,
    latest: Option<(RevisionKey, BTreeSet<Factoid>)>,
    metas: Vec<RevisionMeta>,
}

impl TimelineBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_revision(&mut self, revision: Revision) {
        let links = extract_internal_links(&revision.text);
        self.push(revision.meta(), links);
    }

    pub fn push(&mut self, meta: RevisionMeta, links: BTreeSet<Factoid>) {
        let key = (meta.timestamp, meta.revision_id);
        for f in &links {
            match self.first_seen.get_mut(f) {
                Some(seen) if *seen <= key => {}
                Some(seen) => *seen = key,
                None => {
                    self.first_seen.insert(f.clone(), key);
                }
            }
        }
        if self.latest.as_ref().is_none_or(|(k, _)| key > *k) {
            self.latest = Some((key, links));
        }
        self.metas.push(meta);
    }

    /// Combines two partial builders; the result does not depend on the split.
    pub fn merge(mut self, other: TimelineBuilder) -> TimelineBuilder {
        let latest_other = other.latest;
        for (f, key) in other.first_seen {
            self.first_seen
                .entry(f)
                .and_modify(|k| *k = (*k).min(key))
                .or_insert(key);
        }
        match (&self.latest, latest_other) {
            (Some((a, _)), Some((b, links))) if b > *a => self.latest = Some((b, links)),
            (None, other) => self.latest = other,
            _ => {}
        }
        self.metas.extend(other.metas);
        self
    }

    pub fn len(&self) -> usize {
        self.metas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metas.is_empty()
    }

    /// Orders the collected metadata and resolves first introductions to ordinals.
    pub fn finish(self) -> Result<(Vec<RevisionMeta>, FactoidTimeline), TimelineError> {
        let (_, finals) = self.latest.ok_or(TimelineError::NoRevisions)?;
        let metas = order_revisions(self.metas);
        let ordinals: HashMap<RevisionKey, usize> = metas
            .iter()
            .map(|m| ((m.timestamp, m.revision_id), m.ordinal))
            .collect();
        let first_seen = self.first_seen;
        let timeline =
            FactoidTimeline::from_first_seen(finals, |f| ordinals[&first_seen[f]], metas.len());
        Ok((metas, timeline))
    }
}

/// `(ordinal, count)` for every ordinal in `0..revision_count`.
pub fn per_revision_counts(timeline: &FactoidTimeline) -> Vec<(usize, usize)> {
    (0..timeline.revision_count)
        .map(|ord| (ord, timeline.added(ord).len()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadrantMode {
    #[default]
    ByRevision,
    ByTime,
}

impl std::str::FromStr for QuadrantMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "by_revision" | "revision" => Ok(QuadrantMode::ByRevision),
            "by_time" | "time" => Ok(QuadrantMode::ByTime),
            other => Err(format!(
                "unknown quadrant mode {other:?} (by_revision|by_time)"
            )),
        }
    }
}

impl std::fmt::Display for QuadrantMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            QuadrantMode::ByRevision => "by_revision",
            QuadrantMode::ByTime => "by_time",
        })
    }
}

/// Fraction of first introductions falling in each quarter of an article's life.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrantShares {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
    pub counts: [usize; 4],
    /// False when the timeline has no final factoids; shares are then all zero.
    pub defined: bool,
}

impl QuadrantShares {
    pub fn as_array(&self) -> [f64; 4] {
        [self.q1, self.q2, self.q3, self.q4]
    }

    pub fn from_counts(counts: [usize; 4]) -> Self {
        let total: usize = counts.iter().sum();
        let share = |c: usize| {
            if total == 0 {
                0.0
            } else {
                c as f64 / total as f64
            }
        };
        QuadrantShares {
            q1: share(counts[0]),
            q2: share(counts[1]),
            q3: share(counts[2]),
            q4: share(counts[3]),
            counts,
            defined: total > 0,
        }
    }
}

fn revision_quadrant(ordinal: usize, revision_count: usize) -> usize {
    ((4 * ordinal) / revision_count.max(1)).min(3)
}

fn time_quadrant(ts: DateTime<Utc>, first: DateTime<Utc>, last: DateTime<Utc>) -> usize {
    let span = (last - first).num_milliseconds();
    if span <= 0 {
        return 0;
    }
    let offset = (ts - first).num_milliseconds().clamp(0, span);
    (((4 * offset as i128) / span as i128) as usize).min(3)
}

pub fn quadrant_shares(
    timeline: &FactoidTimeline,
    mode: QuadrantMode,
    timestamps: Option<&[DateTime<Utc>]>,
) -> Result<QuadrantShares, TimelineError> {
    if timeline.revision_count == 0 {
        return Err(TimelineError::NoRevisions);
    }
    let mut counts = [0usize; 4];
    match mode {
        QuadrantMode::ByRevision => {
            for &ord in timeline.first_intro.values() {
                counts[revision_quadrant(ord, timeline.revision_count)] += 1;
            }
        }
        QuadrantMode::ByTime => {
            let ts = timestamps.unwrap_or(&[]);
            if ts.len() != timeline.revision_count {
                return Err(TimelineError::Timestamps {
                    got: ts.len(),
                    expected: timeline.revision_count,
                });
            }
            let (first, last) = (ts[0], ts[ts.len() - 1]);
            for &ord in timeline.first_intro.values() {
                counts[time_quadrant(ts[ord], first, last)] += 1;
            }
        }
    }
    Ok(QuadrantShares::from_counts(counts))
}

/// `ordinal,revision_id,count` rows for every revision.
pub fn write_counts_csv<W: Write>(
    out: W,
    timeline: &FactoidTimeline,
    metas: &[RevisionMeta],
) -> Result<(), TimelineError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ordinal", "revision_id", "count"])?;
    for (ord, count) in per_revision_counts(timeline) {
        let id = metas
            .get(ord)
            .map(|m| m.revision_id.to_string())
            .unwrap_or_default();
        w.write_record([ord.to_string(), id, count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_quadrants_csv<W: Write>(out: W, shares: &QuadrantShares) -> Result<(), TimelineError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["q1", "q2", "q3", "q4"])?;
    w.write_record(shares.as_array().map(|q| format!("{q:.4}")))?;
    w.flush()?;
    Ok(())
}
