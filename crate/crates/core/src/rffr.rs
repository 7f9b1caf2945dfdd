//! Pairing of factoid additions in nearby revisions by different contributors.
//!
//! For each revision `i`, the window holds the next revisions made by users
//! other than the author of `i`. Every `(i, j)` pair in the window becomes a
//! row holding the factoids first introduced in each revision; rows with an
//! empty side are dropped, and the survivors are expanded into factoid pairs.

use std::collections::{BTreeSet, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::dump::{ContributorId, RevisionMeta};
use crate::factoid::Factoid;
use crate::timeline::FactoidTimeline;

pub const DEFAULT_WINDOW: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum RffrError {
    #[error("window size must be at least 1")]
    EmptyWindow,
    #[error("timeline covers {timeline} revisions but {metas} were supplied")]
    Mismatch { timeline: usize, metas: usize },
    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub size: usize,
    /// Skip revisions whose author was already collected in the window.
    pub distinct_users: bool,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            size: DEFAULT_WINDOW,
            distinct_users: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RffrRow {
    pub rev_i: usize,
    pub rev_i_id: u64,
    pub user_i: ContributorId,
    pub factoids_i: BTreeSet<Factoid>,
    pub factoids_j: BTreeSet<Factoid>,
    pub rev_j: usize,
    pub rev_j_id: u64,
    pub user_j: ContributorId,
}

/// One element of a row's cross product: `a` was added at `rev_i`, `b` at `rev_j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FactoidPair {
    pub rev_i: usize,
    pub rev_i_id: u64,
    pub a: Factoid,
    pub b: Factoid,
    pub rev_j: usize,
    pub rev_j_id: u64,
}

/// Ordinals after `i` that fall in its window, in increasing order.
pub fn window_revisions(
    contributors: &[ContributorId],
    i: usize,
    window: WindowConfig,
) -> Vec<usize> {
    let Some(author) = contributors.get(i) else {
        return Vec::new();
    };
    let mut seen: HashSet<&ContributorId> = HashSet::new();
    let mut out = Vec::with_capacity(window.size);
    for (j, user) in contributors.iter().enumerate().skip(i + 1) {
        if out.len() >= window.size {
            break;
        }
        if user == author {
            continue;
        }
        if window.distinct_users && !seen.insert(user) {
            continue;
        }
        out.push(j);
    }
    out
}

/// All `(i, j)` rows, empty factoid sets included, in `(i, j)` order.
pub fn build_rffr(
    timeline: &FactoidTimeline,
    metas: &[RevisionMeta],
    window: WindowConfig,
) -> Result<Vec<RffrRow>, RffrError> {
    if window.size == 0 {
        return Err(RffrError::EmptyWindow);
    }
    if metas.len() != timeline.revision_count {
        return Err(RffrError::Mismatch {
            timeline: timeline.revision_count,
            metas: metas.len(),
        });
    }
    let contributors: Vec<ContributorId> = metas.iter().map(|m| m.contributor.clone()).collect();
    let mut rows = Vec::new();
    for i in 0..metas.len() {
        for j in window_revisions(&contributors, i, window) {
            rows.push(RffrRow {
                rev_i: i,
                rev_i_id: metas[i].revision_id,
                user_i: metas[i].contributor.clone(),
                factoids_i: timeline.added(i).clone(),
                factoids_j: timeline.added(j).clone(),
                rev_j: j,
                rev_j_id: metas[j].revision_id,
                user_j: metas[j].contributor.clone(),
            });
        }
    }
    Ok(rows)
}

pub fn filter_nonempty(rows: Vec<RffrRow>) -> Vec<RffrRow> {
    rows.into_iter()
        .filter(|r| !r.factoids_i.is_empty() && !r.factoids_j.is_empty())
        .collect()
}

/// Expands each row into `|factoids_i| * |factoids_j|` pairs, ordered by `(a, b)` within a row.
pub fn cross_product(rows: &[RffrRow]) -> Vec<FactoidPair> {
    let total = rows
        .iter()
        .map(|r| r.factoids_i.len() * r.factoids_j.len())
        .sum();
    let mut out = Vec::with_capacity(total);
    for row in rows {
        for a in &row.factoids_i {
            for b in &row.factoids_j {
                out.push(FactoidPair {
                    rev_i: row.rev_i,
                    rev_i_id: row.rev_i_id,
                    a: a.clone(),
                    b: b.clone(),
                    rev_j: row.rev_j,
                    rev_j_id: row.rev_j_id,
                });
            }
        }
    }
    out
}

fn join_factoids(set: &BTreeSet<Factoid>) -> String {
    set.iter()
        .map(Factoid::as_str)
        .collect::<Vec<_>>()
        .join(";")
}

pub fn write_rffr_csv<W: Write>(out: W, rows: &[RffrRow]) -> Result<(), RffrError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "rev_i",
        "rev_i_id",
        "user_i",
        "factoids_i",
        "factoids_j",
        "rev_j",
        "rev_j_id",
        "user_j",
    ])?;
    for r in rows {
        w.write_record([
            r.rev_i.to_string(),
            r.rev_i_id.to_string(),
            r.user_i.to_string(),
            join_factoids(&r.factoids_i),
            join_factoids(&r.factoids_j),
            r.rev_j.to_string(),
            r.rev_j_id.to_string(),
            r.user_j.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_cross_csv<W: Write>(out: W, pairs: &[FactoidPair]) -> Result<(), RffrError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rev_i", "rev_i_id", "a", "b", "rev_j", "rev_j_id"])?;
    for p in pairs {
        w.write_record([
            p.rev_i.to_string(),
            p.rev_i_id.to_string(),
            p.a.to_string(),
            p.b.to_string(),
            p.rev_j.to_string(),
            p.rev_j_id.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a file written by [`write_cross_csv`].
pub fn read_cross_csv<R: Read>(input: R) -> Result<Vec<FactoidPair>, RffrError> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |message: String| RffrError::BadRow {
            row: idx + 1,
            message,
        };
        if rec.len() != 6 {
            return Err(bad(format!("expected 6 fields, found {}", rec.len())));
        }
        let num = |k: usize| -> Result<u64, RffrError> {
            rec[k]
                .parse()
                .map_err(|_| bad(format!("field {k} is not an integer: {:?}", &rec[k])))
        };
        let factoid = |k: usize| -> Result<Factoid, RffrError> {
            Factoid::new(&rec[k]).ok_or_else(|| bad(format!("invalid factoid {:?}", &rec[k])))
        };
        out.push(FactoidPair {
            rev_i: num(0)? as usize,
            rev_i_id: num(1)?,
            a: factoid(2)?,
            b: factoid(3)?,
            rev_j: num(4)? as usize,
            rev_j_id: num(5)?,
        });
    }
    Ok(out)
}
