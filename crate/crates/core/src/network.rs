//! Triggering network: factoids joined by edges whose strength is `1 / NGD`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Read;

use quick_xml::escape::escape;
use serde::{Deserialize, Serialize};

use crate::factoid::Factoid;
use crate::ngd::{format_value, parse_value, NgdScore};

/// Strength given to edges whose NGD is exactly zero.
pub const DEFAULT_STRENGTH_CAP: f64 = 100.0;

/// Lightest gray used for the weakest edge; the strongest is black.
const LIGHTEST_GRAY: f64 = 200.0;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub rev_i: usize,
    pub rev_i_id: u64,
    pub rev_j: usize,
    pub rev_j_id: u64,
    /// True when the edge's `a` endpoint is the factoid added at `rev_i`.
    pub a_first: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: Factoid,
    pub b: Factoid,
    pub ngd: f64,
    pub strength: f64,
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerNetwork {
    pub nodes: BTreeSet<Factoid>,
    /// Sorted by `(a, b)`, with `a < b`.
    pub edges: Vec<Edge>,
    pub threshold: f64,
    pub strength_cap: f64,
}

pub fn strength(ngd: f64, cap: f64) -> f64 {
    if ngd > 0.0 {
        1.0 / ngd
    } else {
        cap
    }
}

/// Merges scores at or below `tau` into one undirected edge per factoid pair.
///
/// Repeated pairs keep the minimum NGD and the union of their provenance.
/// Scores without a value and self-pairs are ignored.
pub fn build_network(scores: &[NgdScore], tau: f64, strength_cap: f64) -> TriggerNetwork {
    let mut merged: BTreeMap<(Factoid, Factoid), (f64, BTreeSet<Provenance>)> = BTreeMap::new();
    for s in scores {
        let Some(v) = s.value else { continue };
        if v.is_nan() || v > tau || s.pair.a == s.pair.b {
            continue;
        }
        let p = &s.pair;
        let a_first = p.a < p.b;
        let key = if a_first {
            (p.a.clone(), p.b.clone())
        } else {
            (p.b.clone(), p.a.clone())
        };
        let prov = Provenance {
            rev_i: p.rev_i,
            rev_i_id: p.rev_i_id,
            rev_j: p.rev_j,
            rev_j_id: p.rev_j_id,
            a_first,
        };
        let entry = merged.entry(key).or_insert((v, BTreeSet::new()));
        entry.0 = entry.0.min(v);
        entry.1.insert(prov);
    }
    let mut nodes = BTreeSet::new();
    let edges = merged
        .into_iter()
        .map(|((a, b), (ngd, prov))| {
            nodes.insert(a.clone());
            nodes.insert(b.clone());
            Edge {
                a,
                b,
                ngd,
                strength: strength(ngd, strength_cap),
                provenance: prov.into_iter().collect(),
            }
        })
        .collect();
    TriggerNetwork {
        nodes,
        edges,
        threshold: tau,
        strength_cap,
    }
}

/// Node size: number of distinct neighbours.
pub fn node_sizes(network: &TriggerNetwork) -> BTreeMap<Factoid, usize> {
    let mut neighbours: BTreeMap<&Factoid, BTreeSet<&Factoid>> = BTreeMap::new();
    for e in &network.edges {
        neighbours.entry(&e.a).or_default().insert(&e.b);
        neighbours.entry(&e.b).or_default().insert(&e.a);
    }
    network
        .nodes
        .iter()
        .map(|n| (n.clone(), neighbours.get(n).map_or(0, BTreeSet::len)))
        .collect()
}

/// Gray level per edge, 0 (black) for the strongest and 200 for the weakest.
pub fn edge_gray_levels(network: &TriggerNetwork) -> Vec<u8> {
    let (lo, hi) = network
        .edges
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
            (lo.min(e.strength), hi.max(e.strength))
        });
    network
        .edges
        .iter()
        .map(|e| {
            let t = if hi > lo {
                (e.strength - lo) / (hi - lo)
            } else {
                1.0
            };
            (LIGHTEST_GRAY * (1.0 - t)).round() as u8
        })
        .collect()
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn export_dot(network: &TriggerNetwork) -> String {
    let sizes = node_sizes(network);
    let mut out = String::from("graph triggering {\n  node [shape=ellipse];\n");
    for (node, degree) in &sizes {
        let _ = writeln!(out, "  {} [degree={degree}];", dot_id(node.as_str()));
    }
    for (e, gray) in network.edges.iter().zip(edge_gray_levels(network)) {
        let _ = writeln!(
            out,
            "  {} -- {} [ngd=\"{:.4}\", strength=\"{:.4}\", color=\"#{gray:02x}{gray:02x}{gray:02x}\"];",
            dot_id(e.a.as_str()),
            dot_id(e.b.as_str()),
            e.ngd,
            e.strength,
        );
    }
    out.push_str("}\n");
    out
}

pub fn export_graphml(network: &TriggerNetwork) -> String {
    let sizes = node_sizes(network);
    let mut out = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\" \
         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" \
         xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n\
         \x20 <key id=\"label\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n\
         \x20 <key id=\"degree\" for=\"node\" attr.name=\"degree\" attr.type=\"int\"/>\n\
         \x20 <key id=\"ngd\" for=\"edge\" attr.name=\"ngd\" attr.type=\"double\"/>\n\
         \x20 <key id=\"strength\" for=\"edge\" attr.name=\"strength\" attr.type=\"double\"/>\n\
         \x20 <key id=\"provenance\" for=\"edge\" attr.name=\"provenance\" attr.type=\"string\"/>\n\
         \x20 <graph id=\"triggering\" edgedefault=\"undirected\">\n",
    );
    let ids: BTreeMap<&Factoid, usize> = network
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n, i))
        .collect();
    for (node, degree) in &sizes {
        let _ = writeln!(
            out,
            "    <node id=\"n{}\"><data key=\"label\">{}</data><data key=\"degree\">{degree}</data></node>",
            ids[node],
            escape(node.as_str())
        );
    }
    for (k, e) in network.edges.iter().enumerate() {
        let prov = e
            .provenance
            .iter()
            .map(|p| format!("{}>{}", p.rev_i_id, p.rev_j_id))
            .collect::<Vec<_>>()
            .join(";");
        let _ = writeln!(
            out,
            "    <edge id=\"e{k}\" source=\"n{}\" target=\"n{}\"><data key=\"ngd\">{}</data><data key=\"strength\">{}</data><data key=\"provenance\">{}</data></edge>",
            ids[&e.a],
            ids[&e.b],
            format_value(e.ngd),
            format_value(e.strength),
            escape(&prov)
        );
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

/// One line of the edge CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRecord {
    pub a: Factoid,
    pub b: Factoid,
    pub ngd: f64,
    pub strength: f64,
    pub provenance_count: usize,
}

/// Edges sorted by NGD ascending, then by endpoints.
pub fn export_csv(network: &TriggerNetwork) -> String {
    let mut edges: Vec<&Edge> = network.edges.iter().collect();
    edges.sort_by(|x, y| {
        x.ngd
            .total_cmp(&y.ngd)
            .then_with(|| (&x.a, &x.b).cmp(&(&y.a, &y.b)))
    });
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record(["a", "b", "ngd", "strength", "provenance_count"]);
    for e in edges {
        let _ = w.write_record([
            e.a.to_string(),
            e.b.to_string(),
            format_value(e.ngd),
            format_value(e.strength),
            e.provenance.len().to_string(),
        ]);
    }
    String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
}

#[derive(Debug, thiserror::Error)]
pub enum EdgeCsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },
}

pub fn parse_edges_csv<R: Read>(input: R) -> Result<Vec<EdgeRecord>, EdgeCsvError> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |message: String| EdgeCsvError::BadRow {
            row: idx + 1,
            message,
        };
        if rec.len() != 5 {
            return Err(bad(format!("expected 5 fields, found {}", rec.len())));
        }
        let factoid = |k: usize| {
            Factoid::new(&rec[k]).ok_or_else(|| bad(format!("invalid factoid {:?}", &rec[k])))
        };
        let num = |k: usize| {
            parse_value(&rec[k]).ok_or_else(|| bad(format!("invalid number {:?}", &rec[k])))
        };
        out.push(EdgeRecord {
            a: factoid(0)?,
            b: factoid(1)?,
            ngd: num(2)?,
            strength: num(3)?,
            provenance_count: rec[4]
                .parse()
                .map_err(|_| bad(format!("invalid count {:?}", &rec[4])))?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rffr::FactoidPair;

    fn score(a: &str, b: &str, v: f64, ri: usize, rj: usize) -> NgdScore {
        NgdScore {
            pair: FactoidPair {
                rev_i: ri,
                rev_i_id: 100 + ri as u64,
                a: Factoid::new(a).unwrap(),
                b: Factoid::new(b).unwrap(),
                rev_j: rj,
                rev_j_id: 100 + rj as u64,
            },
            counts: None,
            value: Some(v),
            clamped: false,
            error: None,
        }
    }

    #[test]
    fn single_edge() {
        let n = build_network(&[score("a", "b", 0.25, 0, 1)], 0.5, DEFAULT_STRENGTH_CAP);
        assert_eq!(n.nodes.len(), 2);
        assert_eq!(n.edges.len(), 1);
        assert_eq!(n.edges[0].strength, 4.0);
    }

    #[test]
    fn repeated_pair_merges() {
        let n = build_network(
            &[score("a", "b", 0.4, 0, 1), score("b", "a", 0.3, 2, 3)],
            0.5,
            DEFAULT_STRENGTH_CAP,
        );
        assert_eq!(n.edges.len(), 1);
        assert_eq!(n.edges[0].ngd, 0.3);
        assert_eq!(n.edges[0].provenance.len(), 2);
        assert!(n.edges[0].provenance.iter().any(|p| !p.a_first));
    }

    #[test]
    fn above_threshold_and_failures_dropped() {
        let mut failed = score("c", "d", 0.1, 0, 1);
        failed.value = None;
        let n = build_network(
            &[
                score("a", "b", 0.9, 0, 1),
                score("a", "c", f64::INFINITY, 0, 1),
                failed,
            ],
            0.5,
            DEFAULT_STRENGTH_CAP,
        );
        assert!(n.nodes.is_empty() && n.edges.is_empty());
    }

    #[test]
    fn zero_ngd_uses_cap() {
        let n = build_network(&[score("a", "b", 0.0, 0, 1)], 0.5, 100.0);
        assert_eq!(n.edges[0].strength, 100.0);
    }

    #[test]
    fn sizes() {
        let star: Vec<_> = ["b", "c", "d", "e"]
            .iter()
            .map(|l| score("hub", l, 0.2, 0, 1))
            .collect();
        let n = build_network(&star, 0.5, 100.0);
        let s = node_sizes(&n);
        assert_eq!(s[&Factoid::new("hub").unwrap()], 4);
        assert!(["b", "c", "d", "e"]
            .iter()
            .all(|l| s[&Factoid::new(l).unwrap()] == 1));

        let tri = build_network(
            &[
                score("x", "y", 0.1, 0, 1),
                score("y", "z", 0.1, 0, 1),
                score("x", "z", 0.1, 0, 1),
            ],
            0.5,
            100.0,
        );
        assert!(node_sizes(&tri).values().all(|&d| d == 2));
        assert!(node_sizes(&build_network(&[], 0.5, 100.0)).is_empty());
    }

    #[test]
    fn stronger_edge_is_darker() {
        let n = build_network(
            &[score("a", "b", 0.1, 0, 1), score("c", "d", 0.4, 0, 1)],
            0.5,
            100.0,
        );
        let gray = edge_gray_levels(&n);
        assert!(gray[0] < gray[1]);
        let dot = export_dot(&n);
        assert!(dot
            .contains("\"A\" -- \"B\" [ngd=\"0.1000\", strength=\"10.0000\", color=\"#000000\"]"));
        assert!(dot.contains("color=\"#c8c8c8\""));
    }

    #[test]
    fn empty_exports_are_valid() {
        let n = build_network(&[], 0.5, 100.0);
        assert_eq!(
            export_dot(&n),
            "graph triggering {\n  node [shape=ellipse];\n}\n"
        );
        assert!(export_graphml(&n).ends_with("</graph>\n</graphml>\n"));
        assert_eq!(export_csv(&n), "a,b,ngd,strength,provenance_count\n");
        assert!(parse_edges_csv(export_csv(&n).as_bytes())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn csv_sorted_by_ngd() {
        let n = build_network(
            &[
                score("a", "b", 0.4, 0, 1),
                score("c", "d", 0.1, 0, 1),
                score("e", "f", 0.25, 0, 1),
            ],
            0.5,
            100.0,
        );
        let rows = parse_edges_csv(export_csv(&n).as_bytes()).unwrap();
        let ngds: Vec<f64> = rows.iter().map(|r| r.ngd).collect();
        assert_eq!(ngds, vec![0.1, 0.25, 0.4]);
    }

    #[test]
    fn graphml_escapes_labels() {
        let n = build_network(&[score("AT&T", "Bell \"Labs\"", 0.2, 0, 1)], 0.5, 100.0);
        let xml = export_graphml(&n);
        assert!(xml.contains("AT&amp;T"));
        assert!(xml.contains("Bell &quot;Labs&quot;"));
    }
}
