use std::collections::BTreeSet;

use chrono::{TimeZone, Utc};
use proptest::prelude::*;

use triggernet::dump::{read_records, write_records, ContributorId, Revision};
use triggernet::factoid::{extract_internal_links, normalize_target, Factoid};
use triggernet::network::{build_network, edge_gray_levels, node_sizes};
use triggernet::ngd::{
    ngd, score_pairs, CorpusProvider, HitCache, HitCounts, NgdScore, ScoreOptions,
};
use triggernet::rffr::FactoidPair;
use triggernet::timeline::{build_timeline, TimelineBuilder};

const NAMES: &[&str] = &[
    "India",
    "Tea",
    "Chess",
    "Islam",
    "Yoga",
    "Taj Mahal",
    "Ganges",
];

fn contributor() -> impl Strategy<Value = ContributorId> {
    prop_oneof![
        "[A-Za-z]{1,6}".prop_map(ContributorId::registered),
        (0u8..=255, 0u8..=255).prop_map(|(a, b)| ContributorId::anonymous(format!("10.0.{a}.{b}"))),
        Just(ContributorId::deleted()),
    ]
}

/// Articles whose revisions carry random link subsets, in chronological order.
fn article() -> impl Strategy<Value = Vec<Revision>> {
    prop::collection::vec(
        (
            contributor(),
            prop::collection::btree_set(0..NAMES.len(), 0..5),
            0u32..3,
        ),
        1..12,
    )
    .prop_map(|revs| {
        let mut t = 1_200_000_000i64;
        revs.into_iter()
            .enumerate()
            .map(|(i, (who, links, gap))| {
                t += gap as i64 * 3600; // ties happen when gap is 0
                let text: String = links
                    .iter()
                    .map(|&k| format!("see [[{}]]. ", NAMES[k]))
                    .collect();
                Revision {
                    ordinal: i,
                    revision_id: 100 + i as u64,
                    timestamp: Utc.timestamp_opt(t, 0).unwrap(),
                    contributor: who,
                    byte_size: text.len() as u64,
                    text,
                }
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn records_round_trip(revs in article()) {
        let mut buf = Vec::new();
        write_records(&mut buf, revs.iter()).unwrap();
        prop_assert_eq!(read_records(buf.as_slice()).unwrap(), revs);
    }

    #[test]
    fn timeline_ignores_arrival_order(revs in article(), seed in any::<u64>()) {
        let expected = build_timeline(&revs).unwrap();
        let mut shuffled = revs.clone();
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let mut builder = TimelineBuilder::new();
        for r in shuffled {
            builder.push_revision(r);
        }
        let (metas, timeline) = builder.finish().unwrap();
        prop_assert_eq!(timeline, expected);
        let ids: Vec<u64> = metas.iter().map(|m| m.revision_id).collect();
        let want: Vec<u64> = revs.iter().map(|r| r.revision_id).collect();
        prop_assert_eq!(ids, want);
    }

    #[test]
    fn normalization_is_idempotent(raw in "\\PC{0,24}") {
        if let Some(f) = normalize_target(&raw) {
            prop_assert_eq!(normalize_target(f.as_str()), Some(f.clone()));
            prop_assert!(!f.as_str().is_empty());
            prop_assert_eq!(f.as_str().trim(), f.as_str());
        }
    }

    #[test]
    fn every_written_link_is_extracted(picks in prop::collection::vec(0..NAMES.len(), 0..8)) {
        let text: String = picks.iter().map(|&k| format!("x [[{}|label]] y ", NAMES[k].to_lowercase())).collect();
        let got = extract_internal_links(&text);
        let want: BTreeSet<Factoid> = picks.iter().map(|&k| Factoid::new(NAMES[k]).unwrap()).collect();
        let lower: BTreeSet<String> = got.iter().map(|f| f.as_str().to_lowercase()).collect();
        prop_assert_eq!(got.len(), want.len());
        prop_assert_eq!(lower, want.iter().map(|f| f.as_str().to_lowercase()).collect::<BTreeSet<_>>());
    }

    #[test]
    fn ngd_is_symmetric_and_non_negative(a in 1u64..1_000_000, b in 1u64..1_000_000, ab in 0u64..1_000_000, extra in 1.0f64..1e6) {
        let n = a.max(b) as f64 + extra;
        let x = ngd(&HitCounts::new(a, b, ab, n)).unwrap();
        let y = ngd(&HitCounts::new(b, a, ab, n)).unwrap();
        prop_assert_eq!(x, y);
        prop_assert!(x >= 0.0);
        prop_assert_eq!(ngd(&HitCounts::new(a, a, a, n)).unwrap(), 0.0);
    }

    #[test]
    fn network_invariants(raw in prop::collection::vec((0..NAMES.len(), 0..NAMES.len(), 0.0f64..2.0), 0..30), tau in 0.0f64..1.5) {
        let scores: Vec<NgdScore> = raw.iter().enumerate().map(|(i, &(a, b, v))| NgdScore {
            pair: FactoidPair {
                rev_i: i, rev_i_id: i as u64,
                a: Factoid::new(NAMES[a]).unwrap(), b: Factoid::new(NAMES[b]).unwrap(),
                rev_j: i + 1, rev_j_id: i as u64 + 1,
            },
            counts: None, value: Some(v), clamped: false, error: None,
        }).collect();
        let net = build_network(&scores, tau, 100.0);
        prop_assert!(net.edges.len() <= scores.len());
        for e in &net.edges {
            prop_assert!(e.a < e.b);
            prop_assert!(e.ngd <= tau);
            prop_assert!(net.nodes.contains(&e.a) && net.nodes.contains(&e.b));
            let s = if e.ngd > 0.0 { 1.0 / e.ngd } else { 100.0 };
            prop_assert_eq!(e.strength, s);
        }
        let degree_sum: usize = node_sizes(&net).values().sum();
        prop_assert_eq!(degree_sum, 2 * net.edges.len());
        let grays = edge_gray_levels(&net);
        for (i, e) in net.edges.iter().enumerate() {
            for (j, f) in net.edges.iter().enumerate() {
                if e.strength > f.strength {
                    prop_assert!(grays[i] <= grays[j]);
                }
            }
        }
    }

    #[test]
    fn cache_is_transparent(picks in prop::collection::vec((0..NAMES.len(), 0..NAMES.len()), 1..10)) {
        let docs = [("a", "India tea chess"), ("b", "India Islam yoga"), ("c", "Taj Mahal Ganges India"), ("d", "tea ganges"), ("e", "nothing")];
        let provider = CorpusProvider::from_documents(docs, 1.0);
        let pairs: Vec<FactoidPair> = picks.iter().enumerate().map(|(i, &(a, b))| FactoidPair {
            rev_i: i, rev_i_id: i as u64, a: Factoid::new(NAMES[a]).unwrap(), b: Factoid::new(NAMES[b]).unwrap(),
            rev_j: i + 1, rev_j_id: i as u64 + 1,
        }).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.tsv");
        let plain = score_pairs(&pairs, &provider, &HitCache::in_memory(), ScoreOptions::default()).unwrap();
        let cold = score_pairs(&pairs, &provider, &HitCache::open(&path).unwrap(), ScoreOptions { jobs: 3 }).unwrap();
        let warm = score_pairs(&pairs, &provider, &HitCache::open(&path).unwrap(), ScoreOptions::default()).unwrap();
        prop_assert_eq!(&plain.scores, &cold.scores);
        prop_assert_eq!(&plain.scores, &warm.scores);
        prop_assert_eq!(warm.queries, 0);
    }
}
