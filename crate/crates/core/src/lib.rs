//! Trigger networks of factoids mined from Wikipedia revision histories.
//!
//! A page's revision history is streamed from a MediaWiki XML export; the
//! internal links of each revision are its factoids. Factoids added shortly
//! after one another by different editors form candidate pairs, which are
//! scored with the Normalized Google Distance against a hit-count provider
//! and kept as weighted edges when they are semantically close.

pub mod dump;
pub mod factoid;
pub mod network;
pub mod ngd;
pub mod pipeline;
pub mod rffr;
pub mod timeline;

pub use dump::{parse_dump, ContributorId, DumpError, Revision, RevisionMeta, RevisionReader};
pub use factoid::{extract_internal_links, normalize_target, Factoid};
pub use network::{build_network, Edge, TriggerNetwork};
pub use ngd::{ngd, HitCounts, HitProvider, NgdScore};
pub use pipeline::{run, PipelineConfig, PipelineError, RunSummary};
pub use rffr::{build_rffr, cross_product, filter_nonempty, FactoidPair, RffrRow, WindowConfig};
pub use timeline::{
    build_timeline, quadrant_shares, FactoidTimeline, QuadrantMode, QuadrantShares,
};
