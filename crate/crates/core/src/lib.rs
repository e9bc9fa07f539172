//! Measurement pipeline for evolving co-authorship networks.
//!
//! Publications are linked to canonical author ids and binned in time
//! ([`corpus`]), folded into one cumulative graph with per-edge first-seen bins
//! ([`graph`]), and measured per snapshot ([`centrality`]) and per snapshot
//! pair ([`attachment`]). [`powerlaw`] fits log-log slopes to the resulting
//! tables, [`synth`] provides a growth model and a brute-force oracle, and
//! [`report`] runs the whole thing from one configuration.

pub mod attachment;
pub mod centrality;
pub mod corpus;
pub mod error;
pub mod graph;
pub mod powerlaw;
pub mod report;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{DegreeHistogram, NodeId, Snapshot, SnapshotSeries};
