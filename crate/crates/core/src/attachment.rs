//! Attachment probabilities between two snapshots `t1 < t2`.
//!
//! All degrees are measured at `t1`. Newcomer attraction per degree class is
//! `P(k) = V(k) / N(k)`; internal link formation per degree pair is
//! `P(ki, kj) = L(ki, kj) / pairs(ki, kj)`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Snapshot, SnapshotSeries};

/// What a newcomer "event" is for `V(k)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NewcomerCount {
    /// Every (old author, newcomer) edge counts once.
    #[default]
    Edges,
    /// Each newcomer counts once per degree class it touches.
    Distinct,
}

/// Population of same-degree pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairCount {
    /// `N(k)·(N(k)-1)/2` unordered distinct pairs.
    #[default]
    Combinations,
    /// `N(k)²`.
    Literal,
}

/// Which `(t1, t2)` pairs to evaluate over a series.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pairing {
    /// `(b, b+1)` for every bin.
    #[default]
    Consecutive,
    /// `(0, b)` for every later bin.
    Cumulative,
}

impl Pairing {
    pub fn pairs(self, bins: usize) -> Vec<(usize, usize)> {
        match self {
            Pairing::Consecutive => (1..bins).map(|b| (b - 1, b)).collect(),
            Pairing::Cumulative => (1..bins).map(|b| (0, b)).collect(),
        }
    }
}

macro_rules! keyword_enum {
    ($ty:ident { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim() {
                    $($name => Ok($ty::$variant),)+
                    other => Err(Error::invalid(format!(
                        concat!("unknown ", stringify!($ty), " {:?}"), other
                    ))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$variant => $name,)+ })
            }
        }
    };
}

keyword_enum!(NewcomerCount { Edges => "edges", Distinct => "distinct" });
keyword_enum!(PairCount { Combinations => "combinations", Literal => "literal" });
keyword_enum!(Pairing { Consecutive => "consecutive", Cumulative => "cumulative" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttachmentRow {
    pub k: u64,
    pub events: u64,
    pub population: u64,
}

impl AttachmentRow {
    pub fn probability(&self) -> f64 {
        self.events as f64 / self.population as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttachmentTable {
    pub t1: usize,
    pub t2: usize,
    /// Ascending in `k`, one row per degree class present at `t1`.
    pub rows: Vec<AttachmentRow>,
}

impl AttachmentTable {
    pub fn total_events(&self) -> u64 {
        self.rows.iter().map(|r| r.events).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairLinkRow {
    pub ki: u64,
    pub kj: u64,
    pub links: u64,
    pub pairs: u64,
}

impl PairLinkRow {
    pub fn probability(&self) -> f64 {
        self.links as f64 / self.pairs as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairLinkTable {
    pub t1: usize,
    pub t2: usize,
    /// Ascending in `(ki, kj)` with `ki <= kj`.
    pub rows: Vec<PairLinkRow>,
}

impl PairLinkTable {
    pub fn total_links(&self) -> u64 {
        self.rows.iter().map(|r| r.links).sum()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairOptions {
    pub count: PairCount,
    /// Remove pairs already linked at `t1` from the population.
    pub exclude_existing: bool,
}

/// Degree-product rows `x = ki·kj` with pooled probability `ΣL / Σpairs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollapsedRow {
    pub x: u64,
    pub links: u64,
    pub pairs: u64,
}

impl CollapsedRow {
    pub fn probability(&self) -> f64 {
        self.links as f64 / self.pairs as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollapsedTable {
    pub t1: usize,
    pub t2: usize,
    pub rows: Vec<CollapsedRow>,
}

fn class_sizes(at_t1: &Snapshot<'_>) -> BTreeMap<u64, u64> {
    let mut sizes = BTreeMap::new();
    for n in at_t1.nodes() {
        *sizes.entry(u64::from(at_t1.degree(n))).or_insert(0) += 1;
    }
    sizes
}

fn check_t2(at_t1: &Snapshot<'_>, t2: usize) -> Result<()> {
    at_t1.series().check_bin(t2)?;
    if at_t1.bin() >= t2 {
        return Err(Error::InvalidInterval {
            t1: at_t1.bin(),
            t2,
        });
    }
    Ok(())
}

/// `V(k)` and `N(k)` for every degree class present at `t1`, zero-event rows included.
pub fn newcomer_attachment_table_at(
    at_t1: &Snapshot<'_>,
    t2: usize,
    mode: NewcomerCount,
) -> Result<AttachmentTable> {
    check_t2(at_t1, t2)?;
    let t1 = at_t1.bin();
    let edges = at_t1.series().delta_newcomer_edges(t1, t2)?;
    let mut events: HashMap<u64, u64> = HashMap::new();
    match mode {
        NewcomerCount::Edges => {
            for &(old, _) in &edges {
                *events.entry(u64::from(at_t1.degree(old))).or_insert(0) += 1;
            }
        }
        NewcomerCount::Distinct => {
            let seen: HashSet<(u64, u32)> = edges
                .iter()
                .map(|&(old, new)| (u64::from(at_t1.degree(old)), new))
                .collect();
            for (k, _) in seen {
                *events.entry(k).or_insert(0) += 1;
            }
        }
    }
    let rows = class_sizes(at_t1)
        .into_iter()
        .map(|(k, population)| AttachmentRow {
            k,
            events: events.get(&k).copied().unwrap_or(0),
            population,
        })
        .collect();
    Ok(AttachmentTable { t1, t2, rows })
}

pub fn newcomer_attachment_table(
    series: &SnapshotSeries,
    t1: usize,
    t2: usize,
    mode: NewcomerCount,
) -> Result<AttachmentTable> {
    series.check_bin(t2)?;
    if t1 >= t2 {
        return Err(Error::InvalidInterval { t1, t2 });
    }
    newcomer_attachment_table_at(&series.snapshot(t1)?, t2, mode)
}

fn ordered(a: u64, b: u64) -> (u64, u64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// `L(ki, kj)` and the pair population for every degree-class pair with a
/// non-empty population at `t1`.
pub fn internal_link_table_at(
    at_t1: &Snapshot<'_>,
    t2: usize,
    options: PairOptions,
) -> Result<PairLinkTable> {
    check_t2(at_t1, t2)?;
    let t1 = at_t1.bin();
    let series = at_t1.series();
    let deg = |n: u32| u64::from(at_t1.degree(n));

    let mut links: HashMap<(u64, u64), u64> = HashMap::new();
    for (u, v) in series.delta_internal_edges(t1, t2)? {
        *links.entry(ordered(deg(u), deg(v))).or_insert(0) += 1;
    }

    let mut existing: HashMap<(u64, u64), u64> = HashMap::new();
    if options.exclude_existing {
        for (&(u, v), &b) in series.edges().iter().zip(series.edge_first_seen()) {
            if b as usize <= t1 {
                *existing.entry(ordered(deg(u), deg(v))).or_insert(0) += 1;
            }
        }
    }

    let sizes: Vec<(u64, u64)> = class_sizes(at_t1).into_iter().collect();
    let mut rows = Vec::new();
    for (i, &(ki, ni)) in sizes.iter().enumerate() {
        for &(kj, nj) in &sizes[i..] {
            let same = ki == kj;
            let mut pairs = match (same, options.count) {
                (false, _) => ni * nj,
                (true, PairCount::Combinations) => ni * (ni - 1) / 2,
                (true, PairCount::Literal) => ni * ni,
            };
            if let Some(&e) = existing.get(&(ki, kj)) {
                // literal same-class counting sees each unordered pair twice
                let weight = if same && options.count == PairCount::Literal { 2 } else { 1 };
                pairs = pairs.saturating_sub(weight * e);
            }
            if pairs > 0 {
                rows.push(PairLinkRow {
                    ki,
                    kj,
                    links: links.get(&(ki, kj)).copied().unwrap_or(0),
                    pairs,
                });
            }
        }
    }
    Ok(PairLinkTable { t1, t2, rows })
}

pub fn internal_link_table(
    series: &SnapshotSeries,
    t1: usize,
    t2: usize,
    options: PairOptions,
) -> Result<PairLinkTable> {
    series.check_bin(t2)?;
    if t1 >= t2 {
        return Err(Error::InvalidInterval { t1, t2 });
    }
    internal_link_table_at(&series.snapshot(t1)?, t2, options)
}

/// Groups pair rows by degree product and pools each group.
pub fn collapse_pair_table(table: &PairLinkTable) -> CollapsedTable {
    let mut groups: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
    for r in &table.rows {
        let g = groups.entry(r.ki * r.kj).or_insert((0, 0));
        g.0 += r.links;
        g.1 += r.pairs;
    }
    CollapsedTable {
        t1: table.t1,
        t2: table.t2,
        rows: groups
            .into_iter()
            .map(|(x, (links, pairs))| CollapsedRow { x, links, pairs })
            .collect(),
    }
}
