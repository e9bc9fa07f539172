//! Naive reference implementation of every snapshot metric.
//!
//! Works directly on records with string ids and ordered sets, enumerates
//! author pairs explicitly, and keeps probabilities as exact rationals. It
//! shares no code with the snapshot store or the estimators.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;

use crate::attachment::{NewcomerCount, PairCount, Pairing};
use crate::centrality::{CohortSide, CohortSpec, CollaboratorMean};
use crate::corpus::PublicationRecord;
use crate::error::{Error, Result};

/// Largest number of author pairs the oracle will expand.
pub const ORACLE_PAIR_LIMIT: usize = 10_000;

#[derive(Debug, Clone)]
pub struct OracleOptions {
    pub cohorts: Vec<CohortSpec>,
    pub exclude_isolated: bool,
    pub collaborator_mean: CollaboratorMean,
    pub pairing: Pairing,
    pub newcomer_count: NewcomerCount,
    pub pair_count: PairCount,
    pub exclude_existing: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            cohorts: crate::centrality::parse_cohort_list("0.10:top,0.20:top,0.20:tail")
                .expect("static cohort list"),
            exclude_isolated: false,
            collaborator_mean: CollaboratorMean::PerMember,
            pairing: Pairing::Consecutive,
            newcomer_count: NewcomerCount::Edges,
            pair_count: PairCount::Combinations,
            exclude_existing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCohort {
    pub members: Vec<String>,
    pub mean_centrality: f64,
    pub collab_mean_centrality: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSnapshot {
    pub nodes: usize,
    pub links: usize,
    pub degrees: BTreeMap<String, u64>,
    pub histogram: BTreeMap<u64, u64>,
    /// Exact `k / (n - 1)`; empty when the snapshot has fewer than two nodes.
    pub centrality: BTreeMap<String, Ratio<u64>>,
    /// One entry per requested cohort; `None` when centrality is undefined
    /// or the cohort is empty.
    pub cohorts: Vec<Option<OracleCohort>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleDelta {
    pub t1: usize,
    pub t2: usize,
    pub newcomer_edges: Vec<(String, String)>,
    pub internal_edges: Vec<(String, String)>,
    pub newcomer_newcomer_edges: Vec<(String, String)>,
    /// k -> (V, N)
    pub attachment: BTreeMap<u64, (u64, u64)>,
    /// (ki, kj) -> (L, pairs)
    pub pairs: BTreeMap<(u64, u64), (u64, u64)>,
    /// ki·kj -> (ΣL, Σpairs)
    pub collapsed: BTreeMap<u64, (u64, u64)>,
}

impl OracleDelta {
    pub fn attachment_probability(&self, k: u64) -> Option<Ratio<u64>> {
        self.attachment.get(&k).map(|&(v, n)| Ratio::new(v, n))
    }

    pub fn pair_probability(&self, ki: u64, kj: u64) -> Option<Ratio<u64>> {
        self.pairs.get(&(ki, kj)).map(|&(l, p)| Ratio::new(l, p))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OracleReport {
    pub snapshots: Vec<OracleSnapshot>,
    pub deltas: Vec<OracleDelta>,
}

type Edge = (String, String);

fn edge(a: &str, b: &str) -> Edge {
    if a < b {
        (a.to_owned(), b.to_owned())
    } else {
        (b.to_owned(), a.to_owned())
    }
}

/// Computes every snapshot and delta quantity by set enumeration.
pub fn brute_force_metrics(
    records: &[PublicationRecord],
    bin_count: usize,
    options: &OracleOptions,
) -> Result<OracleReport> {
    let ops: usize = records
        .iter()
        .map(|r| r.author_ids.len() * r.author_ids.len().saturating_sub(1) / 2)
        .sum();
    if ops > ORACLE_PAIR_LIMIT {
        return Err(Error::OracleTooLarge {
            ops,
            limit: ORACLE_PAIR_LIMIT,
        });
    }

    // cumulative node and edge sets per bin
    let mut nodes_at: Vec<BTreeSet<String>> = Vec::with_capacity(bin_count);
    let mut edges_at: Vec<BTreeSet<Edge>> = Vec::with_capacity(bin_count);
    for bin in 0..bin_count {
        let mut nodes = BTreeSet::new();
        let mut edges = BTreeSet::new();
        for r in records.iter().filter(|r| r.bin <= bin) {
            let authors: Vec<&String> = r.author_ids.iter().collect();
            for a in &authors {
                nodes.insert((*a).clone());
            }
            for a in &authors {
                for b in &authors {
                    if a != b {
                        edges.insert(edge(a, b));
                    }
                }
            }
        }
        nodes_at.push(nodes);
        edges_at.push(edges);
    }

    let neighbors = |bin: usize, a: &str| -> BTreeSet<String> {
        edges_at[bin]
            .iter()
            .filter_map(|(x, y)| {
                if x == a {
                    Some(y.clone())
                } else if y == a {
                    Some(x.clone())
                } else {
                    None
                }
            })
            .collect()
    };

    let mut snapshots = Vec::with_capacity(bin_count);
    for bin in 0..bin_count {
        let nodes = &nodes_at[bin];
        let n = nodes.len();
        let degrees: BTreeMap<String, u64> = nodes
            .iter()
            .map(|a| (a.clone(), neighbors(bin, a).len() as u64))
            .collect();
        let mut histogram = BTreeMap::new();
        for &d in degrees.values() {
            *histogram.entry(d).or_insert(0) += 1;
        }
        let centrality: BTreeMap<String, Ratio<u64>> = if n >= 2 {
            degrees
                .iter()
                .map(|(a, &d)| (a.clone(), Ratio::new(d, n as u64 - 1)))
                .collect()
        } else {
            BTreeMap::new()
        };
        let cohorts = options
            .cohorts
            .iter()
            .map(|spec| {
                oracle_cohort(
                    spec,
                    &degrees,
                    &centrality,
                    options.exclude_isolated,
                    options.collaborator_mean,
                    |a| neighbors(bin, a),
                )
            })
            .collect();
        snapshots.push(OracleSnapshot {
            nodes: n,
            links: edges_at[bin].len(),
            degrees,
            histogram,
            centrality,
            cohorts,
        });
    }

    let mut deltas = Vec::new();
    for (t1, t2) in options.pairing.pairs(bin_count) {
        deltas.push(oracle_delta(
            t1,
            t2,
            &nodes_at,
            &edges_at,
            &snapshots[t1].degrees,
            options,
        ));
    }
    Ok(OracleReport { snapshots, deltas })
}

fn oracle_cohort(
    spec: &CohortSpec,
    degrees: &BTreeMap<String, u64>,
    centrality: &BTreeMap<String, Ratio<u64>>,
    exclude_isolated: bool,
    mode: CollaboratorMean,
    neighbors: impl Fn(&str) -> BTreeSet<String>,
) -> Option<OracleCohort> {
    if centrality.is_empty() {
        return None;
    }
    let mut ranked: Vec<(&String, Ratio<u64>)> = centrality
        .iter()
        .filter(|(a, _)| !exclude_isolated || degrees[*a] > 0)
        .map(|(a, &c)| (a, c))
        .collect();
    ranked.sort_by(|x, y| match spec.side {
        CohortSide::Top => y.1.cmp(&x.1).then(x.0.cmp(y.0)),
        CohortSide::Tail => x.1.cmp(&y.1).then(x.0.cmp(y.0)),
    });
    let n = ranked.len();
    let target = spec.fraction * n as f64;
    let size = (0..=n).find(|&s| s as f64 >= target - 1e-9).unwrap_or(n).max(1).min(n);
    if size == 0 {
        return None;
    }
    let members: Vec<String> = ranked[..size].iter().map(|(a, _)| (*a).clone()).collect();

    let to_f64 = |r: Ratio<u64>| *r.numer() as f64 / *r.denom() as f64;
    let mean_sum: Ratio<u64> = members.iter().map(|a| centrality[a]).sum();
    let mean_centrality = to_f64(mean_sum) / members.len() as f64;

    let mut per_member = Vec::new();
    let mut pooled_sum = Ratio::from_integer(0u64);
    let mut pooled_count = 0u64;
    for a in &members {
        let nbrs = neighbors(a);
        if nbrs.is_empty() {
            continue;
        }
        let sum: Ratio<u64> = nbrs.iter().map(|b| centrality[b]).sum();
        per_member.push(to_f64(sum / nbrs.len() as u64));
        pooled_sum += sum;
        pooled_count += nbrs.len() as u64;
    }
    let collab_mean_centrality = if per_member.is_empty() {
        None
    } else {
        Some(match mode {
            CollaboratorMean::PerMember => per_member.iter().sum::<f64>() / per_member.len() as f64,
            CollaboratorMean::Pooled => to_f64(pooled_sum / pooled_count),
        })
    };
    Some(OracleCohort {
        members,
        mean_centrality,
        collab_mean_centrality,
    })
}

fn oracle_delta(
    t1: usize,
    t2: usize,
    nodes_at: &[BTreeSet<String>],
    edges_at: &[BTreeSet<Edge>],
    degrees: &BTreeMap<String, u64>,
    options: &OracleOptions,
) -> OracleDelta {
    let old = &nodes_at[t1];
    let mut newcomer_edges = Vec::new();
    let mut internal_edges = Vec::new();
    let mut newcomer_newcomer_edges = Vec::new();
    for (a, b) in edges_at[t2].difference(&edges_at[t1]) {
        match (old.contains(a), old.contains(b)) {
            (true, true) => internal_edges.push((a.clone(), b.clone())),
            (true, false) => newcomer_edges.push((a.clone(), b.clone())),
            (false, true) => newcomer_edges.push((b.clone(), a.clone())),
            (false, false) => newcomer_newcomer_edges.push((a.clone(), b.clone())),
        }
    }

    let mut attachment: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
    for a in old {
        attachment.entry(degrees[a]).or_insert((0, 0)).1 += 1;
    }
    match options.newcomer_count {
        NewcomerCount::Edges => {
            for (o, _) in &newcomer_edges {
                attachment.get_mut(&degrees[o]).expect("old class").0 += 1;
            }
        }
        NewcomerCount::Distinct => {
            let distinct: BTreeSet<(u64, &String)> =
                newcomer_edges.iter().map(|(o, n)| (degrees[o], n)).collect();
            for (k, _) in distinct {
                attachment.get_mut(&k).expect("old class").0 += 1;
            }
        }
    }

    // enumerate every candidate pair of old authors
    let old_list: Vec<&String> = old.iter().collect();
    let mut pairs: BTreeMap<(u64, u64), (u64, u64)> = BTreeMap::new();
    let classify = |a: &String, b: &String| {
        let (x, y) = (degrees[a], degrees[b]);
        (x.min(y), x.max(y))
    };
    for (i, a) in old_list.iter().enumerate() {
        let start = match options.pair_count {
            PairCount::Combinations => i + 1,
            PairCount::Literal => 0,
        };
        for b in &old_list[start..] {
            let key = classify(a, b);
            let same = key.0 == key.1;
            if options.pair_count == PairCount::Literal && !same && degrees[*a] > degrees[*b] {
                // cross-class pairs are counted once, from the lower-degree side
                continue;
            }
            if options.exclude_existing && a != b && edges_at[t1].contains(&edge(a, b)) {
                continue;
            }
            let entry = pairs.entry(key).or_insert((0, 0));
            entry.1 += 1;
            let canonical = a != b && (!same || a < b);
            if canonical && internal_edges.contains(&edge(a, b)) {
                entry.0 += 1;
            }
        }
    }
    pairs.retain(|_, v| v.1 > 0);

    let mut collapsed: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
    for (&(ki, kj), &(l, p)) in &pairs {
        let c = collapsed.entry(ki * kj).or_insert((0, 0));
        c.0 += l;
        c.1 += p;
    }

    OracleDelta {
        t1,
        t2,
        newcomer_edges,
        internal_edges,
        newcomer_newcomer_edges,
        attachment,
        pairs,
        collapsed,
    }
}
