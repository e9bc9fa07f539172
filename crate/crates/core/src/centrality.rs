//! Degree centrality and top/tail percentile cohorts.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CohortSide {
    Top,
    Tail,
}

impl fmt::Display for CohortSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CohortSide::Top => "top",
            CohortSide::Tail => "tail",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortSpec {
    pub fraction: f64,
    pub side: CohortSide,
}

impl CohortSpec {
    pub fn new(fraction: f64, side: CohortSide) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "cohort fraction must lie in (0, 1], got {fraction}"
            )));
        }
        Ok(CohortSpec { fraction, side })
    }

    /// `ceil(fraction * n)`, tolerant of the representation error in decimal
    /// fractions such as 0.1 × 30.
    pub fn size_for(&self, n: usize) -> usize {
        if n == 0 {
            return 0;
        }
        let raw = (self.fraction * n as f64 - 1e-9).ceil();
        (raw.max(1.0) as usize).min(n)
    }

    pub fn label(&self) -> String {
        format!("{:.2}", self.fraction)
    }
}

impl FromStr for CohortSpec {
    type Err = Error;

    /// Parses `0.10:top` / `0.2:tail`.
    fn from_str(s: &str) -> Result<Self> {
        let (frac, side) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("cohort spec {s:?} is not FRACTION:SIDE")))?;
        let fraction: f64 = frac
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad cohort fraction {frac:?}")))?;
        let side = match side.trim().to_ascii_lowercase().as_str() {
            "top" => CohortSide::Top,
            "tail" => CohortSide::Tail,
            other => return Err(Error::invalid(format!("bad cohort side {other:?}"))),
        };
        CohortSpec::new(fraction, side)
    }
}

pub fn parse_cohort_list(s: &str) -> Result<Vec<CohortSpec>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// How collaborator centralities are averaged over a cohort.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollaboratorMean {
    /// Mean over members of each member's neighbour mean.
    #[default]
    PerMember,
    /// One mean over every (member, neighbour) incidence.
    Pooled,
}

impl FromStr for CollaboratorMean {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "per-member" | "two-level" => Ok(CollaboratorMean::PerMember),
            "pooled" => Ok(CollaboratorMean::Pooled),
            other => Err(Error::invalid(format!("unknown collaborator mean {other:?}"))),
        }
    }
}

impl fmt::Display for CollaboratorMean {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CollaboratorMean::PerMember => "per-member",
            CollaboratorMean::Pooled => "pooled",
        })
    }
}

fn denominator(snapshot: &Snapshot<'_>) -> Result<f64> {
    let n = snapshot.node_count();
    if n < 2 {
        return Err(Error::CentralityUndefined { nodes: n });
    }
    Ok((n - 1) as f64)
}

/// `k / (n - 1)` for a node present in the snapshot.
pub fn degree_centrality(snapshot: &Snapshot<'_>, node: NodeId) -> Result<f64> {
    if !snapshot.is_present(node) {
        return Err(Error::AuthorNotPresent {
            author: snapshot.series().author_id(node).to_owned(),
            bin: snapshot.bin(),
        });
    }
    Ok(f64::from(snapshot.degree(node)) / denominator(snapshot)?)
}

/// Ranks present authors by degree centrality (descending for top, ascending
/// for tail), breaking ties by author id, and keeps `ceil(fraction * n)`.
/// With `exclude_isolated`, degree-0 authors are removed before ranking.
pub fn select_cohort(snapshot: &Snapshot<'_>, spec: &CohortSpec, exclude_isolated: bool) -> Vec<NodeId> {
    let mut nodes: Vec<NodeId> = snapshot
        .nodes()
        .filter(|&n| !exclude_isolated || snapshot.degree(n) > 0)
        .collect();
    let size = spec.size_for(nodes.len());
    // degree order equals centrality order within one snapshot
    let by_degree = |a: &NodeId, b: &NodeId| -> Ordering {
        let (da, db) = (snapshot.degree(*a), snapshot.degree(*b));
        match spec.side {
            CohortSide::Top => db.cmp(&da),
            CohortSide::Tail => da.cmp(&db),
        }
        .then(a.cmp(b))
    };
    if size < nodes.len() {
        nodes.select_nth_unstable_by(size, by_degree);
        nodes.truncate(size);
    }
    nodes.sort_unstable_by(by_degree);
    nodes
}

pub fn cohort_mean_centrality(snapshot: &Snapshot<'_>, cohort: &[NodeId]) -> Result<f64> {
    if cohort.is_empty() {
        return Err(Error::EmptyCohort);
    }
    let denom = denominator(snapshot)?;
    let total: f64 = cohort
        .iter()
        .map(|&n| f64::from(snapshot.degree(n)) / denom)
        .sum();
    Ok(total / cohort.len() as f64)
}

/// Average centrality of the cohort's collaborators. Isolated members are left
/// out of the outer mean; a cohort of only isolated members has no value.
pub fn collaborator_mean_centrality(
    snapshot: &Snapshot<'_>,
    cohort: &[NodeId],
    mode: CollaboratorMean,
) -> Result<f64> {
    if cohort.is_empty() {
        return Err(Error::EmptyCohort);
    }
    let denom = denominator(snapshot)?;
    let mut outer = 0.0;
    let mut members = 0usize;
    let mut incidences = 0usize;
    for &m in cohort {
        let nbrs = snapshot.neighbors(m);
        if nbrs.is_empty() {
            continue;
        }
        let degree_sum: u64 = nbrs.iter().map(|&v| u64::from(snapshot.degree(v))).sum();
        let sum = degree_sum as f64 / denom;
        match mode {
            CollaboratorMean::PerMember => outer += sum / nbrs.len() as f64,
            CollaboratorMean::Pooled => outer += sum,
        }
        members += 1;
        incidences += nbrs.len();
    }
    if members == 0 {
        return Err(Error::AllMembersIsolated);
    }
    Ok(match mode {
        CollaboratorMean::PerMember => outer / members as f64,
        CollaboratorMean::Pooled => outer / incidences as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortStats {
    pub size: usize,
    pub mean_centrality: f64,
    pub collab_mean_centrality: Option<f64>,
}

pub fn cohort_stats(
    snapshot: &Snapshot<'_>,
    spec: &CohortSpec,
    exclude_isolated: bool,
    mode: CollaboratorMean,
) -> Result<CohortStats> {
    let cohort = select_cohort(snapshot, spec, exclude_isolated);
    let mean_centrality = cohort_mean_centrality(snapshot, &cohort)?;
    let collab_mean_centrality = match collaborator_mean_centrality(snapshot, &cohort, mode) {
        Ok(v) => Some(v),
        Err(Error::AllMembersIsolated) => None,
        Err(e) => return Err(e),
    };
    Ok(CohortStats {
        size: cohort.len(),
        mean_centrality,
        collab_mean_centrality,
    })
}
