//! Cumulative co-authorship graph over time bins.
//!
//! One edge list is stored, each unordered pair annotated with the first bin in
//! which it appeared. A snapshot at bin `b` is the subgraph of nodes and edges
//! whose first-seen bin is `<= b`; nothing is materialized per bin.
//!
//! Adjacency is kept in CSR form with every neighbour list ordered by edge
//! first-seen bin, so the neighbours visible at `b` are a prefix of the list.

mod store;

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{PublicationRecord, TimeBin};
use crate::error::{Error, Result};

pub use store::{load_series, save_series, FORMAT_VERSION, MAGIC};

/// Dense author index. Indices follow ascending author-id order.
pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotSeries {
    bins: Vec<TimeBin>,
    authors: Vec<String>,
    node_first_seen: Vec<u32>,
    edges: Vec<(NodeId, NodeId)>,
    edge_first_seen: Vec<u32>,
    edge_papers: Vec<u32>,
    node_counts: Vec<u64>,
    edge_counts: Vec<u64>,
    adjacency: Adjacency,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct Adjacency {
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    first_seen: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CumulativeCount {
    pub bin: String,
    pub nodes: u64,
    pub links: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeHistogram {
    pub bin: usize,
    pub counts: BTreeMap<u32, u64>,
}

impl DegreeHistogram {
    pub fn node_total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Σ k·count(k); twice the link count of the snapshot.
    pub fn degree_sum(&self) -> u64 {
        self.counts.iter().map(|(&k, &c)| u64::from(k) * c).sum()
    }
}

impl SnapshotSeries {
    /// Builds the series from binned records. Every paper contributes all
    /// unordered pairs of its (deduplicated) authors.
    pub fn build(records: &[PublicationRecord], bins: &[TimeBin]) -> Result<Self> {
        if let Some(r) = records.iter().find(|r| r.bin >= bins.len()) {
            return Err(Error::BinOutOfRange {
                bin: r.bin,
                bins: bins.len(),
            });
        }

        let mut authors: Vec<&str> = records
            .iter()
            .flat_map(|r| r.author_ids.iter().map(String::as_str))
            .collect();
        authors.par_sort_unstable();
        authors.dedup();
        if authors.len() > NodeId::MAX as usize {
            return Err(Error::invalid("too many authors for 32-bit node ids"));
        }
        let index: HashMap<&str, NodeId> = authors
            .iter()
            .enumerate()
            .map(|(i, a)| (*a, i as NodeId))
            .collect();

        let mut node_first_seen = vec![u32::MAX; authors.len()];
        let pair_total: usize = records
            .iter()
            .map(|r| r.author_ids.len() * r.author_ids.len().saturating_sub(1) / 2)
            .sum();
        let mut pairs: Vec<(u64, u32)> = Vec::with_capacity(pair_total);
        let mut members: Vec<NodeId> = Vec::new();
        for r in records {
            let bin = r.bin as u32;
            members.clear();
            // author_ids is sorted, and so are the dense indices
            members.extend(r.author_ids.iter().map(|a| index[a.as_str()]));
            for (i, &u) in members.iter().enumerate() {
                let seen = &mut node_first_seen[u as usize];
                *seen = (*seen).min(bin);
                for &v in &members[i + 1..] {
                    pairs.push(((u64::from(u) << 32) | u64::from(v), bin));
                }
            }
        }
        pairs.par_sort_unstable();

        let mut edges = Vec::new();
        let mut edge_first_seen = Vec::new();
        let mut edge_papers = Vec::new();
        let mut i = 0;
        while i < pairs.len() {
            let (key, bin) = pairs[i];
            let mut j = i + 1;
            while j < pairs.len() && pairs[j].0 == key {
                j += 1;
            }
            edges.push(((key >> 32) as NodeId, key as NodeId));
            edge_first_seen.push(bin);
            edge_papers.push((j - i).min(u32::MAX as usize) as u32);
            i = j;
        }
        drop(pairs);

        Ok(Self::from_parts(
            bins.to_vec(),
            authors.into_iter().map(str::to_owned).collect(),
            node_first_seen,
            edges,
            edge_first_seen,
            edge_papers,
        ))
    }

    /// Assembles a series from already validated parts and derives the
    /// cumulative counts and adjacency.
    fn from_parts(
        bins: Vec<TimeBin>,
        authors: Vec<String>,
        node_first_seen: Vec<u32>,
        edges: Vec<(NodeId, NodeId)>,
        edge_first_seen: Vec<u32>,
        edge_papers: Vec<u32>,
    ) -> Self {
        let cumulative = |first_seen: &[u32]| {
            let mut per_bin = vec![0u64; bins.len()];
            for &b in first_seen {
                per_bin[b as usize] += 1;
            }
            let mut acc = 0;
            per_bin
                .into_iter()
                .map(|c| {
                    acc += c;
                    acc
                })
                .collect::<Vec<_>>()
        };
        let node_counts = cumulative(&node_first_seen);
        let edge_counts = cumulative(&edge_first_seen);
        let adjacency = Adjacency::build(authors.len(), &edges, &edge_first_seen);
        SnapshotSeries {
            bins,
            authors,
            node_first_seen,
            edges,
            edge_first_seen,
            edge_papers,
            node_counts,
            edge_counts,
            adjacency,
        }
    }

    pub fn bins(&self) -> &[TimeBin] {
        &self.bins
    }

    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    pub fn author_count(&self) -> usize {
        self.authors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn author_id(&self, node: NodeId) -> &str {
        &self.authors[node as usize]
    }

    pub fn authors(&self) -> &[String] {
        &self.authors
    }

    pub fn node_index(&self, author: &str) -> Option<NodeId> {
        self.authors
            .binary_search_by(|a| a.as_str().cmp(author))
            .ok()
            .map(|i| i as NodeId)
    }

    pub fn node_first_seen(&self, node: NodeId) -> usize {
        self.node_first_seen[node as usize] as usize
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn edge_first_seen(&self) -> &[u32] {
        &self.edge_first_seen
    }

    /// Number of papers that produced each edge.
    pub fn edge_papers(&self) -> &[u32] {
        &self.edge_papers
    }

    pub fn check_bin(&self, bin: usize) -> Result<()> {
        if bin < self.bins.len() {
            Ok(())
        } else {
            Err(Error::BinOutOfRange {
                bin,
                bins: self.bins.len(),
            })
        }
    }

    fn check_interval(&self, t1: usize, t2: usize) -> Result<()> {
        self.check_bin(t1)?;
        self.check_bin(t2)?;
        if t1 >= t2 {
            return Err(Error::InvalidInterval { t1, t2 });
        }
        Ok(())
    }

    pub fn is_present(&self, node: NodeId, bin: usize) -> bool {
        self.node_first_seen[node as usize] as usize <= bin
    }

    pub fn node_count_at(&self, bin: usize) -> Result<u64> {
        self.check_bin(bin)?;
        Ok(self.node_counts[bin])
    }

    pub fn link_count_at(&self, bin: usize) -> Result<u64> {
        self.check_bin(bin)?;
        Ok(self.edge_counts[bin])
    }

    pub fn cumulative_counts(&self) -> Vec<CumulativeCount> {
        self.bins
            .iter()
            .enumerate()
            .map(|(i, b)| CumulativeCount {
                bin: b.label.clone(),
                nodes: self.node_counts[i],
                links: self.edge_counts[i],
            })
            .collect()
    }

    fn lookup(&self, author: &str) -> Result<NodeId> {
        self.node_index(author)
            .ok_or_else(|| Error::UnknownAuthor(author.to_owned()))
    }

    /// Neighbours of `node` through edges first seen at or before `bin`.
    pub fn neighbors_at(&self, bin: usize, node: NodeId) -> &[NodeId] {
        let (nbrs, seen) = self.adjacency.row(node);
        let visible = seen.partition_point(|&b| b as usize <= bin);
        &nbrs[..visible]
    }

    pub fn degree_at(&self, bin: usize, author: &str) -> Result<u32> {
        self.check_bin(bin)?;
        let node = self.lookup(author)?;
        if !self.is_present(node, bin) {
            return Err(Error::AuthorNotPresent {
                author: author.to_owned(),
                bin,
            });
        }
        Ok(self.neighbors_at(bin, node).len() as u32)
    }

    pub fn snapshot(&self, bin: usize) -> Result<Snapshot<'_>> {
        self.check_bin(bin)?;
        let degrees = (0..self.authors.len() as NodeId)
            .into_par_iter()
            .map(|n| self.neighbors_at(bin, n).len() as u32)
            .collect();
        Ok(Snapshot {
            series: self,
            bin,
            degrees,
            node_count: self.node_counts[bin] as usize,
        })
    }

    pub fn degree_histogram(&self, bin: usize) -> Result<DegreeHistogram> {
        Ok(self.snapshot(bin)?.histogram())
    }

    fn delta_edges(
        &self,
        t1: usize,
        t2: usize,
        mut keep: impl FnMut(bool, bool) -> bool,
    ) -> Result<Vec<(NodeId, NodeId)>> {
        self.check_interval(t1, t2)?;
        Ok(self
            .edges
            .iter()
            .zip(&self.edge_first_seen)
            .filter(|(_, &b)| (b as usize) > t1 && (b as usize) <= t2)
            .filter_map(|(&(u, v), _)| {
                let (u_old, v_old) = (self.is_present(u, t1), self.is_present(v, t1));
                keep(u_old, v_old).then(|| if v_old && !u_old { (v, u) } else { (u, v) })
            })
            .collect())
    }

    /// Edges first seen in `(t1, t2]` joining an author present at `t1` to a
    /// newcomer. The old author comes first in each pair.
    pub fn delta_newcomer_edges(&self, t1: usize, t2: usize) -> Result<Vec<(NodeId, NodeId)>> {
        self.delta_edges(t1, t2, |a, b| a != b)
    }

    /// Edges first seen in `(t1, t2]` between two authors already present at `t1`.
    pub fn delta_internal_edges(&self, t1: usize, t2: usize) -> Result<Vec<(NodeId, NodeId)>> {
        self.delta_edges(t1, t2, |a, b| a && b)
    }

    /// Edges first seen in `(t1, t2]` between two newcomers.
    pub fn delta_newcomer_pairs(&self, t1: usize, t2: usize) -> Result<Vec<(NodeId, NodeId)>> {
        self.delta_edges(t1, t2, |a, b| !a && !b)
    }
}

impl Adjacency {
    fn build(nodes: usize, edges: &[(NodeId, NodeId)], first_seen: &[u32]) -> Self {
        let mut offsets = vec![0usize; nodes + 1];
        for &(u, v) in edges {
            offsets[u as usize + 1] += 1;
            offsets[v as usize + 1] += 1;
        }
        for i in 0..nodes {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut slots = vec![(0u32, 0 as NodeId); offsets[nodes]];
        for (&(u, v), &b) in edges.iter().zip(first_seen) {
            slots[cursor[u as usize]] = (b, v);
            cursor[u as usize] += 1;
            slots[cursor[v as usize]] = (b, u);
            cursor[v as usize] += 1;
        }
        // per-row sort by (first_seen, neighbour)
        let mut rows: Vec<&mut [(u32, NodeId)]> = Vec::with_capacity(nodes);
        let mut rest = slots.as_mut_slice();
        for i in 0..nodes {
            let (row, tail) = rest.split_at_mut(offsets[i + 1] - offsets[i]);
            rows.push(row);
            rest = tail;
        }
        rows.into_par_iter().for_each(|row| row.sort_unstable());
        let (first_seen, neighbors) = slots.into_iter().unzip();
        Adjacency {
            offsets,
            neighbors,
            first_seen,
        }
    }

    fn row(&self, node: NodeId) -> (&[NodeId], &[u32]) {
        let r = self.offsets[node as usize]..self.offsets[node as usize + 1];
        (&self.neighbors[r.clone()], &self.first_seen[r])
    }
}

/// Degrees of every author at one bin. Absent authors carry degree 0 and are
/// filtered through [`Snapshot::is_present`].
#[derive(Debug, Clone)]
pub struct Snapshot<'a> {
    series: &'a SnapshotSeries,
    bin: usize,
    degrees: Vec<u32>,
    node_count: usize,
}

impl<'a> Snapshot<'a> {
    pub fn series(&self) -> &'a SnapshotSeries {
        self.series
    }

    pub fn bin(&self) -> usize {
        self.bin
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn is_present(&self, node: NodeId) -> bool {
        self.series.is_present(node, self.bin)
    }

    pub fn degree(&self, node: NodeId) -> u32 {
        self.degrees[node as usize]
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn neighbors(&self, node: NodeId) -> &'a [NodeId] {
        self.series.neighbors_at(self.bin, node)
    }

    /// Present nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.degrees.len() as NodeId).filter(move |&n| self.is_present(n))
    }

    pub fn histogram(&self) -> DegreeHistogram {
        let mut counts = BTreeMap::new();
        for n in self.nodes() {
            *counts.entry(self.degree(n)).or_insert(0) += 1;
        }
        DegreeHistogram {
            bin: self.bin,
            counts,
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::corpus::{assign_time_bins, parse_date, BinScheme, LinkedPublication};

    /// P1 2020-01-10 {A,B}; P2 2020-02-01 {A,C}; P3 2020-04-15 {B,C,D}; P4 2020-05-20 {E}.
    pub(crate) fn toy_corpus() -> crate::corpus::BinnedCorpus {
        let papers = [
            ("P1", "2020-01-10", &["A", "B"][..]),
            ("P2", "2020-02-01", &["A", "C"][..]),
            ("P3", "2020-04-15", &["B", "C", "D"][..]),
            ("P4", "2020-05-20", &["E"][..]),
        ];
        let linked = papers
            .iter()
            .map(|(p, dt, a)| LinkedPublication {
                paper_id: p.to_string(),
                date: parse_date(dt).unwrap(),
                author_ids: a.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>(),
            })
            .collect();
        assign_time_bins(linked, BinScheme::Quarter)
    }

    pub(crate) fn toy_series() -> SnapshotSeries {
        let c = toy_corpus();
        SnapshotSeries::build(&c.records, &c.bins).unwrap()
    }

    fn ids(s: &SnapshotSeries, pairs: &[(NodeId, NodeId)]) -> Vec<(String, String)> {
        pairs
            .iter()
            .map(|&(a, b)| (s.author_id(a).to_owned(), s.author_id(b).to_owned()))
            .collect()
    }

    fn pair(a: &str, b: &str) -> (String, String) {
        (a.into(), b.into())
    }

    #[test]
    fn toy_snapshots() {
        let s = toy_series();
        assert_eq!(s.bin_count(), 2);
        let q1: Vec<_> = (0..5).filter(|&n| s.is_present(n, 0)).collect();
        assert_eq!(q1.len(), 3);
        let q1_edges: Vec<_> = s
            .edges()
            .iter()
            .zip(s.edge_first_seen())
            .filter(|(_, &b)| b == 0)
            .map(|(&e, _)| e)
            .collect();
        assert_eq!(ids(&s, &q1_edges), vec![pair("A", "B"), pair("A", "C")]);
        assert_eq!(
            ids(&s, s.edges()),
            vec![
                pair("A", "B"),
                pair("A", "C"),
                pair("B", "C"),
                pair("B", "D"),
                pair("C", "D")
            ]
        );
    }

    #[test]
    fn toy_counts() {
        let counts = toy_series().cumulative_counts();
        let got: Vec<_> = counts.iter().map(|c| (c.bin.as_str(), c.nodes, c.links)).collect();
        assert_eq!(got, vec![("2020_Q1", 3, 2), ("2020_Q2", 5, 5)]);
    }

    #[test]
    fn toy_histograms() {
        let s = toy_series();
        let h1 = s.degree_histogram(0).unwrap();
        assert_eq!(h1.counts, BTreeMap::from([(1, 2), (2, 1)]));
        let h2 = s.degree_histogram(1).unwrap();
        assert_eq!(h2.counts, BTreeMap::from([(0, 1), (2, 2), (3, 2)]));
        assert!(matches!(
            s.degree_histogram(2),
            Err(Error::BinOutOfRange { bin: 2, bins: 2 })
        ));
    }

    #[test]
    fn toy_degrees() {
        let s = toy_series();
        assert_eq!(s.degree_at(0, "A").unwrap(), 2);
        assert_eq!(s.degree_at(1, "E").unwrap(), 0);
        assert!(matches!(
            s.degree_at(0, "D"),
            Err(Error::AuthorNotPresent { .. })
        ));
        assert!(matches!(s.degree_at(0, "Z"), Err(Error::UnknownAuthor(_))));
    }

    #[test]
    fn toy_deltas() {
        let s = toy_series();
        let newcomer = s.delta_newcomer_edges(0, 1).unwrap();
        assert_eq!(ids(&s, &newcomer), vec![pair("B", "D"), pair("C", "D")]);
        let internal = s.delta_internal_edges(0, 1).unwrap();
        assert_eq!(ids(&s, &internal), vec![pair("B", "C")]);
        assert!(s.delta_newcomer_pairs(0, 1).unwrap().is_empty());
        assert!(matches!(
            s.delta_internal_edges(1, 1),
            Err(Error::InvalidInterval { .. })
        ));
        assert!(matches!(
            s.delta_newcomer_edges(1, 0),
            Err(Error::InvalidInterval { .. })
        ));
    }

    fn rec(paper: &str, bin: usize, authors: &[&str]) -> PublicationRecord {
        PublicationRecord {
            paper_id: paper.into(),
            date: parse_date("2020-01-01").unwrap(),
            bin,
            author_ids: authors.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn quarters(n: usize) -> Vec<TimeBin> {
        crate::corpus::bins_spanning(
            parse_date("2020-01-01").unwrap(),
            parse_date("2020-01-01")
                .unwrap()
                .checked_add_months(chrono::Months::new(3 * (n as u32 - 1)))
                .unwrap(),
            BinScheme::Quarter,
        )
    }

    #[test]
    fn single_author_paper() {
        let s = SnapshotSeries::build(&[rec("P", 0, &["X"])], &quarters(1)).unwrap();
        assert_eq!(s.author_count(), 1);
        assert_eq!(s.edge_count(), 0);
        assert_eq!(s.degree_at(0, "X").unwrap(), 0);
    }

    #[test]
    fn star_histogram() {
        let star = SnapshotSeries::build(
            &(1..=5)
                .map(|i| rec(&format!("P{i}"), 0, &["c", &format!("l{i}")]))
                .collect::<Vec<_>>(),
            &quarters(1),
        )
        .unwrap();
        assert_eq!(
            star.degree_histogram(0).unwrap().counts,
            BTreeMap::from([(1, 5), (5, 1)])
        );
    }

    #[test]
    fn repeat_collaboration_is_not_a_new_link() {
        let s = SnapshotSeries::build(
            &[rec("P1", 0, &["A", "B"]), rec("P2", 1, &["A", "B"])],
            &quarters(2),
        )
        .unwrap();
        assert_eq!(s.edge_count(), 1);
        assert_eq!(s.edge_first_seen(), &[0]);
        assert_eq!(s.edge_papers(), &[2]);
        assert!(s.delta_internal_edges(0, 1).unwrap().is_empty());
        assert!(s.delta_newcomer_edges(0, 1).unwrap().is_empty());
    }

    #[test]
    fn empty_series() {
        let s = SnapshotSeries::build(&[], &[]).unwrap();
        assert_eq!(s.author_count(), 0);
        assert!(s.cumulative_counts().is_empty());
        assert!(s.snapshot(0).is_err());
    }

    #[test]
    fn record_bin_outside_bin_list() {
        assert!(SnapshotSeries::build(&[rec("P", 3, &["A"])], &quarters(2)).is_err());
    }
}
