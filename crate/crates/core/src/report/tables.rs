//! Row types for every emitted table. Field names are the column headers.

use serde::{Deserialize, Serialize};

pub use crate::graph::CumulativeCount;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub bin: String,
    pub k: u32,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortRow {
    pub bin: String,
    pub cohort: String,
    pub side: String,
    pub size: usize,
    pub mean_centrality: Option<f64>,
    pub collab_mean_centrality: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewcomerRow {
    pub t1: String,
    pub t2: String,
    pub k: u64,
    #[serde(rename = "V")]
    pub v: u64,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "P")]
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub t1: String,
    pub t2: String,
    pub ki: u64,
    pub kj: u64,
    #[serde(rename = "L")]
    pub l: u64,
    pub pairs: u64,
    #[serde(rename = "P")]
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapsedRow {
    pub t1: String,
    pub t2: String,
    pub x: u64,
    #[serde(rename = "L")]
    pub l: u64,
    pub pairs: u64,
    #[serde(rename = "P")]
    pub p: f64,
}

/// One log-log fit. `pair` is a bin label for `degree` fits and
/// `t1..t2` for `newcomer` and `internal` fits. Empty fit columns mean the
/// data could not be fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub pair: String,
    pub target: String,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r2: Option<f64>,
    pub n_points: usize,
}

/// `pair` column value for a bin pair.
pub fn pair_label(t1: &str, t2: &str) -> String {
    format!("{t1}..{t2}")
}

/// Table name, header row and what the table shows, in emission order.
pub const TABLES: &[(&str, &str, &str)] = &[
    (
        "cumulative_counts",
        "bin,nodes,links",
        "cumulative author and co-authorship link counts per bin",
    ),
    (
        "degree_histogram",
        "bin,k,count",
        "degree distribution of each cumulative snapshot",
    ),
    (
        "cohorts",
        "bin,cohort,side,size,mean_centrality,collab_mean_centrality",
        "mean degree centrality of top and tail cohorts and of their collaborators",
    ),
    (
        "newcomer_attachment",
        "t1,t2,k,V,N,P",
        "newcomer attachment probability by incumbent degree per bin pair",
    ),
    (
        "link_pairs",
        "t1,t2,ki,kj,L,pairs,P",
        "internal link probability by degree-class pair per bin pair",
    ),
    (
        "link_collapsed",
        "t1,t2,x,L,pairs,P",
        "internal link probability by degree product per bin pair",
    ),
    (
        "slopes",
        "pair,target,slope,intercept,r2,n_points",
        "log-binned slopes of degree distributions, newcomer attachment and collapsed internal links",
    ),
];
