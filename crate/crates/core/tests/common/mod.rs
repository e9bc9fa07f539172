#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use collabdyn::attachment::{NewcomerCount, PairCount, PairOptions, Pairing};
use collabdyn::centrality::{degree_centrality, select_cohort, CollaboratorMean};
use collabdyn::corpus::{bins_spanning, BinScheme, BinnedCorpus, PublicationRecord};
use collabdyn::report::{analyze_series, AnalysisOptions};
use collabdyn::synth::{brute_force_metrics, OracleOptions};
use collabdyn::SnapshotSeries;

pub const REAL_TOLERANCE: f64 = 1e-12;

/// Random corpus over the four quarters of 2020: up to `max_papers` papers,
/// teams of 1..=`max_team` drawn from a pool of up to 30 authors.
pub fn random_corpus(seed: u64, max_papers: usize, max_team: usize) -> BinnedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    let bins = bins_spanning(first, NaiveDate::from_ymd_opt(2020, 12, 31).unwrap(), BinScheme::Quarter);
    let pool = rng.random_range(2..=30usize);
    let papers = rng.random_range(0..=max_papers);
    let mut records = Vec::with_capacity(papers);
    for p in 0..papers {
        let team = rng.random_range(1..=max_team.min(pool));
        let mut authors = BTreeSet::new();
        while authors.len() < team {
            authors.insert(format!("a{:02}", rng.random_range(0..pool)));
        }
        let bin = rng.random_range(0..bins.len());
        let span = (bins[bin].end - bins[bin].start).num_days();
        records.push(PublicationRecord {
            paper_id: format!("p{p:03}"),
            date: bins[bin].start + Duration::days(rng.random_range(0..=span)),
            bin,
            author_ids: authors,
        });
    }
    BinnedCorpus { records, bins }
}

/// Option combination number `i` (cycles through every mode).
pub fn option_variant(i: u64) -> (AnalysisOptions, OracleOptions) {
    let pairing = if i % 2 == 0 { Pairing::Consecutive } else { Pairing::Cumulative };
    let newcomer_count = if (i / 2) % 2 == 0 { NewcomerCount::Edges } else { NewcomerCount::Distinct };
    let pair_count = if (i / 4) % 2 == 0 { PairCount::Combinations } else { PairCount::Literal };
    let exclude_existing = (i / 8) % 2 == 1;
    let exclude_isolated = (i / 16) % 2 == 1;
    let collaborator_mean = if (i / 32) % 2 == 0 { CollaboratorMean::PerMember } else { CollaboratorMean::Pooled };
    let oracle = OracleOptions {
        exclude_isolated,
        collaborator_mean,
        pairing,
        newcomer_count,
        pair_count,
        exclude_existing,
        ..OracleOptions::default()
    };
    let analysis = AnalysisOptions {
        cohorts: oracle.cohorts.clone(),
        exclude_isolated,
        collaborator_mean,
        pairing,
        newcomer_count,
        pair_options: PairOptions {
            count: pair_count,
            exclude_existing,
        },
        ..AnalysisOptions::default()
    };
    (analysis, oracle)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REAL_TOLERANCE
}

fn opt_close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => close(a, b),
        (None, None) => true,
        _ => false,
    }
}

/// Compares every pipeline table against the brute-force oracle. Returns the
/// first mismatch.
pub fn check_against_oracle(corpus: &BinnedCorpus, opts: &AnalysisOptions, oopts: &OracleOptions) -> Result<(), String> {
    let series = SnapshotSeries::build(&corpus.records, &corpus.bins).map_err(|e| e.to_string())?;
    let analysis = analyze_series(&series, opts).map_err(|e| e.to_string())?;
    let oracle = brute_force_metrics(&corpus.records, corpus.bins.len(), oopts).map_err(|e| e.to_string())?;
    let label_index: BTreeMap<&str, usize> = corpus
        .bins
        .iter()
        .map(|b| (b.label.as_str(), b.index))
        .collect();

    for (bin, (c, o)) in analysis.counts.iter().zip(&oracle.snapshots).enumerate() {
        if (c.nodes, c.links) != (o.nodes as u64, o.links as u64) {
            return Err(format!("bin {bin}: counts {:?} vs oracle ({}, {})", c, o.nodes, o.links));
        }
    }
    if analysis.counts.len() != oracle.snapshots.len() {
        return Err("snapshot count differs".into());
    }

    let mut hist: Vec<BTreeMap<u64, u64>> = vec![BTreeMap::new(); corpus.bins.len()];
    for r in &analysis.histogram {
        hist[label_index[r.bin.as_str()]].insert(u64::from(r.k), r.count);
    }
    for (bin, o) in oracle.snapshots.iter().enumerate() {
        if hist[bin] != o.histogram {
            return Err(format!("bin {bin}: histogram {:?} vs oracle {:?}", hist[bin], o.histogram));
        }
        let snap = series.snapshot(bin).map_err(|e| e.to_string())?;
        for (author, &d) in &o.degrees {
            let node = series.node_index(author).ok_or(format!("missing author {author}"))?;
            if u64::from(snap.degree(node)) != d {
                return Err(format!("bin {bin}: degree of {author}"));
            }
            match (degree_centrality(&snap, node), o.centrality.get(author)) {
                (Ok(c), Some(r)) => {
                    let want = *r.numer() as f64 / *r.denom() as f64;
                    if !close(c, want) {
                        return Err(format!("bin {bin}: centrality of {author} {c} vs {want}"));
                    }
                }
                (Err(_), None) => {}
                (got, want) => return Err(format!("bin {bin}: centrality of {author} {got:?} vs {want:?}")),
            }
        }
        if snap.node_count() != o.nodes {
            return Err(format!("bin {bin}: present nodes"));
        }
        let rows: Vec<_> = analysis
            .cohorts
            .iter()
            .filter(|r| label_index[r.bin.as_str()] == bin)
            .collect();
        for ((row, spec), oc) in rows.iter().zip(&opts.cohorts).zip(&o.cohorts) {
            match oc {
                None => {
                    if row.mean_centrality.is_some() {
                        return Err(format!("bin {bin}: cohort {} defined, oracle undefined", row.cohort));
                    }
                }
                Some(oc) => {
                    let members: Vec<String> = select_cohort(&snap, spec, opts.exclude_isolated)
                        .into_iter()
                        .map(|n| series.author_id(n).to_owned())
                        .collect();
                    if members != oc.members || row.size != oc.members.len() {
                        return Err(format!("bin {bin}: cohort members {members:?} vs {:?}", oc.members));
                    }
                    if !opt_close(row.mean_centrality, Some(oc.mean_centrality))
                        || !opt_close(row.collab_mean_centrality, oc.collab_mean_centrality)
                    {
                        return Err(format!("bin {bin}: cohort stats {row:?} vs {oc:?}"));
                    }
                }
            }
        }
    }

    for d in &oracle.deltas {
        let in_pair = |t1: &str, t2: &str| label_index[t1] == d.t1 && label_index[t2] == d.t2;
        let newcomer: BTreeMap<u64, (u64, u64)> = analysis
            .newcomer
            .iter()
            .filter(|r| in_pair(&r.t1, &r.t2))
            .map(|r| (r.k, (r.v, r.n)))
            .collect();
        if newcomer != d.attachment {
            return Err(format!("({}, {}]: attachment {newcomer:?} vs {:?}", d.t1, d.t2, d.attachment));
        }
        for r in analysis.newcomer.iter().filter(|r| in_pair(&r.t1, &r.t2)) {
            let want = d.attachment_probability(r.k).unwrap();
            if !close(r.p, *want.numer() as f64 / *want.denom() as f64) {
                return Err(format!("P({}) mismatch", r.k));
            }
        }
        let pairs: BTreeMap<(u64, u64), (u64, u64)> = analysis
            .pairs
            .iter()
            .filter(|r| in_pair(&r.t1, &r.t2))
            .map(|r| ((r.ki, r.kj), (r.l, r.pairs)))
            .collect();
        if pairs != d.pairs {
            return Err(format!("({}, {}]: pairs {pairs:?} vs {:?}", d.t1, d.t2, d.pairs));
        }
        for r in analysis.pairs.iter().filter(|r| in_pair(&r.t1, &r.t2)) {
            let want = d.pair_probability(r.ki, r.kj).unwrap();
            if !close(r.p, *want.numer() as f64 / *want.denom() as f64) {
                return Err(format!("P({}, {}) mismatch", r.ki, r.kj));
            }
        }
        let collapsed: BTreeMap<u64, (u64, u64)> = analysis
            .collapsed
            .iter()
            .filter(|r| in_pair(&r.t1, &r.t2))
            .map(|r| (r.x, (r.l, r.pairs)))
            .collect();
        if collapsed != d.collapsed {
            return Err(format!("({}, {}]: collapsed {collapsed:?} vs {:?}", d.t1, d.t2, d.collapsed));
        }
        let t1_series = series.delta_newcomer_edges(d.t1, d.t2).map_err(|e| e.to_string())?;
        if t1_series.len() != d.newcomer_edges.len() {
            return Err("newcomer edge count".into());
        }
        let internal = series.delta_internal_edges(d.t1, d.t2).map_err(|e| e.to_string())?;
        if internal.len() != d.internal_edges.len() {
            return Err("internal edge count".into());
        }
    }
    let expected_deltas = opts.pairing.pairs(corpus.bins.len()).len();
    if oracle.deltas.len() != expected_deltas {
        return Err("delta count".into());
    }
    Ok(())
}
