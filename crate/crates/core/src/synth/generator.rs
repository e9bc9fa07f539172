use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use chrono::{Months, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{assign_time_bins, BinScheme, BinnedCorpus, LinkedPublication};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TeamSize {
    Fixed(u32),
    /// Uniform over `min..=max`.
    Uniform { min: u32, max: u32 },
}

impl TeamSize {
    fn min(self) -> u32 {
        match self {
            TeamSize::Fixed(n) => n,
            TeamSize::Uniform { min, .. } => min,
        }
    }

    fn max(self) -> u32 {
        match self {
            TeamSize::Fixed(n) => n,
            TeamSize::Uniform { max, .. } => max,
        }
    }

    fn sample<R: Rng>(self, rng: &mut R) -> u32 {
        match self {
            TeamSize::Fixed(n) => n,
            TeamSize::Uniform { min, max } => rng.random_range(min..=max),
        }
    }
}

impl FromStr for TeamSize {
    type Err = Error;

    /// `4` or `2..6` (inclusive).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("bad team size {s:?}"));
        match s.trim().split_once("..") {
            Some((lo, hi)) => Ok(TeamSize::Uniform {
                min: lo.trim().parse().map_err(|_| bad())?,
                max: hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?,
            }),
            None => Ok(TeamSize::Fixed(s.trim().parse().map_err(|_| bad())?)),
        }
    }
}

impl fmt::Display for TeamSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TeamSize::Fixed(n) => write!(f, "{n}"),
            TeamSize::Uniform { min, max } => write!(f, "{min}..{max}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub papers_total: usize,
    pub papers_per_bin: usize,
    pub team_size: TeamSize,
    pub newcomers_per_paper: u32,
    pub kernel_exponent: f64,
    pub seed: u64,
}

impl GeneratorParams {
    /// Spreads `papers_total` over eight quarters.
    pub fn new(papers_total: usize, team: u32, newcomers: u32, alpha: f64, seed: u64) -> Self {
        GeneratorParams {
            papers_total,
            papers_per_bin: papers_total.div_ceil(8).max(1),
            team_size: TeamSize::Fixed(team),
            newcomers_per_paper: newcomers,
            kernel_exponent: alpha,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.papers_per_bin == 0 {
            return Err(Error::invalid("papers_per_bin must be at least 1"));
        }
        if self.team_size.min() == 0 || self.team_size.min() > self.team_size.max() {
            return Err(Error::invalid(format!("bad team size {}", self.team_size)));
        }
        if self.newcomers_per_paper > self.team_size.min() {
            return Err(Error::invalid(
                "newcomers_per_paper cannot exceed the smallest team size",
            ));
        }
        if !(self.kernel_exponent >= 0.0 && self.kernel_exponent.is_finite()) {
            return Err(Error::invalid("kernel exponent must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Fenwick tree over non-negative weights supporting weighted draws.
struct WeightTree {
    tree: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightTree {
    fn with_capacity(n: usize) -> Self {
        WeightTree {
            tree: vec![0.0; n + 1],
            weights: Vec::with_capacity(n),
        }
    }

    fn len(&self) -> usize {
        self.weights.len()
    }

    fn add(&mut self, i: usize, delta: f64) {
        let mut j = i + 1;
        while j < self.tree.len() {
            self.tree[j] += delta;
            j += j & j.wrapping_neg();
        }
    }

    fn push(&mut self, w: f64) {
        if self.weights.len() + 1 >= self.tree.len() {
            // grow by rebuilding
            let cap = (self.tree.len() * 2).max(16);
            let weights = std::mem::take(&mut self.weights);
            *self = WeightTree::with_capacity(cap);
            for w in weights {
                self.push(w);
            }
        }
        let i = self.weights.len();
        self.weights.push(0.0);
        self.set(i, w);
    }

    fn set(&mut self, i: usize, w: f64) {
        let delta = w - self.weights[i];
        self.weights[i] = w;
        if delta != 0.0 {
            self.add(i, delta);
        }
    }

    fn total(&self) -> f64 {
        let mut sum = 0.0;
        let mut j = self.weights.len();
        while j > 0 {
            sum += self.tree[j];
            j &= j - 1;
        }
        sum
    }

    /// Smallest index whose prefix sum exceeds `target`.
    fn find(&self, mut target: f64) -> usize {
        let mut pos = 0;
        let mut step = (self.tree.len() - 1).next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos.min(self.weights.len() - 1)
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Option<usize> {
        let total = self.total();
        if !(total > 0.0) {
            return None;
        }
        for _ in 0..64 {
            let i = self.find(rng.random::<f64>() * total);
            if self.weights[i] > 0.0 {
                return Some(i);
            }
        }
        // rounding left us on a zero-weight slot; fall back to a scan
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut last = None;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > 0.0 {
                acc += w;
                last = Some(i);
                if acc > target {
                    return last;
                }
            }
        }
        last
    }
}

fn quarter_start(q: usize) -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 1, 1)
        .unwrap()
        .checked_add_months(Months::new(3 * q as u32))
        .expect("date in range")
}

/// Grows a corpus one paper at a time. Each paper is a clique of `team`
/// authors: up to `team - newcomers` incumbents drawn without replacement with
/// probability proportional to `(degree + 1)^alpha`, the rest fresh authors.
/// Papers fill calendar quarters from 2020_Q1, `papers_per_bin` per quarter.
pub fn generate_team_corpus(params: &GeneratorParams) -> Result<BinnedCorpus> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let alpha = params.kernel_exponent;
    let weight = |degree: u32| (f64::from(degree) + 1.0).powf(alpha);

    let mut tree = WeightTree::with_capacity(1024);
    let mut degree: Vec<u32> = Vec::new();
    let mut edges: HashSet<u64> = HashSet::new();
    let mut papers = Vec::with_capacity(params.papers_total);
    let mut team: Vec<usize> = Vec::new();

    for p in 0..params.papers_total {
        let size = params.team_size.sample(&mut rng) as usize;
        let wanted = size - (params.newcomers_per_paper as usize).min(size);
        team.clear();
        while team.len() < wanted.min(tree.len()) {
            let Some(i) = tree.draw(&mut rng) else { break };
            tree.set(i, 0.0);
            team.push(i);
        }
        while team.len() < size {
            team.push(tree.len());
            degree.push(0);
            tree.push(0.0);
        }
        for (a, &u) in team.iter().enumerate() {
            for &v in &team[a + 1..] {
                let key = ((u.min(v) as u64) << 32) | u.max(v) as u64;
                if edges.insert(key) {
                    degree[u] += 1;
                    degree[v] += 1;
                }
            }
        }
        for &u in &team {
            tree.set(u, weight(degree[u]));
        }

        let quarter = p / params.papers_per_bin;
        let slot = p % params.papers_per_bin;
        let start = quarter_start(quarter);
        let days = (quarter_start(quarter + 1) - start).num_days() as usize;
        let date = start + chrono::Days::new((slot * days / params.papers_per_bin) as u64);
        papers.push(LinkedPublication {
            paper_id: format!("W{p:08}"),
            date,
            author_ids: team.iter().map(|&u| format!("G{u:09}")).collect::<BTreeSet<_>>(),
        });
    }
    Ok(assign_time_bins(papers, BinScheme::Quarter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::write_publications;

    #[test]
    fn deterministic_for_seed() {
        let params = GeneratorParams::new(300, 4, 1, 1.0, 7);
        let a = generate_team_corpus(&params).unwrap();
        let b = generate_team_corpus(&params).unwrap();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        write_publications(&a.records, &mut x).unwrap();
        write_publications(&b.records, &mut y).unwrap();
        assert_eq!(x, y);
        let c = generate_team_corpus(&GeneratorParams { seed: 8, ..params }).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn first_paper_is_all_newcomers() {
        let corpus = generate_team_corpus(&GeneratorParams::new(1, 4, 1, 1.0, 1)).unwrap();
        assert_eq!(corpus.records.len(), 1);
        assert_eq!(corpus.records[0].author_ids.len(), 4);
        assert_eq!(corpus.bins.len(), 1);
    }

    #[test]
    fn quarters_fill_in_order() {
        let corpus = generate_team_corpus(&GeneratorParams::new(80, 3, 1, 0.0, 3)).unwrap();
        assert_eq!(corpus.bins.len(), 8);
        assert_eq!(corpus.bins[7].label, "2021_Q4");
        for (i, r) in corpus.records.iter().enumerate() {
            assert_eq!(r.bin, i / 10);
            assert_eq!(r.author_ids.len(), 3);
        }
    }

    #[test]
    fn each_paper_has_exactly_the_requested_newcomers() {
        let corpus = generate_team_corpus(&GeneratorParams::new(200, 5, 2, 1.0, 11)).unwrap();
        let mut seen = BTreeSet::new();
        for (i, r) in corpus.records.iter().enumerate() {
            let fresh = r.author_ids.iter().filter(|a| !seen.contains(*a)).count();
            if i > 1 {
                assert_eq!(fresh, 2, "paper {i}");
            }
            seen.extend(r.author_ids.iter().cloned());
        }
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = GeneratorParams::new(10, 2, 3, 1.0, 0);
        assert!(generate_team_corpus(&p).is_err());
        p.newcomers_per_paper = 1;
        p.kernel_exponent = -1.0;
        assert!(generate_team_corpus(&p).is_err());
        p.kernel_exponent = 0.5;
        p.papers_per_bin = 0;
        assert!(generate_team_corpus(&p).is_err());
    }

    #[test]
    fn team_size_parsing() {
        assert_eq!("4".parse::<TeamSize>().unwrap(), TeamSize::Fixed(4));
        assert_eq!(
            "2..6".parse::<TeamSize>().unwrap(),
            TeamSize::Uniform { min: 2, max: 6 }
        );
        assert!("x".parse::<TeamSize>().is_err());
    }

    #[test]
    fn weight_tree_draws_proportionally() {
        let mut t = WeightTree::with_capacity(2);
        for w in [1.0, 0.0, 3.0] {
            t.push(w);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut hits = [0usize; 3];
        for _ in 0..40_000 {
            hits[t.draw(&mut rng).unwrap()] += 1;
        }
        assert_eq!(hits[1], 0);
        let ratio = hits[2] as f64 / hits[0] as f64;
        assert!((ratio - 3.0).abs() < 0.15, "ratio {ratio}");
        t.set(0, 0.0);
        t.set(2, 0.0);
        assert!(t.draw(&mut rng).is_none());
    }
}
