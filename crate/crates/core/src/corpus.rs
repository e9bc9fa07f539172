//! Publication ingest: parsing line-delimited exports, joining author names
//! to canonical ids through shared paper ids, and calendar binning.
//!
//! Publications file, one JSON object per line:
//!
//! ```text
//! {"paper_id":"P1","date":"2020-01-10","author_names":["A. Smith","B. Wu"]}
//! {"paper_id":"P2","date":"2020-02-01","author_ids":["S9","S12"]}
//! ```
//!
//! Id-map file, one JSON object per line:
//!
//! ```text
//! {"paper_id":"P1","entries":[["A. Smith","S9"],["B. Wu","S4"]]}
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prefix reserved for ids minted from normalized names.
pub const SYNTHETIC_PREFIX: char = '~';

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuthorList {
    /// Names that still need linking.
    Names(Vec<String>),
    /// Canonical ids supplied by the export itself.
    Ids(Vec<String>),
}

impl AuthorList {
    pub fn len(&self) -> usize {
        match self {
            AuthorList::Names(v) | AuthorList::Ids(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPublication {
    pub paper_id: String,
    pub date: NaiveDate,
    pub authors: AuthorList,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdMapEntry {
    pub paper_id: String,
    pub entries: Vec<(String, String)>,
}

/// A paper whose authors carry canonical ids but which has not been binned yet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkedPublication {
    pub paper_id: String,
    pub date: NaiveDate,
    pub author_ids: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub paper_id: String,
    pub date: NaiveDate,
    pub bin: usize,
    pub author_ids: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinScheme {
    #[default]
    Quarter,
    Month,
    Year,
}

impl BinScheme {
    fn periods_per_year(self) -> i64 {
        match self {
            BinScheme::Quarter => 4,
            BinScheme::Month => 12,
            BinScheme::Year => 1,
        }
    }

    /// Absolute period number of a date; consecutive periods differ by one.
    pub fn ordinal(self, date: NaiveDate) -> i64 {
        let year = i64::from(date.year());
        let sub = match self {
            BinScheme::Quarter => i64::from(date.month0() / 3),
            BinScheme::Month => i64::from(date.month0()),
            BinScheme::Year => 0,
        };
        year * self.periods_per_year() + sub
    }

    fn period(self, ordinal: i64) -> (NaiveDate, NaiveDate, String) {
        let per = self.periods_per_year();
        let year = ordinal.div_euclid(per) as i32;
        let sub = ordinal.rem_euclid(per) as u32;
        let (start_month, months, label) = match self {
            BinScheme::Quarter => (sub * 3 + 1, 3, format!("{year}_Q{}", sub + 1)),
            BinScheme::Month => (sub + 1, 1, format!("{year}_{:02}", sub + 1)),
            BinScheme::Year => (1, 12, format!("{year}")),
        };
        let start = NaiveDate::from_ymd_opt(year, start_month, 1).expect("valid period start");
        let end = start
            .checked_add_months(chrono::Months::new(months))
            .and_then(|d| d.pred_opt())
            .expect("valid period end");
        (start, end, label)
    }

    pub fn label_for(self, date: NaiveDate) -> String {
        self.period(self.ordinal(date)).2
    }
}

impl FromStr for BinScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "quarter" => Ok(BinScheme::Quarter),
            "month" => Ok(BinScheme::Month),
            "year" => Ok(BinScheme::Year),
            other => Err(Error::invalid(format!("unknown bin scheme {other:?}"))),
        }
    }
}

impl fmt::Display for BinScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinScheme::Quarter => "quarter",
            BinScheme::Month => "month",
            BinScheme::Year => "year",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeBin {
    pub index: usize,
    pub label: String,
    pub start: NaiveDate,
    /// Last day of the bin, inclusive.
    pub end: NaiveDate,
}

/// Contiguous bins covering `[first, last]`.
pub fn bins_spanning(first: NaiveDate, last: NaiveDate, scheme: BinScheme) -> Vec<TimeBin> {
    let lo = scheme.ordinal(first);
    let hi = scheme.ordinal(last);
    (lo..=hi)
        .enumerate()
        .map(|(index, ord)| {
            let (start, end, label) = scheme.period(ord);
            TimeBin {
                index,
                label,
                start,
                end,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkReport {
    pub papers_total: usize,
    /// Name-mode papers found in the id map.
    pub papers_linked: usize,
    /// Papers whose export already carried author ids.
    pub papers_prelinked: usize,
    pub papers_dropped_unlinked: usize,
    pub names_matched: usize,
    pub names_unmatched: usize,
    pub records_malformed: usize,
    pub records_dropped_undated: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedPublications {
    pub records: Vec<RawPublication>,
    pub malformed: usize,
    pub undated: usize,
}

#[derive(Deserialize)]
struct PublicationLine {
    paper_id: Option<String>,
    date: Option<String>,
    author_names: Option<Vec<String>>,
    author_ids: Option<Vec<String>>,
}

pub fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()
}

/// Parses a publications stream. Blank lines are ignored; malformed lines and
/// lines without a usable date are skipped and tallied.
pub fn parse_publications<R: BufRead>(input: R) -> Result<ParsedPublications> {
    let mut out = ParsedPublications::default();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let Ok(parsed) = serde_json::from_str::<PublicationLine>(&line) else {
            out.malformed += 1;
            continue;
        };
        let paper_id = match parsed.paper_id {
            Some(id) if !id.trim().is_empty() => id,
            _ => {
                out.malformed += 1;
                continue;
            }
        };
        let authors = match (parsed.author_names, parsed.author_ids) {
            (Some(names), None) => AuthorList::Names(names),
            (None, Some(ids)) => AuthorList::Ids(ids),
            _ => {
                out.malformed += 1;
                continue;
            }
        };
        let Some(date) = parsed.date.as_deref().and_then(parse_date) else {
            out.undated += 1;
            continue;
        };
        out.records.push(RawPublication {
            paper_id,
            date,
            authors,
        });
    }
    Ok(out)
}

#[derive(Deserialize)]
struct IdMapLine {
    paper_id: String,
    entries: Vec<(String, String)>,
}

/// Parses an id-map stream. Returns the entries and the number of malformed lines.
pub fn parse_idmap<R: BufRead>(input: R) -> Result<(Vec<IdMapEntry>, usize)> {
    let mut entries = Vec::new();
    let mut malformed = 0;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<IdMapLine>(&line) {
            Ok(l) if !l.paper_id.trim().is_empty() => entries.push(IdMapEntry {
                paper_id: l.paper_id,
                entries: l.entries,
            }),
            _ => malformed += 1,
        }
    }
    Ok((entries, malformed))
}

/// Casefold, drop punctuation, collapse whitespace.
pub fn normalize_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    let mut pending_space = false;
    for c in name.chars() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
        } else if c.is_alphanumeric() {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.extend(c.to_lowercase());
        }
    }
    out
}

/// Id minted for a name with no corpus match. Normalized names never contain
/// the prefix character, so these cannot collide with escaped corpus ids.
pub fn synthetic_id(normalized: &str) -> String {
    let mut id = String::with_capacity(normalized.len() + 1);
    id.push(SYNTHETIC_PREFIX);
    id.extend(normalized.chars().map(|c| if c == ' ' { '_' } else { c }));
    id
}

/// Corpus ids starting with the synthetic prefix get it doubled.
pub fn corpus_id(raw: &str) -> String {
    if raw.starts_with(SYNTHETIC_PREFIX) {
        format!("{SYNTHETIC_PREFIX}{raw}")
    } else {
        raw.to_owned()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinkOptions {
    pub drop_unlinked: bool,
}

pub fn link_author_names(
    raw: Vec<RawPublication>,
    idmap: &[IdMapEntry],
    options: LinkOptions,
) -> (Vec<LinkedPublication>, LinkReport) {
    // paper id -> normalized name -> smallest id, so line order never matters
    let mut lookup: HashMap<&str, BTreeMap<String, String>> = HashMap::new();
    for entry in idmap {
        let names = lookup.entry(entry.paper_id.as_str()).or_default();
        for (name, id) in &entry.entries {
            let norm = normalize_name(name);
            if norm.is_empty() || id.trim().is_empty() {
                continue;
            }
            let id = corpus_id(id);
            names
                .entry(norm)
                .and_modify(|cur| {
                    if id < *cur {
                        cur.clone_from(&id);
                    }
                })
                .or_insert(id);
        }
    }

    let mut report = LinkReport {
        papers_total: raw.len(),
        ..LinkReport::default()
    };
    let mut linked = Vec::with_capacity(raw.len());
    for paper in raw {
        let mut author_ids = BTreeSet::new();
        match paper.authors {
            AuthorList::Ids(ids) => {
                report.papers_prelinked += 1;
                author_ids.extend(
                    ids.iter()
                        .filter(|id| !id.trim().is_empty())
                        .map(|id| corpus_id(id)),
                );
            }
            AuthorList::Names(names) => {
                let known = lookup.get(paper.paper_id.as_str());
                if known.is_some() {
                    report.papers_linked += 1;
                } else if options.drop_unlinked {
                    report.papers_dropped_unlinked += 1;
                    continue;
                }
                for name in &names {
                    let norm = normalize_name(name);
                    match known.and_then(|m| m.get(&norm)) {
                        Some(id) => {
                            report.names_matched += 1;
                            author_ids.insert(id.clone());
                        }
                        None => {
                            report.names_unmatched += 1;
                            if !norm.is_empty() {
                                author_ids.insert(synthetic_id(&norm));
                            }
                        }
                    }
                }
            }
        }
        linked.push(LinkedPublication {
            paper_id: paper.paper_id,
            date: paper.date,
            author_ids,
        });
    }
    (linked, report)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinnedCorpus {
    pub records: Vec<PublicationRecord>,
    pub bins: Vec<TimeBin>,
}

impl BinnedCorpus {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub fn assign_time_bins(records: Vec<LinkedPublication>, scheme: BinScheme) -> BinnedCorpus {
    let (Some(first), Some(last)) = (
        records.iter().map(|r| r.date).min(),
        records.iter().map(|r| r.date).max(),
    ) else {
        return BinnedCorpus::default();
    };
    let bins = bins_spanning(first, last, scheme);
    let base = scheme.ordinal(first);
    let records = records
        .into_iter()
        .map(|r| PublicationRecord {
            bin: (scheme.ordinal(r.date) - base) as usize,
            paper_id: r.paper_id,
            date: r.date,
            author_ids: r.author_ids,
        })
        .collect();
    BinnedCorpus { records, bins }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub papers: usize,
    pub authors: usize,
    pub multi_author_papers: usize,
    pub authors_with_collaborators: usize,
    pub multi_author_fraction: f64,
    pub collaborator_fraction: f64,
}

pub fn validate_corpus(records: &[PublicationRecord]) -> CorpusStats {
    let mut authors: HashMap<&str, bool> = HashMap::new();
    let mut multi = 0;
    for r in records {
        let collaborative = r.author_ids.len() > 1;
        multi += usize::from(collaborative);
        for id in &r.author_ids {
            *authors.entry(id.as_str()).or_insert(false) |= collaborative;
        }
    }
    let with_collab = authors.values().filter(|&&c| c).count();
    let frac = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    CorpusStats {
        papers: records.len(),
        authors: authors.len(),
        multi_author_papers: multi,
        authors_with_collaborators: with_collab,
        multi_author_fraction: frac(multi, records.len()),
        collaborator_fraction: frac(with_collab, authors.len()),
    }
}

#[derive(Serialize)]
struct PublicationOut<'a> {
    paper_id: &'a str,
    date: String,
    author_ids: &'a BTreeSet<String>,
}

/// Writes records in the pre-linked publications format accepted by [`parse_publications`].
pub fn write_publications<W: Write>(records: &[PublicationRecord], mut out: W) -> Result<()> {
    for r in records {
        let line = PublicationOut {
            paper_id: &r.paper_id,
            date: r.date.format("%Y-%m-%d").to_string(),
            author_ids: &r.author_ids,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Writes binned records, one JSON object per line.
pub fn write_records<W: Write>(records: &[PublicationRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records<R: BufRead>(input: R) -> Result<Vec<PublicationRecord>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
