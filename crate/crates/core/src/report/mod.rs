//! End-to-end pipeline: ingest, snapshots, metrics, attachment, fit, emit.

mod config;
mod emit;
pub mod tables;

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{OutputFormat, PipelineConfig, DEFAULT_COHORTS};
pub use emit::{emit_tables, write_table};

use crate::attachment::{
    collapse_pair_table, internal_link_table_at, newcomer_attachment_table_at, AttachmentTable,
    CollapsedTable, NewcomerCount, PairLinkTable, PairOptions,
};
use crate::centrality::{cohort_stats, select_cohort, CohortSpec, CollaboratorMean};
use crate::corpus::{
    assign_time_bins, link_author_names, parse_idmap, parse_publications, validate_corpus,
    BinScheme, BinnedCorpus, CorpusStats, LinkOptions, LinkReport,
};
use crate::error::{Error, Result};
use crate::graph::{load_series, save_series, DegreeHistogram, SnapshotSeries, FORMAT_VERSION};
use crate::powerlaw::{fit_attachment, fit_collapsed, fit_degree_exponent, SlopeFit};
use tables::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Ingest,
    Snapshots,
    Metrics,
    Attachment,
    Fit,
    Emit,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Snapshots => "snapshots",
            Stage::Metrics => "metrics",
            Stage::Attachment => "attachment",
            Stage::Fit => "fit",
            Stage::Emit => "emit",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("[{stage}] {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

/// Output of the ingest stage.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub corpus: BinnedCorpus,
    pub report: LinkReport,
    pub stats: CorpusStats,
}

/// Parses, links and bins the publication export (plus optional id map).
pub fn ingest_files(
    pubs: &Path,
    idmap: Option<&Path>,
    scheme: BinScheme,
    drop_unlinked: bool,
) -> Result<Ingested> {
    let open = |p: &Path| File::open(p).map(BufReader::new).map_err(|e| Error::io(p, e));
    let parsed = parse_publications(open(pubs)?)?;
    let (entries, map_malformed) = match idmap {
        Some(p) => parse_idmap(open(p)?)?,
        None => (Vec::new(), 0),
    };
    let (linked, mut report) =
        link_author_names(parsed.records, &entries, LinkOptions { drop_unlinked });
    report.records_malformed = parsed.malformed + map_malformed;
    report.records_dropped_undated = parsed.undated;
    let corpus = assign_time_bins(linked, scheme);
    let stats = validate_corpus(&corpus.records);
    Ok(Ingested {
        corpus,
        report,
        stats,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub authors: usize,
    pub edges: usize,
    pub bins: usize,
    pub first_bin: String,
    pub last_bin: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub file: String,
    pub columns: String,
    pub rows: usize,
    pub shows: String,
}

/// Run manifest. `tables` is filled in at emission, when the format is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub snapshot_format: u32,
    pub config: BTreeMap<String, String>,
    pub corpus: CorpusStats,
    pub linkage: LinkReport,
    pub series: SeriesSummary,
    pub tables: BTreeMap<String, TableEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub manifest: Manifest,
    pub counts: Vec<CumulativeCount>,
    pub histogram: Vec<HistogramRow>,
    pub cohorts: Vec<CohortRow>,
    pub newcomer: Vec<NewcomerRow>,
    pub pairs: Vec<PairRow>,
    pub collapsed: Vec<CollapsedRow>,
    pub slopes: Vec<FitRow>,
}

impl ReportBundle {
    pub(crate) fn row_counts(&self) -> [usize; 7] {
        [
            self.counts.len(),
            self.histogram.len(),
            self.cohorts.len(),
            self.newcomer.len(),
            self.pairs.len(),
            self.collapsed.len(),
            self.slopes.len(),
        ]
    }
}

#[derive(Serialize, Deserialize)]
struct CachedIngest {
    report: LinkReport,
    stats: CorpusStats,
}

/// Hex SHA-256 over the input bytes and every setting that shapes the snapshot store.
pub fn cache_key(config: &PipelineConfig) -> Result<String> {
    fn feed(h: &mut Sha256, p: &Path) -> Result<()> {
        let mut f = File::open(p).map_err(|e| Error::io(p, e))?;
        let mut buf = vec![0u8; 1 << 16];
        loop {
            let n = f.read(&mut buf).map_err(|e| Error::io(p, e))?;
            if n == 0 {
                return Ok(());
            }
            h.update(&buf[..n]);
        }
    }
    let mut h = Sha256::new();
    feed(&mut h, &config.pubs)?;
    h.update(b"\0idmap\0");
    if let Some(p) = &config.idmap {
        feed(&mut h, p)?;
    }
    h.update(
        format!(
            "\0{}\0{}\0{}",
            config.bin_scheme, config.drop_unlinked, FORMAT_VERSION
        )
        .as_bytes(),
    );
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn cache_paths(dir: &Path, key: &str) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("series-{key}.bin")),
        dir.join(format!("ingest-{key}.json")),
    )
}

fn load_cached(dir: &Path, key: &str) -> Option<(SnapshotSeries, CachedIngest)> {
    let (series_path, ingest_path) = cache_paths(dir, key);
    let ingest: CachedIngest =
        serde_json::from_reader(BufReader::new(File::open(ingest_path).ok()?)).ok()?;
    let series = load_series(BufReader::new(File::open(series_path).ok()?)).ok()?;
    Some((series, ingest))
}

fn store_cached(dir: &Path, key: &str, series: &SnapshotSeries, ingest: &CachedIngest) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (series_path, ingest_path) = cache_paths(dir, key);
    let tmp = dir.join(format!(".series-{key}.{}.tmp", std::process::id()));
    {
        let f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        save_series(series, BufWriter::new(f))?;
    }
    std::fs::rename(&tmp, &series_path).map_err(|e| Error::io(&series_path, e))?;
    let f = File::create(&ingest_path).map_err(|e| Error::io(&ingest_path, e))?;
    serde_json::to_writer(BufWriter::new(f), ingest)?;
    Ok(())
}

/// Ingest plus snapshot build, reusing the content-keyed cache when enabled.
fn build_series(config: &PipelineConfig) -> Result<(SnapshotSeries, LinkReport, CorpusStats), PipelineError> {
    let key = match &config.cache_dir {
        Some(_) => Some(cache_key(config).stage(Stage::Ingest)?),
        None => None,
    };
    if let (Some(dir), Some(key)) = (&config.cache_dir, &key) {
        if let Some((series, cached)) = load_cached(dir, key) {
            return Ok((series, cached.report, cached.stats));
        }
    }
    let ingested = ingest_files(
        &config.pubs,
        config.idmap.as_deref(),
        config.bin_scheme,
        config.drop_unlinked,
    )
    .stage(Stage::Ingest)?;
    if ingested.corpus.is_empty() {
        return Err(Error::EmptyCorpus).stage(Stage::Ingest);
    }
    let series = SnapshotSeries::build(&ingested.corpus.records, &ingested.corpus.bins)
        .stage(Stage::Snapshots)?;
    let cached = CachedIngest {
        report: ingested.report,
        stats: ingested.stats,
    };
    if let (Some(dir), Some(key)) = (&config.cache_dir, &key) {
        store_cached(dir, key, &series, &cached).stage(Stage::Snapshots)?;
    }
    Ok((series, cached.report, cached.stats))
}

/// Runs every stage in memory and returns the tables. Nothing but the
/// snapshot cache touches disk.
pub fn run_pipeline(config: &PipelineConfig) -> Result<ReportBundle, PipelineError> {
    config.validate().stage(Stage::Config)?;
    let (series, linkage, corpus) = build_series(config)?;
    let analysis = analyze_series(&series, &AnalysisOptions::from(config))?;
    let bins = series.bins();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        snapshot_format: FORMAT_VERSION,
        config: config.echo(),
        corpus,
        linkage,
        series: SeriesSummary {
            authors: series.author_count(),
            edges: series.edge_count(),
            bins: series.bin_count(),
            first_bin: bins.first().map(|b| b.label.clone()).unwrap_or_default(),
            last_bin: bins.last().map(|b| b.label.clone()).unwrap_or_default(),
        },
        tables: BTreeMap::new(),
    };
    Ok(ReportBundle {
        manifest,
        counts: analysis.counts,
        histogram: analysis.histogram,
        cohorts: analysis.cohorts,
        newcomer: analysis.newcomer,
        pairs: analysis.pairs,
        collapsed: analysis.collapsed,
        slopes: analysis.slopes,
    })
}

/// Metric, attachment and fit settings, independent of any input files.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub cohorts: Vec<CohortSpec>,
    pub exclude_isolated: bool,
    pub collaborator_mean: CollaboratorMean,
    pub pairing: crate::attachment::Pairing,
    pub newcomer_count: NewcomerCount,
    pub pair_options: PairOptions,
    pub base: f64,
    pub min_count: u64,
}

impl From<&PipelineConfig> for AnalysisOptions {
    fn from(c: &PipelineConfig) -> Self {
        AnalysisOptions {
            cohorts: c.cohorts.clone(),
            exclude_isolated: c.exclude_isolated,
            collaborator_mean: c.collaborator_mean,
            pairing: c.pairing,
            newcomer_count: c.newcomer_count,
            pair_options: PairOptions {
                count: c.pair_count,
                exclude_existing: c.exclude_existing,
            },
            base: c.base,
            min_count: c.min_count,
        }
    }
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions::from(&PipelineConfig::new("", ""))
    }
}

/// Every table derived from a snapshot series.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub counts: Vec<CumulativeCount>,
    pub histogram: Vec<HistogramRow>,
    pub cohorts: Vec<CohortRow>,
    pub newcomer: Vec<NewcomerRow>,
    pub pairs: Vec<PairRow>,
    pub collapsed: Vec<CollapsedRow>,
    pub slopes: Vec<FitRow>,
}

struct BinMetrics {
    histogram: DegreeHistogram,
    cohorts: Vec<CohortRow>,
}

struct PairTables {
    newcomer: AttachmentTable,
    pairs: PairLinkTable,
    collapsed: CollapsedTable,
}

/// Metrics, attachment and fit stages over an already built series.
pub fn analyze_series(series: &SnapshotSeries, opts: &AnalysisOptions) -> Result<Analysis, PipelineError> {
    let labels: Vec<&str> = series.bins().iter().map(|b| b.label.as_str()).collect();

    let metrics: Vec<BinMetrics> = (0..series.bin_count())
        .into_par_iter()
        .map(|bin| bin_metrics(series, bin, opts))
        .collect::<Result<_>>()
        .stage(Stage::Metrics)?;

    let pair_tables: Vec<PairTables> = opts
        .pairing
        .pairs(series.bin_count())
        .into_par_iter()
        .map(|(t1, t2)| {
            let snap = series.snapshot(t1)?;
            let newcomer = newcomer_attachment_table_at(&snap, t2, opts.newcomer_count)?;
            let pairs = internal_link_table_at(&snap, t2, opts.pair_options)?;
            let collapsed = collapse_pair_table(&pairs);
            Ok(PairTables {
                newcomer,
                pairs,
                collapsed,
            })
        })
        .collect::<Result<_>>()
        .stage(Stage::Attachment)?;

    let degree_fits: Vec<FitRow> = metrics
        .par_iter()
        .map(|m| {
            let fit = fitted(fit_degree_exponent(&m.histogram, opts.base, opts.min_count))?;
            Ok(fit_row(labels[m.histogram.bin].to_owned(), "degree", fit))
        })
        .collect::<Result<_>>()
        .stage(Stage::Fit)?;

    let kernel_fits: Vec<[FitRow; 2]> = pair_tables
        .par_iter()
        .map(|t| {
            let pair = pair_label(labels[t.newcomer.t1], labels[t.newcomer.t2]);
            let a = fitted(fit_attachment(&t.newcomer, opts.base, opts.min_count))?;
            let c = fitted(fit_collapsed(&t.collapsed, opts.base, opts.min_count))?;
            Ok([fit_row(pair.clone(), "newcomer", a), fit_row(pair, "internal", c)])
        })
        .collect::<Result<_>>()
        .stage(Stage::Fit)?;
    let mut slopes = degree_fits;
    slopes.extend(kernel_fits.into_iter().flatten());

    let mut histogram = Vec::new();
    let mut cohorts = Vec::new();
    for m in metrics {
        let bin = labels[m.histogram.bin];
        histogram.extend(m.histogram.counts.iter().map(|(&k, &count)| HistogramRow {
            bin: bin.to_owned(),
            k,
            count,
        }));
        cohorts.extend(m.cohorts);
    }

    let mut newcomer = Vec::new();
    let mut pairs = Vec::new();
    let mut collapsed = Vec::new();
    for t in pair_tables {
        let (t1, t2) = (labels[t.newcomer.t1], labels[t.newcomer.t2]);
        newcomer.extend(t.newcomer.rows.iter().map(|r| NewcomerRow {
            t1: t1.to_owned(),
            t2: t2.to_owned(),
            k: r.k,
            v: r.events,
            n: r.population,
            p: r.probability(),
        }));
        pairs.extend(t.pairs.rows.iter().map(|r| PairRow {
            t1: t1.to_owned(),
            t2: t2.to_owned(),
            ki: r.ki,
            kj: r.kj,
            l: r.links,
            pairs: r.pairs,
            p: r.probability(),
        }));
        collapsed.extend(t.collapsed.rows.iter().map(|r| CollapsedRow {
            t1: t1.to_owned(),
            t2: t2.to_owned(),
            x: r.x,
            l: r.links,
            pairs: r.pairs,
            p: r.probability(),
        }));
    }

    Ok(Analysis {
        counts: series.cumulative_counts(),
        histogram,
        cohorts,
        newcomer,
        pairs,
        collapsed,
        slopes,
    })
}

fn bin_metrics(series: &SnapshotSeries, bin: usize, opts: &AnalysisOptions) -> Result<BinMetrics> {
    let snap = series.snapshot(bin)?;
    let label = &series.bins()[bin].label;
    let mut cohorts = Vec::with_capacity(opts.cohorts.len());
    for spec in &opts.cohorts {
        let row = |size, mean, collab| CohortRow {
            bin: label.clone(),
            cohort: spec.label(),
            side: spec.side.to_string(),
            size,
            mean_centrality: mean,
            collab_mean_centrality: collab,
        };
        cohorts.push(
            match cohort_stats(&snap, spec, opts.exclude_isolated, opts.collaborator_mean) {
                Ok(s) => row(s.size, Some(s.mean_centrality), s.collab_mean_centrality),
                Err(Error::CentralityUndefined { .. }) => {
                    row(select_cohort(&snap, spec, opts.exclude_isolated).len(), None, None)
                }
                Err(Error::EmptyCohort) => row(0, None, None),
                Err(e) => return Err(e),
            },
        );
    }
    Ok(BinMetrics {
        histogram: snap.histogram(),
        cohorts,
    })
}

/// Keeps a fit, maps "not enough data" to `None`, propagates anything else.
fn fitted(r: Result<SlopeFit>) -> Result<Option<SlopeFit>> {
    match r {
        Ok(f) => Ok(Some(f)),
        Err(Error::Unfittable | Error::TooFewPoints(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn fit_row(pair: String, target: &str, fit: Option<SlopeFit>) -> FitRow {
    FitRow {
        pair,
        target: target.to_owned(),
        slope: fit.map(|f| f.slope),
        intercept: fit.map(|f| f.intercept),
        r2: fit.map(|f| f.r_squared),
        n_points: fit.map_or(0, |f| f.n_points),
    }
}
