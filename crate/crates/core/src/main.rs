use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use collabdyn::attachment::{
    collapse_pair_table, internal_link_table_at, newcomer_attachment_table_at, NewcomerCount,
    PairCount, PairOptions, Pairing,
};
use collabdyn::centrality::{parse_cohort_list, CollaboratorMean};
use collabdyn::corpus::{read_records, write_publications, write_records, BinScheme, TimeBin};
use collabdyn::graph::{load_series, save_series};
use collabdyn::report::{
    analyze_series, emit_tables, ingest_files, run_pipeline, tables::TABLES, write_table,
    AnalysisOptions, OutputFormat, PipelineConfig, DEFAULT_COHORTS,
};
use collabdyn::synth::{generate_team_corpus, GeneratorParams, TeamSize};
use collabdyn::{Error, Result, SnapshotSeries};

#[derive(Parser)]
#[command(name = "collabdyn", version, about = "Co-authorship network growth analytics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, link and bin a publications export.
    Ingest(IngestArgs),
    /// Build the cumulative snapshot store and its count table.
    Snapshots(SnapshotsArgs),
    /// Cohort degree-centrality statistics per bin.
    Metrics(MetricsArgs),
    /// Newcomer attachment and internal link tables per bin pair.
    Attachment(AttachmentArgs),
    /// Log-binned slope fits of degree distributions and kernels.
    Fit(FitArgs),
    /// Generate a synthetic team-assembly corpus.
    Simulate(SimulateArgs),
    /// Run the full pipeline from a config file and emit the report bundle.
    Report(ReportArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    pubs: PathBuf,
    #[arg(long)]
    idmap: Option<PathBuf>,
    #[arg(long, default_value = "quarter")]
    bin: BinScheme,
    #[arg(long)]
    drop_unlinked: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SnapshotsArgs {
    /// Directory written by `ingest`.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    /// Directory holding `series.bin`, or an `ingest` output directory.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = DEFAULT_COHORTS)]
    cohorts: String,
    #[arg(long)]
    exclude_isolated: bool,
    #[arg(long, default_value = "per-member")]
    collab_mean: CollaboratorMean,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct KernelArgs {
    #[arg(long, default_value = "consecutive")]
    pairs: Pairing,
    #[arg(long, default_value = "edges")]
    newcomer_count: NewcomerCount,
    #[arg(long, default_value = "combinations")]
    pair_count: PairCount,
    #[arg(long)]
    exclude_existing: bool,
}

#[derive(Args)]
struct AttachmentArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = collabdyn::powerlaw::DEFAULT_BASE)]
    base: f64,
    #[arg(long, default_value_t = collabdyn::powerlaw::DEFAULT_MIN_COUNT)]
    min_count: u64,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    papers: usize,
    /// Fixed size `4` or uniform range `2..6`.
    #[arg(long, default_value = "4")]
    team: TeamSize,
    #[arg(long, default_value_t = 1)]
    newcomers: u32,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Papers per quarter; defaults to spreading papers over eight quarters.
    #[arg(long)]
    per_bin: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    format: Option<OutputFormat>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra `key=value` overrides applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => ingest(a).map_err(|e| format!("[ingest] {e}")),
        Command::Snapshots(a) => snapshots(a).map_err(|e| format!("[snapshots] {e}")),
        Command::Metrics(a) => metrics(a).map_err(|e| format!("[metrics] {e}")),
        Command::Attachment(a) => attachment(a).map_err(|e| format!("[attachment] {e}")),
        Command::Fit(a) => fit(a).map_err(|e| format!("[fit] {e}")),
        Command::Simulate(a) => simulate(a).map_err(|e| format!("[simulate] {e}")),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("collabdyn: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn mkdir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    std::io::Write::write_all(&mut w, b"\n").map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn header(name: &str) -> &'static str {
    TABLES.iter().find(|t| t.0 == name).map(|t| t.1).expect("known table")
}

fn ingest(a: IngestArgs) -> Result<()> {
    let ingested = ingest_files(&a.pubs, a.idmap.as_deref(), a.bin, a.drop_unlinked)?;
    if ingested.corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    mkdir(&a.out)?;
    write_records(&ingested.corpus.records, create(&a.out.join("records.jsonl"))?)?;
    write_json(&a.out.join("bins.json"), &ingested.corpus.bins)?;
    write_json(&a.out.join("link_report.json"), &ingested.report)?;
    write_json(&a.out.join("corpus_stats.json"), &ingested.stats)?;
    let r = &ingested.report;
    eprintln!(
        "ingested {} papers into {} bins ({} authors; {} names unmatched, {} malformed, {} undated)",
        ingested.stats.papers,
        ingested.corpus.bins.len(),
        ingested.stats.authors,
        r.names_unmatched,
        r.records_malformed,
        r.records_dropped_undated
    );
    Ok(())
}

/// Loads `series.bin` if present, otherwise builds from `records.jsonl` and `bins.json`.
fn load_input(dir: &Path) -> Result<SnapshotSeries> {
    let cached = dir.join("series.bin");
    if cached.is_file() {
        return load_series(open(&cached)?);
    }
    let records = read_records(open(&dir.join("records.jsonl"))?)?;
    let bins: Vec<TimeBin> = serde_json::from_reader(open(&dir.join("bins.json"))?)?;
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    SnapshotSeries::build(&records, &bins)
}

fn snapshots(a: SnapshotsArgs) -> Result<()> {
    let series = load_input(&a.input)?;
    mkdir(&a.out)?;
    let path = a.out.join("series.bin");
    save_series(&series, create(&path)?)?;
    write_table(
        &a.out.join("cumulative_counts.csv"),
        header("cumulative_counts"),
        &series.cumulative_counts(),
        OutputFormat::Csv,
    )?;
    eprintln!(
        "{} authors, {} edges over {} bins",
        series.author_count(),
        series.edge_count(),
        series.bin_count()
    );
    Ok(())
}

fn metrics(a: MetricsArgs) -> Result<()> {
    let series = load_input(&a.input)?;
    let opts = AnalysisOptions {
        cohorts: parse_cohort_list(&a.cohorts)?,
        exclude_isolated: a.exclude_isolated,
        collaborator_mean: a.collab_mean,
        pairing: Pairing::Consecutive,
        ..AnalysisOptions::default()
    };
    let analysis = analyze_series(&series, &opts).map_err(|e| e.source)?;
    mkdir(&a.out)?;
    write_table(&a.out.join("cohorts.csv"), header("cohorts"), &analysis.cohorts, OutputFormat::Csv)?;
    write_table(
        &a.out.join("degree_histogram.csv"),
        header("degree_histogram"),
        &analysis.histogram,
        OutputFormat::Csv,
    )
}

#[derive(Serialize)]
struct KRow {
    k: u64,
    #[serde(rename = "V")]
    v: u64,
    #[serde(rename = "N")]
    n: u64,
    #[serde(rename = "P")]
    p: f64,
}

#[derive(Serialize)]
struct PairCsvRow {
    ki: u64,
    kj: u64,
    #[serde(rename = "L")]
    l: u64,
    pairs: u64,
    #[serde(rename = "P")]
    p: f64,
}

#[derive(Serialize)]
struct XRow {
    x: u64,
    #[serde(rename = "P")]
    p: f64,
}

fn attachment(a: AttachmentArgs) -> Result<()> {
    let series = load_input(&a.input)?;
    mkdir(&a.out)?;
    let k = a.kernel;
    let options = PairOptions {
        count: k.pair_count,
        exclude_existing: k.exclude_existing,
    };
    for (t1, t2) in k.pairs.pairs(series.bin_count()) {
        let snap = series.snapshot(t1)?;
        let stem = format!("{}_{}", series.bins()[t1].label, series.bins()[t2].label);
        let newcomer = newcomer_attachment_table_at(&snap, t2, k.newcomer_count)?;
        let rows: Vec<KRow> = newcomer
            .rows
            .iter()
            .map(|r| KRow {
                k: r.k,
                v: r.events,
                n: r.population,
                p: r.probability(),
            })
            .collect();
        write_table(&a.out.join(format!("newcomer_{stem}.csv")), "k,V,N,P", &rows, OutputFormat::Csv)?;

        let pairs = internal_link_table_at(&snap, t2, options)?;
        let rows: Vec<PairCsvRow> = pairs
            .rows
            .iter()
            .map(|r| PairCsvRow {
                ki: r.ki,
                kj: r.kj,
                l: r.links,
                pairs: r.pairs,
                p: r.probability(),
            })
            .collect();
        write_table(&a.out.join(format!("pairs_{stem}.csv")), "ki,kj,L,pairs,P", &rows, OutputFormat::Csv)?;

        let rows: Vec<XRow> = collapse_pair_table(&pairs)
            .rows
            .iter()
            .map(|r| XRow {
                x: r.x,
                p: r.probability(),
            })
            .collect();
        write_table(&a.out.join(format!("collapsed_{stem}.csv")), "x,P", &rows, OutputFormat::Csv)?;
    }
    Ok(())
}

fn fit(a: FitArgs) -> Result<()> {
    let series = load_input(&a.input)?;
    let opts = AnalysisOptions {
        pairing: a.kernel.pairs,
        newcomer_count: a.kernel.newcomer_count,
        pair_options: PairOptions {
            count: a.kernel.pair_count,
            exclude_existing: a.kernel.exclude_existing,
        },
        base: a.base,
        min_count: a.min_count,
        ..AnalysisOptions::default()
    };
    if !(opts.base > 1.0 && opts.base.is_finite()) {
        return Err(Error::invalid(format!("base must exceed 1, got {}", opts.base)));
    }
    let analysis = analyze_series(&series, &opts).map_err(|e| e.source)?;
    mkdir(&a.out)?;
    write_table(&a.out.join("slopes.csv"), header("slopes"), &analysis.slopes, OutputFormat::Csv)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut params = GeneratorParams::new(a.papers, 1, a.newcomers, a.alpha, a.seed);
    params.team_size = a.team;
    if let Some(per_bin) = a.per_bin {
        params.papers_per_bin = per_bin;
    }
    let corpus = generate_team_corpus(&params)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        mkdir(dir)?;
    }
    write_publications(&corpus.records, create(&a.out)?)?;
    eprintln!("wrote {} papers over {} bins", corpus.records.len(), corpus.bins.len());
    Ok(())
}

fn report(a: ReportArgs) -> std::result::Result<(), String> {
    let mut config = PipelineConfig::from_file(&a.config).map_err(|e| format!("[config] {e}"))?;
    for kv in &a.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("[config] override {kv:?} is not KEY=VALUE"))?;
        config.set(k.trim(), v.trim()).map_err(|e| format!("[config] {e}"))?;
    }
    if let Some(format) = a.format {
        config.format = format;
    }
    if let Some(out) = a.out {
        if config.cache_dir == Some(config.out.join("cache")) {
            config.cache_dir = Some(out.join("cache"));
        }
        config.out = out;
    }
    let bundle = run_pipeline(&config).map_err(|e| e.to_string())?;
    let files = emit_tables(&bundle, config.format, &config.out).map_err(|e| format!("[emit] {e}"))?;
    eprintln!("wrote {} files to {}", files.len(), config.out.display());
    Ok(())
}
