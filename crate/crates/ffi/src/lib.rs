//! C ABI over the collabdyn snapshot store and estimators.
//!
//! Every fallible function returns a [`CdStatus`]. On failure the message is
//! available through [`cd_last_error`] on the same thread. Handles are opaque
//! and owned by the caller once returned; release each with its `_free`
//! function. Panics never cross the boundary.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use collabdyn::attachment::{
    collapse_pair_table, internal_link_table, newcomer_attachment_table, AttachmentTable,
    CollapsedTable, NewcomerCount, PairCount, PairLinkTable, PairOptions,
};
use collabdyn::centrality::{cohort_stats, degree_centrality, CohortSide, CohortSpec, CollaboratorMean};
use collabdyn::corpus::BinScheme;
use collabdyn::graph::{load_series, save_series};
use collabdyn::powerlaw::{
    fit_attachment, fit_collapsed, fit_degree_exponent, fit_slope, BinnedPoints, SlopeFit,
};
use collabdyn::report::ingest_files;
use collabdyn::{Error, SnapshotSeries};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    OutOfRange = 4,
    NotFound = 5,
    Undefined = 6,
    Unfittable = 7,
    Corrupt = 8,
    EmptyCorpus = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdBinScheme {
    Quarter = 0,
    Month = 1,
    Year = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdCohortSide {
    Top = 0,
    Tail = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdCollabMean {
    PerMember = 0,
    Pooled = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdNewcomerCount {
    Edges = 0,
    Distinct = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdPairCount {
    Combinations = 0,
    Literal = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CdCohortStats {
    pub size: usize,
    pub mean_centrality: f64,
    /// Meaningful only when `has_collab_mean` is true.
    pub collab_mean_centrality: f64,
    pub has_collab_mean: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CdAttachmentRow {
    pub k: u64,
    pub events: u64,
    pub population: u64,
    pub probability: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CdPairRow {
    pub ki: u64,
    pub kj: u64,
    pub links: u64,
    pub pairs: u64,
    pub probability: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CdCollapsedRow {
    pub x: u64,
    pub links: u64,
    pub pairs: u64,
    pub probability: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CdSlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Cumulative snapshot series.
pub struct CdSeries(SnapshotSeries);

/// Newcomer attachment table for one bin pair.
pub struct CdAttachmentTable(AttachmentTable);

/// Internal link table for one bin pair, with its degree-product collapse.
pub struct CdPairTable {
    pairs: PairLinkTable,
    collapsed: CollapsedTable,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Fail(CdStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } | Error::Stream(_) | Error::Csv(_) => CdStatus::Io,
            Error::BinOutOfRange { .. } | Error::InvalidInterval { .. } => CdStatus::OutOfRange,
            Error::UnknownAuthor(_) | Error::AuthorNotPresent { .. } => CdStatus::NotFound,
            Error::CentralityUndefined { .. } | Error::EmptyCohort | Error::AllMembersIsolated => {
                CdStatus::Undefined
            }
            Error::Unfittable | Error::TooFewPoints(_) => CdStatus::Unfittable,
            Error::CorruptCache(_) | Error::Json(_) => CdStatus::Corrupt,
            Error::EmptyCorpus => CdStatus::EmptyCorpus,
            _ => CdStatus::InvalidArgument,
        };
        Fail(status, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn run(f: impl FnOnce() -> Result<(), Fail>) -> CdStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CdStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            CdStatus::Panic
        }
    }
}

fn null(name: &str) -> Fail {
    Fail(CdStatus::NullArgument, format!("`{name}` is null"))
}

unsafe fn arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(CdStatus::InvalidArgument, format!("`{name}` is not valid UTF-8")))
}

fn fit_out(fit: SlopeFit) -> CdSlopeFit {
    CdSlopeFit {
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        n_points: fit.n_points,
    }
}

fn row_at<T>(rows: &[T], index: usize) -> Result<&T, Fail> {
    rows.get(index).ok_or_else(|| {
        Fail(
            CdStatus::OutOfRange,
            format!("row {index} out of range (table has {} rows)", rows.len()),
        )
    })
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn cd_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Ingests a publications file (and optional id map, may be null) and builds the series.
#[no_mangle]
pub unsafe extern "C" fn cd_series_from_publications(
    pubs_path: *const c_char,
    idmap_path: *const c_char,
    scheme: CdBinScheme,
    drop_unlinked: bool,
    series_out: *mut *mut CdSeries,
) -> CdStatus {
    run(|| {
        let slot = out(series_out, "series_out")?;
        let pubs = text(pubs_path, "pubs_path")?;
        let idmap = if idmap_path.is_null() {
            None
        } else {
            Some(Path::new(text(idmap_path, "idmap_path")?))
        };
        let scheme = match scheme {
            CdBinScheme::Quarter => BinScheme::Quarter,
            CdBinScheme::Month => BinScheme::Month,
            CdBinScheme::Year => BinScheme::Year,
        };
        let ingested = ingest_files(Path::new(pubs), idmap, scheme, drop_unlinked)?;
        if ingested.corpus.is_empty() {
            return Err(Error::EmptyCorpus.into());
        }
        let series = SnapshotSeries::build(&ingested.corpus.records, &ingested.corpus.bins)?;
        *slot = Box::into_raw(Box::new(CdSeries(series)));
        Ok(())
    })
}

/// Loads a series written by `cd_series_save` or `collabdyn snapshots`.
#[no_mangle]
pub unsafe extern "C" fn cd_series_load(path: *const c_char, series_out: *mut *mut CdSeries) -> CdStatus {
    run(|| {
        let slot = out(series_out, "series_out")?;
        let path = Path::new(text(path, "path")?);
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let series = load_series(BufReader::new(file))?;
        *slot = Box::into_raw(Box::new(CdSeries(series)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cd_series_save(series: *const CdSeries, path: *const c_char) -> CdStatus {
    run(|| {
        let series = arg(series, "series")?;
        let path = Path::new(text(path, "path")?);
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        save_series(&series.0, BufWriter::new(file))?;
        Ok(())
    })
}

/// Releases a series. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cd_series_free(series: *mut CdSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

#[no_mangle]
pub unsafe extern "C" fn cd_series_bin_count(series: *const CdSeries, count: *mut usize) -> CdStatus {
    run(|| {
        *out(count, "count")? = arg(series, "series")?.0.bin_count();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cd_series_author_count(series: *const CdSeries, count: *mut usize) -> CdStatus {
    run(|| {
        *out(count, "count")? = arg(series, "series")?.0.author_count();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cd_series_edge_count(series: *const CdSeries, count: *mut usize) -> CdStatus {
    run(|| {
        *out(count, "count")? = arg(series, "series")?.0.edge_count();
        Ok(())
    })
}

/// Copies the label of `bin` into `buf` as a NUL-terminated string. `needed`
/// (may be null) receives the buffer size required, terminator included.
#[no_mangle]
pub unsafe extern "C" fn cd_series_bin_label(
    series: *const CdSeries,
    bin: usize,
    buf: *mut c_char,
    capacity: usize,
    needed: *mut usize,
) -> CdStatus {
    run(|| {
        let series = &arg(series, "series")?.0;
        series.check_bin(bin)?;
        let label = series.bins()[bin].label.as_bytes();
        if let Some(n) = needed.as_mut() {
            *n = label.len() + 1;
        }
        if buf.is_null() || capacity < label.len() + 1 {
            return Err(Fail(
                CdStatus::BufferTooSmall,
                format!("label needs {} bytes, buffer holds {capacity}", label.len() + 1),
            ));
        }
        ptr::copy_nonoverlapping(label.as_ptr().cast(), buf, label.len());
        *buf.add(label.len()) = 0;
        Ok(())
    })
}

/// Cumulative node and link counts at `bin`.
#[no_mangle]
pub unsafe extern "C" fn cd_series_counts_at(
    series: *const CdSeries,
    bin: usize,
    nodes: *mut u64,
    links: *mut u64,
) -> CdStatus {
    run(|| {
        let series = &arg(series, "series")?.0;
        let (n, l) = (series.node_count_at(bin)?, series.link_count_at(bin)?);
        *out(nodes, "nodes")? = n;
        *out(links, "links")? = l;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cd_series_degree_at(
    series: *const CdSeries,
    bin: usize,
    author: *const c_char,
    degree: *mut u32,
) -> CdStatus {
    run(|| {
        let series = &arg(series, "series")?.0;
        let slot = out(degree, "degree")?;
        *slot = series.degree_at(bin, text(author, "author")?)?;
        Ok(())
    })
}

/// Degree centrality `k/(n-1)` of `author` at `bin`.
#[no_mangle]
pub unsafe extern "C" fn cd_series_centrality_at(
    series: *const CdSeries,
    bin: usize,
    author: *const c_char,
    centrality: *mut f64,
) -> CdStatus {
    run(|| {
        let series = &arg(series, "series")?.0;
        let slot = out(centrality, "centrality")?;
        let author = text(author, "author")?;
        let node = series
            .node_index(author)
            .ok_or_else(|| Error::UnknownAuthor(author.to_owned()))?;
        let snap = series.snapshot(bin)?;
        if !snap.is_present(node) {
            return Err(Error::AuthorNotPresent {
                author: author.to_owned(),
                bin,
            }
            .into());
        }
        *slot = degree_centrality(&snap, node)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cd_series_cohort_stats(
    series: *const CdSeries,
    bin: usize,
    fraction: f64,
    side: CdCohortSide,
    exclude_isolated: bool,
    mode: CdCollabMean,
    stats: *mut CdCohortStats,
) -> CdStatus {
    run(|| {
        let series = &arg(series, "series")?.0;
        let slot = out(stats, "stats")?;
        let side = match side {
            CdCohortSide::Top => CohortSide::Top,
            CdCohortSide::Tail => CohortSide::Tail,
        };
        let mode = match mode {
            CdCollabMean::PerMember => CollaboratorMean::PerMember,
            CdCollabMean::Pooled => CollaboratorMean::Pooled,
        };
        let spec = CohortSpec::new(fraction, side)?;
        let s = cohort_stats(&series.snapshot(bin)?, &spec, exclude_isolated, mode)?;
        *slot = CdCohortStats {
            size: s.size,
            mean_centrality: s.mean_centrality,
            collab_mean_centrality: s.collab_mean_centrality.unwrap_or(f64::NAN),
            has_collab_mean: s.collab_mean_centrality.is_some(),
        };
        Ok(())
    })
}

/// Log-binned degree-distribution exponent at `bin`.
#[no_mangle]
pub unsafe extern "C" fn cd_series_fit_degree_exponent(
    series: *const CdSeries,
    bin: usize,
    base: f64,
    min_count: u64,
    fit: *mut CdSlopeFit,
) -> CdStatus {
    run(|| {
        let series = &arg(series, "series")?.0;
        let slot = out(fit, "fit")?;
        *slot = fit_out(fit_degree_exponent(&series.degree_histogram(bin)?, base, min_count)?);
        Ok(())
    })
}

/// Newcomer attachment table over the half-open interval `(t1, t2]`.
#[no_mangle]
pub unsafe extern "C" fn cd_attachment_table_new(
    series: *const CdSeries,
    t1: usize,
    t2: usize,
    mode: CdNewcomerCount,
    table_out: *mut *mut CdAttachmentTable,
) -> CdStatus {
    run(|| {
        let series = &arg(series, "series")?.0;
        let slot = out(table_out, "table_out")?;
        let mode = match mode {
            CdNewcomerCount::Edges => NewcomerCount::Edges,
            CdNewcomerCount::Distinct => NewcomerCount::Distinct,
        };
        let table = newcomer_attachment_table(series, t1, t2, mode)?;
        *slot = Box::into_raw(Box::new(CdAttachmentTable(table)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cd_attachment_table_free(table: *mut CdAttachmentTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

#[no_mangle]
pub unsafe extern "C" fn cd_attachment_table_len(table: *const CdAttachmentTable, len: *mut usize) -> CdStatus {
    run(|| {
        *out(len, "len")? = arg(table, "table")?.0.rows.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cd_attachment_table_row(
    table: *const CdAttachmentTable,
    index: usize,
    row: *mut CdAttachmentRow,
) -> CdStatus {
    run(|| {
        let r = row_at(&arg(table, "table")?.0.rows, index)?;
        *out(row, "row")? = CdAttachmentRow {
            k: r.k,
            events: r.events,
            population: r.population,
            probability: r.probability(),
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cd_attachment_table_fit(
    table: *const CdAttachmentTable,
    base: f64,
    min_count: u64,
    fit: *mut CdSlopeFit,
) -> CdStatus {
    run(|| {
        let table = &arg(table, "table")?.0;
        *out(fit, "fit")? = fit_out(fit_attachment(table, base, min_count)?);
        Ok(())
    })
}

/// Internal link table over `(t1, t2]`.
#[no_mangle]
pub unsafe extern "C" fn cd_pair_table_new(
    series: *const CdSeries,
    t1: usize,
    t2: usize,
    count: CdPairCount,
    exclude_existing: bool,
    table_out: *mut *mut CdPairTable,
) -> CdStatus {
    run(|| {
        let series = &arg(series, "series")?.0;
        let slot = out(table_out, "table_out")?;
        let count = match count {
            CdPairCount::Combinations => PairCount::Combinations,
            CdPairCount::Literal => PairCount::Literal,
        };
        let pairs = internal_link_table(series, t1, t2, PairOptions { count, exclude_existing })?;
        let collapsed = collapse_pair_table(&pairs);
        *slot = Box::into_raw(Box::new(CdPairTable { pairs, collapsed }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cd_pair_table_free(table: *mut CdPairTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

#[no_mangle]
pub unsafe extern "C" fn cd_pair_table_len(table: *const CdPairTable, len: *mut usize) -> CdStatus {
    run(|| {
        *out(len, "len")? = arg(table, "table")?.pairs.rows.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cd_pair_table_row(table: *const CdPairTable, index: usize, row: *mut CdPairRow) -> CdStatus {
    run(|| {
        let r = row_at(&arg(table, "table")?.pairs.rows, index)?;
        *out(row, "row")? = CdPairRow {
            ki: r.ki,
            kj: r.kj,
            links: r.links,
            pairs: r.pairs,
            probability: r.probability(),
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cd_pair_table_collapsed_len(table: *const CdPairTable, len: *mut usize) -> CdStatus {
    run(|| {
        *out(len, "len")? = arg(table, "table")?.collapsed.rows.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cd_pair_table_collapsed_row(
    table: *const CdPairTable,
    index: usize,
    row: *mut CdCollapsedRow,
) -> CdStatus {
    run(|| {
        let r = row_at(&arg(table, "table")?.collapsed.rows, index)?;
        *out(row, "row")? = CdCollapsedRow {
            x: r.x,
            links: r.links,
            pairs: r.pairs,
            probability: r.probability(),
        };
        Ok(())
    })
}

/// Slope of the collapsed table, `P` against the degree product.
#[no_mangle]
pub unsafe extern "C" fn cd_pair_table_fit(
    table: *const CdPairTable,
    base: f64,
    min_count: u64,
    fit: *mut CdSlopeFit,
) -> CdStatus {
    run(|| {
        let table = &arg(table, "table")?.collapsed;
        *out(fit, "fit")? = fit_out(fit_collapsed(table, base, min_count)?);
        Ok(())
    })
}

/// Least-squares fit of `log10 y` on `log10 x` over `n` already binned points.
#[no_mangle]
pub unsafe extern "C" fn cd_fit_slope(xs: *const f64, ys: *const f64, n: usize, fit: *mut CdSlopeFit) -> CdStatus {
    run(|| {
        let slot = out(fit, "fit")?;
        if n > 0 && (xs.is_null() || ys.is_null()) {
            return Err(null("xs/ys"));
        }
        let points: Vec<(f64, f64)> = if n == 0 {
            Vec::new()
        } else {
            let xs = std::slice::from_raw_parts(xs, n);
            let ys = std::slice::from_raw_parts(ys, n);
            xs.iter().copied().zip(ys.iter().copied()).collect()
        };
        *slot = fit_out(fit_slope(&BinnedPoints::from_xy(&points)?)?);
        Ok(())
    })
}
