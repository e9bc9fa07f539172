//! Logarithmic binning and least-squares slopes on log-log axes.

use serde::{Deserialize, Serialize};

use crate::attachment::{AttachmentTable, CollapsedTable};
use crate::error::{Error, Result};
use crate::graph::DegreeHistogram;

/// `10^0.1`, ten bins per decade.
pub const DEFAULT_BASE: f64 = 1.258_925_411_794_167_2;
pub const DEFAULT_MIN_COUNT: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogBinRow {
    pub x: u64,
    pub y: f64,
    pub weight: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinnedPoint {
    pub x_center: f64,
    pub y: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedPoints(Vec<BinnedPoint>);

impl BinnedPoints {
    /// Wraps raw points, checking `x` strictly increasing and positive `x`, `y`.
    pub fn new(points: Vec<BinnedPoint>) -> Result<Self> {
        if points
            .iter()
            .any(|p| !(p.x_center > 0.0 && p.y > 0.0 && p.x_center.is_finite() && p.y.is_finite()))
        {
            return Err(Error::invalid("binned points need positive finite x and y"));
        }
        if points.windows(2).any(|w| w[0].x_center >= w[1].x_center) {
            return Err(Error::invalid("binned x centers must be strictly increasing"));
        }
        Ok(BinnedPoints(points))
    }

    pub fn from_xy(points: &[(f64, f64)]) -> Result<Self> {
        BinnedPoints::new(
            points
                .iter()
                .map(|&(x_center, y)| BinnedPoint {
                    x_center,
                    y,
                    support: 1,
                })
                .collect(),
        )
    }

    pub fn points(&self) -> &[BinnedPoint] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

fn check_base(base: f64) -> Result<()> {
    if base > 1.0 && base.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("log-bin base must exceed 1, got {base}")))
    }
}

/// Index `i` with `base^i <= x < base^(i+1)`. The slack absorbs rounding
/// when an edge is mathematically an integer (`10^(0.1*10) = 10`).
fn bin_index(x: u64, base: f64) -> i64 {
    ((x as f64).ln() / base.ln() + 1e-9).floor() as i64
}

/// Geometric mean of the first and last integer a bin can hold, so that a bin
/// holding a single integer `k` is centred exactly on `k`. Also returns the
/// count of integers the bin spans.
fn integer_center(i: i64, base: f64) -> (f64, u64) {
    let mut lo = (base.powf(i as f64).floor() as u64).max(1);
    while bin_index(lo, base) < i {
        lo += 1;
    }
    while lo > 1 && bin_index(lo - 1, base) >= i {
        lo -= 1;
    }
    let mut hi = (base.powf(i as f64 + 1.0).ceil() as u64).max(lo);
    while bin_index(hi, base) > i {
        hi -= 1;
    }
    while bin_index(hi + 1, base) <= i {
        hi += 1;
    }
    let hi = hi.max(lo);
    (((lo as f64) * (hi as f64)).sqrt(), hi - lo + 1)
}

struct Accum {
    index: i64,
    weighted_y: f64,
    weight: u64,
}

fn group(rows: impl Iterator<Item = (u64, f64, u64)>, base: f64) -> Vec<Accum> {
    let mut keyed: Vec<(i64, f64, u64)> = rows
        .filter(|&(x, _, _)| x > 0)
        .map(|(x, y, w)| (bin_index(x, base), y, w))
        .collect();
    // stable sort keeps ascending x within a bin
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out: Vec<Accum> = Vec::new();
    for (index, y, w) in keyed {
        match out.last_mut() {
            Some(acc) if acc.index == index => {
                acc.weighted_y += y * w as f64;
                acc.weight += w;
            }
            _ => out.push(Accum {
                index,
                weighted_y: y * w as f64,
                weight: w,
            }),
        }
    }
    out
}

/// Groups rows into multiplicative bins `[base^i, base^(i+1))`. Each bin's `y`
/// is the weight-weighted mean of its rows; bins with total weight below
/// `min_count` or zero mean are dropped.
pub fn log_bin(rows: &[LogBinRow], base: f64, min_count: u64) -> Result<BinnedPoints> {
    check_base(base)?;
    let mut sorted = rows.to_vec();
    sorted.sort_by_key(|r| r.x);
    let points: Vec<BinnedPoint> = group(sorted.iter().map(|r| (r.x, r.y, r.weight)), base)
        .into_iter()
        .filter(|a| a.weight >= min_count.max(1))
        .filter_map(|a| {
            let y = a.weighted_y / a.weight as f64;
            (y > 0.0).then(|| BinnedPoint {
                x_center: integer_center(a.index, base).0,
                y,
                support: a.weight,
            })
        })
        .collect();
    if points.is_empty() {
        return Err(Error::Unfittable);
    }
    BinnedPoints::new(points)
}

/// Log-bins a frequency table as a density: each bin's `y` is its total
/// frequency divided by the number of integers the bin spans. Support is the
/// total frequency.
pub fn log_bin_frequencies(freqs: &[(u64, f64)], base: f64, min_count: u64) -> Result<BinnedPoints> {
    check_base(base)?;
    let mut sorted = freqs.to_vec();
    sorted.sort_by_key(|r| r.0);
    let mut acc: Vec<(i64, f64)> = Vec::new();
    for (x, f) in sorted.into_iter().filter(|&(x, _)| x > 0) {
        let i = bin_index(x, base);
        match acc.last_mut() {
            Some(a) if a.0 == i => a.1 += f,
            _ => acc.push((i, f)),
        }
    }
    let points: Vec<BinnedPoint> = acc
        .into_iter()
        .filter(|&(_, total)| total >= min_count.max(1) as f64 && total > 0.0)
        .map(|(i, total)| {
            let (x_center, width) = integer_center(i, base);
            BinnedPoint {
                x_center,
                y: total / width as f64,
                support: total.round() as u64,
            }
        })
        .collect();
    if points.is_empty() {
        return Err(Error::Unfittable);
    }
    BinnedPoints::new(points)
}

/// Ordinary least squares of `log10(y)` on `log10(x)`.
pub fn fit_slope(points: &BinnedPoints) -> Result<SlopeFit> {
    let n = points.len();
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    let logs: Vec<(f64, f64)> = points
        .points()
        .iter()
        .map(|p| (p.x_center.log10(), p.y.log10()))
        .collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &logs {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(SlopeFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        n_points: n,
    })
}

/// Slope of the log-binned degree distribution (degree 0 excluded); negative
/// for a decaying tail.
pub fn fit_degree_exponent(hist: &DegreeHistogram, base: f64, min_count: u64) -> Result<SlopeFit> {
    let freqs: Vec<(u64, f64)> = hist
        .counts
        .iter()
        .filter(|(&k, &c)| k > 0 && c > 0)
        .map(|(&k, &c)| (u64::from(k), c as f64))
        .collect();
    if freqs.len() < 2 {
        return Err(Error::TooFewPoints(freqs.len()));
    }
    fit_slope(&log_bin_frequencies(&freqs, base, min_count)?)
}

/// Slope of `P(k)` against `k`; each bin pools `ΣV / ΣN`.
pub fn fit_attachment(table: &AttachmentTable, base: f64, min_count: u64) -> Result<SlopeFit> {
    let rows: Vec<LogBinRow> = table
        .rows
        .iter()
        .filter(|r| r.k > 0)
        .map(|r| LogBinRow {
            x: r.k,
            y: r.probability(),
            weight: r.population,
        })
        .collect();
    fit_slope(&log_bin(&rows, base, min_count)?)
}

/// Slope of the pooled link probability against the degree product.
pub fn fit_collapsed(table: &CollapsedTable, base: f64, min_count: u64) -> Result<SlopeFit> {
    let rows: Vec<LogBinRow> = table
        .rows
        .iter()
        .filter(|r| r.x > 0)
        .map(|r| LogBinRow {
            x: r.x,
            y: r.probability(),
            weight: r.pairs,
        })
        .collect();
    fit_slope(&log_bin(&rows, base, min_count)?)
}
