//! Binary snapshot cache.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        8 bytes  "CDYNSNAP"
//! version      u32
//! bins         u32 count, then per bin: label (u32 len + utf8), start i32, end i32
//!              (dates as days from 0001-01-01)
//! authors      u32 count, then per author: u32 len + utf8, ascending order
//! node_first   u32 × authors
//! edges        u64 count, then (u32 u, u32 v) × count, first_seen u32 × count,
//!              papers u32 × count
//! ```

use std::io::{Read, Write};

use chrono::{Datelike, NaiveDate};

use super::{NodeId, SnapshotSeries};
use crate::corpus::TimeBin;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"CDYNSNAP";
pub const FORMAT_VERSION: u32 = 1;

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptCache(msg.into())
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    put_u32(w, s.len() as u32)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn put_u32s<W: Write>(w: &mut W, values: impl IntoIterator<Item = u32>) -> Result<()> {
    let mut buf = Vec::with_capacity(1 << 16);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
        if buf.len() >= 1 << 16 {
            w.write_all(&buf)?;
            buf.clear();
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn save_series<W: Write>(series: &SnapshotSeries, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u32(&mut w, FORMAT_VERSION)?;
    put_u32(&mut w, series.bins.len() as u32)?;
    for b in &series.bins {
        put_str(&mut w, &b.label)?;
        w.write_all(&b.start.num_days_from_ce().to_le_bytes())?;
        w.write_all(&b.end.num_days_from_ce().to_le_bytes())?;
    }
    put_u32(&mut w, series.authors.len() as u32)?;
    for a in &series.authors {
        put_str(&mut w, a)?;
    }
    put_u32s(&mut w, series.node_first_seen.iter().copied())?;
    w.write_all(&(series.edges.len() as u64).to_le_bytes())?;
    put_u32s(&mut w, series.edges.iter().flat_map(|&(u, v)| [u, v]))?;
    put_u32s(&mut w, series.edge_first_seen.iter().copied())?;
    put_u32s(&mut w, series.edge_papers.iter().copied())?;
    w.flush()?;
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| corrupt(format!("truncated: {e}")))?;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32> {
        self.bytes::<4>().map(u32::from_le_bytes)
    }

    fn i32(&mut self) -> Result<i32> {
        self.bytes::<4>().map(i32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64> {
        self.bytes::<8>().map(u64::from_le_bytes)
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let mut buf = Vec::new();
        (&mut self.inner)
            .take(len as u64)
            .read_to_end(&mut buf)
            .map_err(|e| corrupt(format!("truncated: {e}")))?;
        if buf.len() != len {
            return Err(corrupt("truncated string"));
        }
        String::from_utf8(buf).map_err(|_| corrupt("invalid utf-8"))
    }

    fn u32s(&mut self, n: usize) -> Result<Vec<u32>> {
        let mut raw = Vec::new();
        (&mut self.inner)
            .take(n as u64 * 4)
            .read_to_end(&mut raw)
            .map_err(|e| corrupt(format!("truncated: {e}")))?;
        if raw.len() != n * 4 {
            return Err(corrupt("truncated array"));
        }
        Ok(raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }

    fn date(&mut self) -> Result<NaiveDate> {
        NaiveDate::from_num_days_from_ce_opt(self.i32()?).ok_or_else(|| corrupt("bad date"))
    }
}

/// Reads a cache written by [`save_series`], checking every structural invariant.
pub fn load_series<R: Read>(r: R) -> Result<SnapshotSeries> {
    let mut r = Reader { inner: r };
    if &r.bytes::<8>()? != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(corrupt(format!("unsupported format version {version}")));
    }

    let bin_count = r.u32()? as usize;
    let mut bins = Vec::with_capacity(bin_count.min(1 << 16));
    for index in 0..bin_count {
        let label = r.string()?;
        let start = r.date()?;
        let end = r.date()?;
        bins.push(TimeBin {
            index,
            label,
            start,
            end,
        });
    }

    let author_count = r.u32()? as usize;
    let mut authors = Vec::with_capacity(author_count.min(1 << 24));
    for _ in 0..author_count {
        authors.push(r.string()?);
    }
    if authors.windows(2).any(|w| w[0] >= w[1]) {
        return Err(corrupt("author index not strictly ascending"));
    }
    let node_first_seen = r.u32s(author_count)?;
    if node_first_seen.iter().any(|&b| b as usize >= bin_count) {
        return Err(corrupt("node first-seen bin out of range"));
    }

    let edge_count = usize::try_from(r.u64()?).map_err(|_| corrupt("edge count overflow"))?;
    let flat = r.u32s(edge_count * 2)?;
    let edges: Vec<(NodeId, NodeId)> = flat.chunks_exact(2).map(|c| (c[0], c[1])).collect();
    let edge_first_seen = r.u32s(edge_count)?;
    let edge_papers = r.u32s(edge_count)?;

    for (i, (&(u, v), &b)) in edges.iter().zip(&edge_first_seen).enumerate() {
        if u >= v || v as usize >= author_count {
            return Err(corrupt(format!("edge {i} is not a valid ordered pair")));
        }
        if i > 0 && edges[i - 1] >= (u, v) {
            return Err(corrupt("edge list not strictly sorted"));
        }
        if b < node_first_seen[u as usize] || b < node_first_seen[v as usize] {
            return Err(corrupt(format!("edge {i} predates an endpoint")));
        }
    }

    Ok(SnapshotSeries::from_parts(
        bins,
        authors,
        node_first_seen,
        edges,
        edge_first_seen,
        edge_papers,
    ))
}
