use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::tables::TABLES;
use super::{OutputFormat, ReportBundle, TableEntry};
use crate::error::{Error, Result};

/// Writes `rows` as CSV (header always present) or as a pretty JSON array.
pub fn write_table<T: Serialize>(path: &Path, header: &str, rows: &[T], format: OutputFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        OutputFormat::Csv => {
            if rows.is_empty() {
                writeln!(out, "{header}").map_err(|e| Error::io(path, e))?;
            } else {
                let mut w = csv::Writer::from_writer(&mut out);
                for r in rows {
                    w.serialize(r)?;
                }
                w.flush().map_err(|e| Error::io(path, e))?;
            }
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn write_all(bundle: &ReportBundle, format: OutputFormat, dir: &Path) -> Result<Vec<String>> {
    let ext = format.extension();
    let mut manifest = bundle.manifest.clone();
    let rows = bundle.row_counts();
    let mut names = Vec::new();
    for (i, &(name, header, shows)) in TABLES.iter().enumerate() {
        let file = format!("{name}.{ext}");
        let path = dir.join(&file);
        match i {
            0 => write_table(&path, header, &bundle.counts, format)?,
            1 => write_table(&path, header, &bundle.histogram, format)?,
            2 => write_table(&path, header, &bundle.cohorts, format)?,
            3 => write_table(&path, header, &bundle.newcomer, format)?,
            4 => write_table(&path, header, &bundle.pairs, format)?,
            5 => write_table(&path, header, &bundle.collapsed, format)?,
            _ => write_table(&path, header, &bundle.slopes, format)?,
        }
        manifest.tables.insert(
            name.to_owned(),
            TableEntry {
                file: file.clone(),
                columns: header.to_owned(),
                rows: rows[i],
                shows: shows.to_owned(),
            },
        );
        names.push(file);
    }
    let path = dir.join("manifest.json");
    let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut out = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut out, &manifest)?;
    out.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
    out.flush().map_err(|e| Error::io(&path, e))?;
    names.push("manifest.json".to_owned());
    Ok(names)
}

/// Writes every table plus `manifest.json` into `dir`. Files are staged in a
/// hidden sibling directory and moved into place only once all succeed.
pub fn emit_tables(bundle: &ReportBundle, format: OutputFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let staging = dir.join(format!(".staging-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
    }
    fs::create_dir(&staging).map_err(|e| Error::io(&staging, e))?;
    let result = write_all(bundle, format, &staging).and_then(|names| {
        names
            .into_iter()
            .map(|name| {
                let target = dir.join(&name);
                fs::rename(staging.join(&name), &target).map_err(|e| Error::io(&target, e))?;
                Ok(target)
            })
            .collect::<Result<Vec<_>>>()
    });
    let _ = fs::remove_dir_all(&staging);
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::write_publications;
    use crate::graph::tests::toy_corpus;
    use crate::report::{run_pipeline, PipelineConfig};

    fn toy_bundle(dir: &Path) -> ReportBundle {
        let pubs = dir.join("pubs.jsonl");
        write_publications(&toy_corpus().records, File::create(&pubs).unwrap()).unwrap();
        let mut cfg = PipelineConfig::new(pubs, dir.join("out"));
        cfg.cache_dir = None;
        run_pipeline(&cfg).unwrap()
    }

    #[test]
    fn headers_match_schema() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = toy_bundle(dir.path());
        let out = dir.path().join("csv");
        emit_tables(&bundle, OutputFormat::Csv, &out).unwrap();
        for (name, header, _) in TABLES {
            let text = fs::read_to_string(out.join(format!("{name}.csv"))).unwrap();
            assert_eq!(text.lines().next(), Some(*header), "{name}");
        }
        let leftovers: Vec<_> = fs::read_dir(&out)
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().starts_with('.'))
            .collect();
        assert!(leftovers.is_empty());
    }

    #[test]
    fn empty_table_still_has_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_table::<crate::report::tables::PairRow>(&path, "t1,t2,ki,kj,L,pairs,P", &[], OutputFormat::Csv)
            .unwrap();
        assert_eq!(fs::read_to_string(path).unwrap(), "t1,t2,ki,kj,L,pairs,P\n");
    }

    #[test]
    fn unwritable_dir_fails() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = toy_bundle(dir.path());
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        assert!(emit_tables(&bundle, OutputFormat::Csv, &blocker.join("sub")).is_err());
    }
}
