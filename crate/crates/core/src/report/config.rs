use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::attachment::{NewcomerCount, PairCount, Pairing};
use crate::centrality::{parse_cohort_list, CohortSpec, CollaboratorMean};
use crate::corpus::BinScheme;
use crate::error::{Error, Result};
use crate::powerlaw::{DEFAULT_BASE, DEFAULT_MIN_COUNT};

pub const DEFAULT_COHORTS: &str = "0.10:top,0.20:top,0.20:tail";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::invalid(format!("unknown output format {other:?}"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

/// Everything one pipeline run needs. Mirrors the CLI flags one to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub pubs: PathBuf,
    pub idmap: Option<PathBuf>,
    pub bin_scheme: BinScheme,
    pub drop_unlinked: bool,
    pub cohorts: Vec<CohortSpec>,
    pub exclude_isolated: bool,
    pub collaborator_mean: CollaboratorMean,
    pub pairing: Pairing,
    pub newcomer_count: NewcomerCount,
    pub pair_count: PairCount,
    pub exclude_existing: bool,
    pub base: f64,
    pub min_count: u64,
    pub format: OutputFormat,
    pub out: PathBuf,
    /// Snapshot cache directory; `None` disables caching.
    pub cache_dir: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn new(pubs: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        let out = out.into();
        PipelineConfig {
            pubs: pubs.into(),
            idmap: None,
            bin_scheme: BinScheme::Quarter,
            drop_unlinked: false,
            cohorts: parse_cohort_list(DEFAULT_COHORTS).expect("default cohorts"),
            exclude_isolated: false,
            collaborator_mean: CollaboratorMean::PerMember,
            pairing: Pairing::Consecutive,
            newcomer_count: NewcomerCount::Edges,
            pair_count: PairCount::Combinations,
            exclude_existing: false,
            base: DEFAULT_BASE,
            min_count: DEFAULT_MIN_COUNT,
            format: OutputFormat::Csv,
            cache_dir: Some(out.join("cache")),
            out,
        }
    }

    /// Reads a flat `key = value` file. `#` starts a comment. Relative paths
    /// resolve against the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base_dir = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base_dir)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("config line {}: expected key = value", n + 1)))?;
            pairs.push((k.trim().to_owned(), v.trim().to_owned()));
        }
        let get = |key: &str| pairs.iter().rev().find(|(k, _)| canonical_key(k) == key).map(|(_, v)| v);
        let pubs = get("pubs").ok_or_else(|| Error::invalid("config is missing `pubs`"))?;
        let out = get("out").map(String::as_str).unwrap_or("report");
        let mut cfg = PipelineConfig::new(base_dir.join(pubs), base_dir.join(out));
        for (k, v) in &pairs {
            match canonical_key(k).as_str() {
                "pubs" | "out" => {}
                "idmap" => cfg.idmap = Some(base_dir.join(v)),
                "cache" => cfg.cache_dir = cache_value(v, Some(base_dir)),
                _ => cfg.set(k, v)?,
            }
        }
        if get("cache").is_none() {
            cfg.cache_dir = Some(cfg.out.join("cache"));
        }
        Ok(cfg)
    }

    /// Applies one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let flag = |v: &str| match v.trim() {
            "true" | "yes" | "1" | "on" => Ok(true),
            "false" | "no" | "0" | "off" => Ok(false),
            other => Err(Error::invalid(format!("{key}: expected a boolean, got {other:?}"))),
        };
        match canonical_key(key).as_str() {
            "pubs" => self.pubs = value.into(),
            "idmap" => self.idmap = Some(value.into()),
            "bin" => self.bin_scheme = value.parse()?,
            "drop_unlinked" => self.drop_unlinked = flag(value)?,
            "cohorts" => self.cohorts = parse_cohort_list(value)?,
            "exclude_isolated" => self.exclude_isolated = flag(value)?,
            "collab_mean" => self.collaborator_mean = value.parse()?,
            "pairs" => self.pairing = value.parse()?,
            "newcomer_count" => self.newcomer_count = value.parse()?,
            "pair_count" => self.pair_count = value.parse()?,
            "exclude_existing" => self.exclude_existing = flag(value)?,
            "base" => {
                self.base = value
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad base {value:?}")))?
            }
            "min_count" => {
                self.min_count = value
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad min_count {value:?}")))?
            }
            "format" => self.format = value.parse()?,
            "out" => self.out = value.into(),
            "cache" => self.cache_dir = cache_value(value, None),
            other => return Err(Error::invalid(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !self.pubs.is_file() {
            return Err(Error::invalid(format!(
                "publications file {} does not exist",
                self.pubs.display()
            )));
        }
        if let Some(idmap) = &self.idmap {
            if !idmap.is_file() {
                return Err(Error::invalid(format!(
                    "id-map file {} does not exist",
                    idmap.display()
                )));
            }
        }
        if self.cohorts.is_empty() {
            return Err(Error::invalid("at least one cohort is required"));
        }
        if !(self.base > 1.0 && self.base.is_finite()) {
            return Err(Error::invalid(format!("base must exceed 1, got {}", self.base)));
        }
        Ok(())
    }

    /// Settings echoed into the run manifest.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let cohorts = self
            .cohorts
            .iter()
            .map(|c| format!("{}:{}", c.label(), c.side))
            .collect::<Vec<_>>()
            .join(",");
        BTreeMap::from([
            ("pubs".into(), file_name(&self.pubs)),
            (
                "idmap".into(),
                self.idmap.as_deref().map(file_name).unwrap_or_default(),
            ),
            ("bin".into(), self.bin_scheme.to_string()),
            ("drop_unlinked".into(), self.drop_unlinked.to_string()),
            ("cohorts".into(), cohorts),
            ("exclude_isolated".into(), self.exclude_isolated.to_string()),
            ("collab_mean".into(), self.collaborator_mean.to_string()),
            ("pairs".into(), self.pairing.to_string()),
            ("newcomer_count".into(), self.newcomer_count.to_string()),
            ("pair_count".into(), self.pair_count.to_string()),
            ("exclude_existing".into(), self.exclude_existing.to_string()),
            ("base".into(), self.base.to_string()),
            ("min_count".into(), self.min_count.to_string()),
            ("format".into(), self.format.to_string()),
        ])
    }
}

fn canonical_key(k: &str) -> String {
    k.trim().trim_start_matches("--").replace('-', "_").to_ascii_lowercase()
}

fn cache_value(v: &str, base_dir: Option<&Path>) -> Option<PathBuf> {
    match v.trim() {
        "off" | "none" | "false" => None,
        p => Some(base_dir.map(|b| b.join(p)).unwrap_or_else(|| p.into())),
    }
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_file() {
        let text = "\
# run settings
pubs = data/pubs.jsonl
idmap = data/idmap.jsonl
bin = month
drop-unlinked = true
cohorts = 0.05:top, 0.5:tail
pairs = cumulative
base = 2
min_count = 1
format = json
out = out
cache = off
";
        let cfg = PipelineConfig::parse(text, Path::new("/tmp/run")).unwrap();
        assert_eq!(cfg.pubs, Path::new("/tmp/run/data/pubs.jsonl"));
        assert_eq!(cfg.idmap.as_deref(), Some(Path::new("/tmp/run/data/idmap.jsonl")));
        assert_eq!(cfg.bin_scheme, BinScheme::Month);
        assert!(cfg.drop_unlinked);
        assert_eq!(cfg.cohorts.len(), 2);
        assert_eq!(cfg.pairing, Pairing::Cumulative);
        assert_eq!(cfg.base, 2.0);
        assert_eq!(cfg.min_count, 1);
        assert_eq!(cfg.format, OutputFormat::Json);
        assert_eq!(cfg.out, Path::new("/tmp/run/out"));
        assert_eq!(cfg.cache_dir, None);
    }

    #[test]
    fn defaults_and_errors() {
        let cfg = PipelineConfig::parse("pubs = p.jsonl", Path::new("d")).unwrap();
        assert_eq!(cfg.base, DEFAULT_BASE);
        assert_eq!(cfg.min_count, 5);
        assert_eq!(cfg.cohorts.len(), 3);
        assert_eq!(cfg.cache_dir, Some(PathBuf::from("d/report/cache")));
        assert!(PipelineConfig::parse("bin = quarter", Path::new(".")).is_err());
        assert!(PipelineConfig::parse("pubs = x\nfrobnicate = 1", Path::new(".")).is_err());
        assert!(PipelineConfig::parse("pubs = x\nnot a pair", Path::new(".")).is_err());
        assert!(PipelineConfig::parse("pubs = x\ncohorts = 2:top", Path::new(".")).is_err());
    }

    #[test]
    fn overrides() {
        let mut cfg = PipelineConfig::new("p", "o");
        cfg.set("format", "json").unwrap();
        cfg.set("--exclude-isolated", "yes").unwrap();
        assert_eq!(cfg.format, OutputFormat::Json);
        assert!(cfg.exclude_isolated);
        assert!(cfg.set("format", "xml").is_err());
    }
}
