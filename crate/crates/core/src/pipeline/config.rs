//! `key = value` configuration with command-line overrides.
//!
//! Relative paths in a config file resolve against the file's directory;
//! paths given as overrides resolve against the working directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::geo::{default_allowlist, default_report_countries, parse_country_list, CountryCode, DEFAULT_MIN_NAME_LEN};
use crate::trend::WindowConfig;

pub const KEYS: &[&str] = &[
    "input",
    "covid_lexicon",
    "edu_lexicon",
    "gazetteer",
    "stoplist",
    "embeddings",
    "test_embedder",
    "model",
    "cases",
    "out_dir",
    "start",
    "end",
    "countries",
    "report_countries",
    "min_report_records",
    "threads",
    "strict",
    "dedup",
    "min_name_len",
];

const PATH_KEYS: &[&str] = &[
    "input",
    "covid_lexicon",
    "edu_lexicon",
    "gazetteer",
    "stoplist",
    "embeddings",
    "model",
    "cases",
    "out_dir",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl std::str::FromStr for TestEmbedder {
    type Err = Error;

    /// Parses `d=<int>,seed=<int>`.
    fn from_str(s: &str) -> Result<Self> {
        let mut dim = None;
        let mut seed = None;
        for part in s.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("test embedder: expected key=value, found {part:?}")))?;
            let bad = || Error::Config(format!("test embedder: bad value {v:?} for {k}"));
            match k.trim() {
                "d" => dim = Some(v.trim().parse::<usize>().map_err(|_| bad())?),
                "seed" => seed = Some(v.trim().parse::<u64>().map_err(|_| bad())?),
                other => return Err(Error::Config(format!("test embedder: unknown key {other:?}"))),
            }
        }
        let dim = dim.ok_or_else(|| Error::Config("test embedder: missing d".into()))?;
        if dim == 0 {
            return Err(Error::Config("test embedder: d must be at least 1".into()));
        }
        Ok(TestEmbedder {
            dim,
            seed: seed.unwrap_or(0),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub covid_lexicon: Option<PathBuf>,
    pub edu_lexicon: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub stoplist: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub test_embedder: Option<TestEmbedder>,
    pub model: Option<PathBuf>,
    pub cases: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub window: WindowConfig,
    pub allowlist: BTreeSet<CountryCode>,
    pub report_countries: BTreeSet<CountryCode>,
    pub min_report_records: u64,
    /// 0 picks the number of CPUs.
    pub threads: usize,
    pub strict: bool,
    pub dedup: bool,
    pub min_name_len: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            covid_lexicon: None,
            edu_lexicon: None,
            gazetteer: None,
            stoplist: None,
            embeddings: None,
            test_embedder: None,
            model: None,
            cases: None,
            out_dir: PathBuf::from("out"),
            window: WindowConfig::default(),
            allowlist: default_allowlist(),
            report_countries: default_report_countries(),
            min_report_records: 0,
            threads: 0,
            strict: false,
            dedup: true,
            min_name_len: DEFAULT_MIN_NAME_LEN,
        }
    }
}

/// Layered raw settings; later layers win.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, Option<PathBuf>)>,
}

impl RawConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut raw = RawConfig::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{}:{}: expected `key = value`", path.display(), idx + 1))
            })?;
            let key = key.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("{}:{}: unknown key {key:?}", path.display(), idx + 1)));
            }
            raw.entries.insert(key, (value.trim().to_string(), Some(base.clone())));
        }
        Ok(raw)
    }

    /// Command-line override.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        let key = key.replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("unknown key {key:?}")));
        }
        self.entries.insert(key, (value.into(), None));
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn build(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        let mut start = cfg.window.start();
        let mut end = cfg.window.end();
        for (key, (value, base)) in &self.entries {
            let path = || -> PathBuf {
                let p = PathBuf::from(value);
                match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p,
                }
            };
            let bad = |what: &str| Error::Config(format!("{key}: {what} {value:?}"));
            if (PATH_KEYS.contains(&key.as_str()) || key == "test_embedder") && value.is_empty() {
                continue;
            }
            match key.as_str() {
                "input" => cfg.input = Some(path()),
                "covid_lexicon" => cfg.covid_lexicon = Some(path()),
                "edu_lexicon" => cfg.edu_lexicon = Some(path()),
                "gazetteer" => cfg.gazetteer = Some(path()),
                "stoplist" => cfg.stoplist = Some(path()),
                "embeddings" => cfg.embeddings = Some(path()),
                "model" => cfg.model = Some(path()),
                "cases" => cfg.cases = Some(path()),
                "out_dir" => cfg.out_dir = path(),
                "test_embedder" => cfg.test_embedder = Some(value.parse()?),
                "start" => start = parse_date(value).ok_or_else(|| bad("bad date"))?,
                "end" => end = parse_date(value).ok_or_else(|| bad("bad date"))?,
                "countries" => cfg.allowlist = parse_country_list(value)?,
                "report_countries" => cfg.report_countries = parse_country_list(value)?,
                "min_report_records" => cfg.min_report_records = value.parse().map_err(|_| bad("bad integer"))?,
                "threads" => cfg.threads = value.parse().map_err(|_| bad("bad integer"))?,
                "min_name_len" => cfg.min_name_len = value.parse().map_err(|_| bad("bad integer"))?,
                "strict" => cfg.strict = parse_bool(value).ok_or_else(|| bad("bad boolean"))?,
                "dedup" => cfg.dedup = parse_bool(value).ok_or_else(|| bad("bad boolean"))?,
                other => return Err(Error::Config(format!("unknown key {other:?}"))),
            }
        }
        cfg.window = WindowConfig::new(start, end)?;
        if cfg.embeddings.is_some() && cfg.test_embedder.is_some() {
            return Err(Error::Config("embeddings and test_embedder are mutually exclusive".into()));
        }
        if cfg.allowlist.is_empty() {
            return Err(Error::Config("country allowlist is empty".into()));
        }
        Ok(cfg)
    }
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Some(true),
        "false" | "no" | "0" | "off" => Some(false),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_resolve_relative_to_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(
            &path,
            "# fixture\ninput = corpus.ndjson\nout-dir = out\nthreads = 4\ntest_embedder = d=8,seed=7\ncountries = us,gb\nstrict = yes\n",
        )
        .unwrap();
        let mut raw = RawConfig::from_file(&path).unwrap();
        raw.set("threads", "1").unwrap();
        let cfg = raw.build().unwrap();
        assert_eq!(cfg.input.unwrap(), dir.path().join("corpus.ndjson"));
        assert_eq!(cfg.out_dir, dir.path().join("out"));
        assert_eq!(cfg.threads, 1);
        assert_eq!(cfg.test_embedder, Some(TestEmbedder { dim: 8, seed: 7 }));
        assert_eq!(cfg.allowlist.len(), 2);
        assert!(cfg.strict && cfg.dedup);
    }

    #[test]
    fn rejects_unknown_and_invalid_values() {
        let mut raw = RawConfig::new();
        assert!(raw.set("colour", "blue").is_err());
        raw.set("start", "2020-07-01").unwrap();
        assert!(matches!(raw.build(), Err(Error::Config(_))));
        let mut raw = RawConfig::new();
        raw.set("test_embedder", "d=0").unwrap();
        assert!(raw.build().is_err());
        let mut raw = RawConfig::new();
        raw.set("threads", "many").unwrap();
        assert_eq!(raw.build().unwrap_err().exit_code(), 1);
    }

    #[test]
    fn defaults() {
        let cfg = RawConfig::new().build().unwrap();
        assert_eq!(cfg.window, WindowConfig::default());
        assert_eq!(cfg.allowlist.len(), 32);
        assert_eq!(cfg.report_countries.len(), 10);
        assert!(cfg.dedup && !cfg.strict);
    }
}
