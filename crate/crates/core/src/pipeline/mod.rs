//! Staged pipeline: filter, geotag, classify, aggregate.
//!
//! Each stage reads the previous stage's newline-delimited file from
//! `<out_dir>/stages/`, appends its annotation fields to every record, and
//! writes records sorted by `(created_at, id)`. Per-record work fans out
//! through [`Execution`]; output bytes never depend on the worker count.

mod config;

pub use config::{PipelineConfig, RawConfig, TestEmbedder, KEYS};

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::corpus::{analyze, parse_object, read_corpus, TweetRecord};
use crate::error::{Error, Result};
use crate::geo::{load_geonames, stoplist_from, GazetteerConfig, GazetteerIndex, GeoTag};
use crate::lexicon::{is_topical, Lexicon, MatcherIndex};
use crate::par::Execution;
use crate::sentiment::{classify, embed_for_tests, load_embeddings, load_model, EmbeddingMap, SentimentLabel, SentimentModel};
use crate::trend::{aggregate, build_report, emit_report, load_case_series, Observation};

pub const FILTERED: &str = "filtered.ndjson";
pub const GEOTAGGED: &str = "geotagged.ndjson";
pub const CLASSIFIED: &str = "classified.ndjson";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Filter,
    Geotag,
    Classify,
    Aggregate,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Filter => "filter",
            Stage::Geotag => "geotag",
            Stage::Classify => "classify",
            Stage::Aggregate => "aggregate",
        }
    }
}

/// What a stage produced: record count, tallies by category, and a SHA-256
/// digest of the bytes it wrote.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageArtifact {
    pub stage: Stage,
    pub records: usize,
    pub counts: BTreeMap<&'static str, u64>,
    pub digest: String,
    pub outputs: Vec<PathBuf>,
}

impl std::fmt::Display for StageArtifact {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: records={}", self.stage.name(), self.records)?;
        for (k, v) in &self.counts {
            write!(f, " {k}={v}")?;
        }
        write!(f, " digest={}", self.digest)
    }
}

impl PipelineConfig {
    pub fn stage_dir(&self) -> PathBuf {
        self.out_dir.join("stages")
    }

    pub fn stage_file(&self, name: &str) -> PathBuf {
        self.stage_dir().join(name)
    }

    pub fn execution(&self) -> Execution {
        Execution::from_threads(self.threads)
    }

    /// Checks that every input the given stages read is present.
    pub fn validate(&self, stages: &[Stage]) -> Result<()> {
        let need = |path: &Option<PathBuf>, key: &str| -> Result<()> {
            match path {
                None => Err(Error::Config(format!("missing required setting `{key}`"))),
                Some(p) if !p.is_file() => Err(Error::Config(format!("{key}: {} does not exist", p.display()))),
                Some(_) => Ok(()),
            }
        };
        let optional = |path: &Option<PathBuf>, key: &str| -> Result<()> {
            match path {
                Some(p) if !p.is_file() => Err(Error::Config(format!("{key}: {} does not exist", p.display()))),
                _ => Ok(()),
            }
        };
        for stage in stages {
            match stage {
                Stage::Filter => {
                    need(&self.input, "input")?;
                    optional(&self.covid_lexicon, "covid_lexicon")?;
                    optional(&self.edu_lexicon, "edu_lexicon")?;
                }
                Stage::Geotag => {
                    need(&self.gazetteer, "gazetteer")?;
                    optional(&self.stoplist, "stoplist")?;
                }
                Stage::Classify => {
                    need(&self.model, "model")?;
                    match (&self.embeddings, &self.test_embedder) {
                        (None, None) => {
                            return Err(Error::Config("one of `embeddings` or `test_embedder` is required".into()))
                        }
                        (Some(_), _) => need(&self.embeddings, "embeddings")?,
                        _ => {}
                    }
                }
                Stage::Aggregate => need(&self.cases, "cases")?,
            }
        }
        if self.out_dir.exists() && !self.out_dir.is_dir() {
            return Err(Error::Config(format!("out_dir {} is not a directory", self.out_dir.display())));
        }
        Ok(())
    }
}

fn digest_bytes(parts: &[(&str, &[u8])]) -> String {
    let mut hasher = Sha256::new();
    for (name, bytes) in parts {
        hasher.update(name.as_bytes());
        hasher.update([0]);
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(bytes);
    }
    hex::encode(hasher.finalize())
}

fn write_stage(config: &PipelineConfig, name: &str, lines: &[String]) -> Result<(PathBuf, String)> {
    let dir = config.stage_dir();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut body = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for line in lines {
        body.push_str(line);
        body.push('\n');
    }
    let path = dir.join(name);
    fs::write(&path, &body).map_err(|e| Error::io(&path, e))?;
    Ok((path, digest_bytes(&[(name, body.as_bytes())])))
}

/// A record read back from a stage file, with its annotation fields.
struct StagedRecord {
    record: TweetRecord,
    fields: Map<String, Value>,
}

fn read_stage(path: &Path) -> Result<Vec<StagedRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Map<String, Value> =
            serde_json::from_str(&line).map_err(|e| Error::data(path, idx + 1, e.to_string()))?;
        let record = parse_object(&fields).map_err(|e| Error::data(path, idx + 1, e.to_string()))?;
        out.push(StagedRecord { record, fields });
    }
    Ok(out)
}

fn sort_staged(records: &mut [(TweetRecord, Map<String, Value>)]) {
    records.sort_by(|a, b| a.0.sort_key().cmp(&b.0.sort_key()));
}

fn bump(counts: &mut BTreeMap<&'static str, u64>, key: &'static str, by: u64) {
    *counts.entry(key).or_default() += by;
}

pub struct Lexicons {
    pub covid: MatcherIndex,
    pub education: MatcherIndex,
}

pub fn load_lexicons(config: &PipelineConfig) -> Result<Lexicons> {
    let covid = match &config.covid_lexicon {
        Some(p) => Lexicon::load(p, "covid")?,
        None => Lexicon::covid_default(),
    };
    let education = match &config.edu_lexicon {
        Some(p) => Lexicon::load(p, "education")?,
        None => Lexicon::education_default(),
    };
    Ok(Lexicons {
        covid: MatcherIndex::build(&covid),
        education: MatcherIndex::build(&education),
    })
}

pub fn gazetteer_config(config: &PipelineConfig) -> Result<GazetteerConfig> {
    let mut gaz = GazetteerConfig {
        allowlist: config.allowlist.clone(),
        min_name_len: config.min_name_len,
        strict: config.strict,
        ..GazetteerConfig::default()
    };
    if let Some(p) = &config.stoplist {
        gaz.stoplist = stoplist_from(&Lexicon::load(p, "stoplist")?);
    }
    Ok(gaz)
}

pub fn load_gazetteer(config: &PipelineConfig) -> Result<GazetteerIndex> {
    let path = config
        .gazetteer
        .as_ref()
        .ok_or_else(|| Error::Config("missing required setting `gazetteer`".into()))?;
    let (entries, _) = load_geonames(path, &gazetteer_config(config)?)?;
    GazetteerIndex::build(entries)
}

fn topical_annotations(record: &TweetRecord, lexicons: &Lexicons) -> Option<Map<String, Value>> {
    let tokens = analyze(&record.text);
    let t = is_topical(&tokens, &lexicons.covid, &lexicons.education);
    if !t.is_topical() {
        return None;
    }
    let terms = |idx: &MatcherIndex, spans: &[crate::lexicon::MatchSpan]| -> Value {
        spans.iter().map(|m| Value::String(idx.term_text(m.term))).collect()
    };
    let mut map = record.to_json_map();
    map.insert("covid_terms".into(), terms(&lexicons.covid, &t.covid));
    map.insert("education_terms".into(), terms(&lexicons.education, &t.education));
    Some(map)
}

pub fn cmd_filter(config: &PipelineConfig) -> Result<StageArtifact> {
    config.validate(&[Stage::Filter])?;
    let lexicons = load_lexicons(config)?;
    let input = config.input.as_ref().expect("validated");
    let file = File::open(input).map_err(|e| Error::io(input, e))?;
    let (records, stats) = read_corpus(BufReader::new(file), config.strict, config.dedup).map_err(|e| match e {
        Error::Data { line, message, .. } => Error::data(input, line, message),
        Error::Record { line, source } => Error::data(input, line, source.to_string()),
        other => other,
    })?;

    let window = config.window;
    let annotated = config.execution().map(&records, |r| {
        if !window.contains(r.created_at.date_naive()) {
            return Err(());
        }
        Ok(topical_annotations(r, &lexicons))
    })?;

    let mut counts = BTreeMap::new();
    bump(&mut counts, "parsed", stats.parsed as u64);
    bump(&mut counts, "duplicates", stats.duplicates as u64);
    bump(&mut counts, "malformed", stats.rejected_total() as u64);
    bump(&mut counts, "out_of_window", 0);
    bump(&mut counts, "not_topical", 0);
    let mut kept = Vec::new();
    for (record, ann) in records.into_iter().zip(annotated) {
        match ann {
            Err(()) => bump(&mut counts, "out_of_window", 1),
            Ok(None) => bump(&mut counts, "not_topical", 1),
            Ok(Some(map)) => kept.push((record, map)),
        }
    }
    bump(&mut counts, "kept", kept.len() as u64);
    sort_staged(&mut kept);
    let lines: Vec<String> = kept.iter().map(|(_, m)| Value::Object(m.clone()).to_string()).collect();
    let (path, digest) = write_stage(config, FILTERED, &lines)?;
    Ok(StageArtifact {
        stage: Stage::Filter,
        records: lines.len(),
        counts,
        digest,
        outputs: vec![path],
    })
}

fn geo_json(tag: &GeoTag) -> Value {
    let evidence: Vec<Value> = tag
        .evidence
        .iter()
        .map(|ev| {
            json!({
                "name": ev.entry.name.join(" "),
                "token_start": ev.span.token_start,
                "token_end": ev.span.token_end,
                "geoname_id": ev.entry.geoname_id,
                "country": ev.entry.country.to_string(),
                "population": ev.entry.population,
            })
        })
        .collect();
    json!({
        "country": tag.country.map(|c| c.to_string()),
        "ambiguous": tag.ambiguous,
        "evidence": evidence,
    })
}

pub fn cmd_geotag(config: &PipelineConfig) -> Result<StageArtifact> {
    config.validate(&[Stage::Geotag])?;
    let index = load_gazetteer(config)?;
    let staged = read_stage(&config.stage_file(FILTERED))?;
    let tags = config
        .execution()
        .map(&staged, |s| index.resolve_location(&analyze(&s.record.text)))?;

    let mut counts = BTreeMap::new();
    for key in ["located", "unlocated", "ambiguous"] {
        bump(&mut counts, key, 0);
    }
    let mut out = Vec::with_capacity(staged.len());
    for (s, tag) in staged.into_iter().zip(tags) {
        bump(&mut counts, if tag.country.is_some() { "located" } else { "unlocated" }, 1);
        if tag.ambiguous {
            bump(&mut counts, "ambiguous", 1);
        }
        let mut fields = s.fields;
        fields.insert("geo".into(), geo_json(&tag));
        out.push((s.record, fields));
    }
    sort_staged(&mut out);
    let lines: Vec<String> = out.iter().map(|(_, m)| Value::Object(m.clone()).to_string()).collect();
    let (path, digest) = write_stage(config, GEOTAGGED, &lines)?;
    Ok(StageArtifact {
        stage: Stage::Geotag,
        records: lines.len(),
        counts,
        digest,
        outputs: vec![path],
    })
}

enum EmbeddingSource {
    File(EmbeddingMap),
    Test(TestEmbedder),
}

impl EmbeddingSource {
    fn dim(&self) -> Option<usize> {
        match self {
            EmbeddingSource::File(map) => map.values().next().map(|s| s.dim()),
            EmbeddingSource::Test(t) => Some(t.dim),
        }
    }
}

enum Classified {
    Label(SentimentLabel),
    MissingEmbedding,
}

pub fn cmd_classify(config: &PipelineConfig) -> Result<StageArtifact> {
    config.validate(&[Stage::Classify])?;
    let model: SentimentModel = load_model(config.model.as_ref().expect("validated"))?;
    let source = match (&config.embeddings, config.test_embedder) {
        (Some(p), _) => EmbeddingSource::File(load_embeddings(p)?),
        (None, Some(t)) => EmbeddingSource::Test(t),
        (None, None) => unreachable!("validated"),
    };
    if let Some(dim) = source.dim() {
        if dim != model.dim() {
            return Err(Error::Data {
                path: config.model.clone().expect("validated"),
                line: 0,
                message: format!("model dimension {} does not match embedding dimension {dim}", model.dim()),
            });
        }
    }
    let staged = read_stage(&config.stage_file(GEOTAGGED))?;
    let results = config.execution().map(&staged, |s| -> Result<Classified> {
        let seq = match &source {
            EmbeddingSource::File(map) => match map.get(&s.record.id) {
                Some(seq) => seq.clone(),
                None => return Ok(Classified::MissingEmbedding),
            },
            EmbeddingSource::Test(t) => embed_for_tests(&analyze(&s.record.text), t.dim, t.seed)?,
        };
        Ok(Classified::Label(classify(&seq, &model)?))
    })?;

    let mut counts = BTreeMap::new();
    for key in ["positive", "negative", "missing_embedding"] {
        bump(&mut counts, key, 0);
    }
    let mut out = Vec::with_capacity(staged.len());
    for (s, result) in staged.into_iter().zip(results) {
        match result? {
            Classified::MissingEmbedding if config.strict => {
                return Err(Error::Data {
                    path: config.embeddings.clone().unwrap_or_default(),
                    line: 0,
                    message: format!("no embedding for record {:?}", s.record.id),
                })
            }
            Classified::MissingEmbedding => bump(&mut counts, "missing_embedding", 1),
            Classified::Label(label) => {
                bump(
                    &mut counts,
                    match label {
                        SentimentLabel::Positive => "positive",
                        SentimentLabel::Negative => "negative",
                    },
                    1,
                );
                let mut fields = s.fields;
                fields.insert("label".into(), Value::from(label.value()));
                out.push((s.record, fields));
            }
        }
    }
    sort_staged(&mut out);
    let lines: Vec<String> = out.iter().map(|(_, m)| Value::Object(m.clone()).to_string()).collect();
    let (path, digest) = write_stage(config, CLASSIFIED, &lines)?;
    Ok(StageArtifact {
        stage: Stage::Classify,
        records: lines.len(),
        counts,
        digest,
        outputs: vec![path],
    })
}

fn observation(s: &StagedRecord, path: &Path) -> Result<Observation> {
    let bad = |what: &str| Error::data(path, 0, format!("record {:?}: {what}", s.record.id));
    let country = match s.fields.get("geo").and_then(|g| g.get("country")) {
        Some(Value::String(c)) => Some(c.parse().map_err(|_| bad("bad geo.country"))?),
        Some(Value::Null) => None,
        _ => return Err(bad("missing geo annotation")),
    };
    let label = s
        .fields
        .get("label")
        .and_then(Value::as_u64)
        .and_then(|v| u8::try_from(v).ok())
        .and_then(SentimentLabel::from_value)
        .ok_or_else(|| bad("missing or invalid label"))?;
    Ok(Observation {
        created_at: s.record.created_at,
        country,
        label,
    })
}

pub fn cmd_aggregate(config: &PipelineConfig) -> Result<StageArtifact> {
    config.validate(&[Stage::Aggregate])?;
    let path = config.stage_file(CLASSIFIED);
    let staged = read_stage(&path)?;
    let observations = staged.iter().map(|s| observation(s, &path)).collect::<Result<Vec<_>>>()?;
    let agg = aggregate(&observations, &config.window, config.execution())?;
    agg.check_conservation()?;
    if agg.records != observations.len() as u64 {
        return Err(Error::Conservation(format!(
            "aggregated {} of {} classified records",
            agg.records,
            observations.len()
        )));
    }
    let (cases, case_stats) = load_case_series(config.cases.as_ref().expect("validated"), &config.allowlist, config.strict)?;
    let report = build_report(
        &agg,
        &cases,
        case_stats,
        &config.window,
        &config.report_countries,
        config.min_report_records,
    )?;
    let outputs = emit_report(&report, &config.out_dir)?;
    let mut parts = Vec::with_capacity(outputs.len());
    for p in &outputs {
        let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
        parts.push((p.file_name().unwrap().to_string_lossy().into_owned(), bytes));
    }
    let digest = digest_bytes(&parts.iter().map(|(n, b)| (n.as_str(), b.as_slice())).collect::<Vec<_>>());

    let mut counts = BTreeMap::new();
    bump(&mut counts, "located", agg.in_window() - agg.unlocated);
    bump(&mut counts, "unlocated", agg.unlocated);
    bump(&mut counts, "out_of_window", agg.out_of_window);
    bump(&mut counts, "countries", report.countries.len() as u64);
    Ok(StageArtifact {
        stage: Stage::Aggregate,
        records: observations.len(),
        counts,
        digest,
        outputs,
    })
}

/// Runs all four stages after validating the whole configuration.
pub fn cmd_run(config: &PipelineConfig) -> Result<Vec<StageArtifact>> {
    config.validate(&[Stage::Filter, Stage::Geotag, Stage::Classify, Stage::Aggregate])?;
    Ok(vec![
        cmd_filter(config)?,
        cmd_geotag(config)?,
        cmd_classify(config)?,
        cmd_aggregate(config)?,
    ])
}

/// Validates the configuration and the headers of every configured input
/// without processing records. Returns one line per checked input.
pub fn cmd_check(config: &PipelineConfig) -> Result<Vec<String>> {
    let mut report = Vec::new();
    if let Some(p) = &config.input {
        let file = File::open(p).map_err(|e| Error::io(p, e))?;
        let first = BufReader::new(file)
            .lines()
            .enumerate()
            .map(|(i, l)| l.map(|l| (i + 1, l)))
            .find(|l| l.as_ref().map_or(true, |(_, l)| !l.trim().is_empty() && !l.trim().starts_with('#')));
        match first {
            Some(Ok((line, text))) => {
                crate::corpus::parse_record(&text).map_err(|e| Error::data(p, line, e.to_string()))?;
            }
            Some(Err(e)) => return Err(Error::io(p, e)),
            None => {}
        }
        report.push(format!("input: ok ({})", p.display()));
    }
    let lex = load_lexicons(config)?;
    report.push(format!(
        "lexicons: ok (covid {} terms, education {} terms)",
        lex.covid.term_count(),
        lex.education.term_count()
    ));
    if let Some(p) = &config.gazetteer {
        let file = File::open(p).map_err(|e| Error::io(p, e))?;
        if let Some(line) = BufReader::new(file).lines().next() {
            let line = line.map_err(|e| Error::io(p, e))?;
            let cols = line.split('\t').count();
            if cols != 19 {
                return Err(Error::data(p, 1, format!("expected 19 tab-separated columns, found {cols}")));
            }
        }
        gazetteer_config(config)?;
        report.push(format!("gazetteer: ok ({})", p.display()));
    }
    if let Some(p) = &config.model {
        let model = load_model(p)?;
        report.push(format!("model: ok (d={})", model.dim()));
        if let Some(t) = config.test_embedder {
            if t.dim != model.dim() {
                return Err(Error::Config(format!(
                    "model dimension {} does not match embedding dimension {}",
                    model.dim(),
                    t.dim
                )));
            }
        }
    }
    if let Some(p) = &config.embeddings {
        let file = File::open(p).map_err(|e| Error::io(p, e))?;
        if let Some(line) = BufReader::new(file).lines().next() {
            let line = line.map_err(|e| Error::io(p, e))?;
            if !line.trim().starts_with("d=") {
                return Err(Error::data(p, 1, "expected `d=<int>` header"));
            }
        }
        report.push(format!("embeddings: ok ({})", p.display()));
    }
    if let Some(p) = &config.cases {
        let file = File::open(p).map_err(|e| Error::io(p, e))?;
        let header = BufReader::new(file).lines().next().transpose().map_err(|e| Error::io(p, e))?;
        if !header.is_some_and(|h| h.trim().eq_ignore_ascii_case("date,country,confirmed")) {
            return Err(Error::data(p, 1, "expected header `date,country,confirmed`"));
        }
        report.push(format!("cases: ok ({})", p.display()));
    }
    Ok(report)
}
