//! Corpus ingestion: record parsing, text normalization and tokenization.
//!
//! Input is newline-delimited JSON, one object per line with the fields
//! `id`, `created_at`, `text` and an optional `lang`. Lines starting with
//! `#` are comments. Unknown fields are ignored.

use std::collections::HashSet;
use std::io::BufRead;

use chrono::{DateTime, SecondsFormat, Timelike, Utc};
use serde_json::{Map, Value};
use unicode_normalization::{is_nfc_quick, IsNormalized, UnicodeNormalization};

use crate::error::{Error, RecordError, Result};

pub const MAX_TEXT_BYTES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TweetRecord {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub text: String,
    pub lang: Option<String>,
}

impl TweetRecord {
    /// Key that re-establishes deterministic output order.
    pub fn sort_key(&self) -> (DateTime<Utc>, &str) {
        (self.created_at, &self.id)
    }

    pub fn to_json_map(&self) -> Map<String, Value> {
        let mut map = Map::new();
        map.insert("id".into(), Value::String(self.id.clone()));
        map.insert("created_at".into(), Value::String(format_timestamp(&self.created_at)));
        map.insert("text".into(), Value::String(self.text.clone()));
        if let Some(lang) = &self.lang {
            map.insert("lang".into(), Value::String(lang.clone()));
        }
        map
    }

    /// Serializes in the corpus input format.
    pub fn to_line(&self) -> String {
        Value::Object(self.to_json_map()).to_string()
    }
}

pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn parse_timestamp(raw: &str) -> std::result::Result<DateTime<Utc>, RecordError> {
    let parsed = DateTime::parse_from_rfc3339(raw.trim())
        .map_err(|_| RecordError::Timestamp(raw.to_string()))?;
    let utc = parsed.with_timezone(&Utc);
    Ok(utc.with_nanosecond(0).unwrap_or(utc))
}

fn required_str<'a>(obj: &'a Map<String, Value>, field: &'static str) -> std::result::Result<&'a str, RecordError> {
    match obj.get(field) {
        None | Some(Value::Null) => Err(RecordError::MissingField(field)),
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(RecordError::WrongType { field }),
    }
}

/// Parses one corpus line. Trailing whitespace is ignored.
pub fn parse_record(line: &str) -> std::result::Result<TweetRecord, RecordError> {
    let value: Value =
        serde_json::from_str(line.trim_end()).map_err(|e| RecordError::Malformed(e.to_string()))?;
    let Value::Object(obj) = value else {
        return Err(RecordError::Malformed("expected a JSON object".into()));
    };
    parse_object(&obj)
}

pub(crate) fn parse_object(obj: &Map<String, Value>) -> std::result::Result<TweetRecord, RecordError> {
    let id = required_str(obj, "id")?;
    if id.is_empty() {
        return Err(RecordError::EmptyId);
    }
    let created_at = parse_timestamp(required_str(obj, "created_at")?)?;
    let text = required_str(obj, "text")?;
    if text.len() > MAX_TEXT_BYTES {
        return Err(RecordError::TextTooLong(text.len()));
    }
    // Anything that is not a two-letter code (e.g. "und") is dropped.
    let lang = match obj.get("lang") {
        Some(Value::String(s)) if s.len() == 2 && s.bytes().all(|b| b.is_ascii_alphabetic()) => {
            Some(s.to_ascii_lowercase())
        }
        Some(Value::String(_)) | Some(Value::Null) | None => None,
        Some(_) => return Err(RecordError::WrongType { field: "lang" }),
    };
    Ok(TweetRecord {
        id: id.to_string(),
        created_at,
        text: text.to_string(),
        lang,
    })
}

/// Tallies from a corpus read.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct ReadStats {
    pub lines: usize,
    pub comments: usize,
    pub parsed: usize,
    pub duplicates: usize,
    /// (category, count) for rejected lines.
    pub rejected: Vec<(&'static str, usize)>,
}

impl ReadStats {
    fn reject(&mut self, category: &'static str) {
        match self.rejected.iter_mut().find(|(c, _)| *c == category) {
            Some((_, n)) => *n += 1,
            None => self.rejected.push((category, 1)),
        }
    }

    pub fn rejected_total(&self) -> usize {
        self.rejected.iter().map(|(_, n)| n).sum()
    }
}

/// Reads a whole corpus. In non-strict mode malformed lines are counted and
/// skipped; in strict mode the first one aborts with its line number.
/// With `dedup` the first occurrence of each id wins.
pub fn read_corpus<R: BufRead>(
    reader: R,
    strict: bool,
    dedup: bool,
) -> Result<(Vec<TweetRecord>, ReadStats)> {
    let mut stats = ReadStats::default();
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::data("<corpus>", line_no, e.to_string()))?;
        stats.lines += 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            stats.comments += 1;
            continue;
        }
        match parse_record(&line) {
            Ok(record) => {
                if dedup && !seen.insert(record.id.clone()) {
                    stats.duplicates += 1;
                    continue;
                }
                stats.parsed += 1;
                out.push(record);
            }
            Err(source) if strict => return Err(Error::Record { line: line_no, source }),
            Err(e) => stats.reject(e.category()),
        }
    }
    Ok((out, stats))
}

/// NFC, lowercase, URL removal, whitespace collapse and trim.
pub fn normalize_text(raw: &str) -> String {
    let lowered = if raw.is_ascii() {
        raw.to_ascii_lowercase()
    } else {
        let composed = nfc(raw.chars());
        nfc(composed.chars().flat_map(char::to_lowercase))
    };
    let stripped = strip_urls(&lowered);
    let mut out = String::with_capacity(stripped.len());
    for word in stripped.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

fn nfc<I: Iterator<Item = char> + Clone>(chars: I) -> String {
    if is_nfc_quick(chars.clone()) == IsNormalized::Yes {
        chars.collect()
    } else {
        chars.nfc().collect()
    }
}

fn strip_urls(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    loop {
        let next = [rest.find("http://"), rest.find("https://")]
            .into_iter()
            .flatten()
            .min();
        let Some(pos) = next else {
            out.push_str(rest);
            return out;
        };
        out.push_str(&rest[..pos]);
        out.push(' ');
        let tail = &rest[pos..];
        let end = tail.find(char::is_whitespace).unwrap_or(tail.len());
        rest = &tail[end..];
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSpan {
    pub surface: String,
    pub byte_start: usize,
    pub byte_end: usize,
}

#[inline]
pub fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '\'' | '\u{2019}' | '-')
}

/// Splits normalized text into maximal runs of token characters.
/// `#` and `@` are separators, so hashtags and mentions lose their prefix.
pub fn tokenize(normalized: &str) -> Vec<TokenSpan> {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in normalized.char_indices() {
        match (is_token_char(c), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                tokens.push(span(normalized, s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(span(normalized, s, normalized.len()));
    }
    tokens
}

fn span(text: &str, start: usize, end: usize) -> TokenSpan {
    TokenSpan {
        surface: text[start..end].to_string(),
        byte_start: start,
        byte_end: end,
    }
}

/// Normalize then tokenize.
pub fn analyze(raw: &str) -> Vec<TokenSpan> {
    tokenize(&normalize_text(raw))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn parses_minimal_record() {
        let r = parse_record(r#"{"id":"1","created_at":"2020-03-23T00:00:00Z","text":"covid closed our school"}"#)
            .unwrap();
        assert_eq!(r.id, "1");
        assert_eq!(format_timestamp(&r.created_at), "2020-03-23T00:00:00Z");
        assert_eq!(r.text, "covid closed our school");
        assert_eq!(r.lang, None);
    }

    #[test]
    fn bad_timestamp_is_an_error() {
        let err = parse_record(r#"{"id":"2","created_at":"not-a-date","text":"x"}"#).unwrap_err();
        assert!(matches!(err, RecordError::Timestamp(_)));
    }

    #[test]
    fn unknown_fields_are_ignored_and_whitespace_trimmed() {
        let r = parse_record(
            "{\"id\":\"3\",\"created_at\":\"2020-04-01T10:00:00Z\",\"text\":\"hi\",\"retweets\":4,\"lang\":\"en\"}  \t",
        )
        .unwrap();
        assert_eq!(r.lang.as_deref(), Some("en"));
    }

    #[test]
    fn deleting_any_required_field_fails() {
        let full: Map<String, Value> = serde_json::from_str(
            r#"{"id":"1","created_at":"2020-03-23T00:00:00Z","text":"t","lang":"en"}"#,
        )
        .unwrap();
        for field in ["id", "created_at", "text"] {
            let mut obj = full.clone();
            obj.remove(field);
            assert!(matches!(parse_object(&obj), Err(RecordError::MissingField(f)) if f == field));
        }
    }

    #[test]
    fn rejects_wrong_types_and_oversized_text() {
        assert!(matches!(
            parse_record(r#"{"id":1,"created_at":"2020-03-23T00:00:00Z","text":"t"}"#),
            Err(RecordError::WrongType { field: "id" })
        ));
        let long = "a".repeat(MAX_TEXT_BYTES + 1);
        let line = format!(r#"{{"id":"1","created_at":"2020-03-23T00:00:00Z","text":"{long}"}}"#);
        assert!(matches!(parse_record(&line), Err(RecordError::TextTooLong(_))));
        assert!(matches!(parse_record("[1,2]"), Err(RecordError::Malformed(_))));
    }

    #[test]
    fn offsets_convert_to_utc() {
        let r = parse_record(r#"{"id":"1","created_at":"2020-03-23T02:00:00.750+02:00","text":"t"}"#).unwrap();
        assert_eq!(format_timestamp(&r.created_at), "2020-03-23T00:00:00Z");
    }

    #[test]
    fn read_corpus_counts_and_dedups() {
        let input = "# comment\n\
            {\"id\":\"a\",\"created_at\":\"2020-03-23T00:00:00Z\",\"text\":\"x\"}\n\
            {\"id\":\"a\",\"created_at\":\"2020-03-24T00:00:00Z\",\"text\":\"y\"}\n\
            not json\n\
            \n\
            {\"id\":\"b\",\"created_at\":\"bad\",\"text\":\"z\"}\n";
        let (records, stats) = read_corpus(input.as_bytes(), false, true).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].text, "x");
        assert_eq!(stats.duplicates, 1);
        assert_eq!(stats.comments, 1);
        assert_eq!(stats.rejected_total(), 2);

        let (records, _) = read_corpus(input.as_bytes(), false, false).unwrap();
        assert_eq!(records.len(), 2);

        match read_corpus(input.as_bytes(), true, true) {
            Err(Error::Record { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected strict failure, got {other:?}"),
        }
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_text("COVID Closed SCHOOLS"), "covid closed schools");
        assert_eq!(normalize_text("covid https://t.co/abc school"), "covid school");
        assert_eq!(normalize_text(""), "");
        assert_eq!(normalize_text("  a\t\nb  "), "a b");
        assert_eq!(normalize_text("see HTTP://Example.com/London"), "see");
        assert_eq!(normalize_text("Cafe\u{301}"), "caf\u{e9}");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(surfaces("covid-19 hits schools"), ["covid-19", "hits", "schools"]);
        assert_eq!(surfaces("#covid @school!"), ["covid", "school"]);
        assert_eq!(surfaces("don't stop"), ["don't", "stop"]);
        assert!(tokenize("").is_empty());
        assert!(tokenize("!!! ...").is_empty());
        let toks = tokenize("été à paris");
        assert_eq!(toks[1].surface, "à");
        assert_eq!(&"été à paris"[toks[2].byte_start..toks[2].byte_end], "paris");
    }
}
