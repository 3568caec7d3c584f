//! Embedding and model text formats, and the hash-based test embedder.
//!
//! Embedding file:
//!
//! ```text
//! d=4
//! id=1001 T=2
//! 0.1 0.2 0.3 0.4
//! -0.5 0.0 1.0 0.25
//! ```
//!
//! Model file (`#` comments and blank lines allowed):
//!
//! ```text
//! d=2
//! w_att
//! 0.5 -0.25
//! head
//! 1.0 -1.0
//! b=0.0
//! ```
//!
//! with exactly three `head` sections.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{AttentionParams, EmbeddingSequence, HeadParams, SentimentModel};
use crate::corpus::TokenSpan;
use crate::error::{Error, Result};

pub type EmbeddingMap = BTreeMap<String, EmbeddingSequence>;

/// Deterministic stand-in for a transformer encoder. Each token surface is
/// hashed with SHA-256 together with the seed and a block counter; every
/// 8-byte word of the digest becomes one value in [-1, 1).
pub fn embed_for_tests(tokens: &[TokenSpan], dim: usize, seed: u64) -> Result<EmbeddingSequence> {
    if dim == 0 {
        return Err(Error::Config("embedding dimension must be at least 1".into()));
    }
    if tokens.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut values = Vec::with_capacity(tokens.len() * dim);
    for token in tokens {
        embed_token(&token.surface, dim, seed, &mut values);
    }
    EmbeddingSequence::from_flat(dim, values)
}

fn embed_token(surface: &str, dim: usize, seed: u64, out: &mut Vec<f64>) {
    let mut block: u32 = 0;
    let mut remaining = dim;
    while remaining > 0 {
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update(block.to_le_bytes());
        hasher.update(surface.as_bytes());
        let digest = hasher.finalize();
        for word in digest.chunks_exact(8).take(remaining.min(4)) {
            let bits = u64::from_le_bytes(word.try_into().expect("8 bytes"));
            let unit = (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            out.push(unit * 2.0 - 1.0);
        }
        remaining = remaining.saturating_sub(4);
        block += 1;
    }
}

fn parse_numbers(line: &str, path: &Path, line_no: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::data(path, line_no, format!("bad number {tok:?}")))
        })
        .collect()
}

fn parse_dim_header(line: &str, path: &Path, line_no: usize) -> Result<usize> {
    line.strip_prefix("d=")
        .and_then(|d| d.trim().parse::<usize>().ok())
        .filter(|d| *d >= 1)
        .ok_or_else(|| Error::data(path, line_no, format!("expected `d=<int>` header, found {line:?}")))
}

/// Meaningful lines with their 1-based numbers.
fn content_lines<R: BufRead>(reader: R, path: &Path) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::data(path, idx + 1, e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push((idx + 1, trimmed.to_string()));
    }
    Ok(out)
}

pub fn parse_embeddings<R: BufRead>(reader: R, path: &Path) -> Result<EmbeddingMap> {
    let lines = content_lines(reader, path)?;
    let mut map = EmbeddingMap::new();
    let mut iter = lines.into_iter();
    let Some((first_no, first)) = iter.next() else {
        return Ok(map);
    };
    let dim = parse_dim_header(&first, path, first_no)?;
    while let Some((line_no, line)) = iter.next() {
        if line.starts_with("d=") {
            let other = parse_dim_header(&line, path, line_no)?;
            if other != dim {
                return Err(Error::data(path, line_no, format!("inconsistent dimension: d={dim} then d={other}")));
            }
            continue;
        }
        let (id, count) = parse_record_header(&line)
            .ok_or_else(|| Error::data(path, line_no, format!("expected `id=<id> T=<int>`, found {line:?}")))?;
        if count == 0 {
            return Err(Error::data(path, line_no, "T must be at least 1"));
        }
        let mut values = Vec::with_capacity(count * dim);
        for _ in 0..count {
            let (row_no, row) = iter
                .next()
                .ok_or_else(|| Error::data(path, line_no, format!("record {id} is missing rows")))?;
            let nums = parse_numbers(&row, path, row_no)?;
            if nums.len() != dim {
                return Err(Error::data(
                    path,
                    row_no,
                    format!("inconsistent dimension: expected {dim} values, found {}", nums.len()),
                ));
            }
            values.extend(nums);
        }
        if map.contains_key(id) {
            return Err(Error::data(path, line_no, format!("duplicate id {id:?}")));
        }
        map.insert(id.to_string(), EmbeddingSequence::from_flat(dim, values)?);
    }
    Ok(map)
}

fn parse_record_header(line: &str) -> Option<(&str, usize)> {
    let rest = line.strip_prefix("id=")?;
    let split = rest.rfind(" T=")?;
    let id = rest[..split].trim();
    let count = rest[split + 3..].trim().parse().ok()?;
    (!id.is_empty()).then_some((id, count))
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingMap> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(BufReader::new(file), path)
}

pub fn parse_model<R: BufRead>(reader: R, path: &Path) -> Result<SentimentModel> {
    let lines = content_lines(reader, path)?;
    let mut iter = lines.into_iter();
    let (first_no, first) = iter.next().ok_or_else(|| Error::data(path, 0, "empty model file"))?;
    let dim = parse_dim_header(&first, path, first_no)?;

    let vector = |iter: &mut std::vec::IntoIter<(usize, String)>, what: &str| -> Result<Vec<f64>> {
        let (no, line) = iter.next().ok_or_else(|| Error::data(path, 0, format!("missing {what} values")))?;
        let nums = parse_numbers(&line, path, no)?;
        if nums.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: nums.len(),
            });
        }
        Ok(nums)
    };

    let mut attention = None;
    let mut heads = Vec::new();
    while let Some((no, line)) = iter.next() {
        match line.as_str() {
            "w_att" if attention.is_none() => attention = Some(AttentionParams { w_att: vector(&mut iter, "w_att")? }),
            "head" => {
                let w = vector(&mut iter, "head")?;
                let (b_no, b_line) = iter.next().ok_or_else(|| Error::data(path, no, "missing `b=` line"))?;
                let b = b_line
                    .strip_prefix("b=")
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::data(path, b_no, format!("expected `b=<number>`, found {b_line:?}")))?;
                heads.push(HeadParams { w, b });
            }
            other => return Err(Error::data(path, no, format!("unexpected line {other:?}"))),
        }
    }
    let attention = attention.ok_or_else(|| Error::data(path, 0, "missing w_att section"))?;
    let heads: [HeadParams; 3] = heads
        .try_into()
        .map_err(|h: Vec<HeadParams>| Error::data(path, 0, format!("expected 3 heads, found {}", h.len())))?;
    SentimentModel::new(attention, heads)
}

pub fn load_model(path: &Path) -> Result<SentimentModel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_model(BufReader::new(file), path)
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ")
}

/// Renders a model file; values round-trip exactly.
pub fn write_model(model: &SentimentModel) -> String {
    let mut out = String::new();
    writeln!(out, "d={}", model.dim()).unwrap();
    writeln!(out, "w_att\n{}", join(&model.attention().w_att)).unwrap();
    for head in model.heads() {
        writeln!(out, "head\n{}\nb={:?}", join(&head.w), head.b).unwrap();
    }
    out
}
