#![allow(dead_code)]

use std::collections::HashSet;
use std::path::PathBuf;

use rand::Rng;

use covedu::sentiment::EmbeddingSequence;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Reference scanner: at each position try every length from longest to
/// shortest against the term set.
pub fn naive_matches(tokens: &[String], terms: &HashSet<Vec<String>>) -> Vec<(usize, usize, Vec<String>)> {
    let mut out = Vec::new();
    let mut i = 0;
    'outer: while i < tokens.len() {
        for len in (1..=5.min(tokens.len() - i)).rev() {
            let cand = tokens[i..i + len].to_vec();
            if terms.contains(&cand) {
                out.push((i, i + len, cand));
                i += len;
                continue 'outer;
            }
        }
        i += 1;
    }
    out
}

pub fn random_sequence(rng: &mut impl Rng, len: usize, dim: usize, scale: f64) -> EmbeddingSequence {
    let rows = (0..len).map(|_| (0..dim).map(|_| rng.random_range(-scale..scale)).collect()).collect();
    EmbeddingSequence::from_rows(rows).unwrap()
}
