//! Term lexicons and token-anchored leftmost-longest matching.
//!
//! Terms are token sequences (1 to 5 tokens) and matching compares whole
//! tokens, so `school` never fires inside `preschool`. The index is a trie
//! over interned token ids; at each scan position it walks at most
//! [`MAX_TERM_TOKENS`] edges, so lookup cost does not depend on lexicon size.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rustc_hash::FxHashMap;

use crate::corpus::{analyze, TokenSpan};
use crate::error::{Error, Result};

pub const MAX_TERM_TOKENS: usize = 5;

/// The six COVID keywords used to select the base corpus.
pub const COVID_KEYWORDS: [&str; 6] = ["corona", "coronavirus", "covid", "pandemic", "sarscov2", "covid-19"];

/// Sample education dictionary shipped with the crate.
pub const DEFAULT_EDUCATION_TERMS: &str = include_str!("../data/education_terms.txt");

pub type Term = Vec<String>;

impl AsRef<str> for TokenSpan {
    fn as_ref(&self) -> &str {
        &self.surface
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    name: String,
    terms: Vec<Term>,
}

impl Lexicon {
    /// Normalizes and tokenizes each raw term, collapsing duplicates while
    /// keeping first-seen order. Terms that tokenize to nothing are skipped.
    pub fn from_terms<I, S>(name: &str, raw: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = HashSet::new();
        let mut terms = Vec::new();
        for (idx, raw) in raw.into_iter().enumerate() {
            let term: Term = analyze(raw.as_ref()).into_iter().map(|t| t.surface).collect();
            if term.is_empty() {
                continue;
            }
            if term.len() > MAX_TERM_TOKENS {
                return Err(Error::data(
                    name,
                    idx + 1,
                    format!("term has {} tokens, at most {MAX_TERM_TOKENS} allowed", term.len()),
                ));
            }
            if seen.insert(term.clone()) {
                terms.push(term);
            }
        }
        if terms.is_empty() {
            return Err(Error::EmptyLexicon(name.to_string()));
        }
        Ok(Lexicon {
            name: name.to_string(),
            terms,
        })
    }

    /// Wraps terms that are already normalized, tokenized and distinct.
    pub(crate) fn from_tokenized(name: &str, terms: Vec<Term>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyLexicon(name.to_string()));
        }
        debug_assert!(terms.iter().all(|t| !t.is_empty() && t.len() <= MAX_TERM_TOKENS));
        Ok(Lexicon {
            name: name.to_string(),
            terms,
        })
    }

    pub fn covid_default() -> Self {
        Self::from_terms("covid", COVID_KEYWORDS).expect("built-in keywords are valid")
    }

    pub fn education_default() -> Self {
        Self::parse(DEFAULT_EDUCATION_TERMS.as_bytes(), "education").expect("bundled dictionary is valid")
    }

    /// Lexicon file: one term per line, `#` comment lines, blank lines ignored.
    pub fn parse<R: BufRead>(reader: R, name: &str) -> Result<Self> {
        let mut lines = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::data(name, idx + 1, e.to_string()))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            lines.push(trimmed.to_string());
        }
        Self::from_terms(name, lines)
    }

    pub fn load(path: &Path, name: &str) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file), name).map_err(|e| match e {
            Error::Data { line, message, .. } => Error::data(path, line, message),
            other => other,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchSpan {
    pub term: TermId,
    pub token_start: usize,
    pub token_end: usize,
}

impl MatchSpan {
    pub fn len(&self) -> usize {
        self.token_end - self.token_start
    }

    pub fn is_empty(&self) -> bool {
        self.token_end == self.token_start
    }
}

const ROOT: u32 = 0;

#[derive(Debug, Clone)]
pub struct MatcherIndex {
    lexicon_name: String,
    vocab: FxHashMap<Box<str>, u32>,
    edges: FxHashMap<(u32, u32), u32>,
    terminal: Vec<Option<TermId>>,
    terms: Vec<Term>,
}

impl MatcherIndex {
    pub fn build(lexicon: &Lexicon) -> Self {
        let mut index = MatcherIndex {
            lexicon_name: lexicon.name.clone(),
            vocab: FxHashMap::default(),
            edges: FxHashMap::default(),
            terminal: vec![None],
            terms: Vec::with_capacity(lexicon.terms.len()),
        };
        for term in &lexicon.terms {
            let mut node = ROOT;
            for token in term {
                let next_id = index.vocab.len() as u32;
                let tok = *index.vocab.entry(token.as_str().into()).or_insert(next_id);
                let fresh = index.terminal.len() as u32;
                node = *index.edges.entry((node, tok)).or_insert_with(|| {
                    index.terminal.push(None);
                    fresh
                });
            }
            // Lexicon terms are already distinct.
            debug_assert!(index.terminal[node as usize].is_none());
            index.terminal[node as usize] = Some(TermId(index.terms.len() as u32));
            index.terms.push(term.clone());
        }
        index
    }

    pub fn lexicon_name(&self) -> &str {
        &self.lexicon_name
    }

    pub fn term(&self, id: TermId) -> &[String] {
        &self.terms[id.0 as usize]
    }

    pub fn term_text(&self, id: TermId) -> String {
        self.term(id).join(" ")
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// All leftmost-longest, non-overlapping matches in token order.
    pub fn find_matches<T: AsRef<str>>(&self, tokens: &[T]) -> Vec<MatchSpan> {
        let ids: Vec<Option<u32>> = tokens.iter().map(|t| self.vocab.get(t.as_ref()).copied()).collect();
        let mut out = Vec::new();
        let mut start = 0;
        while start < ids.len() {
            match self.longest_at(&ids, start) {
                Some((end, term)) => {
                    out.push(MatchSpan {
                        term,
                        token_start: start,
                        token_end: end,
                    });
                    start = end;
                }
                None => start += 1,
            }
        }
        out
    }

    fn longest_at(&self, ids: &[Option<u32>], start: usize) -> Option<(usize, TermId)> {
        let mut node = ROOT;
        let mut best = None;
        for (pos, id) in ids.iter().enumerate().skip(start).take(MAX_TERM_TOKENS) {
            let Some(tok) = id else { break };
            let Some(&child) = self.edges.get(&(node, *tok)) else { break };
            node = child;
            if let Some(term) = self.terminal[node as usize] {
                best = Some((pos + 1, term));
            }
        }
        best
    }
}

/// Match evidence for the COVID-and-education filter.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Topicality {
    pub covid: Vec<MatchSpan>,
    pub education: Vec<MatchSpan>,
}

impl Topicality {
    pub fn is_topical(&self) -> bool {
        !self.covid.is_empty() && !self.education.is_empty()
    }
}

pub fn is_topical<T: AsRef<str>>(tokens: &[T], covid: &MatcherIndex, education: &MatcherIndex) -> Topicality {
    Topicality {
        covid: covid.find_matches(tokens),
        education: education.find_matches(tokens),
    }
}
