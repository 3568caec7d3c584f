//! Gazetteer construction from GeoNames dumps and country attribution.
//!
//! Rows are filtered to admin regions and populated places inside a country
//! allowlist. Each usable primary or alternate name becomes a [`PlaceEntry`].
//! A matched name resolves to its most populous candidate (smaller geoname id
//! on ties); the record's country is the one with the most resolved mentions,
//! then the single most populous piece of evidence, otherwise none.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use rustc_hash::FxHashMap;

use crate::corpus::analyze;
use crate::error::{Error, Result};
use crate::lexicon::{Lexicon, MatchSpan, MatcherIndex, Term, MAX_TERM_TOKENS};

/// Countries with high early-2020 case counts, as ISO 3166-1 alpha-2.
pub const DEFAULT_COUNTRIES: [&str; 32] = [
    "AU", "BE", "BR", "CA", "CL", "CN", "EC", "FR", "DE", "IN", "IR", "IE", "IT", "JP", "MX", "NL", "NZ", "PK", "PE",
    "PT", "QA", "RU", "SA", "SG", "KR", "ES", "SE", "CH", "TR", "AE", "GB", "US",
];

/// Default countries for the trend report.
pub const REPORT_COUNTRIES: [&str; 10] = ["US", "IN", "GB", "CN", "PK", "IT", "AU", "SE", "JP", "BR"];

pub const DEFAULT_STOPLIST: &str = include_str!("../data/place_stoplist.txt");

pub const DEFAULT_MIN_NAME_LEN: usize = 3;

const GEONAMES_COLUMNS: usize = 19;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CountryCode([u8; 2]);

impl CountryCode {
    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.0).expect("ascii")
    }
}

impl FromStr for CountryCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.as_bytes() {
            [a, b] if a.is_ascii_alphabetic() && b.is_ascii_alphabetic() => {
                Ok(CountryCode([a.to_ascii_uppercase(), b.to_ascii_uppercase()]))
            }
            _ => Err(Error::Config(format!("invalid country code {s:?}"))),
        }
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

/// Parses a comma-separated code list such as `US,GB,IN`.
pub fn parse_country_list(list: &str) -> Result<BTreeSet<CountryCode>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(CountryCode::from_str)
        .collect()
}

pub fn default_allowlist() -> BTreeSet<CountryCode> {
    DEFAULT_COUNTRIES.iter().map(|c| c.parse().unwrap()).collect()
}

pub fn default_report_countries() -> BTreeSet<CountryCode> {
    REPORT_COUNTRIES.iter().map(|c| c.parse().unwrap()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaceEntry {
    pub geoname_id: u64,
    pub name: Term,
    pub country: CountryCode,
    pub feature_class: char,
    pub population: u64,
}

#[derive(Debug, Clone)]
pub struct GazetteerConfig {
    pub allowlist: BTreeSet<CountryCode>,
    pub stoplist: HashSet<Term>,
    pub min_name_len: usize,
    pub strict: bool,
}

impl Default for GazetteerConfig {
    fn default() -> Self {
        GazetteerConfig {
            allowlist: default_allowlist(),
            stoplist: stoplist_from(&Lexicon::parse(DEFAULT_STOPLIST.as_bytes(), "stoplist").unwrap()),
            min_name_len: DEFAULT_MIN_NAME_LEN,
            strict: false,
        }
    }
}

pub fn stoplist_from(lexicon: &Lexicon) -> HashSet<Term> {
    lexicon.terms().iter().cloned().collect()
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct GeonamesStats {
    pub rows: usize,
    pub bad_rows: usize,
    pub dropped_class: usize,
    pub dropped_country: usize,
    pub dropped_names: usize,
    pub entries: usize,
}

/// Streams a GeoNames dump, one row at a time.
pub fn parse_geonames<R: BufRead>(
    reader: R,
    config: &GazetteerConfig,
    source: &Path,
) -> Result<(Vec<PlaceEntry>, GeonamesStats)> {
    let mut stats = GeonamesStats::default();
    let mut entries = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::data(source, line_no, e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        stats.rows += 1;
        let cols: Vec<&str> = line.split('\t').collect();
        let parsed = if cols.len() != GEONAMES_COLUMNS {
            Err(format!("expected {GEONAMES_COLUMNS} columns, found {}", cols.len()))
        } else {
            parse_row(&cols)
        };
        let (geoname_id, class, country, population) = match parsed {
            Ok(row) => row,
            Err(msg) if config.strict => return Err(Error::data(source, line_no, msg)),
            Err(_) => {
                stats.bad_rows += 1;
                continue;
            }
        };
        if class != 'A' && class != 'P' {
            stats.dropped_class += 1;
            continue;
        }
        if !config.allowlist.contains(&country) {
            stats.dropped_country += 1;
            continue;
        }
        let mut seen: HashSet<Term> = HashSet::new();
        let names = std::iter::once(cols[1]).chain(cols[3].split(',').filter(|s| !s.is_empty()));
        for raw in names {
            let name: Term = analyze(raw).into_iter().map(|t| t.surface).collect();
            if !usable_name(&name, config) {
                stats.dropped_names += 1;
                continue;
            }
            if seen.insert(name.clone()) {
                entries.push(PlaceEntry {
                    geoname_id,
                    name,
                    country,
                    feature_class: class,
                    population,
                });
            }
        }
    }
    stats.entries = entries.len();
    Ok((entries, stats))
}

fn parse_row(cols: &[&str]) -> std::result::Result<(u64, char, CountryCode, u64), String> {
    let geoname_id = cols[0].parse::<u64>().map_err(|_| format!("bad geonameid {:?}", cols[0]))?;
    let mut class_chars = cols[6].chars();
    let class = match (class_chars.next(), class_chars.next()) {
        (Some(c), None) => c,
        _ => return Err(format!("bad feature class {:?}", cols[6])),
    };
    let country = CountryCode::from_str(cols[8]).map_err(|_| format!("bad country code {:?}", cols[8]))?;
    let population = match cols[14] {
        "" => 0,
        p => p.parse::<u64>().map_err(|_| format!("bad population {p:?}"))?,
    };
    Ok((geoname_id, class, country, population))
}

fn usable_name(name: &Term, config: &GazetteerConfig) -> bool {
    if name.is_empty() || name.len() > MAX_TERM_TOKENS {
        return false;
    }
    let chars = name.iter().map(|t| t.chars().count()).sum::<usize>() + name.len() - 1;
    chars >= config.min_name_len && !config.stoplist.contains(name)
}

pub fn load_geonames(path: &Path, config: &GazetteerConfig) -> Result<(Vec<PlaceEntry>, GeonamesStats)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_geonames(BufReader::new(file), config, path)
}

#[derive(Debug, Clone)]
pub struct GazetteerIndex {
    matcher: MatcherIndex,
    /// Candidates per matcher term id.
    candidates: Vec<Vec<PlaceEntry>>,
    /// Index into `candidates[term]` of the resolved entry.
    chosen: Vec<usize>,
}

impl GazetteerIndex {
    pub fn build(entries: Vec<PlaceEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyGazetteer);
        }
        let mut order: Vec<Term> = Vec::new();
        let mut groups: FxHashMap<Term, Vec<PlaceEntry>> = FxHashMap::default();
        for entry in entries {
            let group = groups.entry(entry.name.clone()).or_insert_with(|| {
                order.push(entry.name.clone());
                Vec::new()
            });
            if !group.iter().any(|e| e.geoname_id == entry.geoname_id) {
                group.push(entry);
            }
        }
        let lexicon = Lexicon::from_tokenized("gazetteer", order.clone())?;
        let matcher = MatcherIndex::build(&lexicon);
        let mut candidates = Vec::with_capacity(order.len());
        let mut chosen = Vec::with_capacity(order.len());
        for name in &order {
            let group = groups.remove(name).expect("grouped");
            chosen.push(pick_candidate(&group));
            candidates.push(group);
        }
        Ok(GazetteerIndex {
            matcher,
            candidates,
            chosen,
        })
    }

    pub fn matcher(&self) -> &MatcherIndex {
        &self.matcher
    }

    pub fn name_count(&self) -> usize {
        self.candidates.len()
    }

    pub fn entry_count(&self) -> usize {
        self.candidates.iter().map(Vec::len).sum()
    }

    pub fn candidates(&self, name: &[String]) -> Option<&[PlaceEntry]> {
        match self.matcher.find_matches(name).as_slice() {
            [m] if m.token_start == 0 && m.token_end == name.len() => Some(&self.candidates[m.term.0 as usize]),
            _ => None,
        }
    }

    pub fn resolve_location<T: AsRef<str>>(&self, tokens: &[T]) -> GeoTag {
        let evidence: Vec<Evidence> = self
            .matcher
            .find_matches(tokens)
            .into_iter()
            .map(|span| {
                let term = span.term.0 as usize;
                Evidence {
                    span,
                    entry: self.candidates[term][self.chosen[term]].clone(),
                }
            })
            .collect();
        let (country, ambiguous) = attribute_country(&evidence);
        GeoTag {
            country,
            evidence,
            ambiguous,
        }
    }
}

fn pick_candidate(group: &[PlaceEntry]) -> usize {
    let mut best = 0;
    for (i, e) in group.iter().enumerate().skip(1) {
        let b = &group[best];
        if e.population > b.population || (e.population == b.population && e.geoname_id < b.geoname_id) {
            best = i;
        }
    }
    best
}

/// Majority of mentions, then highest-population evidence, otherwise none.
fn attribute_country(evidence: &[Evidence]) -> (Option<CountryCode>, bool) {
    if evidence.is_empty() {
        return (None, false);
    }
    let mut counts: BTreeMap<CountryCode, usize> = BTreeMap::new();
    for ev in evidence {
        *counts.entry(ev.entry.country).or_default() += 1;
    }
    let top = *counts.values().max().expect("non-empty");
    let leaders: Vec<CountryCode> = counts.iter().filter(|(_, &n)| n == top).map(|(&c, _)| c).collect();
    if let [only] = leaders.as_slice() {
        return (Some(*only), false);
    }
    let max_pop = evidence
        .iter()
        .filter(|ev| leaders.contains(&ev.entry.country))
        .map(|ev| ev.entry.population)
        .max()
        .expect("leaders have evidence");
    let holders: BTreeSet<CountryCode> = evidence
        .iter()
        .filter(|ev| leaders.contains(&ev.entry.country) && ev.entry.population == max_pop)
        .map(|ev| ev.entry.country)
        .collect();
    if holders.len() == 1 {
        (holders.into_iter().next(), false)
    } else {
        (None, true)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evidence {
    pub span: MatchSpan,
    pub entry: PlaceEntry,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GeoTag {
    pub country: Option<CountryCode>,
    pub evidence: Vec<Evidence>,
    /// Set when mentions tied on both count and population.
    pub ambiguous: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: u64, name: &str, alts: &str, class: &str, cc: &str, pop: u64) -> String {
        let mut cols = vec![String::new(); 19];
        cols[0] = id.to_string();
        cols[1] = name.into();
        cols[2] = name.into();
        cols[3] = alts.into();
        cols[4] = "0.0".into();
        cols[5] = "0.0".into();
        cols[6] = class.into();
        cols[7] = "PPL".into();
        cols[8] = cc.into();
        cols[14] = pop.to_string();
        cols[17] = "UTC".into();
        cols[18] = "2020-01-01".into();
        cols.join("\t")
    }

    fn config(codes: &str) -> GazetteerConfig {
        GazetteerConfig {
            allowlist: parse_country_list(codes).unwrap(),
            ..GazetteerConfig::default()
        }
    }

    fn load(rows: &[String], cfg: &GazetteerConfig) -> (Vec<PlaceEntry>, GeonamesStats) {
        parse_geonames(rows.join("\n").as_bytes(), cfg, Path::new("test")).unwrap()
    }

    fn toks(text: &str) -> Vec<String> {
        analyze(text).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn country_codes() {
        assert_eq!("us".parse::<CountryCode>().unwrap().as_str(), "US");
        assert!("USA".parse::<CountryCode>().is_err());
        assert_eq!(default_allowlist().len(), 32);
        assert!(default_report_countries().is_subset(&default_allowlist()));
    }

    #[test]
    fn loads_a_populated_place() {
        let (entries, stats) = load(&[row(4951788, "Springfield", "", "P", "US", 116250)], &config("US"));
        assert_eq!(stats.entries, 1);
        let e = &entries[0];
        assert_eq!(e.geoname_id, 4951788);
        assert_eq!(e.name, ["springfield"]);
        assert_eq!(e.country.as_str(), "US");
        assert_eq!(e.feature_class, 'P');
        assert_eq!(e.population, 116250);
    }

    #[test]
    fn filters_country_class_and_names() {
        let rows = [
            row(1, "Paris", "", "P", "FR", 2_000_000),
            row(2, "Thames", "", "H", "GB", 0),
            row(3, "Ely", "Ey,Of,Mobile,ELY", "P", "GB", 20_000),
        ];
        let (entries, stats) = load(&rows, &config("GB,US"));
        assert_eq!(stats.dropped_country, 1);
        assert_eq!(stats.dropped_class, 1);
        // "ey" too short, "of" and "mobile" stoplisted, "ELY" duplicates "Ely".
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].name, ["ely"]);
        assert_eq!(stats.dropped_names, 3);
    }

    #[test]
    fn bad_rows_skip_or_abort() {
        let rows = ["1\tonly\tthree".to_string(), row(2, "Delhi", "", "P", "IN", 10)];
        let (entries, stats) = load(&rows, &config("IN"));
        assert_eq!((entries.len(), stats.bad_rows), (1, 1));
        let strict = GazetteerConfig {
            strict: true,
            ..config("IN")
        };
        let err = parse_geonames(rows.join("\n").as_bytes(), &strict, Path::new("g.txt")).unwrap_err();
        assert!(matches!(err, Error::Data { line: 1, .. }));
    }

    #[test]
    fn empty_gazetteer_is_an_error() {
        assert!(matches!(GazetteerIndex::build(Vec::new()), Err(Error::EmptyGazetteer)));
    }

    fn springfield_index() -> GazetteerIndex {
        let rows = [
            row(4951788, "Springfield", "", "P", "US", 116250),
            row(2637000, "Springfield", "", "P", "GB", 1500),
            row(1273294, "Delhi", "", "P", "IN", 10_927_986),
            row(1275339, "Mumbai", "Bombay", "P", "IN", 12_691_836),
            row(10, "Twinton", "", "P", "AU", 500),
            row(11, "Twinton", "", "P", "NZ", 500),
            row(20, "Alpha", "", "P", "AU", 900),
            row(21, "Beta", "", "P", "NZ", 900),
        ];
        let (entries, _) = load(&rows, &config("US,GB,IN,AU,NZ"));
        GazetteerIndex::build(entries).unwrap()
    }

    #[test]
    fn homonyms_group_under_one_name() {
        let idx = springfield_index();
        assert_eq!(idx.candidates(&["springfield".into()]).unwrap().len(), 2);
        assert_eq!(idx.name_count(), 7);
    }

    #[test]
    fn population_breaks_homonym_ties() {
        let tag = springfield_index().resolve_location(&toks("lockdown in springfield"));
        assert_eq!(tag.country.map(|c| c.to_string()).as_deref(), Some("US"));
        assert!(!tag.ambiguous);
        assert_eq!(tag.evidence.len(), 1);
    }

    #[test]
    fn equal_population_prefers_smaller_id() {
        let tag = springfield_index().resolve_location(&toks("twinton"));
        assert_eq!(tag.evidence[0].entry.geoname_id, 10);
        assert_eq!(tag.country.unwrap().as_str(), "AU");
    }

    #[test]
    fn no_place_names() {
        let tag = springfield_index().resolve_location(&toks("schools stay closed"));
        assert_eq!(tag, GeoTag::default());
    }

    #[test]
    fn majority_of_mentions() {
        let tag = springfield_index().resolve_location(&toks("delhi and mumbai reopen schools"));
        assert_eq!(tag.country.unwrap().as_str(), "IN");
        assert_eq!(tag.evidence.len(), 2);
        let tag = springfield_index().resolve_location(&toks("bombay delhi springfield"));
        assert_eq!(tag.country.unwrap().as_str(), "IN");
    }

    #[test]
    fn count_tie_goes_to_most_populous_evidence() {
        let tag = springfield_index().resolve_location(&toks("springfield or delhi"));
        assert_eq!(tag.country.unwrap().as_str(), "IN");
        assert!(!tag.ambiguous);
    }

    #[test]
    fn full_tie_is_ambiguous() {
        let tag = springfield_index().resolve_location(&toks("alpha meets beta"));
        assert_eq!(tag.country, None);
        assert!(tag.ambiguous);
        assert_eq!(tag.evidence.len(), 2);
    }
}
