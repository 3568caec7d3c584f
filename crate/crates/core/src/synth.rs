//! Deterministic synthetic corpora for benchmarks and throughput checks.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

use crate::corpus::{analyze, TweetRecord};
use crate::geo::GazetteerIndex;
use crate::lexicon::{is_topical, MatcherIndex, TermId};
use crate::par::Execution;
use crate::error::Result;

pub const TEXT_CHARS: usize = 280;

const FILLER: &[&str] = &[
    "today", "really", "think", "people", "going", "back", "next", "week", "hard", "good", "news", "still",
    "everyone", "home", "time", "make", "sure", "stay", "safe", "again", "long", "day", "update", "plans",
];
const COVID: &[&str] = &["covid", "coronavirus", "pandemic", "corona", "covid-19", "sarscov2"];
const EDUCATION: &[&str] = &[
    "school", "students", "teachers", "online learning", "exams", "university", "classes", "homeschooling",
    "distance learning", "campus",
];

/// `n` records of exactly [`TEXT_CHARS`] ASCII characters, spread over
/// the default window. About half mention both topics and most of those
/// name one of `places`.
pub fn synthetic_records(n: usize, seed: u64, places: &[&str]) -> Vec<TweetRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: DateTime<Utc> = Utc.with_ymd_and_hms(2020, 3, 23, 0, 0, 0).unwrap();
    let span_secs = 93 * 86_400;
    (0..n)
        .map(|i| {
            let mut words: Vec<&str> = Vec::new();
            if rng.random_bool(0.5) {
                words.push(COVID[rng.random_range(0..COVID.len())]);
                words.push(EDUCATION[rng.random_range(0..EDUCATION.len())]);
                if !places.is_empty() && rng.random_bool(0.8) {
                    words.push("in");
                    words.push(places[rng.random_range(0..places.len())]);
                }
            }
            let mut text = String::with_capacity(TEXT_CHARS);
            for w in &words {
                text.push_str(w);
                text.push(' ');
            }
            while text.len() < TEXT_CHARS {
                text.push_str(FILLER[rng.random_range(0..FILLER.len())]);
                text.push(' ');
            }
            text.truncate(TEXT_CHARS);
            TweetRecord {
                id: format!("s{i:08}"),
                created_at: start + Duration::seconds(rng.random_range(0..span_secs)),
                text,
                lang: Some("en".into()),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FilterGeotagCounts {
    pub topical: usize,
    pub located: usize,
}

/// The per-record hot path of the filter and geotag stages without I/O.
pub fn filter_and_geotag(
    records: &[TweetRecord],
    covid: &MatcherIndex,
    education: &MatcherIndex,
    gazetteer: &GazetteerIndex,
    exec: Execution,
) -> Result<FilterGeotagCounts> {
    let per_record = exec.map(records, |r| {
        let tokens = analyze(&r.text);
        if !is_topical(&tokens, covid, education).is_topical() {
            return (false, false);
        }
        (true, gazetteer.resolve_location(&tokens).country.is_some())
    })?;
    Ok(per_record.into_iter().fold(FilterGeotagCounts::default(), |mut acc, (t, l)| {
        acc.topical += t as usize;
        acc.located += l as usize;
        acc
    }))
}

#[derive(Debug, Clone, Copy)]
pub struct Throughput {
    pub records: usize,
    pub counts: FilterGeotagCounts,
    pub elapsed: std::time::Duration,
}

impl Throughput {
    pub fn records_per_sec(&self) -> f64 {
        self.records as f64 / self.elapsed.as_secs_f64().max(1e-9)
    }
}

/// Times [`filter_and_geotag`] over `n` synthetic records that mention
/// names drawn from the gazetteer itself.
pub fn measure_throughput(
    n: usize,
    covid: &MatcherIndex,
    education: &MatcherIndex,
    gazetteer: &GazetteerIndex,
    exec: Execution,
) -> Result<Throughput> {
    let names: Vec<String> = (0..gazetteer.name_count())
        .step_by((gazetteer.name_count() / 200).max(1))
        .map(|i| gazetteer.matcher().term_text(TermId(i as u32)))
        .collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let records = synthetic_records(n, 42, &refs);
    let started = Instant::now();
    let counts = filter_and_geotag(&records, covid, education, gazetteer, exec)?;
    Ok(Throughput {
        records: n,
        counts,
        elapsed: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::Lexicon;

    #[test]
    fn records_are_deterministic_and_fixed_length() {
        let a = synthetic_records(50, 3, &["boston"]);
        let b = synthetic_records(50, 3, &["boston"]);
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.text.chars().count() == TEXT_CHARS));
        assert_ne!(a, synthetic_records(50, 4, &["boston"]));
    }

    #[test]
    fn sequential_and_parallel_counts_agree() {
        let recs = synthetic_records(500, 1, &[]);
        let covid = MatcherIndex::build(&Lexicon::covid_default());
        let edu = MatcherIndex::build(&Lexicon::education_default());
        let entries = vec![crate::geo::PlaceEntry {
            geoname_id: 1,
            name: vec!["boston".into()],
            country: "US".parse().unwrap(),
            feature_class: 'P',
            population: 600_000,
        }];
        let gaz = GazetteerIndex::build(entries).unwrap();
        let seq = filter_and_geotag(&recs, &covid, &edu, &gaz, Execution::Sequential).unwrap();
        let par = filter_and_geotag(&recs, &covid, &edu, &gaz, Execution::Parallel { threads: 4 }).unwrap();
        assert_eq!(seq, par);
        assert!(seq.topical > 150);
    }
}
