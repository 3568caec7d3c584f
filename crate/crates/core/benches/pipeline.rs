use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use covedu::geo::{load_geonames, GazetteerConfig, GazetteerIndex};
use covedu::lexicon::{Lexicon, MatcherIndex};
use covedu::sentiment::{classify, embed_for_tests, parse_model};
use covedu::synth::{filter_and_geotag, synthetic_records};
use covedu::trend::{aggregate, Observation, WindowConfig};
use covedu::corpus::analyze;
use covedu::Execution;

fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn executions() -> Vec<(&'static str, Execution)> {
    let mut v = vec![("sequential", Execution::Sequential)];
    if cfg!(feature = "parallel") {
        v.push(("parallel", Execution::Auto));
    }
    v
}

fn filter_geotag(c: &mut Criterion) {
    let covid = MatcherIndex::build(&Lexicon::load(&fixture("covid_terms.txt"), "covid").unwrap());
    let edu = MatcherIndex::build(&Lexicon::load(&fixture("education_terms.txt"), "education").unwrap());
    let (entries, _) = load_geonames(&fixture("gazetteer.tsv"), &GazetteerConfig::default()).unwrap();
    let gaz = GazetteerIndex::build(entries).unwrap();
    let records = synthetic_records(20_000, 9, &["london", "new york", "mumbai", "karachi", "springfield"]);
    let mut group = c.benchmark_group("filter_geotag");
    group.throughput(Throughput::Elements(records.len() as u64));
    group.sample_size(20);
    for (name, exec) in executions() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| filter_and_geotag(&records, &covid, &edu, &gaz, exec).unwrap())
        });
    }
    group.finish();
}

fn classify_records(c: &mut Criterion) {
    let model = parse_model(std::fs::read(fixture("model_d8.txt")).unwrap().as_slice(), &fixture("model_d8.txt"))
        .unwrap();
    let records = synthetic_records(5_000, 3, &[]);
    let mut group = c.benchmark_group("classify");
    group.throughput(Throughput::Elements(records.len() as u64));
    group.sample_size(20);
    for (name, exec) in executions() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                exec.map(&records, |r| classify(&embed_for_tests(&analyze(&r.text), 8, 7).unwrap(), &model).unwrap())
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn aggregate_observations(c: &mut Criterion) {
    let records = synthetic_records(200_000, 5, &[]);
    let countries = ["US", "GB", "IN", "PK", "AU"];
    let obs: Vec<Observation> = records
        .iter()
        .enumerate()
        .map(|(i, r)| Observation {
            created_at: r.created_at,
            country: (i % 6 != 0).then(|| countries[i % 5].parse().unwrap()),
            label: covedu::sentiment::SentimentLabel::from_value((i % 2) as u8).unwrap(),
        })
        .collect();
    let window = WindowConfig::default();
    let mut group = c.benchmark_group("aggregate");
    group.throughput(Throughput::Elements(obs.len() as u64));
    for (name, exec) in executions() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| aggregate(&obs, &window, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, filter_geotag, classify_records, aggregate_observations);
criterion_main!(benches);
