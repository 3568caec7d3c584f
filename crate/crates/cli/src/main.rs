use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use covedu::pipeline::{self, PipelineConfig, RawConfig, StageArtifact};
use covedu::{synth, Error, Execution};

#[derive(Parser)]
#[command(name = "covedu", version, about = "Staged tweet-corpus pipeline: filter, geotag, classify, aggregate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Keep records that match both the COVID and education lexicons.
    Filter(Settings),
    /// Attach a country to every filtered record.
    Geotag(Settings),
    /// Label every geotagged record positive or negative.
    Classify(Settings),
    /// Weekly per-country series, case correlations and summary.
    Aggregate(Settings),
    /// All four stages in order.
    Run(Settings),
    /// Validate the configuration and input headers without processing.
    Check(Settings),
    /// Measure filter + geotag throughput on synthetic records.
    Bench {
        #[command(flatten)]
        settings: Settings,
        /// Number of synthetic records.
        #[arg(long, default_value_t = 200_000)]
        records: usize,
    },
}

#[derive(Args, Debug, Default)]
struct Settings {
    /// `key = value` config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    covid_lexicon: Option<String>,
    #[arg(long)]
    edu_lexicon: Option<String>,
    #[arg(long)]
    gazetteer: Option<String>,
    #[arg(long)]
    stoplist: Option<String>,
    #[arg(long, conflicts_with = "test_embedder")]
    embeddings: Option<String>,
    /// Hash-based embedder for tests, e.g. `d=8,seed=7`.
    #[arg(long)]
    test_embedder: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    cases: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
    /// Window start, YYYY-MM-DD.
    #[arg(long)]
    start: Option<String>,
    /// Window end (inclusive), YYYY-MM-DD.
    #[arg(long)]
    end: Option<String>,
    /// Comma-separated country allowlist.
    #[arg(long)]
    countries: Option<String>,
    #[arg(long)]
    report_countries: Option<String>,
    #[arg(long)]
    min_report_records: Option<u64>,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    no_dedup: bool,
    #[arg(long)]
    min_name_len: Option<usize>,
}

impl Settings {
    fn resolve(&self) -> covedu::Result<PipelineConfig> {
        let mut raw = match &self.config {
            Some(path) => RawConfig::from_file(path)?,
            None => RawConfig::new(),
        };
        let strings = [
            ("input", &self.input),
            ("covid_lexicon", &self.covid_lexicon),
            ("edu_lexicon", &self.edu_lexicon),
            ("gazetteer", &self.gazetteer),
            ("stoplist", &self.stoplist),
            ("embeddings", &self.embeddings),
            ("test_embedder", &self.test_embedder),
            ("model", &self.model),
            ("cases", &self.cases),
            ("out_dir", &self.out_dir),
            ("start", &self.start),
            ("end", &self.end),
            ("countries", &self.countries),
            ("report_countries", &self.report_countries),
        ];
        for (key, value) in strings {
            if let Some(v) = value {
                raw.set(key, v.as_str())?;
            }
        }
        // A flag for one embedding source replaces the other from the file.
        if self.embeddings.is_some() {
            raw.set("test_embedder", "")?;
        }
        if self.test_embedder.is_some() {
            raw.set("embeddings", "")?;
        }
        if let Some(n) = self.min_report_records {
            raw.set("min_report_records", n.to_string())?;
        }
        if let Some(n) = self.threads {
            raw.set("threads", n.to_string())?;
        }
        if let Some(n) = self.min_name_len {
            raw.set("min_name_len", n.to_string())?;
        }
        if self.strict {
            raw.set("strict", "true")?;
        }
        if self.no_dedup {
            raw.set("dedup", "false")?;
        }
        raw.build()
    }
}

fn report(artifact: &StageArtifact) {
    eprintln!("{artifact}");
}

fn execute(command: Command) -> covedu::Result<()> {
    match command {
        Command::Filter(s) => report(&pipeline::cmd_filter(&s.resolve()?)?),
        Command::Geotag(s) => report(&pipeline::cmd_geotag(&s.resolve()?)?),
        Command::Classify(s) => report(&pipeline::cmd_classify(&s.resolve()?)?),
        Command::Aggregate(s) => {
            let artifact = pipeline::cmd_aggregate(&s.resolve()?)?;
            report(&artifact);
            for path in &artifact.outputs {
                println!("{}", path.display());
            }
        }
        Command::Run(s) => {
            for artifact in pipeline::cmd_run(&s.resolve()?)? {
                report(&artifact);
            }
        }
        Command::Check(s) => {
            for line in pipeline::cmd_check(&s.resolve()?)? {
                println!("{line}");
            }
        }
        Command::Bench { settings, records } => {
            let config = settings.resolve()?;
            let lex = pipeline::load_lexicons(&config)?;
            let gazetteer = pipeline::load_gazetteer(&config)?;
            let mut runs = vec![("sequential", Execution::Sequential)];
            if cfg!(feature = "parallel") {
                runs.push(("parallel", config.execution()));
            }
            for (name, exec) in runs {
                let exec = if name == "parallel" && exec == Execution::Sequential { Execution::Auto } else { exec };
                let t = synth::measure_throughput(records, &lex.covid, &lex.education, &gazetteer, exec)?;
                println!(
                    "{name}: {} records in {:.3}s = {:.0} records/s (topical {}, located {})",
                    t.records,
                    t.elapsed.as_secs_f64(),
                    t.records_per_sec(),
                    t.counts.topical,
                    t.counts.located
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code() as u8
}
