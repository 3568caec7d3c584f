//! Weekly per-country tweet counts, aligned case counts, and Pearson
//! correlation between the two.
//!
//! Weeks are 7-day buckets anchored at the window start; the last bucket may
//! be shorter and is marked partial. Tweet and case series share the same
//! [`WindowConfig::week_index`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, NaiveDate, Utc};

use crate::error::{Error, Result};
use crate::geo::CountryCode;
use crate::par::Execution;
use crate::sentiment::SentimentLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowConfig {
    start: NaiveDate,
    end: NaiveDate,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            start: NaiveDate::from_ymd_opt(2020, 3, 23).unwrap(),
            end: NaiveDate::from_ymd_opt(2020, 6, 23).unwrap(),
        }
    }
}

impl WindowConfig {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if start > end {
            return Err(Error::Config(format!("window start {start} is after end {end}")));
        }
        Ok(WindowConfig { start, end })
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.end
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    pub fn week_index(&self, date: NaiveDate) -> Result<usize> {
        if !self.contains(date) {
            return Err(Error::OutsideWindow {
                date,
                start: self.start,
                end: self.end,
            });
        }
        Ok(((date - self.start).num_days() / 7) as usize)
    }

    pub fn days(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn n_weeks(&self) -> usize {
        self.days().div_ceil(7)
    }

    pub fn week_start(&self, week: usize) -> NaiveDate {
        self.start + Duration::days(7 * week as i64)
    }

    /// True when the bucket covers fewer than seven days of the window.
    pub fn is_partial(&self, week: usize) -> bool {
        week + 1 == self.n_weeks() && self.days() % 7 != 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WeekCounts {
    pub total: u64,
    pub positive: u64,
    pub negative: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountryWeekSeries {
    pub country: CountryCode,
    /// Indexed by week; always `n_weeks` long.
    pub weeks: Vec<WeekCounts>,
}

impl CountryWeekSeries {
    pub fn total(&self) -> u64 {
        self.weeks.iter().map(|w| w.total).sum()
    }
}

/// One classified, geotagged record as seen by the aggregator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub created_at: DateTime<Utc>,
    pub country: Option<CountryCode>,
    pub label: SentimentLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Aggregation {
    /// Sorted by country code.
    pub series: Vec<CountryWeekSeries>,
    pub records: u64,
    pub unlocated: u64,
    pub out_of_window: u64,
}

impl Aggregation {
    pub fn in_window(&self) -> u64 {
        self.records - self.out_of_window
    }

    /// Country totals plus unlocated equal in-window records, and every
    /// week's positives plus negatives equal its total.
    pub fn check_conservation(&self) -> Result<()> {
        for s in &self.series {
            for (i, w) in s.weeks.iter().enumerate() {
                if w.positive + w.negative != w.total {
                    return Err(Error::Conservation(format!(
                        "{} week {i}: {} + {} != {}",
                        s.country, w.positive, w.negative, w.total
                    )));
                }
            }
        }
        let located: u64 = self.series.iter().map(CountryWeekSeries::total).sum();
        if located + self.unlocated != self.in_window() {
            return Err(Error::Conservation(format!(
                "located {located} + unlocated {} != in-window {}",
                self.unlocated,
                self.in_window()
            )));
        }
        Ok(())
    }
}

#[derive(Default)]
struct Partial {
    counts: BTreeMap<(CountryCode, usize), WeekCounts>,
    records: u64,
    unlocated: u64,
    out_of_window: u64,
}

impl Partial {
    fn merge(mut self, other: Partial) -> Partial {
        for (key, c) in other.counts {
            let slot = self.counts.entry(key).or_default();
            slot.total += c.total;
            slot.positive += c.positive;
            slot.negative += c.negative;
        }
        self.records += other.records;
        self.unlocated += other.unlocated;
        self.out_of_window += other.out_of_window;
        self
    }
}

/// Buckets observations into per-country weekly counts. Countries without
/// any in-window located record are omitted.
pub fn aggregate(observations: &[Observation], window: &WindowConfig, exec: Execution) -> Result<Aggregation> {
    let partial = exec.fold_merge(
        observations,
        Partial::default,
        |mut acc, obs| {
            acc.records += 1;
            let Ok(week) = window.week_index(obs.created_at.date_naive()) else {
                acc.out_of_window += 1;
                return acc;
            };
            let Some(country) = obs.country else {
                acc.unlocated += 1;
                return acc;
            };
            let slot = acc.counts.entry((country, week)).or_default();
            slot.total += 1;
            match obs.label {
                SentimentLabel::Positive => slot.positive += 1,
                SentimentLabel::Negative => slot.negative += 1,
            }
            acc
        },
        Partial::merge,
    )?;

    let n_weeks = window.n_weeks();
    let mut series: Vec<CountryWeekSeries> = Vec::new();
    for ((country, week), counts) in partial.counts {
        if series.last().map(|s| s.country) != Some(country) {
            series.push(CountryWeekSeries {
                country,
                weeks: vec![WeekCounts::default(); n_weeks],
            });
        }
        series.last_mut().expect("pushed").weeks[week] = counts;
    }
    let agg = Aggregation {
        series,
        records: partial.records,
        unlocated: partial.unlocated,
        out_of_window: partial.out_of_window,
    };
    agg.check_conservation()?;
    Ok(agg)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseSeries {
    pub country: CountryCode,
    /// Consecutive days, first to last observed date; gaps hold 0.
    pub daily: Vec<(NaiveDate, i64)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CaseStats {
    pub rows: usize,
    pub malformed: usize,
    pub negative: usize,
    pub outside_allowlist: usize,
    pub duplicates: usize,
    pub gap_days: usize,
}

/// Reads `date,country,confirmed` rows of daily new cases.
pub fn parse_case_series<R: BufRead>(
    reader: R,
    allowlist: &BTreeSet<CountryCode>,
    strict: bool,
    path: &Path,
) -> Result<(Vec<CaseSeries>, CaseStats)> {
    let mut stats = CaseStats::default();
    let mut lines = reader.lines().enumerate();
    match lines.next() {
        Some((_, Ok(header))) if header.trim().eq_ignore_ascii_case("date,country,confirmed") => {}
        Some((_, Ok(header))) => {
            return Err(Error::data(path, 1, format!("expected header `date,country,confirmed`, found {header:?}")))
        }
        Some((_, Err(e))) => return Err(Error::data(path, 1, e.to_string())),
        None => return Err(Error::data(path, 1, "missing header")),
    }
    let mut by_country: BTreeMap<CountryCode, BTreeMap<NaiveDate, i64>> = BTreeMap::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::data(path, line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        stats.rows += 1;
        let row = match parse_case_row(&line) {
            Ok(row) => row,
            Err(msg) if strict => return Err(Error::data(path, line_no, msg)),
            Err(_) => {
                stats.malformed += 1;
                continue;
            }
        };
        let (date, country, count) = row;
        if !allowlist.contains(&country) {
            stats.outside_allowlist += 1;
            continue;
        }
        if count < 0 && !strict {
            stats.negative += 1;
            continue;
        }
        let days = by_country.entry(country).or_default();
        if days.insert(date, count).is_some() {
            if strict {
                return Err(Error::data(path, line_no, format!("duplicate row for {country} on {date}")));
            }
            stats.duplicates += 1;
        }
    }
    let mut out = Vec::with_capacity(by_country.len());
    for (country, days) in by_country {
        let (&first, _) = days.first_key_value().expect("non-empty");
        let (&last, _) = days.last_key_value().expect("non-empty");
        let mut daily = Vec::with_capacity((last - first).num_days() as usize + 1);
        let mut date = first;
        while date <= last {
            let count = match days.get(&date) {
                Some(&c) => c,
                None => {
                    stats.gap_days += 1;
                    0
                }
            };
            daily.push((date, count));
            date += Duration::days(1);
        }
        out.push(CaseSeries { country, daily });
    }
    Ok((out, stats))
}

fn parse_case_row(line: &str) -> std::result::Result<(NaiveDate, CountryCode, i64), String> {
    let cols: Vec<&str> = line.split(',').map(str::trim).collect();
    let [date, country, count] = cols.as_slice() else {
        return Err(format!("expected 3 columns, found {}", cols.len()));
    };
    let date = NaiveDate::parse_from_str(date, "%Y-%m-%d").map_err(|_| format!("bad date {date:?}"))?;
    let country = country.parse::<CountryCode>().map_err(|_| format!("bad country {country:?}"))?;
    let count = count.parse::<i64>().map_err(|_| format!("bad count {count:?}"))?;
    Ok((date, country, count))
}

pub fn load_case_series(
    path: &Path,
    allowlist: &BTreeSet<CountryCode>,
    strict: bool,
) -> Result<(Vec<CaseSeries>, CaseStats)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_case_series(BufReader::new(file), allowlist, strict, path)
}

/// Sums daily cases into the window's week grid; days outside the window
/// are ignored.
pub fn weekly_cases(series: &CaseSeries, window: &WindowConfig) -> Vec<i64> {
    let mut weeks = vec![0; window.n_weeks()];
    for &(date, count) in &series.daily {
        if let Ok(w) = window.week_index(date) {
            weeks[w] += count;
        }
    }
    weeks
}

/// Sample Pearson correlation; `None` when either series is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::TooShort(x.len()));
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub country: CountryCode,
    pub n_weeks: usize,
    pub r_total: Option<f64>,
    pub r_positive: Option<f64>,
    pub r_negative: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountryReport {
    pub series: CountryWeekSeries,
    pub weekly_cases: Vec<i64>,
    pub correlation: CorrelationRow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub window: WindowConfig,
    pub countries: Vec<CountryReport>,
    pub aggregation_records: u64,
    pub unlocated: u64,
    pub out_of_window: u64,
    pub countries_with_records: usize,
    pub case_stats: CaseStats,
}

/// Selects report countries and correlates each with its weekly cases.
/// Countries in `report_countries` with fewer than `min_records` located
/// records are left out.
pub fn build_report(
    agg: &Aggregation,
    cases: &[CaseSeries],
    case_stats: CaseStats,
    window: &WindowConfig,
    report_countries: &BTreeSet<CountryCode>,
    min_records: u64,
) -> Result<Report> {
    let mut countries = Vec::new();
    for series in &agg.series {
        if !report_countries.contains(&series.country) || series.total() < min_records.max(1) {
            continue;
        }
        let weekly = cases
            .iter()
            .find(|c| c.country == series.country)
            .map(|c| weekly_cases(c, window))
            .unwrap_or_else(|| vec![0; window.n_weeks()]);
        let y: Vec<f64> = weekly.iter().map(|&v| v as f64).collect();
        let col = |f: fn(&WeekCounts) -> u64| -> Vec<f64> { series.weeks.iter().map(|w| f(w) as f64).collect() };
        let correlate = |x: Vec<f64>| -> Result<Option<f64>> {
            if x.len() < 2 {
                Ok(None)
            } else {
                pearson(&x, &y)
            }
        };
        let correlation = CorrelationRow {
            country: series.country,
            n_weeks: series.weeks.len(),
            r_total: correlate(col(|w| w.total))?,
            r_positive: correlate(col(|w| w.positive))?,
            r_negative: correlate(col(|w| w.negative))?,
        };
        countries.push(CountryReport {
            series: series.clone(),
            weekly_cases: weekly,
            correlation,
        });
    }
    Ok(Report {
        window: *window,
        countries,
        aggregation_records: agg.in_window(),
        unlocated: agg.unlocated,
        out_of_window: agg.out_of_window,
        countries_with_records: agg.series.len(),
        case_stats,
    })
}

fn fmt_r(r: Option<f64>) -> String {
    r.map(|v| format!("{v:.6}")).unwrap_or_default()
}

pub fn render_country_csv(report: &Report, country: &CountryReport) -> String {
    let mut out = String::from("week_index,week_start,partial,total,positive,negative,weekly_cases\n");
    for (i, (w, cases)) in country.series.weeks.iter().zip(&country.weekly_cases).enumerate() {
        writeln!(
            out,
            "{i},{},{},{},{},{},{cases}",
            report.window.week_start(i).format("%Y-%m-%d"),
            u8::from(report.window.is_partial(i)),
            w.total,
            w.positive,
            w.negative,
        )
        .unwrap();
    }
    out
}

pub fn render_correlations(report: &Report) -> String {
    let mut out = String::from("country,n_weeks,r_total,r_positive,r_negative\n");
    for c in &report.countries {
        let r = &c.correlation;
        writeln!(
            out,
            "{},{},{},{},{}",
            r.country,
            r.n_weeks,
            fmt_r(r.r_total),
            fmt_r(r.r_positive),
            fmt_r(r.r_negative)
        )
        .unwrap();
    }
    out
}

pub fn render_summary(report: &Report) -> String {
    let located: u64 = report.countries.iter().map(|c| c.series.total()).sum();
    let codes: Vec<String> = report.countries.iter().map(|c| c.series.country.to_string()).collect();
    let s = &report.case_stats;
    let mut out = String::new();
    writeln!(out, "window: {}..{}", report.window.start(), report.window.end()).unwrap();
    writeln!(out, "weeks: {}", report.window.n_weeks()).unwrap();
    writeln!(out, "records_in_window: {}", report.aggregation_records).unwrap();
    writeln!(out, "records_out_of_window: {}", report.out_of_window).unwrap();
    writeln!(out, "located: {}", report.aggregation_records - report.unlocated).unwrap();
    writeln!(out, "unlocated: {}", report.unlocated).unwrap();
    writeln!(out, "countries_with_records: {}", report.countries_with_records).unwrap();
    writeln!(out, "reported_countries: {}", codes.join(",")).unwrap();
    writeln!(out, "reported_records: {located}").unwrap();
    writeln!(out, "case_rows: {}", s.rows).unwrap();
    writeln!(out, "case_rows_malformed: {}", s.malformed).unwrap();
    writeln!(out, "case_rows_negative: {}", s.negative).unwrap();
    writeln!(out, "case_rows_outside_allowlist: {}", s.outside_allowlist).unwrap();
    writeln!(out, "case_rows_duplicate: {}", s.duplicates).unwrap();
    writeln!(out, "case_gap_days: {}", s.gap_days).unwrap();
    if report.aggregation_records == report.unlocated {
        writeln!(out, "warning: no located records").unwrap();
    }
    out
}

/// Writes `country_<CC>.csv` per reported country, `correlations.csv` and
/// `summary.txt`. Returns the written paths in write order.
pub fn emit_report(report: &Report, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    let mut write = |name: String, body: String| -> Result<()> {
        let path = out_dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    for country in &report.countries {
        write(format!("country_{}.csv", country.series.country), render_country_csv(report, country))?;
    }
    write("correlations.csv".into(), render_correlations(report))?;
    write("summary.txt".into(), render_summary(report))?;
    Ok(written)
}
