//! Loading, validating and synchronising the two input series.

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("column `{0}` missing from header")]
    ColumnMissing(String),
    #[error("timestamps not strictly increasing at data row {row}")]
    NonMonotoneTimestamps { row: usize },
    #[error("series is empty")]
    EmptySeries,
    #[error("series has {len} observation(s), at least 2 are required")]
    SeriesTooShort { len: usize },
    #[error("data row {row}: {reason}")]
    BadRow { row: usize, reason: String },
    #[error("no common observations ({len} aligned samples, at least 2 required)")]
    EmptyIntersection { len: usize },
    #[error("series `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("grid must be strictly increasing")]
    NonMonotoneGrid,
    #[error("could not parse timestamp `{0}`")]
    BadTimestamp(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How timestamps are written in a file. Calendar timestamps are stored as
/// seconds since the Unix epoch (naive, no time zone).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeFormat {
    /// Plain integer indices.
    Index,
    /// A chrono pattern; `date_only` patterns carry no time of day.
    Calendar { pattern: String, date_only: bool },
}

const AUTO_PATTERNS: &[(&str, bool)] = &[
    ("%Y-%m-%dT%H:%M:%S%.f", false),
    ("%Y-%m-%d %H:%M:%S%.f", false),
    ("%Y-%m-%dT%H:%M", false),
    ("%Y-%m-%d %H:%M", false),
    ("%Y-%m-%d", true),
    ("%Y/%m/%d %H:%M:%S", false),
    ("%Y/%m/%d %H:%M", false),
    ("%Y/%m/%d", true),
];

impl TimeFormat {
    /// Parse one timestamp under this format.
    pub fn parse(&self, s: &str) -> Result<i64, IngestError> {
        let s = s.trim();
        let bad = || IngestError::BadTimestamp(s.to_string());
        match self {
            TimeFormat::Index => s.parse::<i64>().map_err(|_| bad()),
            TimeFormat::Calendar { pattern, date_only } => {
                if *date_only {
                    let d = NaiveDate::parse_from_str(s, pattern).map_err(|_| bad())?;
                    Ok(d.and_hms_opt(0, 0, 0).ok_or_else(bad)?.and_utc().timestamp())
                } else {
                    NaiveDateTime::parse_from_str(s, pattern)
                        .map(|dt| dt.and_utc().timestamp())
                        .map_err(|_| bad())
                }
            }
        }
    }

    /// Write a timestamp back in this format.
    pub fn format(&self, ts: i64) -> String {
        match self {
            TimeFormat::Index => ts.to_string(),
            TimeFormat::Calendar { pattern, .. } => match DateTime::from_timestamp(ts, 0) {
                Some(dt) => dt.naive_utc().format(pattern).to_string(),
                None => ts.to_string(),
            },
        }
    }

    /// Pick a format from a sample value: integers first, then common ISO-8601 layouts.
    pub fn detect(sample: &str) -> Option<TimeFormat> {
        let sample = sample.trim();
        if sample.parse::<i64>().is_ok() {
            return Some(TimeFormat::Index);
        }
        AUTO_PATTERNS.iter().find_map(|&(pattern, date_only)| {
            let f = TimeFormat::Calendar {
                pattern: pattern.to_string(),
                date_only,
            };
            f.parse(sample).is_ok().then_some(f)
        })
    }

    /// Parse a user-supplied format hint: `auto`, `index`, or a chrono pattern.
    pub fn from_hint(hint: &str) -> TimeFormatHint {
        match hint {
            "auto" | "" => TimeFormatHint::Auto,
            "index" => TimeFormatHint::Fixed(TimeFormat::Index),
            p => {
                let date_only = !["%H", "%M", "%S", "%T", "%R"].iter().any(|t| p.contains(t));
                TimeFormatHint::Fixed(TimeFormat::Calendar {
                    pattern: p.to_string(),
                    date_only,
                })
            }
        }
    }

    /// Seconds per day in calendar formats.
    pub const DAY: i64 = 86_400;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TimeFormatHint {
    Auto,
    Fixed(TimeFormat),
}

/// What to read from a CSV file.
#[derive(Debug, Clone)]
pub struct ColumnSpec {
    pub time_col: String,
    pub value_col: String,
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub time_format: TimeFormatHint,
    /// Skip rows with unparseable or non-finite values instead of failing.
    pub skip_bad_rows: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            time_format: TimeFormatHint::Auto,
            skip_bad_rows: false,
        }
    }
}

/// A validated single series.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub label: String,
    pub timestamps: Vec<i64>,
    pub values: Vec<f64>,
    pub format: TimeFormat,
}

impl RawSeries {
    /// Build a series, checking the strict-increase, finiteness and length invariants.
    pub fn new(
        label: impl Into<String>,
        timestamps: Vec<i64>,
        values: Vec<f64>,
        format: TimeFormat,
    ) -> Result<Self, IngestError> {
        assert_eq!(timestamps.len(), values.len(), "timestamps and values differ in length");
        if timestamps.is_empty() {
            return Err(IngestError::EmptySeries);
        }
        if let Some(k) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return Err(IngestError::NonMonotoneTimestamps { row: k + 2 });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(IngestError::BadRow {
                row: k + 1,
                reason: "non-finite value".into(),
            });
        }
        if timestamps.len() < 2 {
            return Err(IngestError::SeriesTooShort { len: timestamps.len() });
        }
        Ok(RawSeries {
            label: label.into(),
            timestamps,
            values,
            format,
        })
    }

    /// Integer-indexed series `1..=values.len()`.
    pub fn indexed(label: impl Into<String>, values: Vec<f64>) -> Result<Self, IngestError> {
        let ts = (1..=values.len() as i64).collect();
        RawSeries::new(label, ts, values, TimeFormat::Index)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Last observation at or before `instant`.
    pub fn last_at_or_before(&self, instant: i64) -> Option<f64> {
        let k = self.timestamps.partition_point(|&t| t <= instant);
        (k > 0).then(|| self.values[k - 1])
    }
}

/// A parsed series plus the number of rows dropped under `skip_bad_rows`.
#[derive(Debug, Clone)]
pub struct ParsedSeries {
    pub series: RawSeries,
    pub skipped_rows: usize,
}

/// Read one series from a CSV file with a header row.
pub fn parse_csv(
    path: &Path,
    columns: &ColumnSpec,
    options: &ParseOptions,
) -> Result<ParsedSeries, IngestError> {
    if !path.exists() {
        return Err(IngestError::FileNotFound(path.to_path_buf()));
    }
    let file = File::open(path)?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_reader(file, &label, columns, options)
}

/// Same as [`parse_csv`] over any reader.
pub fn parse_reader<R: std::io::Read>(
    reader: R,
    label: &str,
    columns: &ColumnSpec,
    options: &ParseOptions,
) -> Result<ParsedSeries, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::ColumnMissing(name.to_string()))
    };
    let tcol = find(&columns.time_col)?;
    let vcol = find(&columns.value_col)?;

    let mut format = match &options.time_format {
        TimeFormatHint::Fixed(f) => Some(f.clone()),
        TimeFormatHint::Auto => None,
    };
    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    let mut skipped = 0usize;

    for (k, record) in rdr.records().enumerate() {
        let row = k + 1;
        let record = record?;
        let raw_t = record.get(tcol).unwrap_or("");
        let raw_v = record.get(vcol).unwrap_or("");
        if format.is_none() {
            format = TimeFormat::detect(raw_t);
        }
        let parsed_t = format
            .as_ref()
            .ok_or_else(|| IngestError::BadTimestamp(raw_t.to_string()))
            .and_then(|f| f.parse(raw_t));
        let parsed_v = raw_v
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("unparseable or non-finite value `{raw_v}`"));
        match (parsed_t, parsed_v) {
            (Ok(t), Ok(v)) => {
                if let Some(&prev) = timestamps.last() {
                    if t <= prev {
                        return Err(IngestError::NonMonotoneTimestamps { row });
                    }
                }
                timestamps.push(t);
                values.push(v);
            }
            (Err(e), _) if !options.skip_bad_rows => {
                return Err(IngestError::BadRow {
                    row,
                    reason: e.to_string(),
                })
            }
            (_, Err(reason)) if !options.skip_bad_rows => {
                return Err(IngestError::BadRow { row, reason })
            }
            _ => skipped += 1,
        }
    }
    let format = format.unwrap_or(TimeFormat::Index);
    let series = RawSeries::new(label, timestamps, values, format)?;
    Ok(ParsedSeries {
        series,
        skipped_rows: skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    Raw,
    Standardized,
}

/// Two equal-length series on a shared, strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub grid: Vec<i64>,
    pub format: TimeFormat,
    pub x_label: String,
    pub y_label: String,
    pub normalization: Normalization,
}

impl AlignedPair {
    /// Build from two value vectors on the index grid `1..=n`.
    pub fn from_values(x: Vec<f64>, y: Vec<f64>) -> Result<Self, IngestError> {
        AlignedPair::new(
            x.clone(),
            y,
            (1..=x.len() as i64).collect(),
            TimeFormat::Index,
        )
    }

    pub fn new(
        x: Vec<f64>,
        y: Vec<f64>,
        grid: Vec<i64>,
        format: TimeFormat,
    ) -> Result<Self, IngestError> {
        assert!(
            x.len() == y.len() && y.len() == grid.len(),
            "aligned vectors differ in length"
        );
        if grid.len() < 2 {
            return Err(IngestError::EmptyIntersection { len: grid.len() });
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(IngestError::NonMonotoneGrid);
        }
        if let Some(k) = x.iter().chain(&y).position(|v| !v.is_finite()) {
            return Err(IngestError::BadRow {
                row: k % x.len() + 1,
                reason: "non-finite value".into(),
            });
        }
        Ok(AlignedPair {
            x,
            y,
            grid,
            format,
            x_label: "x".into(),
            y_label: "y".into(),
            normalization: Normalization::Raw,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// The same pair with the roles of `X` and `Y` exchanged.
    pub fn swapped(&self) -> AlignedPair {
        AlignedPair {
            x: self.y.clone(),
            y: self.x.clone(),
            x_label: self.y_label.clone(),
            y_label: self.x_label.clone(),
            ..self.clone()
        }
    }

    /// Split back into two raw series (without revalidation).
    pub fn to_series(&self) -> (RawSeries, RawSeries) {
        let mk = |label: &str, values: &[f64]| RawSeries {
            label: label.to_string(),
            timestamps: self.grid.clone(),
            values: values.to_vec(),
            format: self.format.clone(),
        };
        (mk(&self.x_label, &self.x), mk(&self.y_label, &self.y))
    }

    /// Keep grid instants inside `[from, to]` (either bound optional).
    pub fn filter_range(&self, from: Option<i64>, to: Option<i64>) -> Result<AlignedPair, IngestError> {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&k| {
                let t = self.grid[k];
                from.map_or(true, |f| t >= f) && to.map_or(true, |e| t <= e)
            })
            .collect();
        if keep.len() < 2 {
            return Err(IngestError::EmptyIntersection { len: keep.len() });
        }
        Ok(AlignedPair {
            x: keep.iter().map(|&k| self.x[k]).collect(),
            y: keep.iter().map(|&k| self.y[k]).collect(),
            grid: keep.iter().map(|&k| self.grid[k]).collect(),
            ..self.clone()
        })
    }
}

/// How two series are brought onto one grid.
#[derive(Debug, Clone, PartialEq)]
pub enum SyncPolicy {
    /// Keep the timestamps present in both series.
    Intersect,
    /// For each grid instant take the last observation at or before it.
    SampleAtGrid(Vec<i64>),
}

/// Align two series onto a common grid.
pub fn synchronize(a: &RawSeries, b: &RawSeries, policy: &SyncPolicy) -> Result<AlignedPair, IngestError> {
    if a.is_empty() || b.is_empty() {
        return Err(IngestError::EmptySeries);
    }
    let (mut x, mut y, mut grid) = (Vec::new(), Vec::new(), Vec::new());
    match policy {
        SyncPolicy::Intersect => {
            let (mut p, mut q) = (0, 0);
            while p < a.len() && q < b.len() {
                match a.timestamps[p].cmp(&b.timestamps[q]) {
                    std::cmp::Ordering::Less => p += 1,
                    std::cmp::Ordering::Greater => q += 1,
                    std::cmp::Ordering::Equal => {
                        grid.push(a.timestamps[p]);
                        x.push(a.values[p]);
                        y.push(b.values[q]);
                        p += 1;
                        q += 1;
                    }
                }
            }
        }
        SyncPolicy::SampleAtGrid(instants) => {
            if instants.windows(2).any(|w| w[1] <= w[0]) {
                return Err(IngestError::NonMonotoneGrid);
            }
            for &g in instants {
                if let (Some(va), Some(vb)) = (a.last_at_or_before(g), b.last_at_or_before(g)) {
                    grid.push(g);
                    x.push(va);
                    y.push(vb);
                }
            }
        }
    }
    if grid.len() < 2 {
        return Err(IngestError::EmptyIntersection { len: grid.len() });
    }
    Ok(AlignedPair {
        x,
        y,
        grid,
        format: a.format.clone(),
        x_label: a.label.clone(),
        y_label: b.label.clone(),
        normalization: Normalization::Raw,
    })
}

/// One instant per calendar day at `seconds_of_day`, covering every day from
/// the first to the last timestamp of `span`.
pub fn daily_grid(span: &[i64], seconds_of_day: i64) -> Vec<i64> {
    let (Some(&first), Some(&last)) = (span.first(), span.last()) else {
        return Vec::new();
    };
    let day0 = first.div_euclid(TimeFormat::DAY);
    let day1 = last.div_euclid(TimeFormat::DAY);
    (day0..=day1).map(|d| d * TimeFormat::DAY + seconds_of_day).collect()
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let ss: f64 = v.iter().map(|a| (a - mean) * (a - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn standardize_vec(v: &[f64], label: &str) -> Result<Vec<f64>, IngestError> {
    let (mean, sd) = mean_sd(v);
    if !(sd > 0.0) || sd <= f64::EPSILON * mean.abs() {
        return Err(IngestError::ZeroVariance(label.to_string()));
    }
    Ok(v.iter().map(|a| (a - mean) / sd).collect())
}

/// Transform each series to zero sample mean and unit sample standard deviation.
pub fn standardize(p: &AlignedPair) -> Result<AlignedPair, IngestError> {
    Ok(AlignedPair {
        x: standardize_vec(&p.x, &p.x_label)?,
        y: standardize_vec(&p.y, &p.y_label)?,
        normalization: Normalization::Standardized,
        ..p.clone()
    })
}
