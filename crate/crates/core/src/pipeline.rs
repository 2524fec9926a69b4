//! End-to-end analysis: load, build the landscape, select the optimal path,
//! validate it and write columnar outputs.

use crate::boundary::{enumerate_boundaries, select_ground_state, select_optimal, BoundaryError, SelectionResult};
use crate::consistency::{resample_lag_to_time, run_consistency, ConsistencyError, ConsistencyReport, LagRounding};
use crate::ingest::{
    daily_grid, parse_csv, standardize, synchronize, AlignedPair, ColumnSpec, IngestError, Normalization, ParseOptions,
    SyncPolicy, TimeFormatHint,
};
use crate::landscape::{build_landscape, DistanceMode, EnergyLandscape};
use crate::output::{fmt12, fmt_opt, round12};
use crate::thermal::{LagPath, ThermalMode};
use crate::zerotemp::HardPath;
use serde::Serialize;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Temperatures above this are reported as unreliable.
pub const HIGH_TEMPERATURE: f64 = 5.0;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("ingest: {0}")]
    Ingest(#[from] IngestError),
    #[error("path selection: {0}")]
    Boundary(#[from] BoundaryError),
    #[error("consistency test: {0}")]
    Consistency(#[from] ConsistencyError),
    #[error("output: writing {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl PipelineError {
    /// Short stage name for diagnostics.
    pub fn stage(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "config",
            PipelineError::Ingest(_) => "ingest",
            PipelineError::Boundary(_) => "selection",
            PipelineError::Consistency(_) => "consistency",
            PipelineError::Output { .. } => "output",
        }
    }
}

/// One input series: a CSV file and the columns to read.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesInput {
    pub path: PathBuf,
    pub time_col: String,
    pub value_col: String,
}

#[derive(Debug, Clone)]
pub struct InputConfig {
    pub x: SeriesInput,
    pub y: SeriesInput,
    pub parse: ParseOptions,
    /// Sample both series once per day at this many seconds after midnight.
    pub daily_at: Option<i64>,
    pub from: Option<String>,
    pub to: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunParams {
    pub distance: DistanceMode,
    /// `0` selects the exact minimum-energy path.
    pub temperature: f64,
    pub mode: ThermalMode,
    pub boundary_depth: usize,
    pub windows: Vec<usize>,
    pub rounding: LagRounding,
    pub normalization: Normalization,
    pub dump_energy_table: bool,
    pub dump_landscape: bool,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            distance: DistanceMode::Comonotonic,
            temperature: 2.0,
            mode: ThermalMode::Bridge,
            boundary_depth: 20,
            windows: vec![20],
            rounding: LagRounding::Nearest,
            normalization: Normalization::Standardized,
            dump_energy_table: false,
            dump_landscape: false,
        }
    }
}

impl RunParams {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(PipelineError::Config(format!("temperature must be finite and >= 0, got {}", self.temperature)));
        }
        if self.boundary_depth == 0 {
            return Err(PipelineError::Config("boundary depth must be at least 1".into()));
        }
        if self.windows.is_empty() {
            return Err(PipelineError::Config("at least one consistency window is required".into()));
        }
        if let Some(w) = self.windows.iter().find(|&&w| w < 3) {
            return Err(PipelineError::Config(format!("consistency window {w} is shorter than 3")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisConfig {
    #[serde(skip)]
    pub input: Option<InputConfig>,
    pub params: RunParams,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct RowCounts {
    pub x_rows: usize,
    pub y_rows: usize,
    pub x_skipped_rows: usize,
    pub y_skipped_rows: usize,
    pub aligned_samples: usize,
}

/// A synchronised pair ready for analysis.
#[derive(Debug, Clone)]
pub struct LoadedPair {
    pub pair: AlignedPair,
    pub rows: RowCounts,
}

impl LoadedPair {
    /// Wrap an in-memory pair.
    pub fn from_pair(pair: AlignedPair) -> Self {
        let n = pair.len();
        LoadedPair {
            pair,
            rows: RowCounts {
                x_rows: n,
                y_rows: n,
                aligned_samples: n,
                ..RowCounts::default()
            },
        }
    }
}

/// Read, synchronise and range-filter the two series.
pub fn load_pair(cfg: &InputConfig) -> Result<LoadedPair, PipelineError> {
    let read = |s: &SeriesInput| {
        parse_csv(
            &s.path,
            &ColumnSpec {
                time_col: s.time_col.clone(),
                value_col: s.value_col.clone(),
            },
            &cfg.parse,
        )
    };
    let px = read(&cfg.x)?;
    let py = read(&cfg.y)?;
    let policy = match cfg.daily_at {
        None => SyncPolicy::Intersect,
        Some(secs) => {
            let lo = px.series.timestamps[0].min(py.series.timestamps[0]);
            let hi = *px.series.timestamps.last().unwrap().max(py.series.timestamps.last().unwrap());
            SyncPolicy::SampleAtGrid(daily_grid(&[lo, hi], secs))
        }
    };
    let mut pair = synchronize(&px.series, &py.series, &policy)?;
    if cfg.from.is_some() || cfg.to.is_some() {
        let bound = |s: &Option<String>| s.as_deref().map(|v| pair.format.parse(v)).transpose();
        let (from, to) = (bound(&cfg.from)?, bound(&cfg.to)?);
        pair = pair.filter_range(from, to)?;
    }
    let rows = RowCounts {
        x_rows: px.series.len(),
        y_rows: py.series.len(),
        x_skipped_rows: px.skipped_rows,
        y_skipped_rows: py.skipped_rows,
        aligned_samples: pair.len(),
    };
    Ok(LoadedPair { pair, rows })
}

/// In-memory result of one analysis.
#[derive(Debug, Clone)]
pub struct Analysis {
    /// The pair as analysed (after normalisation).
    pub pair: AlignedPair,
    pub landscape: EnergyLandscape,
    pub selection: SelectionResult,
    /// Set at zero temperature.
    pub hard_path: Option<HardPath>,
    /// `⟨x(t)⟩` for `t = 1..=N`.
    pub lag_by_time: Vec<f64>,
    pub reports: Vec<ConsistencyReport>,
    pub summary: Summary,
}

impl Analysis {
    pub fn path(&self) -> &LagPath {
        &self.selection.best
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct NodeOut {
    pub t1: usize,
    pub t2: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TableStats {
    pub starts: usize,
    pub ends: usize,
    pub evaluated_pairs: usize,
    pub inadmissible_pairs: usize,
    pub imprecise_pairs: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SelectionSummary {
    pub start: NodeOut,
    pub end: NodeOut,
    pub energy: f64,
    pub log_partition: Option<f64>,
    pub runner_up_gap: Option<f64>,
    pub path_layers: usize,
    pub max_lag: f64,
    pub min_lag: f64,
    pub energy_table: TableStats,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct WindowSummary {
    pub window: usize,
    pub rows: usize,
    pub defined_rows: usize,
    pub significant_rows: usize,
    pub significant_fraction: Option<f64>,
    pub median_slope: Option<f64>,
    pub excluded_samples: usize,
    pub file: String,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct InputSummary {
    pub x: SeriesInput,
    pub y: SeriesInput,
    pub time_format: String,
    pub skip_bad_rows: bool,
    pub daily_at_seconds: Option<i64>,
    pub from: Option<String>,
    pub to: Option<String>,
}

impl PartialEq for SeriesInput {
    fn eq(&self, o: &Self) -> bool {
        self.path == o.path && self.time_col == o.time_col && self.value_col == o.value_col
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Parameters {
    pub temperature: f64,
    pub engine: String,
    pub mode: ThermalMode,
    pub distance: String,
    pub boundary_depth: usize,
    pub windows: Vec<usize>,
    pub lag_rounding: LagRounding,
    pub normalization: Normalization,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Summary {
    pub schema_version: u32,
    pub series_length: usize,
    pub input: Option<InputSummary>,
    pub parameters: Parameters,
    pub rows: RowCounts,
    pub selection: SelectionSummary,
    pub consistency: Vec<WindowSummary>,
    pub warnings: Vec<String>,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

fn r12(v: Option<f64>) -> Option<f64> {
    v.map(round12)
}

/// Run every computational stage without touching the filesystem.
pub fn compute(loaded: &LoadedPair, params: &RunParams, input: Option<&InputConfig>) -> Result<Analysis, PipelineError> {
    params.validate()?;
    let mut warnings = Vec::new();
    if params.temperature > HIGH_TEMPERATURE {
        let msg = format!(
            "temperature {} exceeds {HIGH_TEMPERATURE}; lead-lag structure is usually washed out at such temperatures",
            params.temperature
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let pair = match params.normalization {
        Normalization::Standardized => standardize(&loaded.pair)?,
        Normalization::Raw => loaded.pair.clone(),
    };
    let n = pair.len();
    if params.boundary_depth >= n {
        return Err(PipelineError::Config(format!(
            "boundary depth {} must be smaller than the series length {n}",
            params.boundary_depth
        )));
    }
    let landscape = build_landscape(&pair, params.distance);
    let spec = enumerate_boundaries(n, params.boundary_depth)?;
    log::info!(
        "selecting among {}x{} boundary pairs on N = {n} at T = {}",
        spec.start_nodes.len(),
        spec.end_nodes.len(),
        params.temperature
    );
    let (selection, hard_path) = if params.temperature == 0.0 {
        let (s, h) = select_ground_state(&landscape, &spec)?;
        (s, Some(h))
    } else {
        (select_optimal(&landscape, &spec, params.temperature, params.mode)?, None)
    };
    if selection.imprecise_pairs > 0 {
        let msg = format!("{} boundary pairs could not be evaluated to double precision and were skipped", selection.imprecise_pairs);
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let lag_by_time = resample_lag_to_time(&selection.best, n);
    let reports = params
        .windows
        .iter()
        .map(|&w| run_consistency(&pair, &lag_by_time, w, params.rounding))
        .collect::<Result<Vec<_>, _>>()?;

    let (tmin, tmax, tmean) = selection.table_stats();
    let best = &selection.best;
    let summary = Summary {
        schema_version: 1,
        series_length: n,
        input: input.map(|c| InputSummary {
            x: c.x.clone(),
            y: c.y.clone(),
            time_format: match &c.parse.time_format {
                TimeFormatHint::Auto => "auto".into(),
                TimeFormatHint::Fixed(crate::ingest::TimeFormat::Index) => "index".into(),
                TimeFormatHint::Fixed(crate::ingest::TimeFormat::Calendar { pattern, .. }) => pattern.clone(),
            },
            skip_bad_rows: c.parse.skip_bad_rows,
            daily_at_seconds: c.daily_at,
            from: c.from.clone(),
            to: c.to.clone(),
        }),
        parameters: Parameters {
            temperature: params.temperature,
            engine: if hard_path.is_some() { "zero_temperature".into() } else { "thermal".into() },
            mode: params.mode,
            distance: params.distance.cli_name().into(),
            boundary_depth: params.boundary_depth,
            windows: params.windows.clone(),
            lag_rounding: params.rounding,
            normalization: params.normalization,
        },
        rows: loaded.rows.clone(),
        selection: SelectionSummary {
            start: NodeOut {
                t1: best.start.t1,
                t2: best.start.t2,
            },
            end: NodeOut {
                t1: best.end.t1,
                t2: best.end.t2,
            },
            energy: round12(best.energy),
            log_partition: r12(best.log_partition),
            runner_up_gap: r12(selection.runner_up_gap),
            path_layers: best.len(),
            max_lag: round12(lag_by_time.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            min_lag: round12(lag_by_time.iter().copied().fold(f64::INFINITY, f64::min)),
            energy_table: TableStats {
                starts: spec.start_nodes.len(),
                ends: spec.end_nodes.len(),
                evaluated_pairs: selection.evaluated_pairs(),
                inadmissible_pairs: selection.inadmissible_pairs,
                imprecise_pairs: selection.imprecise_pairs,
                min: round12(tmin),
                max: round12(tmax),
                mean: round12(tmean),
            },
        },
        consistency: reports
            .iter()
            .map(|r| WindowSummary {
                window: r.window_length,
                rows: r.windows.len(),
                defined_rows: r.defined().count(),
                significant_rows: r.defined().filter(|f| f.significant).count(),
                significant_fraction: r12(r.significant_fraction()),
                median_slope: r12(median(r.defined().map(|f| f.a).collect())),
                excluded_samples: r.excluded_samples,
                file: consistency_file(r.window_length),
            })
            .collect(),
        warnings,
    };
    Ok(Analysis {
        pair,
        landscape,
        selection,
        hard_path,
        lag_by_time,
        reports,
        summary,
    })
}

fn consistency_file(w: usize) -> String {
    format!("consistency_w{w}.csv")
}

fn write_file(dir: &Path, name: &str, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), PipelineError> {
    let path = dir.join(name);
    let err = |source| PipelineError::Output { path: path.clone(), source };
    let mut w = BufWriter::new(File::create(&path).map_err(err)?);
    body(&mut w).and_then(|_| w.flush()).map_err(err)
}

/// Write every output file of `a` into `dir`.
pub fn write_outputs(a: &Analysis, params: &RunParams, dir: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(|source| PipelineError::Output {
        path: dir.to_path_buf(),
        source,
    })?;
    let best = a.path();
    write_file(dir, "path.csv", |w| {
        writeln!(w, "tau,mean_x,t1,energy")?;
        for (k, tau) in best.taus().enumerate() {
            let mx = best.mean_x[k];
            let t1 = (tau as f64 - mx) / 2.0 + 1.0;
            writeln!(w, "{tau},{},{},{}", fmt12(mx), fmt12(t1), fmt12(best.layer_energy[k]))?;
        }
        Ok(())
    })?;
    write_file(dir, "lag_by_time.csv", |w| {
        writeln!(w, "t,timestamp,lag")?;
        for (k, lag) in a.lag_by_time.iter().enumerate() {
            writeln!(w, "{},{},{}", k + 1, a.pair.format.format(a.pair.grid[k]), fmt12(*lag))?;
        }
        Ok(())
    })?;
    for r in &a.reports {
        write_file(dir, &consistency_file(r.window_length), |w| {
            writeln!(w, "t_end,a,t_stat,p_value,significant,c,n_obs,timestamp")?;
            for row in &r.windows {
                let ts = a.pair.format.format(a.pair.grid[row.t_end - 1]);
                match &row.fit {
                    Some(f) => writeln!(
                        w,
                        "{},{},{},{},{},{},{},{ts}",
                        row.t_end,
                        fmt12(f.a),
                        fmt12(f.t_stat),
                        fmt12(f.p_value),
                        u8::from(f.significant),
                        fmt12(f.c),
                        row.n_obs
                    )?,
                    None => writeln!(w, "{},NA,NA,NA,NA,NA,{},{ts}", row.t_end, row.n_obs)?,
                }
            }
            Ok(())
        })?;
    }
    if let Some(h) = &a.hard_path {
        write_file(dir, "hard_path.csv", |w| {
            writeln!(w, "t1,t2,x,eps")?;
            for v in &h.nodes {
                writeln!(w, "{},{},{},{}", v.t1, v.t2, v.lag(), fmt12(a.landscape.eps(v.t1, v.t2)))?;
            }
            Ok(())
        })?;
    }
    if params.dump_energy_table {
        let spec = &a.selection.spec;
        write_file(dir, "energy_table.csv", |w| {
            writeln!(w, "start_t1,start_t2,end_t1,end_t2,energy")?;
            for (s, row) in spec.start_nodes.iter().zip(&a.selection.energy_table) {
                for (e, v) in spec.end_nodes.iter().zip(row) {
                    writeln!(w, "{},{},{},{},{}", s.t1, s.t2, e.t1, e.t2, fmt_opt(*v))?;
                }
            }
            Ok(())
        })?;
    }
    if params.dump_landscape {
        write_file(dir, "landscape.csv", |w| a.landscape.write_csv(w))?;
    }
    write_file(dir, "summary.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &a.summary).map_err(std::io::Error::other)?;
        writeln!(w)
    })
}

/// Run the full analysis from a loaded pair and write its outputs.
pub fn analyze_loaded(
    loaded: &LoadedPair,
    params: &RunParams,
    input: Option<&InputConfig>,
    out_dir: &Path,
) -> Result<Analysis, PipelineError> {
    let a = compute(loaded, params, input)?;
    write_outputs(&a, params, out_dir)?;
    Ok(a)
}

/// Load the configured inputs, analyse them and write the outputs.
pub fn analyze(cfg: &AnalysisConfig) -> Result<Analysis, PipelineError> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| PipelineError::Config("no input series configured".into()))?;
    let loaded = load_pair(input)?;
    analyze_loaded(&loaded, &cfg.params, Some(input), &cfg.out_dir)
}

/// Per-temperature extremes of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub temperature: f64,
    pub max_lag: f64,
    pub min_lag: f64,
    pub energy: f64,
    pub subdir: String,
}

/// Directory name of one temperature inside a sweep.
pub fn temperature_dir(t: f64) -> String {
    format!("T_{}", fmt12(t))
}

/// One analysis per temperature in `out_dir/T_{T}` plus `sweep_summary.csv`.
pub fn scan_temperature_loaded(
    loaded: &LoadedPair,
    params: &RunParams,
    temperatures: &[f64],
    input: Option<&InputConfig>,
    out_dir: &Path,
) -> Result<Vec<SweepPoint>, PipelineError> {
    if temperatures.len() < 2 {
        return Err(PipelineError::Config(format!(
            "a temperature scan needs at least 2 temperatures, got {}",
            temperatures.len()
        )));
    }
    let mut points = Vec::with_capacity(temperatures.len());
    for &t in temperatures {
        let p = RunParams {
            temperature: t,
            ..params.clone()
        };
        let subdir = temperature_dir(t);
        let a = analyze_loaded(loaded, &p, input, &out_dir.join(&subdir))?;
        points.push(SweepPoint {
            temperature: t,
            max_lag: a.summary.selection.max_lag,
            min_lag: a.summary.selection.min_lag,
            energy: a.summary.selection.energy,
            subdir,
        });
    }
    write_file(out_dir, "sweep_summary.csv", |w| {
        writeln!(w, "temperature,max_lag,min_lag,energy,dir")?;
        for p in &points {
            writeln!(w, "{},{},{},{},{}", fmt12(p.temperature), fmt12(p.max_lag), fmt12(p.min_lag), fmt12(p.energy), p.subdir)?;
        }
        Ok(())
    })?;
    Ok(points)
}

pub fn scan_temperature(cfg: &AnalysisConfig, temperatures: &[f64]) -> Result<Vec<SweepPoint>, PipelineError> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| PipelineError::Config("no input series configured".into()))?;
    let loaded = load_pair(input)?;
    scan_temperature_loaded(&loaded, &cfg.params, temperatures, Some(input), &cfg.out_dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, Driver, LagKind, LagScenario};

    fn lagged(n: usize, k: i64, seed: u64) -> LoadedPair {
        let g = generate(&LagScenario {
            kind: LagKind::Constant { k },
            driver: Driver::RandomWalk { sigma: 1.0 },
            noise_sigma: 0.1,
            n,
            seed,
        })
        .unwrap();
        LoadedPair::from_pair(g.pair)
    }

    #[test]
    fn constant_lag_end_to_end() {
        let loaded = lagged(300, 5, 3);
        let a = compute(&loaded, &RunParams::default(), None).unwrap();
        let bulk = &a.lag_by_time[60..240];
        let within = bulk.iter().filter(|v| (*v - 5.0).abs() <= 1.0).count();
        assert!(within as f64 >= 0.9 * bulk.len() as f64);
        let frac = a.reports[0].significant_fraction().unwrap();
        assert!(frac >= 0.8, "significant fraction {frac}");
    }

    #[test]
    fn identical_series_have_zero_lag_and_unit_slope() {
        let g = lagged(120, 0, 8).pair;
        let loaded = LoadedPair::from_pair(AlignedPair::from_values(g.x.clone(), g.x.clone()).unwrap());
        let a = compute(&loaded, &RunParams::default(), None).unwrap();
        assert!(a.lag_by_time.iter().all(|v| v.abs() < 1e-9));
        assert!(a.reports[0].defined().all(|f| (f.a - 1.0).abs() < 1e-9));
    }

    #[test]
    fn zero_temperature_writes_hard_path() {
        let dir = tempfile::tempdir().unwrap();
        let params = RunParams {
            temperature: 0.0,
            dump_energy_table: true,
            dump_landscape: true,
            ..RunParams::default()
        };
        let a = analyze_loaded(&lagged(80, 4, 1), &params, None, dir.path()).unwrap();
        assert!(a.hard_path.is_some());
        for f in ["path.csv", "lag_by_time.csv", "consistency_w20.csv", "summary.json", "hard_path.csv", "energy_table.csv", "landscape.csv"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let head = fs::read_to_string(dir.path().join("path.csv")).unwrap();
        assert!(head.starts_with("tau,mean_x,t1,energy\n"));
        let table = fs::read_to_string(dir.path().join("energy_table.csv")).unwrap();
        assert_eq!(table.lines().count(), 1 + 39 * 39);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let loaded = lagged(150, 3, 2);
        let params = RunParams {
            windows: vec![20, 50],
            dump_energy_table: true,
            ..RunParams::default()
        };
        let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        analyze_loaded(&loaded, &params, None, d1.path()).unwrap();
        analyze_loaded(&loaded, &params, None, d2.path()).unwrap();
        for f in ["path.csv", "lag_by_time.csv", "consistency_w20.csv", "consistency_w50.csv", "summary.json", "energy_table.csv"] {
            assert_eq!(fs::read(d1.path().join(f)).unwrap(), fs::read(d2.path().join(f)).unwrap(), "{f}");
        }
    }

    #[test]
    fn scan_writes_one_directory_per_temperature() {
        let dir = tempfile::tempdir().unwrap();
        let pts = scan_temperature_loaded(&lagged(100, 3, 4), &RunParams::default(), &[1.0, 2.0], None, dir.path()).unwrap();
        assert_eq!(pts.len(), 2);
        assert!(dir.path().join("T_1/summary.json").exists());
        assert!(dir.path().join("T_2/path.csv").exists());
        let s = fs::read_to_string(dir.path().join("sweep_summary.csv")).unwrap();
        assert_eq!(s.lines().count(), 3);
        let err = scan_temperature_loaded(&lagged(100, 3, 4), &RunParams::default(), &[1.0], None, dir.path()).unwrap_err();
        assert_eq!(err.stage(), "config");
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let loaded = lagged(60, 2, 1);
        for p in [
            RunParams { temperature: -1.0, ..RunParams::default() },
            RunParams { windows: vec![2], ..RunParams::default() },
            RunParams { boundary_depth: 0, ..RunParams::default() },
            RunParams { boundary_depth: 60, ..RunParams::default() },
        ] {
            assert_eq!(compute(&loaded, &p, None).unwrap_err().stage(), "config");
        }
    }

    #[test]
    fn high_temperature_warns() {
        let p = RunParams { temperature: 6.0, ..RunParams::default() };
        let a = compute(&lagged(60, 2, 1), &p, None).unwrap();
        assert_eq!(a.summary.warnings.len(), 1);
    }
}
