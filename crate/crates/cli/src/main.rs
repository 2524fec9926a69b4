use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use toplag::consistency::LagRounding;
use toplag::ingest::{Normalization, ParseOptions, TimeFormat};
use toplag::landscape::{DistanceMode, EnergyLandscape};
use toplag::output::fmt12;
use toplag::pipeline::{self, AnalysisConfig, InputConfig, PipelineError, RunParams, SeriesInput};
use toplag::synth::oracle::brute_force_thermal;
use toplag::synth::{generate, Driver, LagKind, LagScenario};
use toplag::thermal::{thermal_path, ThermalMode};
use toplag::Node;

#[derive(Parser)]
#[command(name = "toplag", version, about = "Time-dependent lead-lag detection with thermal optimal paths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select the optimal lag path for one pair of series and validate it.
    Analyze(AnalyzeArgs),
    /// Run the analysis at several temperatures and tabulate the lag extremes.
    ScanTemperature(ScanArgs),
    /// Write a synthetic lagged pair with its true lag.
    Synth(SynthArgs),
    /// Compare the engine with exhaustive path enumeration on a random landscape.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Distance {
    Minus,
    Plus,
    Mixed,
}

impl From<Distance> for DistanceMode {
    fn from(d: Distance) -> Self {
        match d {
            Distance::Minus => DistanceMode::Comonotonic,
            Distance::Plus => DistanceMode::Antimonotonic,
            Distance::Mixed => DistanceMode::Mixed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Bridge,
    Forward,
}

impl From<Mode> for ThermalMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Bridge => ThermalMode::Bridge,
            Mode::Forward => ThermalMode::Forward,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Rounding {
    Nearest,
    Interpolate,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// One 20-sample window.
    Daily,
    /// Windows of 20 and 100 samples.
    Minute,
}

#[derive(Args)]
struct InputArgs {
    /// CSV file holding the X series.
    #[arg(long)]
    x: PathBuf,
    /// CSV file holding the Y series (may be the same file as X).
    #[arg(long)]
    y: PathBuf,
    #[arg(long, default_value = "time")]
    time_col: String,
    /// Value column used for both files unless overridden.
    #[arg(long, default_value = "value")]
    value_col: String,
    #[arg(long)]
    x_value_col: Option<String>,
    #[arg(long)]
    y_value_col: Option<String>,
    /// `auto`, `index`, or a chrono pattern such as `%Y-%m-%d %H:%M`.
    #[arg(long, default_value = "auto")]
    time_format: String,
    #[arg(long)]
    skip_bad_rows: bool,
    /// Sample both series once per day at HH:MM (last observation at or before).
    #[arg(long, value_name = "HH:MM")]
    daily_at: Option<String>,
    /// First timestamp kept, in the input's time format.
    #[arg(long)]
    from: Option<String>,
    /// Last timestamp kept, in the input's time format.
    #[arg(long)]
    to: Option<String>,
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long, value_enum, default_value = "minus")]
    distance: Distance,
    #[arg(long, value_enum, default_value = "bridge")]
    mode: Mode,
    #[arg(long, default_value_t = 20)]
    boundary_depth: usize,
    /// Consistency window lengths; repeat or separate with commas.
    #[arg(long, value_delimiter = ',')]
    window: Vec<usize>,
    #[arg(long, value_enum, default_value = "daily")]
    preset: Preset,
    #[arg(long, value_enum, default_value = "nearest")]
    rounding: Rounding,
    /// Use the series as given instead of standardising them.
    #[arg(long)]
    raw: bool,
    #[arg(long)]
    dump_energy_table: bool,
    #[arg(long)]
    dump_landscape: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    params: ParamArgs,
    /// Temperature; 0 selects the exact minimum-energy path.
    #[arg(long, default_value_t = 2.0)]
    temperature: f64,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    params: ParamArgs,
    /// At least two temperatures, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    temperatures: Vec<f64>,
}

#[derive(Args)]
struct SynthArgs {
    /// `constant:K`, `step:K1:K2:SWITCH`, `sine:AMPLITUDE:PERIOD` or `anti:K`.
    #[arg(long)]
    scenario: LagKind,
    /// `rw:SIGMA` or `ar1:RHO:SIGMA`.
    #[arg(long, default_value = "rw:1")]
    driver: Driver,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV with columns `time,x,y`.
    #[arg(long)]
    out: PathBuf,
    /// Output CSV with columns `time,lag`.
    #[arg(long)]
    lag_out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 7)]
    size: usize,
    #[arg(long, default_value_t = 2.0)]
    temperature: f64,
    #[arg(long, value_enum, default_value = "bridge")]
    mode: Mode,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
}

fn parse_daily_at(s: &str) -> Result<i64> {
    let (h, m) = s.split_once(':').context("expected HH:MM")?;
    let (h, m): (i64, i64) = (h.parse()?, m.parse()?);
    if !(0..24).contains(&h) || !(0..60).contains(&m) {
        bail!("time of day out of range: {s}");
    }
    Ok(h * 3600 + m * 60)
}

fn input_config(a: &InputArgs) -> Result<InputConfig> {
    let series = |path: &PathBuf, col: &Option<String>| SeriesInput {
        path: path.clone(),
        time_col: a.time_col.clone(),
        value_col: col.clone().unwrap_or_else(|| a.value_col.clone()),
    };
    Ok(InputConfig {
        x: series(&a.x, &a.x_value_col),
        y: series(&a.y, &a.y_value_col),
        parse: ParseOptions {
            time_format: TimeFormat::from_hint(&a.time_format),
            skip_bad_rows: a.skip_bad_rows,
        },
        daily_at: a.daily_at.as_deref().map(parse_daily_at).transpose().context("--daily-at")?,
        from: a.from.clone(),
        to: a.to.clone(),
    })
}

fn run_params(p: &ParamArgs, temperature: f64) -> RunParams {
    let windows = if !p.window.is_empty() {
        p.window.clone()
    } else {
        match p.preset {
            Preset::Daily => vec![20],
            Preset::Minute => vec![20, 100],
        }
    };
    RunParams {
        distance: p.distance.into(),
        temperature,
        mode: p.mode.into(),
        boundary_depth: p.boundary_depth,
        windows,
        rounding: match p.rounding {
            Rounding::Nearest => LagRounding::Nearest,
            Rounding::Interpolate => LagRounding::Interpolate,
        },
        normalization: if p.raw { Normalization::Raw } else { Normalization::Standardized },
        dump_energy_table: p.dump_energy_table,
        dump_landscape: p.dump_landscape,
    }
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let cfg = AnalysisConfig {
        input: Some(input_config(&a.input)?),
        params: run_params(&a.params, a.temperature),
        out_dir: a.params.out.clone(),
    };
    let r = pipeline::analyze(&cfg)?;
    let s = &r.summary.selection;
    println!(
        "N = {}  start ({}, {})  end ({}, {})  e_T = {}  lag range [{}, {}]",
        r.summary.series_length,
        s.start.t1,
        s.start.t2,
        s.end.t1,
        s.end.t2,
        fmt12(s.energy),
        fmt12(s.min_lag),
        fmt12(s.max_lag)
    );
    for w in &r.summary.consistency {
        let frac = w.significant_fraction.map(fmt12).unwrap_or_else(|| "NA".into());
        println!("window {}: {}/{} windows significant ({frac})", w.window, w.significant_rows, w.defined_rows);
    }
    println!("outputs written to {}", cfg.out_dir.display());
    Ok(())
}

fn scan(a: ScanArgs) -> Result<()> {
    let cfg = AnalysisConfig {
        input: Some(input_config(&a.input)?),
        params: run_params(&a.params, a.temperatures[0]),
        out_dir: a.params.out.clone(),
    };
    let pts = pipeline::scan_temperature(&cfg, &a.temperatures)?;
    println!("temperature  max_lag  min_lag  energy");
    for p in pts {
        println!("{}  {}  {}  {}", fmt12(p.temperature), fmt12(p.max_lag), fmt12(p.min_lag), fmt12(p.energy));
    }
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let g = generate(&LagScenario {
        kind: a.scenario,
        driver: a.driver,
        noise_sigma: a.noise,
        n: a.n,
        seed: a.seed,
    })?;
    let mut w = BufWriter::new(File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?);
    writeln!(w, "time,x,y")?;
    for k in 0..g.pair.len() {
        writeln!(w, "{},{},{}", g.pair.grid[k], fmt12(g.pair.x[k]), fmt12(g.pair.y[k]))?;
    }
    w.flush()?;
    if let Some(path) = &a.lag_out {
        let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        writeln!(w, "time,lag")?;
        for (k, lag) in g.true_lag.iter().enumerate() {
            writeln!(w, "{},{}", g.pair.grid[k], fmt12(*lag))?;
        }
        w.flush()?;
    }
    Ok(())
}

fn oracle(a: OracleArgs) -> Result<bool> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(a.seed);
    let n = a.size;
    let l = EnergyLandscape::from_matrix(n, (0..n * n).map(|_| rng.gen_range(0.0..1.0)).collect())?;
    let (s, e) = (Node::new(1, 1), Node::new(n, n));
    let mode = ThermalMode::from(a.mode);
    let got = thermal_path(&l, s, e, a.temperature, mode)?;
    let want = brute_force_thermal(&l, s, e, a.temperature, mode)?;
    let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1.0);
    let dx = got.mean_x.iter().zip(&want.mean_x).map(|(x, y)| rel(*x, *y)).fold(0.0, f64::max);
    let de = rel(got.energy, want.energy);
    let dz = rel(got.log_partition.unwrap_or(f64::NAN), want.log_partition);
    println!("lattice {n}x{n}, T = {}, mode {mode}, {} paths", a.temperature, want.path_count);
    println!("max rel. error <x(tau)>: {dx:e}");
    println!("rel. error e_T:          {de:e}");
    println!("rel. error ln Z:         {dz:e}");
    let ok = dx <= a.tolerance && de <= a.tolerance && dz <= a.tolerance;
    println!("{}", if ok { "PASS" } else { "FAIL" });
    Ok(ok)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<PipelineError>() {
        Some(PipelineError::Config(_)) => 2,
        Some(PipelineError::Ingest(_)) => 3,
        Some(PipelineError::Boundary(_) | PipelineError::Consistency(_)) => 4,
        Some(PipelineError::Output { .. }) => 5,
        None => 1,
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("TOPLAG_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("TOPLAG_THREADS must be a positive integer, got `{v}`"))?;
        if n == 0 {
            bail!("TOPLAG_THREADS must be a positive integer, got `{v}`");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| match cli.command {
        Command::Analyze(a) => analyze(a).map(|_| true),
        Command::ScanTemperature(a) => scan(a).map(|_| true),
        Command::Synth(a) => synth(a).map(|_| true),
        Command::Oracle(a) => oracle(a),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            match e.downcast_ref::<PipelineError>() {
                Some(pe) => eprintln!("error: {pe}"),
                None => eprintln!("error: {e:#}"),
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
