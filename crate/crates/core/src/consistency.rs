//! Rolling-window regression check of a detected lag path.
//!
//! `Y_t` is regressed on `X_{t − lag(t)}` with an intercept in trailing
//! windows. A slope significantly different from zero means the lag
//! synchronises the two series.

use crate::ingest::AlignedPair;
use crate::stats::student_t_two_sided_p;
use crate::thermal::LagPath;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConsistencyError {
    #[error("window length {0} is shorter than 3")]
    WindowTooShort(usize),
    #[error("lag vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// `⟨x(t)⟩` for `t = 1..=n`, interpolated linearly through the points
/// `(t₁(τ), ⟨x(τ)⟩)` and held flat outside them.
pub fn resample_lag_to_time(path: &LagPath, n: usize) -> Vec<f64> {
    let mut pts: Vec<(f64, f64)> = path.t1_series().into_iter().zip(path.mean_x.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.is_empty() {
        return vec![0.0; n];
    }
    (1..=n)
        .map(|t| {
            let t = t as f64;
            let k = pts.partition_point(|p| p.0 < t);
            if k == 0 {
                pts[0].1
            } else if k == pts.len() {
                pts[k - 1].1
            } else {
                let (a, b) = (pts[k - 1], pts[k]);
                if b.0 == a.0 {
                    b.1
                } else {
                    a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
                }
            }
        })
        .collect()
}

/// How a real-valued lag selects the regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LagRounding {
    /// `X` at `t − round(lag)`, rounding half away from zero.
    #[default]
    Nearest,
    /// `X` linearly interpolated at the fractional index `t − lag`.
    Interpolate,
}

/// One synchronised observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncedSample {
    pub t: usize,
    pub y: f64,
    pub x_lagged: f64,
}

/// Samples for `t = 1..=N`; `None` where the lagged index leaves `[1, N]`.
pub fn synced_samples(p: &AlignedPair, lag_t: &[f64], rounding: LagRounding) -> Vec<Option<SyncedSample>> {
    let n = p.len();
    (1..=n)
        .map(|t| {
            let y = p.y[t - 1];
            let x_lagged = match rounding {
                LagRounding::Nearest => {
                    let src = t as i64 - lag_t[t - 1].round() as i64;
                    (1..=n as i64).contains(&src).then(|| p.x[src as usize - 1])?
                }
                LagRounding::Interpolate => {
                    let pos = t as f64 - lag_t[t - 1];
                    if !(pos >= 1.0 && pos <= n as f64) {
                        return None;
                    }
                    let lo = pos.floor() as usize;
                    let frac = pos - lo as f64;
                    if frac == 0.0 {
                        p.x[lo - 1]
                    } else {
                        p.x[lo - 1] * (1.0 - frac) + p.x[lo] * frac
                    }
                }
            };
            Some(SyncedSample { t, y, x_lagged })
        })
        .collect()
}

/// OLS fit of one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowFit {
    pub a: f64,
    pub c: f64,
    pub t_stat: f64,
    pub p_value: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowResult {
    /// Last time index of the trailing window.
    pub t_end: usize,
    /// Usable samples inside the window.
    pub n_obs: usize,
    /// `None` when the window is undefined (fewer than 3 samples or a
    /// constant regressor or response).
    pub fit: Option<WindowFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub window_length: usize,
    pub rounding: LagRounding,
    pub windows: Vec<WindowResult>,
    /// Samples whose lagged index fell outside the series.
    pub excluded_samples: usize,
}

impl ConsistencyReport {
    pub fn defined(&self) -> impl Iterator<Item = &WindowFit> {
        self.windows.iter().filter_map(|w| w.fit.as_ref())
    }

    /// Fraction of defined windows that are significant; `None` if none are defined.
    pub fn significant_fraction(&self) -> Option<f64> {
        let (mut k, mut total) = (0usize, 0usize);
        for f in self.defined() {
            total += 1;
            k += f.significant as usize;
        }
        (total > 0).then(|| k as f64 / total as f64)
    }
}

/// Ordinary least squares of `y` on `x` with intercept.
pub fn ols(xs: &[f64], ys: &[f64]) -> Option<WindowFit> {
    let n = xs.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let scale = xs.iter().map(|x| x * x).sum::<f64>();
    if sxx <= 1e-24 * scale || sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let a = sxy / sxx;
    let c = my - a * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - c - a * x).powi(2)).sum();
    let df = nf - 2.0;
    let (t_stat, p_value) = if rss <= 1e-24 * syy {
        (f64::INFINITY.copysign(a), 0.0)
    } else {
        let se = (rss / df / sxx).sqrt();
        let t = a / se;
        (t, student_t_two_sided_p(t, df))
    };
    Some(WindowFit {
        a,
        c,
        t_stat,
        p_value,
        significant: p_value <= SIGNIFICANCE,
    })
}

/// Trailing-window regressions for `t_end = window..=N`.
pub fn run_consistency(
    p: &AlignedPair,
    lag_t: &[f64],
    window: usize,
    rounding: LagRounding,
) -> Result<ConsistencyReport, ConsistencyError> {
    if window < 3 {
        return Err(ConsistencyError::WindowTooShort(window));
    }
    if lag_t.len() != p.len() {
        return Err(ConsistencyError::LengthMismatch {
            expected: p.len(),
            got: lag_t.len(),
        });
    }
    let samples = synced_samples(p, lag_t, rounding);
    let excluded_samples = samples.iter().filter(|s| s.is_none()).count();
    let n = p.len();
    let windows = (window.min(n + 1)..=n)
        .into_par_iter()
        .map(|t_end| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = samples[t_end - window..t_end]
                .iter()
                .flatten()
                .map(|s| (s.x_lagged, s.y))
                .unzip();
            WindowResult {
                t_end,
                n_obs: xs.len(),
                fit: ols(&xs, &ys),
            }
        })
        .collect();
    Ok(ConsistencyReport {
        window_length: window,
        rounding,
        windows,
        excluded_samples,
    })
}
