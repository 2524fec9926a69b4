//! The energy landscape `ε(t₁, t₂)` between two aligned series.

use crate::ingest::AlignedPair;
use crate::output::fmt12;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

/// Matrices with side at most this value are materialised; larger ones are
/// evaluated on demand from the two series.
pub const DEFAULT_DENSE_THRESHOLD: usize = 4096;

#[derive(Debug, Error)]
pub enum LandscapeError {
    #[error("matrix has {got} entries, expected {n}×{n}")]
    BadShape { n: usize, got: usize },
    #[error("entry ({t1}, {t2}) is negative or non-finite: {value}")]
    BadEntry { t1: usize, t2: usize, value: f64 },
    #[error("lattice must have at least one node")]
    Empty,
}

/// Sign convention of the pointwise distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMode {
    /// `|X − Y|`, for series that move together.
    Comonotonic,
    /// `|X + Y|`, for series that move in opposite directions.
    Antimonotonic,
    /// `min(|X − Y|, |X + Y|)`.
    Mixed,
}

impl DistanceMode {
    #[inline]
    pub fn distance(self, x: f64, y: f64) -> f64 {
        match self {
            DistanceMode::Comonotonic => (x - y).abs(),
            DistanceMode::Antimonotonic => (x + y).abs(),
            DistanceMode::Mixed => (x - y).abs().min((x + y).abs()),
        }
    }

    /// CLI spelling: `minus`, `plus`, `mixed`.
    pub fn cli_name(self) -> &'static str {
        match self {
            DistanceMode::Comonotonic => "minus",
            DistanceMode::Antimonotonic => "plus",
            DistanceMode::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone)]
struct SeriesSource {
    x: Vec<f64>,
    y: Vec<f64>,
    mode: DistanceMode,
}

/// N×N matrix of nonnegative node energies.
///
/// Built from a pair, the landscape keeps the two series and evaluates entries
/// on demand; the dense matrix is also kept when `n` is at most the dense
/// threshold. Built from an explicit matrix, only the dense form exists.
#[derive(Debug, Clone)]
pub struct EnergyLandscape {
    n: usize,
    dense: Option<Vec<f64>>,
    source: Option<SeriesSource>,
}

/// Compute the landscape of `p` in the given mode with the default dense threshold.
pub fn build_landscape(p: &AlignedPair, mode: DistanceMode) -> EnergyLandscape {
    build_landscape_with(p, mode, DEFAULT_DENSE_THRESHOLD)
}

pub fn build_landscape_with(p: &AlignedPair, mode: DistanceMode, dense_threshold: usize) -> EnergyLandscape {
    let n = p.len();
    let source = SeriesSource {
        x: p.x.clone(),
        y: p.y.clone(),
        mode,
    };
    let dense = (n <= dense_threshold).then(|| {
        let mut m = vec![0.0; n * n];
        m.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let xi = source.x[i];
            for (cell, &yj) in row.iter_mut().zip(&source.y) {
                *cell = mode.distance(xi, yj);
            }
        });
        m
    });
    EnergyLandscape {
        n,
        dense,
        source: Some(source),
    }
}

impl EnergyLandscape {
    /// Wrap an explicit row-major matrix (`rows[t₁ − 1][t₂ − 1]`).
    pub fn from_matrix(n: usize, data: Vec<f64>) -> Result<Self, LandscapeError> {
        if n == 0 {
            return Err(LandscapeError::Empty);
        }
        if data.len() != n * n {
            return Err(LandscapeError::BadShape { n, got: data.len() });
        }
        if let Some(k) = data.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(LandscapeError::BadEntry {
                t1: k / n + 1,
                t2: k % n + 1,
                value: data[k],
            });
        }
        Ok(EnergyLandscape {
            n,
            dense: Some(data),
            source: None,
        })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self, LandscapeError> {
        let data = (0..n * n).map(|k| f(k / n + 1, k % n + 1)).collect();
        EnergyLandscape::from_matrix(n, data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Distance mode for landscapes built from series; `None` for explicit matrices.
    pub fn mode(&self) -> Option<DistanceMode> {
        self.source.as_ref().map(|s| s.mode)
    }

    pub fn is_materialized(&self) -> bool {
        self.dense.is_some()
    }

    /// `ε(t₁, t₂)` with 1-based indices.
    pub fn eps(&self, t1: usize, t2: usize) -> f64 {
        assert!((1..=self.n).contains(&t1) && (1..=self.n).contains(&t2), "node outside lattice");
        self.eps0(t1 - 1, t2 - 1)
    }

    #[inline]
    pub(crate) fn eps0(&self, i: usize, j: usize) -> f64 {
        match (&self.dense, &self.source) {
            (Some(d), _) => d[i * self.n + j],
            (None, Some(s)) => s.mode.distance(s.x[i], s.y[j]),
            (None, None) => unreachable!("landscape without storage"),
        }
    }

    /// Energies of anti-diagonal layer `tau` for `i = lo..lo + out.len()`.
    pub(crate) fn fill_layer(&self, tau: usize, lo: usize, out: &mut [f64]) {
        if let Some(s) = &self.source {
            for (k, cell) in out.iter_mut().enumerate() {
                let i = lo + k;
                *cell = s.mode.distance(s.x[i], s.y[tau - i]);
            }
        } else {
            let d = self.dense.as_ref().expect("dense storage");
            for (k, cell) in out.iter_mut().enumerate() {
                let i = lo + k;
                *cell = d[i * self.n + tau - i];
            }
        }
    }

    /// Row-major copy of the full matrix.
    pub fn to_matrix(&self) -> Vec<f64> {
        match &self.dense {
            Some(d) => d.clone(),
            None => (0..self.n * self.n).map(|k| self.eps0(k / self.n, k % self.n)).collect(),
        }
    }

    /// The landscape of the swapped pair, `ε'(t₁, t₂) = ε(t₂, t₁)`.
    pub fn transposed(&self) -> EnergyLandscape {
        let n = self.n;
        let dense = self.dense.as_ref().map(|d| {
            let mut t = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    t[j * n + i] = d[i * n + j];
                }
            }
            t
        });
        let source = self.source.as_ref().map(|s| SeriesSource {
            x: s.y.clone(),
            y: s.x.clone(),
            mode: s.mode,
        });
        EnergyLandscape { n, dense, source }
    }

    /// Add `c` to every entry (result is an explicit matrix).
    pub fn shifted(&self, c: f64) -> Result<EnergyLandscape, LandscapeError> {
        EnergyLandscape::from_matrix(self.n, self.to_matrix().into_iter().map(|v| v + c).collect())
    }

    /// Write the matrix as CSV, one lattice row (fixed `t₁`) per line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = (1..=self.n).map(|t2| format!("t2_{t2}")).collect();
        writeln!(w, "t1,{}", header.join(","))?;
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| fmt12(self.eps0(i, j))).collect();
            writeln!(w, "{},{}", i + 1, row.join(","))?;
        }
        Ok(())
    }
}
