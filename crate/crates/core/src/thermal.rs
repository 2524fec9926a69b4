//! Finite-temperature lag paths.
//!
//! Boltzmann weights `G(t₁, t₂) = Σ_paths exp(−Σ ε / T)` are propagated one
//! anti-diagonal layer at a time. Each stored layer is normalised so that its
//! maximum is 1 and the normalisation is tracked as a per-layer log scale, so
//! arbitrarily long lattices neither overflow nor underflow.
//!
//! Two averaging laws are provided. [`ThermalMode::Bridge`] conditions every
//! path on both boundary nodes (forward weights times backward weights);
//! [`ThermalMode::Forward`] averages the forward weights over whole layers.

use crate::landscape::EnergyLandscape;
use crate::lattice::{last_tau, layer_bounds, Node};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Stored weights below this (relative to the layer maximum) are set to 0.
pub(crate) const FLUSH: f64 = 1e-300;
/// Below this a linear-domain step switches to log-domain arithmetic.
const TINY: f64 = 1e-200;
/// Largest energy spread (in units of `T`) handled by the linear-domain step.
const WIDE: f64 = 600.0;
/// Rectangles larger than this are not recomputed by the exact fallback.
const EXACT_MAX_NODES: usize = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThermalError {
    #[error("temperature must be positive, got {0}")]
    TemperatureNonPositive(f64),
    #[error("node {0} lies outside the lattice")]
    OutsideLattice(Node),
    #[error("start {start} does not precede end {end}")]
    InvalidBoundary { start: Node, end: Node },
    #[error("no admissible nodes in layer {0}")]
    EmptyLayer(usize),
    #[error("weight fields were computed at different temperatures or lattice sizes")]
    FieldMismatch,
    #[error("weights between {start} and {end} lost precision and the rectangle is too large to recompute")]
    PrecisionLoss { start: Node, end: Node },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ThermalMode {
    #[default]
    Bridge,
    Forward,
}

impl ThermalMode {
    pub fn name(self) -> &'static str {
        match self {
            ThermalMode::Bridge => "bridge",
            ThermalMode::Forward => "forward",
        }
    }
}

impl fmt::Display for ThermalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sweep direction of a weight field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Paths from the origin to each node.
    Forward,
    /// Paths from each node to the origin.
    Backward,
}

/// A thermally averaged lag trajectory over the contiguous layers
/// `tau_start ..= tau_start + mean_x.len() − 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagPath {
    pub tau_start: usize,
    /// `⟨x(τ)⟩` for each covered layer.
    pub mean_x: Vec<f64>,
    /// Thermally averaged `ε` for each covered layer.
    pub layer_energy: Vec<f64>,
    /// `e_T`, the mean of `layer_energy`.
    pub energy: f64,
    /// Log partition function; `None` for zero-temperature paths.
    pub log_partition: Option<f64>,
    pub start: Node,
    pub end: Node,
    /// 0 for a zero-temperature path.
    pub temperature: f64,
    pub mode: ThermalMode,
}

impl LagPath {
    pub fn len(&self) -> usize {
        self.mean_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_x.is_empty()
    }

    pub fn taus(&self) -> std::ops::Range<usize> {
        self.tau_start..self.tau_start + self.mean_x.len()
    }

    /// Back-projected time index `t₁(τ) = (τ − ⟨x(τ)⟩)/2 + 1`.
    pub fn t1_series(&self) -> Vec<f64> {
        self.taus()
            .zip(&self.mean_x)
            .map(|(tau, x)| (tau as f64 - x) / 2.0 + 1.0)
            .collect()
    }

    /// `⟨x⟩` at layer `tau`, if covered.
    pub fn mean_x_at(&self, tau: usize) -> Option<f64> {
        tau.checked_sub(self.tau_start).and_then(|k| self.mean_x.get(k)).copied()
    }

    /// The path of the swapped pair: `⟨x⟩ → −⟨x⟩` with transposed boundaries.
    pub fn swapped(&self) -> LagPath {
        LagPath {
            mean_x: self.mean_x.iter().map(|x| -x).collect(),
            start: self.start.transposed(),
            end: self.end.transposed(),
            ..self.clone()
        }
    }
}

/// One normalised layer: `true weight(i) = vals[i − lo] · exp(log_scale)`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layer {
    pub lo: usize,
    pub vals: Vec<f64>,
    pub log_scale: f64,
}

impl Default for Layer {
    fn default() -> Self {
        Layer {
            lo: 0,
            vals: Vec::new(),
            log_scale: f64::NEG_INFINITY,
        }
    }
}

impl Layer {
    pub fn hi(&self) -> usize {
        self.lo + self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    #[inline]
    pub fn get(&self, i: i64) -> f64 {
        let k = i - self.lo as i64;
        if k < 0 {
            0.0
        } else {
            self.vals.get(k as usize).copied().unwrap_or(0.0)
        }
    }

    fn single(i: usize, log_scale: f64) -> Layer {
        Layer {
            lo: i,
            vals: vec![1.0],
            log_scale,
        }
    }

    fn clear(&mut self) {
        self.vals.clear();
        self.log_scale = f64::NEG_INFINITY;
    }

    /// Flush negligible entries and trim the window to the nonzero range.
    /// Returns whether any entry was dropped.
    fn trim(&mut self) -> bool {
        let mut lost = false;
        for v in self.vals.iter_mut() {
            if *v < FLUSH {
                *v = 0.0;
                lost = true;
            }
        }
        let first = self.vals.iter().position(|&v| v > 0.0);
        match first {
            None => self.clear(),
            Some(a) => {
                let b = self.vals.iter().rposition(|&v| v > 0.0).unwrap() + 1;
                self.vals.truncate(b);
                self.vals.drain(..a);
                self.lo += a;
            }
        }
        lost
    }

    /// `ln` of the true weight at `i` (`−∞` if zero).
    pub fn log_at(&self, i: usize) -> f64 {
        let v = self.get(i as i64);
        if v > 0.0 {
            v.ln() + self.log_scale
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Energies and Boltzmann factors of one layer, shared by all sweeps at one temperature.
#[derive(Debug, Clone, Default)]
pub(crate) struct LayerPrep {
    pub tau: usize,
    pub lo: usize,
    pub eps: Vec<f64>,
    pub eps_min: f64,
    /// `exp(−(ε − eps_min)/T)`.
    pub w: Vec<f64>,
    pub wide: bool,
}

impl LayerPrep {
    pub fn compute(&mut self, l: &EnergyLandscape, tau: usize, t: f64) {
        let (lo, hi) = layer_bounds(l.n(), tau);
        self.tau = tau;
        self.lo = lo;
        self.eps.resize(hi - lo + 1, 0.0);
        l.fill_layer(tau, lo, &mut self.eps);
        let (mut mn, mut mx) = (f64::INFINITY, f64::NEG_INFINITY);
        for &e in &self.eps {
            mn = mn.min(e);
            mx = mx.max(e);
        }
        self.eps_min = mn;
        self.wide = (mx - mn) / t > WIDE;
        self.w.clear();
        self.w.extend(self.eps.iter().map(|e| (-(e - mn) / t).exp()));
    }

    pub fn new(l: &EnergyLandscape, tau: usize, t: f64) -> Self {
        let mut p = LayerPrep::default();
        p.compute(l, tau, t);
        p
    }

    pub fn hi(&self) -> usize {
        self.lo + self.eps.len()
    }

    #[inline]
    pub fn eps_at(&self, i: usize) -> f64 {
        self.eps[i - self.lo]
    }
}

fn log_or_neg_inf(v: f64) -> f64 {
    if v > 0.0 {
        v.ln()
    } else {
        f64::NEG_INFINITY
    }
}

fn log_sum_exp3(a: f64, b: f64, c: f64) -> f64 {
    let m = a.max(b).max(c);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp() + (c - m).exp()).ln()
}

/// One transfer step. `prev1` is the adjacent layer, `prev2` the layer two
/// steps back; `d` is −1 for forward sweeps and +1 for backward sweeps.
/// Writes the inclusive layer (`× exp(−ε/T)`) and optionally the exclusive sum.
/// Returns whether any weight inside the reachable window was dropped.
#[allow(clippy::too_many_arguments)]
fn step(
    prev1: &Layer,
    prev2: &Layer,
    prep: &LayerPrep,
    d: i64,
    t: f64,
    incl: &mut Layer,
    mut excl: Option<&mut Layer>,
    logs: &mut Vec<f64>,
) -> bool {
    incl.clear();
    if let Some(x) = excl.as_deref_mut() {
        x.clear();
    }
    let (e1, e2) = (prev1.is_empty(), prev2.is_empty());
    if e1 && e2 {
        return false;
    }
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    if !e1 {
        lo = lo.min((prev1.lo as i64).min(prev1.lo as i64 - d));
        hi = hi.max((prev1.hi() as i64).max(prev1.hi() as i64 - d));
    }
    if !e2 {
        lo = lo.min(prev2.lo as i64 - d);
        hi = hi.max(prev2.hi() as i64 - d);
    }
    let lo = lo.max(prep.lo as i64);
    let hi = hi.min(prep.hi() as i64);
    if lo >= hi {
        return false;
    }
    let len = (hi - lo) as usize;
    let off = lo as usize - prep.lo;
    let eps = &prep.eps[off..off + len];
    let w = &prep.w[off..off + len];
    let m = prev1.log_scale.max(prev2.log_scale);
    let a = (prev1.log_scale - m).exp();
    let b = (prev2.log_scale - m).exp();
    incl.lo = lo as usize;
    incl.vals.resize(len, 0.0);

    let mut max_ps = 0.0f64;
    for (k, cell) in incl.vals.iter_mut().enumerate() {
        let i = lo + k as i64;
        let ps = a * (prev1.get(i + d) + prev1.get(i)) + b * prev2.get(i + d);
        *cell = ps;
        max_ps = max_ps.max(ps);
    }
    let tiny_scale = (!e1 && a < TINY) || (!e2 && b < TINY);
    if tiny_scale || max_ps < TINY {
        // Scales too far apart for linear arithmetic: sum in the log domain.
        logs.clear();
        for k in 0..len {
            let i = lo + k as i64;
            logs.push(log_sum_exp3(
                prev1.log_scale + log_or_neg_inf(prev1.get(i + d)),
                prev1.log_scale + log_or_neg_inf(prev1.get(i)),
                prev2.log_scale + log_or_neg_inf(prev2.get(i + d)),
            ));
        }
        let mut lost = false;
        if let Some(x) = excl {
            lost |= normalise_logs(logs, incl.lo, x);
        }
        for (lg, e) in logs.iter_mut().zip(eps) {
            *lg -= e / t;
        }
        return normalise_logs(logs, incl.lo, incl) | lost;
    }

    let inv = 1.0 / max_ps;
    for v in incl.vals.iter_mut() {
        *v *= inv;
    }
    let ls_ps = m + max_ps.ln();
    let mut lost = false;
    if let Some(x) = excl {
        x.lo = incl.lo;
        x.vals.clear();
        x.vals.extend_from_slice(&incl.vals);
        x.log_scale = ls_ps;
        lost |= x.trim();
    }
    let shift = prep.eps_min / t;
    if !prep.wide {
        let mut max_v = 0.0f64;
        for (cell, wk) in incl.vals.iter_mut().zip(w) {
            *cell *= wk;
            max_v = max_v.max(*cell);
        }
        if max_v >= TINY {
            let inv = 1.0 / max_v;
            for v in incl.vals.iter_mut() {
                *v *= inv;
            }
            incl.log_scale = ls_ps + max_v.ln() - shift;
            return incl.trim() | lost;
        }
        // Undo the product; ps·w lost too much range.
        for (k, cell) in incl.vals.iter_mut().enumerate() {
            let i = lo + k as i64;
            *cell = (a * (prev1.get(i + d) + prev1.get(i)) + b * prev2.get(i + d)) * inv;
        }
    }
    logs.clear();
    logs.extend(
        incl.vals
            .iter()
            .zip(eps)
            .map(|(v, e)| log_or_neg_inf(*v) - (e - prep.eps_min) / t),
    );
    lost |= normalise_logs(logs, incl.lo, incl);
    incl.log_scale += ls_ps - shift;
    lost
}

fn normalise_logs(logs: &[f64], lo: usize, out: &mut Layer) -> bool {
    let mx = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    out.clear();
    if mx == f64::NEG_INFINITY {
        return true;
    }
    out.lo = lo;
    out.vals.extend(logs.iter().map(|lg| (lg - mx).exp()));
    out.log_scale = mx;
    out.trim()
}

/// Resumable position of a sweep.
#[derive(Debug, Clone)]
pub(crate) struct Checkpoint {
    tau: usize,
    cur: Layer,
    prev: Layer,
    lossy: bool,
}

/// A weight sweep advancing one layer at a time; `cur` is the inclusive layer
/// at `tau` and `excl` its exclusive counterpart when requested.
#[derive(Debug, Clone)]
pub(crate) struct Sweep {
    d: i64,
    t: f64,
    pub tau: usize,
    pub cur: Layer,
    prev: Layer,
    pub excl: Layer,
    spare: Layer,
    logs: Vec<f64>,
    /// Set once any reachable weight has been flushed.
    pub lossy: bool,
}

impl Sweep {
    pub fn seed(l: &EnergyLandscape, origin: Node, t: f64, dir: Direction) -> Sweep {
        let eps = l.eps(origin.t1, origin.t2);
        Sweep {
            d: match dir {
                Direction::Forward => -1,
                Direction::Backward => 1,
            },
            t,
            tau: origin.tau(),
            cur: Layer::single(origin.i(), -eps / t),
            prev: Layer::default(),
            excl: Layer::single(origin.i(), 0.0),
            spare: Layer::default(),
            logs: Vec::new(),
            lossy: false,
        }
    }

    /// The layer the next call to [`Sweep::advance`] computes.
    pub fn next_tau(&self) -> usize {
        if self.d < 0 {
            self.tau + 1
        } else {
            self.tau - 1
        }
    }

    pub fn advance(&mut self, prep: &LayerPrep, want_excl: bool) {
        debug_assert_eq!(prep.tau, self.next_tau());
        self.lossy |= step(
            &self.cur,
            &self.prev,
            prep,
            self.d,
            self.t,
            &mut self.spare,
            want_excl.then_some(&mut self.excl),
            &mut self.logs,
        );
        std::mem::swap(&mut self.prev, &mut self.spare);
        std::mem::swap(&mut self.cur, &mut self.prev);
        self.tau = prep.tau;
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            tau: self.tau,
            cur: self.cur.clone(),
            prev: self.prev.clone(),
            lossy: self.lossy,
        }
    }

    pub fn resume(cp: &Checkpoint, t: f64, dir: Direction) -> Sweep {
        Sweep {
            d: if dir == Direction::Forward { -1 } else { 1 },
            t,
            tau: cp.tau,
            cur: cp.cur.clone(),
            prev: cp.prev.clone(),
            excl: Layer::default(),
            spare: Layer::default(),
            logs: Vec::new(),
            lossy: cp.lossy,
        }
    }
}

/// Boltzmann weights of every node relative to a fixed origin, stored per layer.
#[derive(Debug, Clone)]
pub struct WeightField {
    n: usize,
    temperature: f64,
    origin: Node,
    direction: Direction,
    layers: Vec<Layer>,
    lossy: bool,
}

fn check_temperature(t: f64) -> Result<(), ThermalError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(ThermalError::TemperatureNonPositive(t))
    }
}

fn check_node(l: &EnergyLandscape, v: Node) -> Result<(), ThermalError> {
    if v.in_lattice(l.n()) {
        Ok(())
    } else {
        Err(ThermalError::OutsideLattice(v))
    }
}

fn compute_field(l: &EnergyLandscape, origin: Node, t: f64, dir: Direction) -> Result<WeightField, ThermalError> {
    check_temperature(t)?;
    check_node(l, origin)?;
    let n = l.n();
    let mut layers = vec![Layer::default(); last_tau(n) + 1];
    let mut sweep = Sweep::seed(l, origin, t, dir);
    layers[sweep.tau] = sweep.cur.clone();
    let taus: Box<dyn Iterator<Item = usize>> = match dir {
        Direction::Forward => Box::new(origin.tau() + 1..=last_tau(n)),
        Direction::Backward => Box::new((0..origin.tau()).rev()),
    };
    let mut prep = LayerPrep::default();
    for tau in taus {
        prep.compute(l, tau, t);
        sweep.advance(&prep, false);
        layers[tau] = sweep.cur.clone();
    }
    Ok(WeightField {
        n,
        temperature: t,
        origin,
        direction: dir,
        layers,
        lossy: sweep.lossy,
    })
}

/// Weights `G(v)` summed over all directed paths from `start` to each node `v`.
pub fn forward_weights(l: &EnergyLandscape, start: Node, t: f64) -> Result<WeightField, ThermalError> {
    compute_field(l, start, t, Direction::Forward)
}

/// Weights summed over all directed paths from each node to `end`.
pub fn backward_weights(l: &EnergyLandscape, end: Node, t: f64) -> Result<WeightField, ThermalError> {
    compute_field(l, end, t, Direction::Backward)
}

impl WeightField {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn origin(&self) -> Node {
        self.origin
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// `ln G(v)`; `−∞` outside the cone of the origin.
    pub fn log_weight(&self, v: Node) -> f64 {
        if !v.in_lattice(self.n) {
            return f64::NEG_INFINITY;
        }
        self.layers[v.tau()].log_at(v.i())
    }

    /// Stored weights of layer `tau` as `(t₁ of the first entry, values, log scale)`.
    pub fn layer(&self, tau: usize) -> (usize, &[f64], f64) {
        let layer = &self.layers[tau];
        (layer.lo + 1, &layer.vals, layer.log_scale)
    }

    /// Multiply the stored weights of layer `tau` by `factor` and compensate
    /// in the log scale, leaving true weights unchanged.
    pub fn rescale_layer(&mut self, tau: usize, factor: f64) {
        assert!(factor > 0.0 && factor.is_finite());
        let layer = &mut self.layers[tau];
        for v in layer.vals.iter_mut() {
            *v *= factor;
        }
        layer.log_scale -= factor.ln();
    }

    /// Whether every reachable weight is represented (none were flushed).
    pub fn is_lossless(&self) -> bool {
        !self.lossy
    }

    /// Largest stored weight of layer `tau` (1 after normalisation).
    fn stored_max(&self, tau: usize) -> f64 {
        self.layers[tau].vals.iter().copied().fold(0.0, f64::max)
    }
}

/// How paths are constrained at the far end.
#[derive(Debug, Clone, Copy)]
pub enum Conditioning<'a> {
    /// Average the forward weights over whole layers up to `end`'s layer.
    Forward { end: Node },
    /// Condition on paths ending at the origin of the backward field.
    Bridge(&'a WeightField),
}

/// Weighted layer statistics from `(x, ε, ln weight)` triples.
#[derive(Default)]
struct LayerMoments {
    items: Vec<(f64, f64, f64)>,
}

impl LayerMoments {
    fn clear(&mut self) {
        self.items.clear();
    }

    fn push(&mut self, x: f64, eps: f64, lw: f64) {
        if lw > f64::NEG_INFINITY {
            self.items.push((x, eps, lw));
        }
    }

    /// `(⟨x⟩, ⟨ε⟩, ln Σ weight)`.
    fn finish(&self) -> Option<(f64, f64, f64)> {
        let m = self.items.iter().map(|it| it.2).fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return None;
        }
        let (mut z, mut zx, mut ze) = (0.0, 0.0, 0.0);
        for &(x, e, lw) in &self.items {
            let w = (lw - m).exp();
            z += w;
            zx += w * x;
            ze += w * e;
        }
        Some((zx / z, ze / z, m + z.ln()))
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn check_pair(start: Node, end: Node) -> Result<(), ThermalError> {
    if start.precedes(&end) {
        Ok(())
    } else {
        Err(ThermalError::InvalidBoundary { start, end })
    }
}

/// Nodes of the rectangle `[start, end]` lying in layer `tau`, as an `i` range.
pub(crate) fn rect_range(start: Node, end: Node, tau: usize) -> std::ops::Range<usize> {
    let lo = start.i().max(tau.saturating_sub(end.j()));
    let hi = end.i().min(tau.saturating_sub(start.j()));
    if tau < start.j() || lo > hi {
        lo..lo
    } else {
        lo..hi + 1
    }
}

/// `⟨x(τ)⟩` and the per-layer energies for the chosen conditioning.
///
/// In bridge mode a node is weighted by `G_fwd · G_bwd · exp(+ε/T)`. When a
/// field had to flush reachable weights (energy spreads of hundreds of `T`),
/// regions of up to 2²⁴ nodes are recomputed exactly in the log domain.
pub fn thermal_average(fwd: &WeightField, cond: Conditioning<'_>, l: &EnergyLandscape) -> Result<LagPath, ThermalError> {
    if fwd.direction != Direction::Forward || fwd.n != l.n() {
        return Err(ThermalError::FieldMismatch);
    }
    let t = fwd.temperature;
    let start = fwd.origin;
    let mut acc = LayerMoments::default();
    match cond {
        Conditioning::Forward { end } => {
            check_node(l, end)?;
            check_pair(start, end)?;
            if fwd.lossy {
                match exact_forward(l, start, end, t) {
                    Err(ThermalError::PrecisionLoss { .. }) => {}
                    r => return r,
                }
            }
            let mut mean_x = Vec::new();
            let mut layer_energy = Vec::new();
            let mut log_z = f64::NEG_INFINITY;
            for tau in start.tau()..=end.tau() {
                acc.clear();
                let layer = &fwd.layers[tau];
                for (k, v) in layer.vals.iter().enumerate() {
                    let i = layer.lo + k;
                    acc.push(tau as f64 - 2.0 * i as f64, l.eps0(i, tau - i), log_or_neg_inf(*v) + layer.log_scale);
                }
                let (mx, me, lz) = acc.finish().ok_or(ThermalError::EmptyLayer(tau))?;
                mean_x.push(mx);
                layer_energy.push(me);
                log_z = lz;
            }
            Ok(LagPath {
                tau_start: start.tau(),
                energy: mean(&layer_energy),
                mean_x,
                layer_energy,
                log_partition: Some(log_z),
                start,
                end,
                temperature: t,
                mode: ThermalMode::Forward,
            })
        }
        Conditioning::Bridge(bwd) => {
            if bwd.direction != Direction::Backward || bwd.n != fwd.n || bwd.temperature != t {
                return Err(ThermalError::FieldMismatch);
            }
            let end = bwd.origin;
            check_pair(start, end)?;
            if fwd.lossy || bwd.lossy {
                match exact_bridge(l, start, end, t) {
                    Err(ThermalError::PrecisionLoss { .. }) => {}
                    r => return r,
                }
            }
            bridge_from_fields(fwd, bwd, l, &mut acc).ok_or(ThermalError::PrecisionLoss { start, end })
        }
    }
}

/// Margin (in nats) below the layer maximum that flushed weights must stay under.
const PRECISION_MARGIN: f64 = 36.0;

fn bridge_from_fields(fwd: &WeightField, bwd: &WeightField, l: &EnergyLandscape, acc: &mut LayerMoments) -> Option<LagPath> {
    let t = fwd.temperature;
    let (start, end) = (fwd.origin, bwd.origin);
    let ln_flush = FLUSH.ln();
    let mut mean_x = Vec::new();
    let mut layer_energy = Vec::new();
    for tau in start.tau()..=end.tau() {
        acc.clear();
        let (lf, lb) = (&fwd.layers[tau], &bwd.layers[tau]);
        let bound_f = ln_flush + lf.log_scale + fwd.stored_max(tau).max(1.0).ln();
        let bound_b = ln_flush + lb.log_scale + bwd.stored_max(tau).max(1.0).ln();
        let mut worst_lost = f64::NEG_INFINITY;
        for i in rect_range(start, end, tau) {
            let eps = l.eps0(i, tau - i);
            let (a, b) = (lf.log_at(i), lb.log_at(i));
            if a > f64::NEG_INFINITY && b > f64::NEG_INFINITY {
                acc.push((tau as f64) - 2.0 * i as f64, eps, a + b + eps / t);
            } else {
                let ua = if a > f64::NEG_INFINITY { a } else { bound_f };
                let ub = if b > f64::NEG_INFINITY { b } else { bound_b };
                worst_lost = worst_lost.max(ua + ub + eps / t);
            }
        }
        let best = acc.items.iter().map(|it| it.2).fold(f64::NEG_INFINITY, f64::max);
        if best == f64::NEG_INFINITY || worst_lost > best - PRECISION_MARGIN || worst_lost.is_nan() {
            return None;
        }
        let (mx, me, _) = acc.finish()?;
        mean_x.push(mx);
        layer_energy.push(me);
    }
    let log_z = fwd.log_weight(end);
    Some(LagPath {
        tau_start: start.tau(),
        energy: mean(&layer_energy),
        mean_x,
        layer_energy,
        log_partition: Some(log_z),
        start,
        end,
        temperature: t,
        mode: ThermalMode::Bridge,
    })
}

/// Bridge average computed node by node in the log domain over the rectangle.
pub(crate) fn exact_bridge(l: &EnergyLandscape, start: Node, end: Node, t: f64) -> Result<LagPath, ThermalError> {
    check_temperature(t)?;
    check_node(l, start)?;
    check_node(l, end)?;
    check_pair(start, end)?;
    let rows = end.t1 - start.t1 + 1;
    let cols = end.t2 - start.t2 + 1;
    if rows.saturating_mul(cols) > EXACT_MAX_NODES {
        return Err(ThermalError::PrecisionLoss { start, end });
    }
    let ninf = f64::NEG_INFINITY;
    let e = |r: usize, c: usize| l.eps0(start.i() + r, start.j() + c) / t;
    let mut lf = vec![ninf; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let k = r * cols + c;
            let s = if r == 0 && c == 0 {
                0.0
            } else {
                let up = if r > 0 { lf[k - cols] } else { ninf };
                let left = if c > 0 { lf[k - 1] } else { ninf };
                let diag = if r > 0 && c > 0 { lf[k - cols - 1] } else { ninf };
                log_sum_exp3(up, left, diag)
            };
            lf[k] = s - e(r, c);
        }
    }
    // Exclusive backward weights: paths from each node's successors to the end.
    let mut lb = vec![ninf; rows * cols];
    for r in (0..rows).rev() {
        for c in (0..cols).rev() {
            let k = r * cols + c;
            if r == rows - 1 && c == cols - 1 {
                lb[k] = 0.0;
                continue;
            }
            let down = if r + 1 < rows { lb[k + cols] - e(r + 1, c) } else { ninf };
            let right = if c + 1 < cols { lb[k + 1] - e(r, c + 1) } else { ninf };
            let diag = if r + 1 < rows && c + 1 < cols {
                lb[k + cols + 1] - e(r + 1, c + 1)
            } else {
                ninf
            };
            lb[k] = log_sum_exp3(down, right, diag);
        }
    }
    let mut acc = LayerMoments::default();
    let mut mean_x = Vec::new();
    let mut layer_energy = Vec::new();
    for tau in start.tau()..=end.tau() {
        acc.clear();
        for i in rect_range(start, end, tau) {
            let (r, c) = (i - start.i(), tau - i - start.j());
            let k = r * cols + c;
            acc.push(tau as f64 - 2.0 * i as f64, l.eps0(i, tau - i), lf[k] + lb[k]);
        }
        let (mx, me, _) = acc.finish().ok_or(ThermalError::EmptyLayer(tau))?;
        mean_x.push(mx);
        layer_energy.push(me);
    }
    Ok(LagPath {
        tau_start: start.tau(),
        energy: mean(&layer_energy),
        mean_x,
        layer_energy,
        log_partition: Some(lf[rows * cols - 1]),
        start,
        end,
        temperature: t,
        mode: ThermalMode::Bridge,
    })
}

/// Forward-mode average computed node by node in the log domain.
pub(crate) fn exact_forward(l: &EnergyLandscape, start: Node, end: Node, t: f64) -> Result<LagPath, ThermalError> {
    check_temperature(t)?;
    check_node(l, start)?;
    check_node(l, end)?;
    check_pair(start, end)?;
    let tr = exact_forward_layers(l, start, end.tau(), t).ok_or(ThermalError::PrecisionLoss { start, end })?;
    Ok(LagPath {
        tau_start: start.tau(),
        energy: mean(&tr.layer_energy),
        mean_x: tr.mean_x,
        layer_energy: tr.layer_energy,
        log_partition: tr.log_z.last().copied(),
        start,
        end,
        temperature: t,
        mode: ThermalMode::Forward,
    })
}

/// Per-layer forward moments from `start.tau()` through `tau_end`.
#[derive(Debug, Clone, Default)]
pub(crate) struct ForwardLayers {
    pub mean_x: Vec<f64>,
    pub layer_energy: Vec<f64>,
    pub log_z: Vec<f64>,
}

/// Log-domain forward moments; `None` when the region exceeds the exact-size limit.
pub(crate) fn exact_forward_layers(l: &EnergyLandscape, start: Node, tau_end: usize, t: f64) -> Option<ForwardLayers> {
    let n = l.n();
    let rows = n - start.i();
    let cols = n - start.j();
    if rows.saturating_mul(cols) > EXACT_MAX_NODES {
        return None;
    }
    let ninf = f64::NEG_INFINITY;
    let mut lf = vec![ninf; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            if start.tau() + r + c > tau_end {
                break;
            }
            let k = r * cols + c;
            let s = if r == 0 && c == 0 {
                0.0
            } else {
                let up = if r > 0 { lf[k - cols] } else { ninf };
                let left = if c > 0 { lf[k - 1] } else { ninf };
                let diag = if r > 0 && c > 0 { lf[k - cols - 1] } else { ninf };
                log_sum_exp3(up, left, diag)
            };
            lf[k] = s - l.eps0(start.i() + r, start.j() + c) / t;
        }
    }
    let corner = Node::new(n, n);
    let mut acc = LayerMoments::default();
    let mut out = ForwardLayers::default();
    for tau in start.tau()..=tau_end {
        acc.clear();
        for i in rect_range(start, corner, tau) {
            let k = (i - start.i()) * cols + (tau - i - start.j());
            acc.push(tau as f64 - 2.0 * i as f64, l.eps0(i, tau - i), lf[k]);
        }
        let (mx, me, lz) = acc.finish()?;
        out.mean_x.push(mx);
        out.layer_energy.push(me);
        out.log_z.push(lz);
    }
    Some(out)
}

/// Thermal average `e_T` for the given conditioning.
pub fn path_energy(fwd: &WeightField, cond: Conditioning<'_>, l: &EnergyLandscape) -> Result<f64, ThermalError> {
    thermal_average(fwd, cond, l).map(|p| p.energy)
}

/// Thermal path between two boundary nodes in the given mode.
pub fn thermal_path(l: &EnergyLandscape, start: Node, end: Node, t: f64, mode: ThermalMode) -> Result<LagPath, ThermalError> {
    check_node(l, end)?;
    check_pair(start, end)?;
    let fwd = forward_weights(l, start, t)?;
    match mode {
        ThermalMode::Forward => thermal_average(&fwd, Conditioning::Forward { end }, l),
        ThermalMode::Bridge => {
            let bwd = backward_weights(l, end, t)?;
            thermal_average(&fwd, Conditioning::Bridge(&bwd), l)
        }
    }
}
