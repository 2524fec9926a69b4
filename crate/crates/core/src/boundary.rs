//! Boundary grid and minimum-energy path selection.
//!
//! Every start and end node gets one weight sweep. For each layer the engine
//! holds the forward layers of all starts and the backward layers of all
//! ends at once, so every pair is assembled from a dot product instead of a
//! sweep of its own. Backward layers are produced in descending order while
//! pairs are assembled in ascending order; the engine bridges the two by
//! storing backward sweep states every `K` layers and recomputing one block of
//! `K` layers at a time.

use crate::landscape::EnergyLandscape;
use crate::lattice::Node;
use crate::thermal::{
    exact_bridge, exact_forward_layers, Checkpoint, Direction, Layer, LagPath, LayerPrep, Sweep, ThermalError,
    ThermalMode,
};
use crate::zerotemp::GroundStateField;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundaryError {
    #[error("boundary depth must be at least 1")]
    ZeroDepth,
    #[error("boundary depth {depth} must be smaller than the lattice size {n}")]
    DepthTooLarge { depth: usize, n: usize },
    #[error("boundary grid is for n = {spec}, landscape has n = {landscape}")]
    SizeMismatch { spec: usize, landscape: usize },
    #[error("no admissible start/end pair")]
    NoAdmissiblePair,
    #[error(transparent)]
    Thermal(#[from] ThermalError),
}

/// Candidate start and end nodes, each sorted by `(t₁, t₂)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundarySpec {
    pub n: usize,
    pub depth: usize,
    pub start_nodes: Vec<Node>,
    pub end_nodes: Vec<Node>,
}

/// Starts `(i, 1)` and `(1, i)` for `i = 1..=m`; ends `(N − i, N)` and
/// `(N, N − i)` for `i = 0..m`. Both sets have `2m − 1` nodes.
pub fn enumerate_boundaries(n: usize, depth: usize) -> Result<BoundarySpec, BoundaryError> {
    if depth == 0 {
        return Err(BoundaryError::ZeroDepth);
    }
    if depth >= n {
        return Err(BoundaryError::DepthTooLarge { depth, n });
    }
    let mut start_nodes: Vec<Node> = (1..=depth).flat_map(|i| [Node::new(i, 1), Node::new(1, i)]).collect();
    let mut end_nodes: Vec<Node> = (0..depth).flat_map(|i| [Node::new(n - i, n), Node::new(n, n - i)]).collect();
    for v in [&mut start_nodes, &mut end_nodes] {
        v.sort();
        v.dedup();
    }
    Ok(BoundarySpec {
        n,
        depth,
        start_nodes,
        end_nodes,
    })
}

/// Tuning knobs of the pair engine.
#[derive(Debug, Clone)]
pub struct EngineOptions {
    /// Layers per recomputation block; `None` picks from the memory budget.
    pub block_layers: Option<usize>,
    /// Approximate bytes allowed for stored backward layers.
    pub memory_budget: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            block_layers: None,
            memory_budget: 1 << 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairEval {
    pub energy: f64,
    pub log_partition: f64,
    /// The full path, when requested.
    pub path: Option<LagPath>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PairOutcome {
    /// The start does not precede the end.
    Inadmissible,
    /// The stored weights could not resolve the pair and the rectangle was
    /// too large to recompute exactly.
    Imprecise,
    Evaluated(PairEval),
}

impl PairOutcome {
    pub fn energy(&self) -> Option<f64> {
        match self {
            PairOutcome::Evaluated(e) => Some(e.energy),
            _ => None,
        }
    }
}

/// Forward regions up to this many nodes are recomputed exactly when a sweep flushed weights.
const EXACT_SMALL: usize = 1 << 18;
/// Smallest stored-unit partition sum accepted for a layer.
const Z_MIN: f64 = 1e-250;

#[derive(Debug, Clone, Default)]
struct PairAcc {
    energy_sum: f64,
    layers: usize,
    log_z: f64,
    imprecise: bool,
    mean_x: Vec<f64>,
    layer_energy: Vec<f64>,
}

/// `(Σ f·b, Σ k·f·b, Σ fe·b)` over aligned slices.
#[inline]
fn dot3(f: &[f64], fe: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let len = f.len().min(b.len()).min(fe.len());
    let (f, fe, b) = (&f[..len], &fe[..len], &b[..len]);
    let mut z = [0.0f64; 4];
    let mut zk = [0.0f64; 4];
    let mut ze = [0.0f64; 4];
    let chunks = len / 4;
    for c in 0..chunks {
        for l in 0..4 {
            let k = 4 * c + l;
            let p = f[k] * b[k];
            z[l] += p;
            zk[l] += p * k as f64;
            ze[l] += fe[k] * b[k];
        }
    }
    for k in 4 * chunks..len {
        let p = f[k] * b[k];
        z[0] += p;
        zk[0] += p * k as f64;
        ze[0] += fe[k] * b[k];
    }
    (
        (z[0] + z[1]) + (z[2] + z[3]),
        (zk[0] + zk[1]) + (zk[2] + zk[3]),
        (ze[0] + ze[1]) + (ze[2] + ze[3]),
    )
}

fn check_spec(l: &EnergyLandscape, starts: &[Node], ends: &[Node], t: f64) -> Result<(), BoundaryError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(ThermalError::TemperatureNonPositive(t).into());
    }
    for v in starts.iter().chain(ends) {
        if !v.in_lattice(l.n()) {
            return Err(ThermalError::OutsideLattice(*v).into());
        }
    }
    Ok(())
}

/// Thermal averages for every `(start, end)` pair, indexed `[start][end]`.
///
/// Uses one sweep per boundary node. With `keep_paths` each evaluated pair
/// also carries its full [`LagPath`].
pub fn evaluate_pairs(
    l: &EnergyLandscape,
    starts: &[Node],
    ends: &[Node],
    t: f64,
    mode: ThermalMode,
    opts: &EngineOptions,
    keep_paths: bool,
) -> Result<Vec<Vec<PairOutcome>>, BoundaryError> {
    check_spec(l, starts, ends, t)?;
    let outcomes = match mode {
        ThermalMode::Bridge => bridge_engine(l, starts, ends, t, opts, keep_paths),
        ThermalMode::Forward => forward_engine(l, starts, ends, t, keep_paths),
    };
    Ok(outcomes)
}

fn finish_pair(acc: &PairAcc, s: Node, e: Node, t: f64, mode: ThermalMode, keep_paths: bool) -> PairOutcome {
    if acc.imprecise || acc.layers == 0 {
        return PairOutcome::Imprecise;
    }
    let energy = acc.energy_sum / acc.layers as f64;
    let path = keep_paths.then(|| LagPath {
        tau_start: s.tau(),
        mean_x: acc.mean_x.clone(),
        layer_energy: acc.layer_energy.clone(),
        energy,
        log_partition: Some(acc.log_z),
        start: s,
        end: e,
        temperature: t,
        mode,
    });
    PairOutcome::Evaluated(PairEval {
        energy,
        log_partition: acc.log_z,
        path,
    })
}

fn from_exact(r: Result<LagPath, ThermalError>, keep_paths: bool) -> PairOutcome {
    match r {
        Ok(p) => PairOutcome::Evaluated(PairEval {
            energy: p.energy,
            log_partition: p.log_partition.unwrap_or(f64::NAN),
            path: keep_paths.then_some(p),
        }),
        Err(_) => PairOutcome::Imprecise,
    }
}

fn block_size(n: usize, n_ends: usize, n_layers: usize, opts: &EngineOptions) -> usize {
    if let Some(k) = opts.block_layers {
        return k.clamp(1, n_layers.max(1));
    }
    let full = 8usize.saturating_mul(n).saturating_mul(n_ends + 2).saturating_mul(n_layers);
    if full <= opts.memory_budget {
        return n_layers.max(1);
    }
    let k = ((2 * n_ends * n_layers) as f64 / (n_ends + 2) as f64).sqrt().ceil() as usize;
    k.clamp(1, n_layers.max(1))
}

fn bridge_engine(
    l: &EnergyLandscape,
    starts: &[Node],
    ends: &[Node],
    t: f64,
    opts: &EngineOptions,
    keep_paths: bool,
) -> Vec<Vec<PairOutcome>> {
    let n = l.n();
    let admissible = |s: &Node, e: &Node| s.precedes(e);
    let tau_max = match ends.iter().filter(|e| starts.iter().any(|s| admissible(s, e))).map(|e| e.tau()).max() {
        Some(v) => v,
        None => {
            return starts
                .iter()
                .map(|_| vec![PairOutcome::Inadmissible; ends.len()])
                .collect()
        }
    };
    let n_layers = tau_max + 1;
    let k = block_size(n, ends.len(), n_layers, opts);
    let n_blocks = n_layers.div_ceil(k);

    // Backward states at the top of each block except the last.
    let mut checkpoints: Vec<Vec<Option<Checkpoint>>> = vec![vec![None; ends.len()]; n_blocks];
    if n_blocks > 1 {
        let mut sweeps: Vec<Option<Sweep>> = vec![None; ends.len()];
        let mut prep = LayerPrep::default();
        for tau in (k..=tau_max).rev() {
            prep.compute(l, tau, t);
            sweeps.par_iter_mut().zip(ends).for_each(|(sw, e)| {
                if e.tau() == tau {
                    *sw = Some(Sweep::seed(l, *e, t, Direction::Backward));
                } else if let Some(sw) = sw.as_mut() {
                    sw.advance(&prep, false);
                }
            });
            if tau % k == 0 {
                let b = tau / k - 1;
                for (cp, sw) in checkpoints[b].iter_mut().zip(&sweeps) {
                    *cp = sw.as_ref().map(Sweep::checkpoint);
                }
            }
        }
    }

    let mut accs: Vec<Vec<PairAcc>> = starts
        .iter()
        .map(|s| {
            ends.iter()
                .map(|e| PairAcc {
                    log_z: f64::NEG_INFINITY,
                    mean_x: if keep_paths && admissible(s, e) {
                        Vec::with_capacity(e.tau() + 1 - s.tau())
                    } else {
                        Vec::new()
                    },
                    ..PairAcc::default()
                })
                .collect()
        })
        .collect();
    let mut fwd: Vec<Option<Sweep>> = vec![None; starts.len()];
    let mut fwd_eps: Vec<Vec<f64>> = vec![Vec::new(); starts.len()];

    for b in 0..n_blocks {
        let lo = b * k;
        let hi = ((b + 1) * k).min(n_layers);
        let preps: Vec<LayerPrep> = (lo..hi).into_par_iter().map(|tau| LayerPrep::new(l, tau, t)).collect();
        let stored: Vec<Vec<Layer>> = ends
            .par_iter()
            .enumerate()
            .map(|(ei, e)| {
                let mut layers = vec![Layer::default(); hi - lo];
                let te = e.tau();
                if te < lo {
                    return layers;
                }
                let mut sw = if te >= hi {
                    match &checkpoints[b][ei] {
                        Some(cp) => Sweep::resume(cp, t, Direction::Backward),
                        None => return layers,
                    }
                } else {
                    let sw = Sweep::seed(l, *e, t, Direction::Backward);
                    layers[te - lo] = sw.excl.clone();
                    sw
                };
                while sw.tau > lo {
                    let next = sw.next_tau();
                    sw.advance(&preps[next - lo], true);
                    layers[next - lo] = sw.excl.clone();
                }
                layers
            })
            .collect();
        checkpoints[b].clear();

        for tau in lo..hi {
            let prep = &preps[tau - lo];
            fwd.par_iter_mut()
                .zip(fwd_eps.par_iter_mut())
                .zip(starts.par_iter())
                .for_each(|((sw, fe), s)| {
                    if s.tau() == tau {
                        *sw = Some(Sweep::seed(l, *s, t, Direction::Forward));
                    } else if let Some(sw) = sw.as_mut() {
                        sw.advance(prep, false);
                    }
                    if let Some(sw) = sw.as_ref() {
                        let layer = &sw.cur;
                        fe.clear();
                        fe.extend(layer.vals.iter().enumerate().map(|(k, v)| v * prep.eps_at(layer.lo + k)));
                    }
                });
            accs.par_iter_mut().enumerate().for_each(|(si, row)| {
                let s = starts[si];
                let Some(sw) = fwd[si].as_ref() else { return };
                let f = &sw.cur;
                let fe = &fwd_eps[si];
                for (ei, acc) in row.iter_mut().enumerate() {
                    let e = ends[ei];
                    if !admissible(&s, &e) || tau < s.tau() || tau > e.tau() || acc.imprecise {
                        continue;
                    }
                    let bl = &stored[ei][tau - lo];
                    let a = f.lo.max(bl.lo);
                    let z_hi = f.hi().min(bl.hi());
                    let (z, zk, ze) = if a < z_hi {
                        dot3(&f.vals[a - f.lo..z_hi - f.lo], &fe[a - f.lo..z_hi - f.lo], &bl.vals[a - bl.lo..z_hi - bl.lo])
                    } else {
                        (0.0, 0.0, 0.0)
                    };
                    if !(z >= Z_MIN) {
                        acc.imprecise = true;
                        continue;
                    }
                    let mean_i = a as f64 + zk / z;
                    let mx = tau as f64 - 2.0 * mean_i;
                    let me = ze / z;
                    acc.energy_sum += me;
                    acc.layers += 1;
                    if keep_paths {
                        acc.mean_x.push(mx);
                        acc.layer_energy.push(me);
                    }
                    if tau == e.tau() {
                        acc.log_z = z.ln() + f.log_scale + bl.log_scale;
                    }
                }
            });
        }
    }

    let mut out: Vec<Vec<PairOutcome>> = accs
        .iter()
        .enumerate()
        .map(|(si, row)| {
            row.iter()
                .enumerate()
                .map(|(ei, acc)| {
                    let (s, e) = (starts[si], ends[ei]);
                    if !admissible(&s, &e) {
                        PairOutcome::Inadmissible
                    } else {
                        finish_pair(acc, s, e, t, ThermalMode::Bridge, keep_paths)
                    }
                })
                .collect()
        })
        .collect();
    // Pairs the stored fields could not resolve are recomputed exactly.
    let redo: Vec<(usize, usize)> = (0..starts.len())
        .flat_map(|si| (0..ends.len()).map(move |ei| (si, ei)))
        .filter(|&(si, ei)| {
            let (s, e) = (starts[si], ends[ei]);
            admissible(&s, &e) && matches!(out[si][ei], PairOutcome::Imprecise)
        })
        .collect();
    let redone: Vec<PairOutcome> = redo
        .par_iter()
        .map(|&(si, ei)| from_exact(exact_bridge(l, starts[si], ends[ei], t), keep_paths))
        .collect();
    for (&(si, ei), r) in redo.iter().zip(redone) {
        out[si][ei] = r;
    }
    out
}

fn forward_engine(l: &EnergyLandscape, starts: &[Node], ends: &[Node], t: f64, keep_paths: bool) -> Vec<Vec<PairOutcome>> {
    let n = l.n();
    let tau_max = ends.iter().map(|e| e.tau()).max().unwrap_or(0);
    struct Track {
        mean_x: Vec<f64>,
        layer_energy: Vec<f64>,
        log_z: Vec<f64>,
        lossy: bool,
    }
    let tracks: Vec<Track> = starts
        .par_iter()
        .map(|s| {
            let mut tr = Track {
                mean_x: Vec::new(),
                layer_energy: Vec::new(),
                log_z: Vec::new(),
                lossy: false,
            };
            if s.tau() > tau_max {
                return tr;
            }
            let mut sw = Sweep::seed(l, *s, t, Direction::Forward);
            let mut prep = LayerPrep::new(l, s.tau(), t);
            loop {
                let layer = &sw.cur;
                let (mut z, mut zx, mut ze) = (0.0, 0.0, 0.0);
                for (k, v) in layer.vals.iter().enumerate() {
                    let i = layer.lo + k;
                    z += v;
                    zx += v * (sw.tau as f64 - 2.0 * i as f64);
                    ze += v * prep.eps_at(i);
                }
                tr.mean_x.push(zx / z);
                tr.layer_energy.push(ze / z);
                tr.log_z.push(z.ln() + layer.log_scale);
                if sw.tau == tau_max {
                    break;
                }
                prep.compute(l, sw.tau + 1, t);
                sw.advance(&prep, false);
            }
            tr.lossy = sw.lossy;
            if tr.lossy && (n - s.i()) * (n - s.j()) <= EXACT_SMALL {
                if let Some(ex) = exact_forward_layers(l, *s, tau_max, t) {
                    tr.mean_x = ex.mean_x;
                    tr.layer_energy = ex.layer_energy;
                    tr.log_z = ex.log_z;
                }
            }
            tr
        })
        .collect();
    let mut out: Vec<Vec<PairOutcome>> = Vec::with_capacity(starts.len());
    for (s, tr) in starts.iter().zip(&tracks) {
        let mut prefix = vec![0.0; tr.layer_energy.len() + 1];
        for (k, e) in tr.layer_energy.iter().enumerate() {
            prefix[k + 1] = prefix[k] + e;
        }
        let row = ends
            .par_iter()
            .map(|e| {
                if !s.precedes(e) {
                    return PairOutcome::Inadmissible;
                }
                let len = e.tau() - s.tau() + 1;
                let energy = prefix[len] / len as f64;
                let log_z = tr.log_z[len - 1];
                PairOutcome::Evaluated(PairEval {
                    energy,
                    log_partition: log_z,
                    path: keep_paths.then(|| LagPath {
                        tau_start: s.tau(),
                        mean_x: tr.mean_x[..len].to_vec(),
                        layer_energy: tr.layer_energy[..len].to_vec(),
                        energy,
                        log_partition: Some(log_z),
                        start: *s,
                        end: *e,
                        temperature: t,
                        mode: ThermalMode::Forward,
                    }),
                })
            })
            .collect();
        out.push(row);
    }
    out
}

/// Outcome of a boundary search.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub best: LagPath,
    pub best_start: usize,
    pub best_end: usize,
    /// `e_T` per `[start][end]`; `None` for skipped pairs.
    pub energy_table: Vec<Vec<Option<f64>>>,
    /// Best `e_T` minus second-best `e_T` (never positive); `None` with one pair.
    pub runner_up_gap: Option<f64>,
    pub inadmissible_pairs: usize,
    /// Pairs the engine could not resolve to double precision.
    pub imprecise_pairs: usize,
    pub spec: BoundarySpec,
}

impl SelectionResult {
    /// `(min, max, mean)` over the evaluated entries.
    pub fn table_stats(&self) -> (f64, f64, f64) {
        let vals: Vec<f64> = self.energy_table.iter().flatten().flatten().copied().collect();
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (min, max, vals.iter().sum::<f64>() / vals.len() as f64)
    }

    pub fn evaluated_pairs(&self) -> usize {
        self.energy_table.iter().flatten().flatten().count()
    }
}

/// Position of the minimum, first in `(start, end)` order on ties, and the gap to the runner-up.
fn argmin(table: &[Vec<Option<f64>>]) -> Option<((usize, usize), Option<f64>)> {
    let mut best: Option<((usize, usize), f64)> = None;
    let mut second = f64::INFINITY;
    for (si, row) in table.iter().enumerate() {
        for (ei, v) in row.iter().enumerate() {
            let Some(v) = *v else { continue };
            match best {
                Some((_, b)) if v >= b => second = second.min(v),
                Some((_, b)) => {
                    second = b;
                    best = Some(((si, ei), v));
                }
                None => best = Some(((si, ei), v)),
            }
        }
    }
    best.map(|(pos, b)| (pos, second.is_finite().then(|| b - second)))
}

fn check_sizes(l: &EnergyLandscape, spec: &BoundarySpec) -> Result<(), BoundaryError> {
    if spec.n != l.n() {
        return Err(BoundaryError::SizeMismatch {
            spec: spec.n,
            landscape: l.n(),
        });
    }
    Ok(())
}

/// Evaluate every boundary pair and return the one with the smallest `e_T`.
pub fn select_optimal(l: &EnergyLandscape, spec: &BoundarySpec, t: f64, mode: ThermalMode) -> Result<SelectionResult, BoundaryError> {
    select_optimal_with(l, spec, t, mode, &EngineOptions::default())
}

pub fn select_optimal_with(
    l: &EnergyLandscape,
    spec: &BoundarySpec,
    t: f64,
    mode: ThermalMode,
    opts: &EngineOptions,
) -> Result<SelectionResult, BoundaryError> {
    check_sizes(l, spec)?;
    let keep_all = mode == ThermalMode::Forward;
    let outcomes = evaluate_pairs(l, &spec.start_nodes, &spec.end_nodes, t, mode, opts, keep_all)?;
    let energy_table: Vec<Vec<Option<f64>>> = outcomes.iter().map(|r| r.iter().map(PairOutcome::energy).collect()).collect();
    let count = |f: fn(&PairOutcome) -> bool| outcomes.iter().flatten().filter(|o| f(o)).count();
    let inadmissible_pairs = count(|o| matches!(o, PairOutcome::Inadmissible));
    let imprecise_pairs = count(|o| matches!(o, PairOutcome::Imprecise));
    let ((si, ei), runner_up_gap) = argmin(&energy_table).ok_or(BoundaryError::NoAdmissiblePair)?;
    let best = match &outcomes[si][ei] {
        PairOutcome::Evaluated(PairEval { path: Some(p), .. }) => p.clone(),
        _ => {
            let (s, e) = (spec.start_nodes[si], spec.end_nodes[ei]);
            let again = evaluate_pairs(l, &[s], &[e], t, mode, opts, true)?;
            match again.into_iter().next().and_then(|r| r.into_iter().next()) {
                Some(PairOutcome::Evaluated(PairEval { path: Some(p), .. })) => p,
                _ => return Err(ThermalError::PrecisionLoss { start: s, end: e }.into()),
            }
        }
    };
    Ok(SelectionResult {
        best,
        best_start: si,
        best_end: ei,
        energy_table,
        runner_up_gap,
        inadmissible_pairs,
        imprecise_pairs,
        spec: spec.clone(),
    })
}

/// Zero-temperature selection: the exact minimum-energy path for every pair,
/// ranked by mean node energy.
pub fn select_ground_state(l: &EnergyLandscape, spec: &BoundarySpec) -> Result<(SelectionResult, crate::zerotemp::HardPath), BoundaryError> {
    check_sizes(l, spec)?;
    let corner = Node::new(l.n(), l.n());
    let mut energy_table = Vec::with_capacity(spec.start_nodes.len());
    let mut inadmissible_pairs = 0;
    for s in &spec.start_nodes {
        let field = GroundStateField::new(l, *s, corner).expect("start inside lattice");
        let row: Vec<Option<f64>> = spec
            .end_nodes
            .iter()
            .map(|e| {
                let p = field.path_to(*e)?;
                Some(p.mean_energy())
            })
            .collect();
        inadmissible_pairs += row.iter().filter(|v| v.is_none()).count();
        energy_table.push(row);
    }
    let ((si, ei), runner_up_gap) = argmin(&energy_table).ok_or(BoundaryError::NoAdmissiblePair)?;
    let hard = crate::zerotemp::optimal_path(l, spec.start_nodes[si], spec.end_nodes[ei]).expect("admissible pair");
    Ok((
        SelectionResult {
            best: hard.to_lag_path(l),
            best_start: si,
            best_end: ei,
            energy_table,
            runner_up_gap,
            inadmissible_pairs,
            imprecise_pairs: 0,
            spec: spec.clone(),
        },
        hard,
    ))
}
