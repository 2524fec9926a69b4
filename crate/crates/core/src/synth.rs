//! Synthetic pairs with a known lag function, and an exhaustive path
//! enumeration oracle for small lattices.

use crate::ingest::AlignedPair;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("largest lag {max_lag} must be below n/4 for n = {n}")]
    LagOutOfRange { max_lag: i64, n: usize },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

/// Shape of the lag function `lag(t)`, `t = 1..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LagKind {
    Constant { k: i64 },
    /// `before` for `t < switch_index`, `after` from `switch_index` on.
    Step { before: i64, after: i64, switch_index: usize },
    /// `round(amplitude · sin(2πt / period))`.
    Sinusoidal { amplitude: f64, period: f64 },
    /// `Y_t = −X_{t−k}`.
    AntiCorrelated { k: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Driver {
    RandomWalk { sigma: f64 },
    Ar1 { rho: f64, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagScenario {
    pub kind: LagKind,
    pub driver: Driver,
    pub noise_sigma: f64,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub pair: AlignedPair,
    /// `lag(t)` for `t = 1..=n`.
    pub true_lag: Vec<f64>,
}

impl LagKind {
    pub fn lag_at(&self, t: usize) -> i64 {
        match *self {
            LagKind::Constant { k } | LagKind::AntiCorrelated { k } => k,
            LagKind::Step {
                before,
                after,
                switch_index,
            } => {
                if t < switch_index {
                    before
                } else {
                    after
                }
            }
            LagKind::Sinusoidal { amplitude, period } => {
                (amplitude * (2.0 * std::f64::consts::PI * t as f64 / period).sin()).round() as i64
            }
        }
    }

    fn sign(&self) -> f64 {
        match self {
            LagKind::AntiCorrelated { .. } => -1.0,
            _ => 1.0,
        }
    }
}

fn parse_fields<T: FromStr>(parts: &[&str], what: &str) -> Result<Vec<T>, SynthError> {
    parts
        .iter()
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| SynthError::InvalidScenario(format!("bad {what} parameter '{p}'")))
        })
        .collect()
}

impl FromStr for LagKind {
    type Err = SynthError;

    /// `constant:K`, `step:K1:K2:SWITCH`, `sine:AMPLITUDE:PERIOD` or `anti:K`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || SynthError::InvalidScenario(format!("unrecognised lag kind '{s}'"));
        match (parts[0], parts.len()) {
            ("constant", 2) => Ok(LagKind::Constant {
                k: parse_fields(&parts[1..], "lag")?[0],
            }),
            ("anti", 2) => Ok(LagKind::AntiCorrelated {
                k: parse_fields(&parts[1..], "lag")?[0],
            }),
            ("step", 4) => {
                let ks: Vec<i64> = parse_fields(&parts[1..3], "lag")?;
                let sw: Vec<usize> = parse_fields(&parts[3..], "switch")?;
                Ok(LagKind::Step {
                    before: ks[0],
                    after: ks[1],
                    switch_index: sw[0],
                })
            }
            ("sine", 3) => {
                let v: Vec<f64> = parse_fields(&parts[1..], "sine")?;
                Ok(LagKind::Sinusoidal {
                    amplitude: v[0],
                    period: v[1],
                })
            }
            _ => Err(bad()),
        }
    }
}

impl FromStr for Driver {
    type Err = SynthError;

    /// `rw:SIGMA` or `ar1:RHO:SIGMA`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        match (parts[0], parts.len()) {
            ("rw", 2) => Ok(Driver::RandomWalk {
                sigma: parse_fields(&parts[1..], "driver")?[0],
            }),
            ("ar1", 3) => {
                let v: Vec<f64> = parse_fields(&parts[1..], "driver")?;
                Ok(Driver::Ar1 { rho: v[0], sigma: v[1] })
            }
            _ => Err(SynthError::InvalidScenario(format!("unrecognised driver '{s}'"))),
        }
    }
}

impl LagScenario {
    pub fn validate(&self) -> Result<(), SynthError> {
        let invalid = |m: &str| Err(SynthError::InvalidScenario(m.into()));
        if self.n < 20 {
            return invalid("n must be at least 20");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return invalid("noise_sigma must be finite and nonnegative");
        }
        match self.driver {
            Driver::RandomWalk { sigma } | Driver::Ar1 { sigma, .. } if !(sigma > 0.0 && sigma.is_finite()) => {
                return invalid("driver sigma must be positive");
            }
            Driver::Ar1 { rho, .. } if !rho.is_finite() => return invalid("rho must be finite"),
            _ => {}
        }
        match self.kind {
            LagKind::Sinusoidal { amplitude, period } if !(period > 0.0 && amplitude.is_finite()) => {
                return invalid("sinusoid needs a positive period and finite amplitude");
            }
            LagKind::Step { switch_index, .. } if switch_index < 1 || switch_index > self.n => {
                return invalid("switch index outside 1..=n");
            }
            _ => {}
        }
        let max_lag = self.max_abs_lag();
        if 4 * max_lag as usize >= self.n {
            return Err(SynthError::LagOutOfRange { max_lag, n: self.n });
        }
        Ok(())
    }

    fn max_abs_lag(&self) -> i64 {
        (1..=self.n).map(|t| self.kind.lag_at(t).abs()).max().unwrap_or(0)
    }
}

/// Draw `X` from the driver and set `Y_t = ±X_{t − lag(t)} + noise`.
///
/// The driver path is extended on both sides so that every lagged index is
/// defined; `X` is its central part.
pub fn generate(s: &LagScenario) -> Result<Generated, SynthError> {
    s.validate()?;
    let pad = s.max_abs_lag() as usize;
    let len = s.n + 2 * pad;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut ext = Vec::with_capacity(len);
    match s.driver {
        Driver::RandomWalk { sigma } => {
            let mut v = 0.0;
            for _ in 0..len {
                v += sigma * gauss();
                ext.push(v);
            }
        }
        Driver::Ar1 { rho, sigma } => {
            let mut v = if rho.abs() < 1.0 {
                sigma / (1.0 - rho * rho).sqrt() * gauss()
            } else {
                0.0
            };
            for _ in 0..len {
                v = rho * v + sigma * gauss();
                ext.push(v);
            }
        }
    }
    let x: Vec<f64> = ext[pad..pad + s.n].to_vec();
    let sign = s.kind.sign();
    let mut true_lag = Vec::with_capacity(s.n);
    let mut y = Vec::with_capacity(s.n);
    for t in 1..=s.n {
        let k = s.kind.lag_at(t);
        let idx = (pad + t - 1) as i64 - k;
        y.push(sign * ext[idx as usize] + s.noise_sigma * gauss());
        true_lag.push(k as f64);
    }
    let pair = AlignedPair::from_values(x, y).map_err(|e| SynthError::InvalidScenario(e.to_string()))?;
    Ok(Generated { pair, true_lag })
}

/// Exhaustive enumeration of directed paths on lattices with at most
/// [`oracle::MAX_SIZE`] nodes per side.
pub mod oracle {
    use crate::landscape::EnergyLandscape;
    use crate::lattice::Node;
    use crate::thermal::{Direction, ThermalMode};
    use thiserror::Error;

    pub const MAX_SIZE: usize = 10;

    #[derive(Debug, Error, Clone, PartialEq)]
    pub enum OracleError {
        #[error("lattice of size {0} is too large to enumerate (limit {MAX_SIZE})")]
        LatticeTooLarge(usize),
        #[error("start {start} does not precede end {end}")]
        InvalidBoundary { start: Node, end: Node },
        #[error("temperature must be positive")]
        TemperatureNonPositive,
        #[error("node {0} lies outside the lattice")]
        OutsideLattice(Node),
    }

    /// Neumaier-compensated sum.
    #[derive(Debug, Clone, Copy, Default)]
    struct Compensated {
        s: f64,
        c: f64,
    }

    impl Compensated {
        fn add(&mut self, v: f64) {
            let t = self.s + v;
            if self.s.abs() >= v.abs() {
                self.c += (self.s - t) + v;
            } else {
                self.c += (v - t) + self.s;
            }
            self.s = t;
        }

        fn scale(&mut self, r: f64) {
            self.s *= r;
            self.c *= r;
        }

        fn value(&self) -> f64 {
            self.s + self.c
        }
    }

    /// Compensated sum of `exp(lw)` terms with a running reference exponent.
    #[derive(Debug, Clone, Copy)]
    struct LogAcc {
        m: f64,
        sum: Compensated,
    }

    impl Default for LogAcc {
        fn default() -> Self {
            LogAcc {
                m: f64::NEG_INFINITY,
                sum: Compensated::default(),
            }
        }
    }

    impl LogAcc {
        fn add(&mut self, lw: f64) {
            if lw > self.m {
                if self.m > f64::NEG_INFINITY {
                    self.sum.scale((self.m - lw).exp());
                }
                self.m = lw;
            }
            self.sum.add((lw - self.m).exp());
        }

        fn ln(&self) -> f64 {
            if self.m == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                self.m + self.sum.value().ln()
            }
        }
    }

    #[derive(Debug, Clone, PartialEq)]
    pub struct OracleThermal {
        pub tau_start: usize,
        pub mean_x: Vec<f64>,
        pub layer_energy: Vec<f64>,
        pub energy: f64,
        pub log_partition: f64,
        /// Number of enumerated paths (bridge) or path prefixes (forward).
        pub path_count: u64,
    }

    #[derive(Debug, Clone, PartialEq)]
    pub struct OracleMinPath {
        pub nodes: Vec<Node>,
        pub energy: f64,
        pub path_count: u64,
    }

    fn check(l: &EnergyLandscape, nodes: &[Node]) -> Result<(), OracleError> {
        if l.n() > MAX_SIZE {
            return Err(OracleError::LatticeTooLarge(l.n()));
        }
        for v in nodes {
            if !v.in_lattice(l.n()) {
                return Err(OracleError::OutsideLattice(*v));
            }
        }
        Ok(())
    }

    fn check_pair(start: Node, end: Node) -> Result<(), OracleError> {
        if start.precedes(&end) {
            Ok(())
        } else {
            Err(OracleError::InvalidBoundary { start, end })
        }
    }

    fn successors(v: Node, bound: Node) -> impl Iterator<Item = Node> {
        [(1, 1), (1, 0), (0, 1)]
            .into_iter()
            .map(move |(a, b)| Node::new(v.t1 + a, v.t2 + b))
            .filter(move |w| w.precedes(&bound))
    }

    fn predecessors(v: Node) -> impl Iterator<Item = Node> {
        [(1, 1), (1, 0), (0, 1)]
            .into_iter()
            .filter(move |&(a, b)| v.t1 > a && v.t2 > b)
            .map(move |(a, b)| Node::new(v.t1 - a, v.t2 - b))
    }

    /// Depth-first enumeration; `visit` sees each path prefix with its energy.
    fn enumerate<F>(l: &EnergyLandscape, v: Node, next: &dyn Fn(Node) -> Vec<Node>, stack: &mut Vec<Node>, energy: Compensated, visit: &mut F)
    where
        F: FnMut(&[Node], f64),
    {
        let mut e = energy;
        e.add(l.eps(v.t1, v.t2));
        stack.push(v);
        visit(stack, e.value());
        for w in next(v) {
            enumerate(l, w, next, stack, e, visit);
        }
        stack.pop();
    }

    fn layer_stats(tau: usize, nodes: &[(Node, f64, f64)]) -> (f64, f64) {
        let m = nodes.iter().map(|v| v.2).fold(f64::NEG_INFINITY, f64::max);
        let (mut z, mut zx, mut ze) = (Compensated::default(), Compensated::default(), Compensated::default());
        for &(v, eps, lw) in nodes {
            debug_assert_eq!(v.tau(), tau);
            let w = (lw - m).exp();
            z.add(w);
            zx.add(w * v.lag() as f64);
            ze.add(w * eps);
        }
        (zx.value() / z.value(), ze.value() / z.value())
    }

    /// Boltzmann averages by explicit path enumeration.
    ///
    /// Bridge mode enumerates every path from `start` to `end` and weights each
    /// node by the total weight of paths through it. Forward mode weights each
    /// node by the total weight of paths from `start` into it and averages over
    /// whole layers up to `end`'s layer.
    pub fn brute_force_thermal(
        l: &EnergyLandscape,
        start: Node,
        end: Node,
        t: f64,
        mode: ThermalMode,
    ) -> Result<OracleThermal, OracleError> {
        check(l, &[start, end])?;
        check_pair(start, end)?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(OracleError::TemperatureNonPositive);
        }
        let n = l.n();
        let tau_end = end.tau();
        let mut node_acc = vec![LogAcc::default(); n * n];
        let mut z = LogAcc::default();
        let mut count = 0u64;
        let lattice_corner = Node::new(n, n);
        match mode {
            ThermalMode::Bridge => {
                let next = |v: Node| successors(v, end).collect::<Vec<_>>();
                enumerate(l, start, &next, &mut Vec::new(), Compensated::default(), &mut |stack, e| {
                    if *stack.last().unwrap() == end {
                        let lw = -e / t;
                        for v in stack {
                            node_acc[(v.t1 - 1) * n + v.t2 - 1].add(lw);
                        }
                        z.add(lw);
                        count += 1;
                    }
                });
            }
            ThermalMode::Forward => {
                let next = |v: Node| {
                    successors(v, lattice_corner)
                        .filter(|w| w.tau() <= tau_end)
                        .collect::<Vec<_>>()
                };
                enumerate(l, start, &next, &mut Vec::new(), Compensated::default(), &mut |stack, e| {
                    let v = stack.last().unwrap();
                    node_acc[(v.t1 - 1) * n + v.t2 - 1].add(-e / t);
                    count += 1;
                });
            }
        }
        let mut mean_x = Vec::new();
        let mut layer_energy = Vec::new();
        let mut last_layer = LogAcc::default();
        for tau in start.tau()..=tau_end {
            let nodes: Vec<(Node, f64, f64)> = (1..=n)
                .filter_map(|t1| {
                    let t2 = (tau + 2).checked_sub(t1)?;
                    let v = Node::new(t1, t2);
                    let lw = node_acc.get((t1 - 1) * n + t2.checked_sub(1)?)?.ln();
                    (v.in_lattice(n) && lw > f64::NEG_INFINITY).then(|| (v, l.eps(t1, t2), lw))
                })
                .collect();
            let (mx, me) = layer_stats(tau, &nodes);
            mean_x.push(mx);
            layer_energy.push(me);
            if tau == tau_end {
                for &(_, _, lw) in &nodes {
                    last_layer.add(lw);
                }
            }
        }
        let mut energy = Compensated::default();
        for e in &layer_energy {
            energy.add(*e);
        }
        Ok(OracleThermal {
            tau_start: start.tau(),
            energy: energy.value() / layer_energy.len() as f64,
            mean_x,
            layer_energy,
            log_partition: match mode {
                ThermalMode::Bridge => z.ln(),
                ThermalMode::Forward => last_layer.ln(),
            },
            path_count: count,
        })
    }

    /// The minimum-energy path from `start` to `end` by enumeration; the first
    /// path found wins ties.
    pub fn brute_force_min_path(l: &EnergyLandscape, start: Node, end: Node) -> Result<OracleMinPath, OracleError> {
        check(l, &[start, end])?;
        check_pair(start, end)?;
        let mut best: Option<(f64, Vec<Node>)> = None;
        let mut count = 0u64;
        let next = |v: Node| successors(v, end).collect::<Vec<_>>();
        enumerate(l, start, &next, &mut Vec::new(), Compensated::default(), &mut |stack, e| {
            if *stack.last().unwrap() == end {
                count += 1;
                if best.as_ref().map_or(true, |b| e < b.0) {
                    best = Some((e, stack.to_vec()));
                }
            }
        });
        let (energy, nodes) = best.expect("start precedes end");
        Ok(OracleMinPath {
            nodes,
            energy,
            path_count: count,
        })
    }

    /// `ln Σ_paths exp(−E/T)` over paths from `origin` to each node (forward) or
    /// from each node to `origin` (backward), row-major `n × n`; `−∞` where no
    /// path exists.
    pub fn brute_force_node_log_weights(
        l: &EnergyLandscape,
        origin: Node,
        t: f64,
        dir: Direction,
    ) -> Result<Vec<f64>, OracleError> {
        check(l, &[origin])?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(OracleError::TemperatureNonPositive);
        }
        let n = l.n();
        let corner = Node::new(n, n);
        let mut acc = vec![LogAcc::default(); n * n];
        let next = |v: Node| -> Vec<Node> {
            match dir {
                Direction::Forward => successors(v, corner).collect(),
                Direction::Backward => predecessors(v).collect(),
            }
        };
        enumerate(l, origin, &next, &mut Vec::new(), Compensated::default(), &mut |stack, e| {
            let v = stack.last().unwrap();
            acc[(v.t1 - 1) * n + v.t2 - 1].add(-e / t);
        });
        Ok(acc.iter().map(LogAcc::ln).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::*;
    use super::*;
    use crate::landscape::EnergyLandscape;
    use crate::lattice::{delannoy, Node};
    use crate::thermal::ThermalMode;

    fn scenario(kind: LagKind, noise: f64) -> LagScenario {
        LagScenario {
            kind,
            driver: Driver::RandomWalk { sigma: 1.0 },
            noise_sigma: noise,
            n: 100,
            seed: 3,
        }
    }

    #[test]
    fn constant_lag_is_exact_without_noise() {
        let g = generate(&scenario(LagKind::Constant { k: 5 }, 0.0)).unwrap();
        for t in 6..=100 {
            assert_eq!(g.pair.y[t - 1], g.pair.x[t - 6]);
        }
        assert!(g.true_lag.iter().all(|&k| k == 5.0));
    }

    #[test]
    fn anti_correlated_lag_negates() {
        let g = generate(&scenario(LagKind::AntiCorrelated { k: 3 }, 0.0)).unwrap();
        for t in 4..=100 {
            assert_eq!(g.pair.y[t - 1], -g.pair.x[t - 4]);
        }
    }

    #[test]
    fn step_lag_is_exact_step() {
        let g = generate(&scenario(
            LagKind::Step {
                before: 3,
                after: 9,
                switch_index: 50,
            },
            0.0,
        ))
        .unwrap();
        for t in 1..=100 {
            assert_eq!(g.true_lag[t - 1], if t < 50 { 3.0 } else { 9.0 });
        }
        assert_eq!(g.pair.y[59], g.pair.x[50]);
        assert_eq!(g.pair.y[20], g.pair.x[17]);
    }

    #[test]
    fn reproducible_and_seed_sensitive() {
        let s = scenario(LagKind::Sinusoidal { amplitude: 6.0, period: 40.0 }, 0.3);
        let a = generate(&s).unwrap();
        let b = generate(&s).unwrap();
        assert_eq!(a.pair.x, b.pair.x);
        assert_eq!(a.pair.y, b.pair.y);
        let c = generate(&LagScenario { seed: 4, ..s }).unwrap();
        assert_ne!(a.pair.x, c.pair.x);
        let ar = LagScenario {
            driver: Driver::Ar1 { rho: 0.9, sigma: 1.0 },
            ..scenario(LagKind::Constant { k: 2 }, 0.0)
        };
        let g = generate(&ar).unwrap();
        assert_eq!(g.pair.y[10], g.pair.x[8]);
    }

    #[test]
    fn rejects_out_of_range_lags() {
        assert_eq!(
            generate(&scenario(LagKind::Constant { k: 25 }, 0.0)).unwrap_err(),
            SynthError::LagOutOfRange { max_lag: 25, n: 100 }
        );
        assert!(generate(&LagScenario {
            n: 10,
            ..scenario(LagKind::Constant { k: 1 }, 0.0)
        })
        .is_err());
        assert!(generate(&scenario(LagKind::Constant { k: 1 }, -1.0)).is_err());
    }

    #[test]
    fn parses_scenarios() {
        assert_eq!("constant:5".parse::<LagKind>().unwrap(), LagKind::Constant { k: 5 });
        assert_eq!(
            "step:3:9:300".parse::<LagKind>().unwrap(),
            LagKind::Step {
                before: 3,
                after: 9,
                switch_index: 300
            }
        );
        assert_eq!(
            "sine:4:50".parse::<LagKind>().unwrap(),
            LagKind::Sinusoidal {
                amplitude: 4.0,
                period: 50.0
            }
        );
        assert_eq!("anti:-2".parse::<LagKind>().unwrap(), LagKind::AntiCorrelated { k: -2 });
        assert_eq!("ar1:0.5:2".parse::<Driver>().unwrap(), Driver::Ar1 { rho: 0.5, sigma: 2.0 });
        assert!("walk:1".parse::<Driver>().is_err());
        assert!("constant:x".parse::<LagKind>().is_err());
    }

    #[test]
    fn two_by_two_has_three_paths() {
        let l = EnergyLandscape::from_matrix(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let r = brute_force_thermal(&l, Node::new(1, 1), Node::new(2, 2), 1.0, ThermalMode::Bridge).unwrap();
        assert_eq!(r.path_count, 3);
        let z = (-0.7f64).exp() + (-0.8f64).exp() + (-0.5f64).exp();
        assert!((r.log_partition - z.ln()).abs() < 1e-15);
        // Layer 1: (1,2) with weight e^{-0.7}, (2,1) with e^{-0.8}.
        let (a, b) = ((-0.7f64).exp(), (-0.8f64).exp());
        assert!((r.mean_x[1] - (a - b) / (a + b)).abs() < 1e-15);
        assert_eq!(r.mean_x[0], 0.0);
    }

    #[test]
    fn counts_delannoy_paths() {
        let l = EnergyLandscape::from_matrix(4, vec![0.0; 16]).unwrap();
        let r = brute_force_thermal(&l, Node::new(1, 1), Node::new(4, 4), 1.0, ThermalMode::Bridge).unwrap();
        assert_eq!(r.path_count, 63);
        assert!((r.log_partition - 63f64.ln()).abs() < 1e-14);
        let m = brute_force_min_path(&l, Node::new(1, 1), Node::new(4, 4)).unwrap();
        assert_eq!(m.path_count as u128, delannoy(3, 3));
        let w = brute_force_node_log_weights(&l, Node::new(1, 1), 1.0, crate::thermal::Direction::Forward).unwrap();
        assert!((w[2 * 4 + 2].exp() - 13.0).abs() < 1e-12);
    }

    #[test]
    fn size_limit() {
        let l = EnergyLandscape::from_matrix(11, vec![0.0; 121]).unwrap();
        assert_eq!(
            brute_force_min_path(&l, Node::new(1, 1), Node::new(11, 11)).unwrap_err(),
            OracleError::LatticeTooLarge(11)
        );
    }

    #[test]
    fn highest_weight_path_at_low_temperature_is_ground_state() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let l = EnergyLandscape::from_matrix(7, (0..49).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
        let m = brute_force_min_path(&l, Node::new(1, 1), Node::new(7, 7)).unwrap();
        let hard = crate::zerotemp::optimal_path(&l, Node::new(1, 1), Node::new(7, 7)).unwrap();
        assert_eq!(m.nodes, hard.nodes);
        let r = brute_force_thermal(&l, Node::new(1, 1), Node::new(7, 7), 0.01, ThermalMode::Bridge).unwrap();
        assert!((r.log_partition + m.energy / 0.01).abs() < 1.0);
    }
}
