//! Time-dependent lead-lag detection with the thermal optimal path method.
//!
//! Two series `X` and `Y` of equal length `N` define an `N × N` energy
//! landscape `ε(t₁, t₂)`. A directed polymer wandering over that landscape
//! traces the lag `x = t₂ − t₁` as a function of the diagonal time
//! `τ = t₁ + t₂ − 2`. At zero temperature the polymer is the minimum-energy
//! path; at finite temperature every path contributes with its Boltzmann
//! weight and the lag is the thermal average `⟨x(τ)⟩`.
//!
//! The crate is organised bottom-up:
//!
//! - [`ingest`]: CSV loading, synchronisation onto a shared grid, standardisation.
//! - [`landscape`]: the distance matrix in its three sign conventions.
//! - [`zerotemp`]: the exact minimum-energy path by dynamic programming.
//! - [`thermal`]: Boltzmann weight fields and the thermally averaged path.
//! - [`boundary`]: the start/end grid and minimum-energy path selection.
//! - [`consistency`]: rolling regression of `Y_t` on the lag-synchronised `X`.
//! - [`synth`]: synthetic lagged pairs and the brute-force path enumerator.
//! - [`pipeline`]: the end-to-end analysis that writes plot-ready files.

pub mod boundary;
pub mod consistency;
pub mod ingest;
pub mod landscape;
pub mod lattice;
pub mod output;
pub mod pipeline;
pub mod stats;
pub mod synth;
pub mod thermal;
pub mod zerotemp;

pub use boundary::{enumerate_boundaries, select_optimal, BoundarySpec, SelectionResult};
pub use consistency::{resample_lag_to_time, run_consistency, ConsistencyReport};
pub use ingest::{AlignedPair, Normalization, RawSeries};
pub use landscape::{build_landscape, DistanceMode, EnergyLandscape};
pub use lattice::{Node, RotatedCoord};
pub use thermal::{LagPath, ThermalMode, WeightField};
pub use zerotemp::{optimal_path, HardPath};
