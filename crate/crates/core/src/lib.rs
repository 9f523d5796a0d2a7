//! Quantum Brownian motion: bath kernels, Green's functions, thermal state,
//! Gaussian work statistics and fluctuation-theorem checks, with Monte Carlo
//! and finite-bath oracles.
//!
//! The numerical core is generic over [`Real`] (`f32`, `f64`); aliases for
//! `f64` are provided below since that is what every production path uses.

pub mod bath;
pub mod dechist;
pub mod error;
pub mod greens;
pub mod grid;
pub mod mc;
pub mod quad;
pub mod scalar;
pub mod special;
pub mod thermal;
pub mod work;

pub use bath::{BathKind, FrequencyGrid, KernelTable, SpectralDensity};
pub use dechist::HistoryPair;
pub use error::{Error, Result};
pub use greens::{GreensMethod, GreensSolutions, RetardedGreens};
pub use grid::TimeGrid;
pub use mc::{DiscreteBath, NoiseEnsemble};
pub use scalar::Real;
pub use thermal::{StationaryCorrelation, ThermalState};
pub use work::{Protocol, Shape, WorkDistribution};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type SpectralDensity64 = SpectralDensity<f64>;
pub type SpectralDensity32 = SpectralDensity<f32>;
pub type KernelTable64 = KernelTable<f64>;
pub type TimeGrid64 = TimeGrid<f64>;
pub type GreensSolutions64 = GreensSolutions<f64>;
pub type ThermalState64 = ThermalState<f64>;
pub type Protocol64 = Protocol<f64>;
pub type WorkDistribution64 = WorkDistribution<f64>;
pub type DiscreteBath64 = DiscreteBath<f64>;
