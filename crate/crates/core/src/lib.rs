//! Split-step Fourier simulation of the stochastic nonlinear Schrödinger
//! channel, with numerical checks of the energy and entropy arguments
//! behind the `L log(1 + E0 / (N_ASE B_n T))` capacity upper bound.
//!
//! Units: field samples are in sqrt(W), and "energy" is the plain sum
//! `sum |a_l|^2` (the trace of the correlation matrix) without a `delta_t`
//! factor. Multiply by `delta_t` for joules.

pub mod capacity;
pub mod dft;
pub mod engine;
pub mod error;
pub mod field;
pub mod grid;
pub mod input;
pub mod lab;
pub mod mi;
pub mod params;
pub mod rng;

pub use num_complex::Complex64;

pub use capacity::{
    capacity_bound, measure_bandwidth, spectral_efficiency_report, BandwidthProfile, CapacityBound,
    CapacityReport, Normalization,
};
pub use dft::{dft, idft, UnitaryDft};
pub use error::{Error, Result};
pub use field::{energy, mean_and_std_error, Ensemble, FieldState};
pub use grid::SimulationGrid;
pub use input::{generate_input, InputKind};
pub use mi::{estimate_mi, mi_from_ensembles, fit_auxiliary, mi_lower_bound, AuxiliaryChannelFit, MiLowerBound};
pub use params::ChannelParams;
pub use rng::{Purpose, SeedTree};
