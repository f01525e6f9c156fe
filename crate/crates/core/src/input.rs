//! Launch-field generators.
//!
//! The capacity bound depends on the input only through `E0`, so the kinds
//! below are interchangeable for bound evaluation. `IidGaussian` hits `E0`
//! in expectation; the deterministic-energy kinds are rescaled to exactly
//! `E0`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dft::UnitaryDft;
use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::grid::SimulationGrid;
use crate::rng::{Purpose, SeedTree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InputKind {
    /// Each sample proper complex Gaussian with variance E0/L.
    IidGaussian,
    /// `sqrt(E0/L) exp(j 2 pi bin l / L)`.
    SingleTone {
        #[serde(default)]
        bin: usize,
    },
    /// QPSK symbols on an ideal low-pass (periodic sinc) pulse occupying the
    /// circular bin range `[band_start, band_start + band_bins)`.
    SincPulseTrain {
        #[serde(default)]
        band_start: usize,
        band_bins: usize,
        /// Symbols per block; defaults to `band_bins`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        num_symbols: Option<usize>,
    },
}

impl std::str::FromStr for InputKind {
    type Err = Error;

    /// Parses the bare kind names with default parameters (sinc trains
    /// default to a quarter of the band starting at bin 0 and need the grid,
    /// so they are rejected here).
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iid-gaussian" => Ok(InputKind::IidGaussian),
            "single-tone" => Ok(InputKind::SingleTone { bin: 0 }),
            other => Err(Error::InvalidArgument(format!("unknown input kind `{other}`"))),
        }
    }
}

pub(crate) fn proper_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Draws one launch field for `realization`.
pub fn generate_input(
    kind: &InputKind,
    energy: f64,
    grid: &SimulationGrid,
    seeds: &SeedTree,
    realization: u64,
) -> Result<FieldState> {
    if !(energy.is_finite() && energy >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "input energy must be finite and >= 0, got {energy}"
        )));
    }
    let l = grid.num_samples();
    if energy == 0.0 {
        return Ok(FieldState::zeros(0, l));
    }
    let mut rng = seeds.stream(realization, 0, Purpose::Input);
    let samples = match kind {
        InputKind::IidGaussian => {
            let var = energy / l as f64;
            (0..l).map(|_| proper_gaussian(&mut rng, var)).collect()
        }
        InputKind::SingleTone { bin } => {
            let amp = (energy / l as f64).sqrt();
            (0..l)
                .map(|i| Complex64::from_polar(amp, 2.0 * PI * ((bin * i) % l) as f64 / l as f64))
                .collect()
        }
        InputKind::SincPulseTrain {
            band_start,
            band_bins,
            num_symbols,
        } => {
            if *band_bins == 0 || *band_bins > l {
                return Err(Error::InvalidArgument(format!(
                    "band_bins must be in 1..={l}, got {band_bins}"
                )));
            }
            let n_sym = num_symbols.unwrap_or(*band_bins);
            if n_sym == 0 || n_sym > l {
                return Err(Error::InvalidArgument(format!(
                    "num_symbols must be in 1..={l}, got {n_sym}"
                )));
            }
            let mut train = vec![Complex64::new(0.0, 0.0); l];
            for s in 0..n_sym {
                let q: u8 = rng.random_range(0..4);
                let sym = Complex64::new(
                    if q & 1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 },
                    if q & 2 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 },
                );
                train[s * l / n_sym] += sym;
            }
            let dft = UnitaryDft::new(l);
            dft.forward_in_place(&mut train)?;
            for (i, v) in train.iter_mut().enumerate() {
                let offset = (i + l - band_start % l) % l;
                if offset >= *band_bins {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
            dft.inverse_in_place(&mut train)?;
            let e: f64 = train.iter().map(|v| v.norm_sqr()).sum();
            if e <= 0.0 {
                return Err(Error::InvalidArgument(
                    "pulse train has no energy inside the requested band".into(),
                ));
            }
            let scale = (energy / e).sqrt();
            train.iter_mut().for_each(|v| *v *= scale);
            train
        }
    };
    FieldState::new(0, samples)
}
