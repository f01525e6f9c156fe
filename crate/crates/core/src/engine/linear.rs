//! Frequency-domain all-pass filtering (dispersion).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dft::UnitaryDft;
use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::grid::SimulationGrid;
use crate::params::ChannelParams;

/// Diagonal filter applied between a forward and inverse unitary DFT.
///
/// `PaperDispersion` uses the bin frequency `nu_l = s_l / (L dt)` with
/// `s_l` the signed bin index and phase `-(beta2/2) nu^2 dz - (beta3/6) nu^3 dz`.
/// `PhysicalDispersion` uses the angular frequency `2 pi nu_l` in the same
/// law. `CustomPhases` takes per-bin phases directly; `magnitudes` is only
/// meant for negative controls and makes the filter non-unitary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum AllPassSpec {
    #[default]
    PaperDispersion,
    PhysicalDispersion,
    CustomPhases {
        phases: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        magnitudes: Option<Vec<f64>>,
    },
}

impl AllPassSpec {
    /// Filter taps for a step of length `fraction * delta_z`.
    pub fn taps(
        &self,
        params: &ChannelParams,
        grid: &SimulationGrid,
        fraction: f64,
    ) -> Result<Vec<Complex64>> {
        let l = grid.num_samples();
        let dz = grid.delta_z() * fraction;
        let span = l as f64 * grid.delta_t();
        let dispersion = |omega: f64| {
            -(params.beta2 / 2.0) * omega * omega * dz - (params.beta3 / 6.0) * omega.powi(3) * dz
        };
        let taps = match self {
            AllPassSpec::PaperDispersion => (0..l)
                .map(|i| Complex64::from_polar(1.0, dispersion(grid.signed_bin(i) / span)))
                .collect(),
            AllPassSpec::PhysicalDispersion => (0..l)
                .map(|i| Complex64::from_polar(1.0, dispersion(2.0 * PI * grid.signed_bin(i) / span)))
                .collect(),
            AllPassSpec::CustomPhases { phases, magnitudes } => {
                if phases.len() != l {
                    return Err(Error::LengthMismatch {
                        expected: l,
                        actual: phases.len(),
                    });
                }
                if let Some(m) = magnitudes {
                    if m.len() != l {
                        return Err(Error::LengthMismatch {
                            expected: l,
                            actual: m.len(),
                        });
                    }
                }
                phases
                    .iter()
                    .enumerate()
                    .map(|(i, th)| {
                        let mag = magnitudes.as_ref().map_or(1.0, |m| m[i].powf(fraction));
                        Complex64::from_polar(mag, th * fraction)
                    })
                    .collect()
            }
        };
        Ok(taps)
    }
}

/// Largest deviation of any tap magnitude from one.
pub fn all_pass_deviation(taps: &[Complex64]) -> f64 {
    taps.iter().map(|t| (t.norm() - 1.0).abs()).fold(0.0, f64::max)
}

/// `F^H D_L F` applied to `field`.
pub fn linear_step(
    field: &FieldState,
    spec: &AllPassSpec,
    params: &ChannelParams,
    grid: &SimulationGrid,
) -> Result<FieldState> {
    let taps = spec.taps(params, grid, 1.0)?;
    let mut s = field.samples().to_vec();
    UnitaryDft::new(grid.num_samples()).filter_in_place(&mut s, &taps)?;
    Ok(FieldState::from_parts(field.position(), s))
}

/// `F^H G F` with `G = diag(loss_profile)`; energy is non-increasing.
pub fn apply_loss(field: &FieldState, loss_profile: &[f64], grid: &SimulationGrid) -> Result<FieldState> {
    let l = grid.num_samples();
    if loss_profile.len() != l {
        return Err(Error::LengthMismatch {
            expected: l,
            actual: loss_profile.len(),
        });
    }
    let taps: Vec<Complex64> = loss_profile.iter().map(|&g| Complex64::new(g, 0.0)).collect();
    let mut s = field.samples().to_vec();
    UnitaryDft::new(l).filter_in_place(&mut s, &taps)?;
    Ok(FieldState::from_parts(field.position(), s))
}
