use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SimulationGrid;

/// Physical constants of the channel.
///
/// `loss_profile` holds per-DFT-bin amplitude gains in (0, 1] and
/// `noise_profile` per-bin noise-variance multipliers (>= 0). An absent
/// profile means all ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Group-velocity dispersion, s^2/m.
    pub beta2: f64,
    /// Third-order dispersion, s^3/m.
    #[serde(default)]
    pub beta3: f64,
    /// Nonlinearity coefficient, 1/(W m).
    pub gamma: f64,
    /// Noise spectral-density parameter N_ASE.
    pub n_ase: f64,
    /// Noise bandwidth B_n, Hz.
    pub b_n: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_profile: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_profile: Option<Vec<f64>>,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            beta2: 0.0,
            beta3: 0.0,
            gamma: 0.0,
            n_ase: 0.0,
            b_n: 1.0,
            loss_profile: None,
            noise_profile: None,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("beta2", self.beta2), ("beta3", self.beta3), ("gamma", self.gamma)] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite")));
            }
        }
        if !(self.n_ase.is_finite() && self.n_ase >= 0.0) {
            return Err(Error::InvalidParams(format!("n_ase must be >= 0, got {}", self.n_ase)));
        }
        if !(self.b_n.is_finite() && self.b_n > 0.0) {
            return Err(Error::InvalidParams(format!("b_n must be > 0, got {}", self.b_n)));
        }
        if let Some(p) = &self.loss_profile {
            if let Some(bad) = p.iter().find(|&&g| !(g > 0.0 && g <= 1.0)) {
                return Err(Error::InvalidParams(format!(
                    "loss_profile entries must lie in (0, 1], found {bad}"
                )));
            }
        }
        if let Some(p) = &self.noise_profile {
            if let Some(bad) = p.iter().find(|&&s| !(s.is_finite() && s >= 0.0)) {
                return Err(Error::InvalidParams(format!(
                    "noise_profile entries must be >= 0, found {bad}"
                )));
            }
        }
        Ok(())
    }

    /// Validates and checks profile lengths against the grid.
    pub fn validate_for(&self, grid: &SimulationGrid) -> Result<()> {
        self.validate()?;
        let l = grid.num_samples();
        for p in [&self.loss_profile, &self.noise_profile].into_iter().flatten() {
            if p.len() != l {
                return Err(Error::LengthMismatch {
                    expected: l,
                    actual: p.len(),
                });
            }
        }
        Ok(())
    }

    /// Per-sample, per-step noise variance (N_ASE B_n / z*) dz dt.
    pub fn step_noise_variance(&self, grid: &SimulationGrid) -> f64 {
        self.n_ase * self.b_n / grid.total_length() * grid.delta_z() * grid.delta_t()
    }

    /// Total noise energy added over the link, N_ASE B_n T.
    pub fn total_noise_energy(&self, grid: &SimulationGrid) -> f64 {
        self.n_ase * self.b_n * grid.total_time()
    }

    /// True when a loss profile is present and not identically one.
    pub fn has_loss(&self) -> bool {
        self.loss_profile
            .as_ref()
            .is_some_and(|p| p.iter().any(|&g| g != 1.0))
    }

    pub fn has_noise_shaping(&self) -> bool {
        self.noise_profile
            .as_ref()
            .is_some_and(|p| p.iter().any(|&s| s != 1.0))
    }
}
