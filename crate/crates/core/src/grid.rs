use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform space/time discretization of the propagation problem.
///
/// Positions are `z_k = k * delta_z` for `k = 0..=K` and sample times are
/// `t_l = l * delta_t` for `l = 0..L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct SimulationGrid {
    delta_z: f64,
    delta_t: f64,
    num_steps: usize,
    num_samples: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    delta_z: f64,
    delta_t: f64,
    num_steps: usize,
    num_samples: usize,
}

impl TryFrom<RawGrid> for SimulationGrid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        SimulationGrid::new(raw.delta_z, raw.delta_t, raw.num_steps, raw.num_samples)
    }
}

impl From<SimulationGrid> for RawGrid {
    fn from(g: SimulationGrid) -> Self {
        RawGrid {
            delta_z: g.delta_z,
            delta_t: g.delta_t,
            num_steps: g.num_steps,
            num_samples: g.num_samples,
        }
    }
}

impl SimulationGrid {
    /// `num_samples` must be even and at least 2; `num_steps` at least 1.
    pub fn new(delta_z: f64, delta_t: f64, num_steps: usize, num_samples: usize) -> Result<Self> {
        if !(delta_z.is_finite() && delta_z > 0.0) {
            return Err(Error::InvalidGrid(format!("delta_z must be positive, got {delta_z}")));
        }
        if !(delta_t.is_finite() && delta_t > 0.0) {
            return Err(Error::InvalidGrid(format!("delta_t must be positive, got {delta_t}")));
        }
        if num_steps == 0 {
            return Err(Error::InvalidGrid("num_steps must be at least 1".into()));
        }
        if num_samples < 2 || num_samples % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "num_samples must be even and >= 2, got {num_samples}"
            )));
        }
        Ok(Self {
            delta_z,
            delta_t,
            num_steps,
            num_samples,
        })
    }

    pub fn delta_z(&self) -> f64 {
        self.delta_z
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    /// K
    pub fn num_steps(&self) -> usize {
        self.num_steps
    }

    /// L
    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    /// T = L * delta_t
    pub fn total_time(&self) -> f64 {
        self.num_samples as f64 * self.delta_t
    }

    /// B = 1 / delta_t
    pub fn sim_bandwidth(&self) -> f64 {
        1.0 / self.delta_t
    }

    /// z* = K * delta_z
    pub fn total_length(&self) -> f64 {
        self.num_steps as f64 * self.delta_z
    }

    /// Width of one DFT bin, B / L.
    pub fn bin_width(&self) -> f64 {
        self.sim_bandwidth() / self.num_samples as f64
    }

    /// Signed bin index: `l` for `l < L/2`, `l - L` otherwise.
    pub fn signed_bin(&self, l: usize) -> f64 {
        let n = self.num_samples;
        if l < n / 2 {
            l as f64
        } else {
            l as f64 - n as f64
        }
    }

    /// Same grid with a different number of space steps.
    pub fn with_num_steps(&self, num_steps: usize) -> Result<Self> {
        Self::new(self.delta_z, self.delta_t, num_steps, self.num_samples)
    }
}
