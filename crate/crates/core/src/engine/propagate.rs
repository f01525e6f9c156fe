//! Space marching: nonlinear step, linear step, optional loss, noise.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dft::UnitaryDft;
use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::grid::SimulationGrid;
use crate::params::ChannelParams;
use crate::rng::{Purpose, SeedTree};

use super::linear::AllPassSpec;
use super::noise::add_noise_in_place;
use super::nonlinear::NonlinearPhaseSpec;

/// Order of the deterministic sub-steps within one space step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepScheme {
    /// nonlinear, linear, loss, noise
    #[default]
    Standard,
    /// half linear, nonlinear, half linear, loss, noise
    Symmetric,
}

/// Filters unless every tap is exactly one, so an identity channel is
/// bit-exact.
fn filter(dft: &UnitaryDft, s: &mut [Complex64], taps: &[Complex64]) -> Result<()> {
    if taps.iter().all(|t| t.re == 1.0 && t.im == 0.0) {
        return Ok(());
    }
    dft.filter_in_place(s, taps)
}

/// Output of a single-realization run.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationRecord {
    pub input: FieldState,
    pub output: FieldState,
    /// Fields at `k = 0..=K` when retained.
    pub trajectory: Option<Vec<FieldState>>,
    pub master_seed: u64,
    pub realization: u64,
}

/// A configured channel with precomputed filter taps.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: SimulationGrid,
    params: ChannelParams,
    nonlinear: NonlinearPhaseSpec,
    linear: AllPassSpec,
    scheme: StepScheme,
    dft: UnitaryDft,
    full_taps: Vec<Complex64>,
    half_taps: Vec<Complex64>,
    loss_taps: Option<Vec<Complex64>>,
}

impl Propagator {
    pub fn new(
        grid: SimulationGrid,
        params: ChannelParams,
        nonlinear: NonlinearPhaseSpec,
        linear: AllPassSpec,
        scheme: StepScheme,
    ) -> Result<Self> {
        params.validate_for(&grid)?;
        let full_taps = linear.taps(&params, &grid, 1.0)?;
        let half_taps = linear.taps(&params, &grid, 0.5)?;
        let loss_taps = params
            .loss_profile
            .as_ref()
            .filter(|_| params.has_loss())
            .map(|p| p.iter().map(|&g| Complex64::new(g, 0.0)).collect());
        Ok(Self {
            dft: UnitaryDft::new(grid.num_samples()),
            grid,
            params,
            nonlinear,
            linear,
            scheme,
            full_taps,
            half_taps,
            loss_taps,
        })
    }

    /// Kerr nonlinearity with the default dispersion law.
    pub fn kerr(grid: SimulationGrid, params: ChannelParams) -> Result<Self> {
        let nl = NonlinearPhaseSpec::kerr(params.gamma);
        Self::new(grid, params, nl, AllPassSpec::PaperDispersion, StepScheme::Standard)
    }

    /// Same channel with the noise switched off.
    pub fn noiseless(&self) -> Result<Self> {
        let params = ChannelParams {
            n_ase: 0.0,
            ..self.params.clone()
        };
        Self::new(self.grid, params, self.nonlinear.clone(), self.linear.clone(), self.scheme)
    }

    pub fn grid(&self) -> &SimulationGrid {
        &self.grid
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn nonlinear(&self) -> &NonlinearPhaseSpec {
        &self.nonlinear
    }

    pub fn linear(&self) -> &AllPassSpec {
        &self.linear
    }

    pub fn scheme(&self) -> StepScheme {
        self.scheme
    }

    pub fn dft(&self) -> &UnitaryDft {
        &self.dft
    }

    /// Per-step linear filter taps.
    pub fn step_taps(&self) -> &[Complex64] {
        &self.full_taps
    }

    /// Taps of the linear filter accumulated over all K steps.
    pub fn cumulative_taps(&self) -> Result<Vec<Complex64>> {
        self.linear
            .taps(&self.params, &self.grid, self.grid.num_steps() as f64)
    }

    fn check_input(&self, field: &FieldState) -> Result<()> {
        if field.len() != self.grid.num_samples() {
            return Err(Error::LengthMismatch {
                expected: self.grid.num_samples(),
                actual: field.len(),
            });
        }
        if field.position() >= self.grid.num_steps() {
            return Err(Error::OutOfRange {
                index: field.position() + 1,
                max: self.grid.num_steps(),
            });
        }
        Ok(())
    }

    /// Applies the deterministic part of one step in place.
    pub fn deterministic_in_place(&self, s: &mut [Complex64]) -> Result<()> {
        let dz = self.grid.delta_z();
        match self.scheme {
            StepScheme::Standard => {
                self.nonlinear.apply_in_place(s, dz);
                filter(&self.dft, s, &self.full_taps)?;
            }
            StepScheme::Symmetric => {
                filter(&self.dft, s, &self.half_taps)?;
                self.nonlinear.apply_in_place(s, dz);
                filter(&self.dft, s, &self.half_taps)?;
            }
        }
        if let Some(g) = &self.loss_taps {
            filter(&self.dft, s, g)?;
        }
        Ok(())
    }

    /// `a(z_{k+1})` from `a(z_k)`; the noise stream is keyed by
    /// `(realization, k + 1)`.
    pub fn step(&self, field: &FieldState, seeds: &SeedTree, realization: u64) -> Result<FieldState> {
        self.check_input(field)?;
        let next = field.position() + 1;
        let mut s = field.samples().to_vec();
        self.deterministic_in_place(&mut s)?;
        let mut rng = seeds.stream(realization, next as u64, Purpose::Noise);
        add_noise_in_place(&mut s, &self.params, &self.grid, &self.dft, &mut rng)?;
        Ok(FieldState::from_parts(next, s))
    }

    /// Runs `K - k0` steps from the input position to `K`.
    pub fn propagate(
        &self,
        input: &FieldState,
        seeds: &SeedTree,
        realization: u64,
        retain_trajectory: bool,
    ) -> Result<PropagationRecord> {
        let mut trajectory = retain_trajectory.then(|| vec![input.clone()]);
        let out = self.propagate_with(input, seeds, realization, |f| {
            if let Some(t) = trajectory.as_mut() {
                t.push(f.clone());
            }
        })?;
        Ok(PropagationRecord {
            input: input.clone(),
            output: out,
            trajectory,
            master_seed: seeds.master(),
            realization,
        })
    }

    /// Propagates to `K`, calling `visit` on every intermediate field
    /// (positions `k0 + 1 ..= K`).
    pub fn propagate_with(
        &self,
        input: &FieldState,
        seeds: &SeedTree,
        realization: u64,
        mut visit: impl FnMut(&FieldState),
    ) -> Result<FieldState> {
        self.check_input(input)?;
        let mut cur = input.clone();
        while cur.position() < self.grid.num_steps() {
            cur = self.step(&cur, seeds, realization)?;
            visit(&cur);
        }
        Ok(cur)
    }

    /// Inverts the noise-free cascade from `output.position()` back to `k = 0`.
    ///
    /// Fails when a loss profile is configured.
    pub fn inverse_deterministic(&self, output: &FieldState) -> Result<FieldState> {
        if self.loss_taps.is_some() {
            return Err(Error::Unsupported(
                "the deterministic cascade is not inverted when a loss profile is present".into(),
            ));
        }
        if output.len() != self.grid.num_samples() {
            return Err(Error::LengthMismatch {
                expected: self.grid.num_samples(),
                actual: output.len(),
            });
        }
        let inv = |taps: &[Complex64]| taps.iter().map(|t| t.inv()).collect::<Vec<_>>();
        let inv_full = inv(&self.full_taps);
        let inv_half = inv(&self.half_taps);
        let dz = self.grid.delta_z();
        let mut s = output.samples().to_vec();
        for _ in 0..output.position() {
            match self.scheme {
                StepScheme::Standard => {
                    filter(&self.dft, &mut s, &inv_full)?;
                    self.nonlinear.invert_in_place(&mut s, dz);
                }
                StepScheme::Symmetric => {
                    filter(&self.dft, &mut s, &inv_half)?;
                    self.nonlinear.invert_in_place(&mut s, dz);
                    filter(&self.dft, &mut s, &inv_half)?;
                }
            }
        }
        Ok(FieldState::from_parts(0, s))
    }
}
