//! Capacity and rate bounds, bandwidth measurement and spectral efficiency.
//!
//! All rates are in bits (log base 2).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::dft::UnitaryDft;
use crate::engine::PositionSpectrum;
use crate::error::{Error, Result};
use crate::field::Ensemble;
use crate::grid::SimulationGrid;
use crate::params::ChannelParams;

/// A bound that is either a finite number or diverges (zero noise).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CapacityBound {
    Bits(f64),
    Unbounded,
}

impl CapacityBound {
    pub fn bits(&self) -> Option<f64> {
        match self {
            CapacityBound::Bits(b) => Some(*b),
            CapacityBound::Unbounded => None,
        }
    }

    pub fn as_f64(&self) -> f64 {
        self.bits().unwrap_or(f64::INFINITY)
    }
}

impl Serialize for CapacityBound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CapacityBound::Bits(b) => s.serialize_f64(*b),
            CapacityBound::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

fn finite_or_unbounded<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("unbounded")
    }
}

/// `E0 / (N_ASE B_n T)`; infinite when there is no noise.
pub fn snr(e0: f64, params: &ChannelParams, grid: &SimulationGrid) -> f64 {
    let noise = params.total_noise_energy(grid);
    if noise > 0.0 {
        e0 / noise
    } else if e0 > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Input energy that yields the given SNR.
pub fn energy_for_snr(snr: f64, params: &ChannelParams, grid: &SimulationGrid) -> f64 {
    snr * params.total_noise_energy(grid)
}

/// `L log2(1 + E0 / (N_ASE B_n T))` bits per block.
pub fn capacity_bound(e0: f64, params: &ChannelParams, grid: &SimulationGrid) -> Result<CapacityBound> {
    if !(e0.is_finite() && e0 >= 0.0) {
        return Err(Error::InvalidArgument(format!("E0 must be finite and >= 0, got {e0}")));
    }
    let s = snr(e0, params, grid);
    if s.is_infinite() {
        return Ok(CapacityBound::Unbounded);
    }
    Ok(CapacityBound::Bits(grid.num_samples() as f64 * s.ln_1p() / std::f64::consts::LN_2))
}

/// `B log2(1 + SNR)` bits/s.
pub fn rate_bound(e0: f64, params: &ChannelParams, grid: &SimulationGrid) -> Result<CapacityBound> {
    Ok(match capacity_bound(e0, params, grid)? {
        CapacityBound::Bits(b) => CapacityBound::Bits(b / grid.total_time()),
        CapacityBound::Unbounded => CapacityBound::Unbounded,
    })
}

/// Ensemble-averaged periodogram, `mean |dft(x)_l|^2`.
pub fn periodogram(e: &Ensemble) -> Result<Vec<f64>> {
    let dft = UnitaryDft::new(e.num_samples());
    let mut acc = vec![0.0; e.num_samples()];
    for r in e.realizations() {
        let s = dft.forward(r.samples())?;
        acc.iter_mut().zip(&s).for_each(|(a, v)| *a += v.norm_sqr());
    }
    Ok(acc.into_iter().map(|v| v / e.size() as f64).collect())
}

/// Smallest circular run of bins holding at least `1 - epsilon` of the
/// power, returned as `(start, width)`. Among equally narrow runs the one
/// whose centre is closest to the circular spectral centroid wins.
pub fn containment_band(power: &[f64], epsilon: f64) -> Result<(usize, usize)> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let n = power.len();
    if n == 0 || power.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidArgument("power spectrum must be non-empty and >= 0".into()));
    }
    let total: f64 = power.iter().sum();
    if total == 0.0 {
        return Ok((0, 0));
    }
    let target = (1.0 - epsilon) * total * (1.0 - 1e-12);
    let centroid = {
        let z: Complex64 = power
            .iter()
            .enumerate()
            .map(|(i, p)| Complex64::from_polar(*p, 2.0 * PI * i as f64 / n as f64))
            .sum();
        (z.arg() / (2.0 * PI) * n as f64).rem_euclid(n as f64)
    };
    let circ_dist = |a: f64, b: f64| {
        let d = (a - b).rem_euclid(n as f64);
        d.min(n as f64 - d)
    };
    // prefix over two periods for circular windows
    let mut prefix = vec![0.0; 2 * n + 1];
    for i in 0..2 * n {
        prefix[i + 1] = prefix[i] + power[i % n];
    }
    for width in 1..=n {
        let mut best: Option<(usize, f64)> = None;
        for start in 0..n {
            if prefix[start + width] - prefix[start] >= target {
                let centre = start as f64 + (width as f64 - 1.0) / 2.0;
                let d = circ_dist(centre, centroid);
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((start, d));
                }
            }
        }
        if let Some((start, _)) = best {
            return Ok((start, width));
        }
    }
    Ok((0, n))
}

/// Width in Hz of the `(1 - epsilon)` power-containment band of `power`.
pub fn bandwidth_from_periodogram(power: &[f64], grid: &SimulationGrid, epsilon: f64) -> Result<f64> {
    if power.len() != grid.num_samples() {
        return Err(Error::LengthMismatch {
            expected: grid.num_samples(),
            actual: power.len(),
        });
    }
    let (_, width) = containment_band(power, epsilon)?;
    Ok(width as f64 * grid.bin_width())
}

/// `W` of an ensemble: containment width of its average periodogram.
pub fn measure_bandwidth(e: &Ensemble, grid: &SimulationGrid, epsilon: f64) -> Result<f64> {
    bandwidth_from_periodogram(&periodogram(e)?, grid, epsilon)
}

/// Measured bandwidths along the link.
#[derive(Debug, Clone, PartialEq)]
pub enum BandwidthProfile {
    /// `(k, W(z_k))` for every retained position, including `0`.
    Trajectory(Vec<(usize, f64)>),
    /// Only the launch and receive bandwidths.
    Endpoints { input: f64, output: f64 },
}

impl BandwidthProfile {
    pub fn from_spectra(spectra: &[PositionSpectrum], grid: &SimulationGrid, epsilon: f64) -> Result<Self> {
        let widths = spectra
            .iter()
            .map(|s| Ok((s.position, bandwidth_from_periodogram(&s.mean_power, grid, epsilon)?)))
            .collect::<Result<Vec<_>>>()?;
        let full = (0..=grid.num_steps()).all(|k| widths.iter().any(|(p, _)| *p == k));
        if full {
            return Ok(BandwidthProfile::Trajectory(widths));
        }
        let find = |k: usize| widths.iter().find(|(p, _)| *p == k).map(|(_, w)| *w);
        match (find(0), find(grid.num_steps())) {
            (Some(input), Some(output)) => Ok(BandwidthProfile::Endpoints { input, output }),
            _ => Err(Error::MissingTrajectory(
                "spectra must cover at least k = 0 and k = K".into(),
            )),
        }
    }

    pub fn input(&self) -> f64 {
        match self {
            BandwidthProfile::Trajectory(t) => t.iter().find(|(k, _)| *k == 0).map_or(f64::NAN, |(_, w)| *w),
            BandwidthProfile::Endpoints { input, .. } => *input,
        }
    }

    pub fn points(&self, num_steps: usize) -> Vec<(usize, f64)> {
        match self {
            BandwidthProfile::Trajectory(t) => t.clone(),
            BandwidthProfile::Endpoints { input, output } => vec![(0, *input), (num_steps, *output)],
        }
    }

    /// `max_k W(z_k)`; needs the whole trajectory.
    pub fn max(&self) -> Result<f64> {
        match self {
            BandwidthProfile::Trajectory(t) => Ok(t.iter().map(|(_, w)| *w).fold(0.0, f64::max)),
            BandwidthProfile::Endpoints { .. } => Err(Error::MissingTrajectory(
                "the max-bandwidth normalization needs W(z_k) at every k; rerun with trajectory retention enabled"
                    .into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Simulation bandwidth `B = 1 / delta_t`.
    SimBandwidth,
    /// Maximal signal bandwidth `W = max_k W(z_k)`.
    MaxBandwidth,
    /// Launch bandwidth `W(z_0)`.
    InputBandwidth,
}

pub const ALL_NORMALIZATIONS: [Normalization; 3] = [
    Normalization::SimBandwidth,
    Normalization::MaxBandwidth,
    Normalization::InputBandwidth,
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralEfficiency {
    pub normalization: Normalization,
    pub bandwidth_hz: f64,
    /// `(B / bandwidth) log2(1 + SNR)` bits/s/Hz.
    #[serde(serialize_with = "finite_or_unbounded")]
    pub bits_per_s_per_hz: f64,
    /// Marks the max-bandwidth entry.
    pub recommended: bool,
}

/// `W(z_k)` at position index `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandwidthPoint {
    pub position: usize,
    pub bandwidth_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityReport {
    #[serde(serialize_with = "finite_or_unbounded")]
    pub snr: f64,
    pub num_samples: usize,
    pub bound_bits_total: CapacityBound,
    pub bound_rate_bits_per_s: CapacityBound,
    pub sim_bandwidth_hz: f64,
    pub bandwidth_profile: Vec<BandwidthPoint>,
    pub max_bandwidth_hz: Option<f64>,
    pub input_bandwidth_hz: f64,
    pub spectral_efficiency: Vec<SpectralEfficiency>,
}

impl CapacityReport {
    pub fn efficiency(&self, n: Normalization) -> Option<f64> {
        self.spectral_efficiency
            .iter()
            .find(|s| s.normalization == n)
            .map(|s| s.bits_per_s_per_hz)
    }

    /// Violated report invariants, empty when the report is consistent.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if let CapacityBound::Bits(b) = self.bound_bits_total {
            let expect = self.num_samples as f64 * self.snr.ln_1p() / std::f64::consts::LN_2;
            if b < 0.0 || (b - expect).abs() > 1e-9 * expect.max(1.0) {
                v.push(format!("bound_bits_total {b} != L log2(1 + snr) = {expect}"));
            }
        }
        let tol = 1e-9 * self.sim_bandwidth_hz;
        if let Some(w) = self.max_bandwidth_hz {
            if w + tol < self.input_bandwidth_hz {
                v.push(format!("W = {w} < W(z_0) = {}", self.input_bandwidth_hz));
            }
            if w > self.sim_bandwidth_hz + tol {
                v.push(format!("W = {w} > B = {}", self.sim_bandwidth_hz));
            }
        }
        if let (Some(se_w), Some(se_w0)) = (
            self.efficiency(Normalization::MaxBandwidth),
            self.efficiency(Normalization::InputBandwidth),
        ) {
            if se_w > se_w0 * (1.0 + 1e-12) {
                v.push(format!("SE_W = {se_w} > SE_W0 = {se_w0}"));
            }
        }
        v
    }
}

/// Fills a [`CapacityReport`] for the requested normalizations.
pub fn spectral_efficiency_report(
    profile: &BandwidthProfile,
    e0: f64,
    params: &ChannelParams,
    grid: &SimulationGrid,
    normalizations: &[Normalization],
) -> Result<CapacityReport> {
    let bound = capacity_bound(e0, params, grid)?;
    let s = snr(e0, params, grid);
    let b = grid.sim_bandwidth();
    let per_hz = s.ln_1p() / std::f64::consts::LN_2;
    let max_bw = match profile.max() {
        Ok(w) => Some(w),
        Err(e) if normalizations.contains(&Normalization::MaxBandwidth) => return Err(e),
        Err(_) => None,
    };
    let input_bw = profile.input();
    let spectral_efficiency = normalizations
        .iter()
        .map(|&n| {
            let bw = match n {
                Normalization::SimBandwidth => b,
                Normalization::MaxBandwidth => max_bw.unwrap_or(f64::NAN),
                Normalization::InputBandwidth => input_bw,
            };
            SpectralEfficiency {
                normalization: n,
                bandwidth_hz: bw,
                bits_per_s_per_hz: if per_hz == 0.0 { 0.0 } else { b / bw * per_hz },
                recommended: n == Normalization::MaxBandwidth,
            }
        })
        .collect();
    Ok(CapacityReport {
        snr: s,
        num_samples: grid.num_samples(),
        bound_bits_total: bound,
        bound_rate_bits_per_s: rate_bound(e0, params, grid)?,
        sim_bandwidth_hz: b,
        bandwidth_profile: profile
            .points(grid.num_steps())
            .into_iter()
            .map(|(position, bandwidth_hz)| BandwidthPoint { position, bandwidth_hz })
            .collect(),
        max_bandwidth_hz: max_bw,
        input_bandwidth_hz: input_bw,
        spectral_efficiency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldState;
    use crate::input::{generate_input, InputKind};
    use crate::rng::SeedTree;

    fn setup(l: usize) -> (SimulationGrid, ChannelParams) {
        let grid = SimulationGrid::new(0.02, 1.0, 50, l).unwrap();
        let params = ChannelParams {
            n_ase: 0.1,
            b_n: 10.0,
            ..Default::default()
        };
        (grid, params)
    }

    #[test]
    fn bound_examples() {
        let (grid, params) = setup(64);
        let noise = params.total_noise_energy(&grid);
        assert_eq!(capacity_bound(0.0, &params, &grid).unwrap(), CapacityBound::Bits(0.0));
        let one = capacity_bound(noise, &params, &grid).unwrap().as_f64();
        assert!((one - 64.0).abs() < 1e-12);
        let four = capacity_bound(15.0 * noise, &params, &grid).unwrap().as_f64();
        assert!((four - 256.0).abs() < 1e-12);
        assert!(capacity_bound(-1.0, &params, &grid).is_err());
        let quiet = ChannelParams { n_ase: 0.0, ..params };
        assert_eq!(capacity_bound(1.0, &quiet, &grid).unwrap(), CapacityBound::Unbounded);
        let rate = rate_bound(noise, &ChannelParams { n_ase: 0.1, ..quiet }, &grid).unwrap();
        assert!((rate.as_f64() - grid.sim_bandwidth()).abs() < 1e-12);
    }

    #[test]
    fn bound_is_concave_and_nondecreasing() {
        let (grid, params) = setup(16);
        let noise = params.total_noise_energy(&grid);
        let vals: Vec<f64> = (0..200)
            .map(|i| capacity_bound(i as f64 * 0.1 * noise, &params, &grid).unwrap().as_f64())
            .collect();
        for w in vals.windows(3) {
            assert!(w[1] >= w[0]);
            assert!(w[2] - 2.0 * w[1] + w[0] <= 1e-12);
        }
    }

    #[test]
    fn single_tone_bandwidth_is_one_bin() {
        let (grid, _) = setup(64);
        let f = generate_input(&InputKind::SingleTone { bin: 3 }, 2.0, &grid, &SeedTree::new(0), 0).unwrap();
        let e = Ensemble::new(vec![f]).unwrap();
        for eps in [1e-3, 0.1, 0.9] {
            assert!((measure_bandwidth(&e, &grid, eps).unwrap() - grid.bin_width()).abs() < 1e-15);
        }
        let (start, width) = containment_band(&periodogram(&e).unwrap(), 1e-3).unwrap();
        assert_eq!((start, width), (3, 1));
    }

    #[test]
    fn white_spectrum_containment() {
        let (grid, _) = setup(64);
        let seeds = SeedTree::new(3);
        let fields = (0..10_000)
            .map(|r| generate_input(&InputKind::IidGaussian, 64.0, &grid, &seeds, r).unwrap())
            .collect();
        let e = Ensemble::new(fields).unwrap();
        let w = measure_bandwidth(&e, &grid, 0.1).unwrap();
        assert!((w - 0.9 * grid.sim_bandwidth()).abs() <= 2.0 * grid.bin_width(), "W = {w}");
    }

    #[test]
    fn band_limited_spectrum() {
        let (grid, _) = setup(64);
        let kind = InputKind::SincPulseTrain {
            band_start: 0,
            band_bins: 16,
            num_symbols: None,
        };
        let seeds = SeedTree::new(4);
        let fields = (0..500).map(|r| generate_input(&kind, 5.0, &grid, &seeds, r).unwrap()).collect();
        let e = Ensemble::new(fields).unwrap();
        let w = measure_bandwidth(&e, &grid, 1e-3).unwrap();
        assert!((w - grid.sim_bandwidth() / 4.0).abs() <= grid.bin_width(), "W = {w}");
    }

    #[test]
    fn wrapped_band_and_zero_power() {
        let mut p = vec![0.0; 16];
        p[15] = 1.0;
        p[0] = 1.0;
        p[1] = 1.0;
        assert_eq!(containment_band(&p, 1e-3).unwrap(), (15, 3));
        assert_eq!(containment_band(&[0.0; 8], 0.1).unwrap(), (0, 0));
        let e = Ensemble::new(vec![FieldState::zeros(0, 8)]).unwrap();
        let grid = SimulationGrid::new(1.0, 1.0, 1, 8).unwrap();
        assert_eq!(measure_bandwidth(&e, &grid, 0.1).unwrap(), 0.0);
        assert!(containment_band(&p, 0.0).is_err());
        assert!(containment_band(&p, 1.0).is_err());
    }

    #[test]
    fn normalization_arithmetic() {
        let (grid, params) = setup(64);
        let noise = params.total_noise_energy(&grid);
        let b = grid.sim_bandwidth();
        let profile = BandwidthProfile::Trajectory(vec![(0, b / 4.0), (25, b / 2.0), (50, b / 3.0)]);
        let r = spectral_efficiency_report(&profile, noise, &params, &grid, &ALL_NORMALIZATIONS).unwrap();
        assert!((r.efficiency(Normalization::SimBandwidth).unwrap() - 1.0).abs() < 1e-12);
        assert!((r.efficiency(Normalization::MaxBandwidth).unwrap() - 2.0).abs() < 1e-12);
        assert!((r.efficiency(Normalization::InputBandwidth).unwrap() - 4.0).abs() < 1e-12);
        assert!(r.invariant_violations().is_empty());
        assert!(r.spectral_efficiency.iter().any(|s| s.recommended));

        let full = BandwidthProfile::Trajectory(vec![(0, b), (50, b)]);
        let r = spectral_efficiency_report(&full, 3.0 * noise, &params, &grid, &ALL_NORMALIZATIONS).unwrap();
        assert_eq!(
            r.efficiency(Normalization::SimBandwidth),
            r.efficiency(Normalization::MaxBandwidth)
        );
        assert!((r.efficiency(Normalization::MaxBandwidth).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn endpoints_cannot_give_max_bandwidth() {
        let (grid, params) = setup(64);
        let profile = BandwidthProfile::Endpoints { input: 0.1, output: 0.2 };
        let err = spectral_efficiency_report(&profile, 1.0, &params, &grid, &ALL_NORMALIZATIONS);
        assert!(matches!(err, Err(Error::MissingTrajectory(_))));
        let ok = spectral_efficiency_report(
            &profile,
            1.0,
            &params,
            &grid,
            &[Normalization::SimBandwidth, Normalization::InputBandwidth],
        )
        .unwrap();
        assert_eq!(ok.max_bandwidth_hz, None);
    }
}
