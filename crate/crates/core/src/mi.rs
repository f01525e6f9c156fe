//! Achievable-rate floor from a memoryless Gaussian auxiliary channel.
//!
//! For i.i.d. proper Gaussian input of power `P` and the auxiliary channel
//! `y = h x + w`, `w ~ CN(0, s2)` with `h`, `s2` the LMMSE fit, the rate
//! `log2(1 + |h|^2 P / s2)` is a lower bound on the per-sample mutual
//! information. It ignores memory, so dispersion and nonlinearity make it
//! loose; it is a floor, not an estimate of capacity.

use num_complex::Complex64;
use serde::Serialize;

use crate::engine::{run_ensemble, EnsembleOptions, Propagator};
use crate::error::{Error, Result};
use crate::field::{Ensemble, FieldState};
use crate::input::{generate_input, InputKind};
use crate::rng::SeedTree;

const RATE_BATCHES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuxiliaryChannelFit {
    pub gain: Complex64,
    pub effective_noise_variance: f64,
    /// Empirical input power `mean |x|^2`.
    pub input_power: f64,
    /// `log2(1 + |h|^2 P / s2)` at the empirical input power.
    pub per_sample_rate: f64,
    /// Batch-means standard error of `per_sample_rate`.
    pub rate_std_error: f64,
    pub sample_count: usize,
    /// Zero residual: the fit explains the output exactly.
    pub degenerate: bool,
}

/// Mutual-information lower bound in bits per complex sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MiLowerBound {
    Bits(f64),
    Unbounded,
}

impl MiLowerBound {
    pub fn as_f64(&self) -> f64 {
        match self {
            MiLowerBound::Bits(b) => *b,
            MiLowerBound::Unbounded => f64::INFINITY,
        }
    }
}

struct Moments {
    xx: f64,
    yy: f64,
    yx: Complex64,
    n: usize,
}

fn moments(x: &[Complex64], y: &[Complex64]) -> Moments {
    let mut m = Moments {
        xx: 0.0,
        yy: 0.0,
        yx: Complex64::new(0.0, 0.0),
        n: x.len(),
    };
    for (a, b) in x.iter().zip(y) {
        m.xx += a.norm_sqr();
        m.yy += b.norm_sqr();
        m.yx += b * a.conj();
    }
    m
}

fn residual(x: &[Complex64], y: &[Complex64], h: Complex64) -> f64 {
    x.iter().zip(y).map(|(a, b)| (b - h * a).norm_sqr()).sum::<f64>() / x.len() as f64
}

fn rate(gain: Complex64, power: f64, var: f64) -> f64 {
    (gain.norm_sqr() * power / var).ln_1p() / std::f64::consts::LN_2
}

/// Pooled fit over all samples of all paired realizations.
pub fn fit_auxiliary(x: &Ensemble, y: &Ensemble) -> Result<AuxiliaryChannelFit> {
    if x.size() != y.size() || x.num_samples() != y.num_samples() {
        return Err(Error::EnsembleMismatch(format!(
            "input is {}x{}, output is {}x{}",
            x.size(),
            x.num_samples(),
            y.size(),
            y.num_samples()
        )));
    }
    let flat = |e: &Ensemble| -> Vec<Complex64> {
        e.realizations().iter().flat_map(|r| r.samples().iter().copied()).collect()
    };
    fit_pairs(&flat(x), &flat(y), x.num_samples())
}

/// Fit from flat paired samples; `row_len` samples form one realization
/// (used to cut batches on realization boundaries).
pub fn fit_pairs(x: &[Complex64], y: &[Complex64], row_len: usize) -> Result<AuxiliaryChannelFit> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::InvalidArgument("paired samples must be non-empty and equal length".into()));
    }
    let m = moments(x, y);
    if m.xx == 0.0 {
        return Err(Error::InvalidArgument("input power is zero".into()));
    }
    let gain = m.yx / m.xx;
    let var = residual(x, y, gain);
    let power = m.xx / m.n as f64;
    let degenerate = var <= 1e-24 * (m.yy / m.n as f64).max(f64::MIN_POSITIVE);
    let per_sample_rate = if degenerate { f64::INFINITY } else { rate(gain, power, var) };

    let rows = x.len() / row_len.max(1);
    let rate_std_error = if degenerate || rows < RATE_BATCHES {
        f64::NAN
    } else {
        let rates: Vec<f64> = (0..RATE_BATCHES)
            .map(|b| {
                let lo = b * rows / RATE_BATCHES * row_len;
                let hi = (b + 1) * rows / RATE_BATCHES * row_len;
                let (xs, ys) = (&x[lo..hi], &y[lo..hi]);
                let bm = moments(xs, ys);
                let g = bm.yx / bm.xx;
                rate(g, bm.xx / bm.n as f64, residual(xs, ys, g))
            })
            .collect();
        let mean = rates.iter().sum::<f64>() / RATE_BATCHES as f64;
        let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (RATE_BATCHES - 1) as f64;
        (var / RATE_BATCHES as f64).sqrt()
    };

    Ok(AuxiliaryChannelFit {
        gain,
        effective_noise_variance: var,
        input_power: power,
        per_sample_rate,
        rate_std_error,
        sample_count: m.n,
        degenerate,
    })
}

/// `log2(1 + |h|^2 P / s2)` for input power `power`.
pub fn mi_lower_bound(fit: &AuxiliaryChannelFit, power: f64) -> MiLowerBound {
    if fit.degenerate {
        if fit.gain.norm_sqr() == 0.0 {
            return MiLowerBound::Bits(0.0);
        }
        return MiLowerBound::Unbounded;
    }
    MiLowerBound::Bits(rate(fit.gain, power, fit.effective_noise_variance))
}

/// Result of a Monte-Carlo rate run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiRun {
    pub fit: AuxiliaryChannelFit,
    /// Per-sample power `P = E0 / L` of the launch distribution.
    pub power: f64,
    pub bits_per_sample: f64,
    pub realizations: usize,
    pub dispersion_compensated: bool,
}

/// Propagates `m` i.i.d. Gaussian launch fields of per-sample power `power`
/// and fits the auxiliary channel.
///
/// With `compensate_dispersion` the receiver first applies the inverse of
/// the accumulated all-pass filter. That map is unitary and invertible, so
/// the rate remains a lower bound on the mutual information.
pub fn estimate_mi(
    prop: &Propagator,
    power: f64,
    m: usize,
    seeds: &SeedTree,
    compensate_dispersion: bool,
) -> Result<MiRun> {
    if !(power.is_finite() && power > 0.0) {
        return Err(Error::InvalidArgument(format!("input power must be > 0, got {power}")));
    }
    let grid = *prop.grid();
    let e0 = power * grid.num_samples() as f64;
    let opts = EnsembleOptions {
        realizations: m,
        keep_inputs: true,
        keep_outputs: true,
        ..Default::default()
    };
    let input = |r| generate_input(&InputKind::IidGaussian, e0, &grid, seeds, r);
    let run = run_ensemble(prop, input, seeds, &opts)?;
    let x = run.inputs.ok_or(Error::EmptyEnsemble)?;
    let y = run.outputs.ok_or(Error::EmptyEnsemble)?;
    mi_from_ensembles(prop, &x, y, power, compensate_dispersion)
}

/// Fits the auxiliary channel on already propagated i.i.d. Gaussian
/// ensembles of per-sample power `power`.
pub fn mi_from_ensembles(
    prop: &Propagator,
    x: &Ensemble,
    y: Ensemble,
    power: f64,
    compensate_dispersion: bool,
) -> Result<MiRun> {
    let y = if compensate_dispersion {
        let inv: Vec<Complex64> = prop.cumulative_taps()?.iter().map(|t| t.inv()).collect();
        let dft = prop.dft();
        let fields = y
            .into_realizations()
            .into_iter()
            .map(|f| {
                let pos = f.position();
                let mut s = f.into_samples();
                dft.filter_in_place(&mut s, &inv)?;
                FieldState::new(pos, s)
            })
            .collect::<Result<Vec<_>>>()?;
        Ensemble::new(fields)?
    } else {
        y
    };
    let fit = fit_auxiliary(x, &y)?;
    let bits_per_sample = mi_lower_bound(&fit, power).as_f64();
    Ok(MiRun {
        fit,
        power,
        bits_per_sample,
        realizations: x.size(),
        dispersion_compensated: compensate_dispersion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::input::proper_gaussian;
    use crate::rng::Purpose;

    fn gaussian(n: usize, var: f64, seed: u64) -> Vec<Complex64> {
        let mut rng = SeedTree::new(seed).stream(0, 0, Purpose::Aux(3));
        (0..n).map(|_| proper_gaussian(&mut rng, var)).collect()
    }

    #[test]
    fn identity_is_degenerate() {
        let x = gaussian(4000, 1.0, 1);
        let fit = fit_pairs(&x, &x, 4).unwrap();
        assert!((fit.gain - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(fit.effective_noise_variance < 1e-28);
        assert!(fit.degenerate);
        assert_eq!(mi_lower_bound(&fit, 1.0), MiLowerBound::Unbounded);
    }

    #[test]
    fn exact_complex_gain() {
        let x = gaussian(4000, 1.0, 2);
        let y: Vec<Complex64> = x.iter().map(|v| v * Complex64::new(0.0, 2.0)).collect();
        let fit = fit_pairs(&x, &y, 4).unwrap();
        assert!((fit.gain - Complex64::new(0.0, 2.0)).norm() < 1e-14);
        assert!(fit.effective_noise_variance < 1e-26);
    }

    #[test]
    fn additive_noise_concentrates() {
        let n = 1_000_000;
        let sigma2 = 0.5;
        let x = gaussian(n, 1.0, 3);
        let w = gaussian(n, sigma2, 4);
        let y: Vec<Complex64> = x.iter().zip(&w).map(|(a, b)| a + b).collect();
        let fit = fit_pairs(&x, &y, 64).unwrap();
        let band = 5.0 / (n as f64).sqrt();
        assert!((fit.gain - Complex64::new(1.0, 0.0)).norm() < band);
        assert!((fit.effective_noise_variance - sigma2).abs() < band * sigma2 * 2f64.sqrt());
        assert!(fit.rate_std_error > 0.0 && fit.rate_std_error < 0.01);
    }

    #[test]
    fn rate_examples() {
        let fit = AuxiliaryChannelFit {
            gain: Complex64::new(1.0, 0.0),
            effective_noise_variance: 2.0,
            input_power: 2.0,
            per_sample_rate: 1.0,
            rate_std_error: 0.0,
            sample_count: 1,
            degenerate: false,
        };
        assert!((mi_lower_bound(&fit, 2.0).as_f64() - 1.0).abs() < 1e-15);
        let zero = AuxiliaryChannelFit {
            gain: Complex64::new(0.0, 0.0),
            ..fit
        };
        assert_eq!(mi_lower_bound(&zero, 2.0), MiLowerBound::Bits(0.0));
    }

    #[test]
    fn independent_output_gives_near_zero_rate() {
        let x = gaussian(200_000, 1.0, 5);
        let y = gaussian(200_000, 1.0, 6);
        let fit = fit_pairs(&x, &y, 8).unwrap();
        assert!(fit.per_sample_rate < 1e-3);
    }

    #[test]
    fn zero_input_power_is_rejected() {
        let x = vec![Complex64::new(0.0, 0.0); 10];
        assert!(fit_pairs(&x, &x, 2).is_err());
    }

    #[test]
    fn common_rotation_leaves_fit_unchanged() {
        let x = gaussian(10_000, 1.0, 7);
        let w = gaussian(10_000, 0.3, 8);
        let y: Vec<Complex64> = x
            .iter()
            .zip(&w)
            .map(|(a, b)| a * Complex64::new(0.8, -0.3) + b)
            .collect();
        let base = fit_pairs(&x, &y, 10).unwrap();
        for theta in [0.3, 1.7, -2.9] {
            let u = Complex64::from_polar(1.0, theta);
            let xr: Vec<_> = x.iter().map(|v| v * u).collect();
            let yr: Vec<_> = y.iter().map(|v| v * u).collect();
            let f = fit_pairs(&xr, &yr, 10).unwrap();
            assert!((f.gain.norm() - base.gain.norm()).abs() < 1e-12);
            assert!((f.effective_noise_variance - base.effective_noise_variance).abs() < 1e-12);
        }
    }
}
