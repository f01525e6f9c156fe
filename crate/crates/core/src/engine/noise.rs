//! Additive proper complex Gaussian noise.

use num_complex::Complex64;
use rand::Rng;

use crate::dft::UnitaryDft;
use crate::error::Result;
use crate::field::FieldState;
use crate::grid::SimulationGrid;
use crate::input::proper_gaussian;
use crate::params::ChannelParams;

/// Adds one step of noise in place.
///
/// Each sample receives variance `sigma^2 = (N_ASE B_n / z*) dz dt`, split
/// evenly between real and imaginary parts. With a noise profile the noise
/// is drawn per DFT bin with variance `sigma^2 * profile[l]` and brought
/// back to the time domain.
pub(crate) fn add_noise_in_place<R: Rng + ?Sized>(
    samples: &mut [Complex64],
    params: &ChannelParams,
    grid: &SimulationGrid,
    dft: &UnitaryDft,
    rng: &mut R,
) -> Result<()> {
    let var = params.step_noise_variance(grid);
    if var == 0.0 {
        return Ok(());
    }
    match params.noise_profile.as_deref().filter(|_| params.has_noise_shaping()) {
        None => {
            for s in samples.iter_mut() {
                *s += proper_gaussian(rng, var);
            }
        }
        Some(profile) => {
            let mut n: Vec<Complex64> = profile.iter().map(|&p| proper_gaussian(rng, var * p)).collect();
            dft.inverse_in_place(&mut n)?;
            samples.iter_mut().zip(&n).for_each(|(s, v)| *s += v);
        }
    }
    Ok(())
}

/// `out = in + n` with `n` white (or profile-shaped) proper Gaussian noise.
pub fn noise_step<R: Rng + ?Sized>(
    field: &FieldState,
    params: &ChannelParams,
    grid: &SimulationGrid,
    rng: &mut R,
) -> Result<FieldState> {
    params.validate_for(grid)?;
    let mut s = field.samples().to_vec();
    add_noise_in_place(&mut s, params, grid, &UnitaryDft::new(grid.num_samples()), rng)?;
    Ok(FieldState::from_parts(field.position(), s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::mean_and_std_error;
    use crate::rng::{Purpose, SeedTree};

    fn setup() -> (SimulationGrid, ChannelParams) {
        let grid = SimulationGrid::new(0.5, 1.0, 4, 16).unwrap();
        let params = ChannelParams {
            n_ase: 0.2,
            b_n: 5.0,
            ..Default::default()
        };
        (grid, params)
    }

    #[test]
    fn zero_noise_is_exact_identity() {
        let (grid, mut params) = setup();
        params.n_ase = 0.0;
        let f = FieldState::new(0, vec![Complex64::new(0.3, -1.2); 16]).unwrap();
        let mut rng = SeedTree::new(1).stream(0, 1, Purpose::Noise);
        assert_eq!(noise_step(&f, &params, &grid, &mut rng).unwrap(), f);
    }

    fn noise_moments(params: &ChannelParams, grid: &SimulationGrid, m: usize) -> (f64, f64, f64) {
        let seeds = SeedTree::new(99);
        let zero = FieldState::zeros(0, grid.num_samples());
        let energies: Vec<f64> = (0..m)
            .map(|r| {
                let mut rng = seeds.stream(r as u64, 1, Purpose::Noise);
                noise_step(&zero, params, grid, &mut rng).unwrap().energy()
            })
            .collect();
        let (mean, se) = mean_and_std_error(&energies);
        let sigma2 = params.step_noise_variance(grid);
        // chi-square oracle: energy = sigma2/2 * chi2(2L), sd = sigma2 sqrt(L)
        let oracle_se = sigma2 * (grid.num_samples() as f64).sqrt() / (m as f64).sqrt();
        (mean, se, oracle_se)
    }

    #[test]
    fn mean_noise_energy_matches_chi_square() {
        let (grid, params) = setup();
        let (mean, se, oracle_se) = noise_moments(&params, &grid, 100_000);
        let expect = 16.0 * params.step_noise_variance(&grid);
        assert!((se / oracle_se - 1.0).abs() < 0.05);
        assert!((mean - expect).abs() < 3.0 * oracle_se, "mean {mean} vs {expect}");
    }

    #[test]
    fn shaped_noise_keeps_profile_mean_energy() {
        let (grid, mut params) = setup();
        let profile: Vec<f64> = (0..16).map(|i| if i < 4 { 3.0 } else { 0.5 }).collect();
        let mean_profile = profile.iter().sum::<f64>() / 16.0;
        params.noise_profile = Some(profile);
        let (mean, se, _) = noise_moments(&params, &grid, 50_000);
        let expect = 16.0 * params.step_noise_variance(&grid) * mean_profile;
        assert!((mean - expect).abs() < 3.0 * se, "mean {mean} vs {expect}");
    }

    #[test]
    fn noise_is_proper_and_gaussian() {
        let (grid, params) = setup();
        let seeds = SeedTree::new(5);
        let m = 100_000usize;
        let l = grid.num_samples();
        let sigma2 = params.step_noise_variance(&grid);
        let zero = FieldState::zeros(0, l);
        let mut pseudo = vec![Complex64::new(0.0, 0.0); l];
        let mut comps = Vec::with_capacity(m * 2 * l);
        for r in 0..m {
            let mut rng = seeds.stream(r as u64, 1, Purpose::Noise);
            let n = noise_step(&zero, &params, &grid, &mut rng).unwrap();
            let s = n.samples();
            for j in 0..l {
                pseudo[j] += s[0] * s[j];
            }
            comps.extend(s.iter().flat_map(|v| [v.re, v.im]));
        }
        for p in &pseudo {
            assert!((p / m as f64).norm() < 5.0 * sigma2 / (m as f64).sqrt());
        }
        let n = comps.len() as f64;
        let mean = comps.iter().sum::<f64>() / n;
        let var = comps.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let skew = comps.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n / var.powf(1.5);
        let kurt = comps.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n / (var * var) - 3.0;
        let band = 5.0 / (m as f64).sqrt();
        assert!((var - sigma2 / 2.0).abs() < 5.0 * sigma2 / 2.0 * (2.0 / n).sqrt());
        assert!(skew.abs() < band, "skew {skew}");
        assert!(kurt.abs() < band, "kurt {kurt}");
    }
}
