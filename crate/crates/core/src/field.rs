use num_complex::Complex64;

use crate::error::{Error, Result};

/// One realization of the sampled field at position index `k`.
///
/// Samples are in sqrt(W): `|a|^2` is instantaneous power.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    position: usize,
    samples: Vec<Complex64>,
}

impl FieldState {
    pub fn new(position: usize, samples: Vec<Complex64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("field has no samples".into()));
        }
        if samples.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::InvalidArgument("field samples must be finite".into()));
        }
        Ok(Self { position, samples })
    }

    pub fn zeros(position: usize, len: usize) -> Self {
        Self {
            position,
            samples: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// Internal constructor for values produced by finite arithmetic on valid fields.
    pub(crate) fn from_parts(position: usize, samples: Vec<Complex64>) -> Self {
        Self { position, samples }
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn with_position(mut self, position: usize) -> Self {
        self.position = position;
        self
    }

    /// Sum of |a_l|^2 (no delta_t factor).
    pub fn energy(&self) -> f64 {
        energy(&self.samples)
    }
}

/// Sum of squared magnitudes.
pub fn energy(samples: &[Complex64]) -> f64 {
    samples.iter().map(|s| s.norm_sqr()).sum()
}

/// Realizations of the field at a common position, all with the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    realizations: Vec<FieldState>,
}

impl Ensemble {
    pub fn new(realizations: Vec<FieldState>) -> Result<Self> {
        let first = realizations.first().ok_or(Error::EmptyEnsemble)?;
        let (len, pos) = (first.len(), first.position());
        for (i, r) in realizations.iter().enumerate() {
            if r.len() != len {
                return Err(Error::EnsembleMismatch(format!(
                    "realization {i} has {} samples, expected {len}",
                    r.len()
                )));
            }
            if r.position() != pos {
                return Err(Error::EnsembleMismatch(format!(
                    "realization {i} is at position {}, expected {pos}",
                    r.position()
                )));
            }
        }
        Ok(Self { realizations })
    }

    /// Builds an ensemble from raw sample vectors at `position`.
    pub fn from_samples(position: usize, rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let fields = rows
            .into_iter()
            .map(|r| FieldState::new(position, r))
            .collect::<Result<Vec<_>>>()?;
        Self::new(fields)
    }

    pub fn realizations(&self) -> &[FieldState] {
        &self.realizations
    }

    pub fn into_realizations(self) -> Vec<FieldState> {
        self.realizations
    }

    /// M
    pub fn size(&self) -> usize {
        self.realizations.len()
    }

    /// L
    pub fn num_samples(&self) -> usize {
        self.realizations[0].len()
    }

    pub fn position(&self) -> usize {
        self.realizations[0].position()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.realizations.iter().map(FieldState::energy).collect()
    }

    /// Mean energy and its standard error over realizations.
    pub fn mean_energy(&self) -> (f64, f64) {
        mean_and_std_error(&self.energies())
    }

    /// Flattens each realization into `2L` reals `(re_0, im_0, re_1, ...)`.
    pub fn real_embedding(&self) -> Vec<f64> {
        self.realizations
            .iter()
            .flat_map(|r| r.samples().iter().flat_map(|s| [s.re, s.im]))
            .collect()
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn energy_examples() {
        assert_eq!(FieldState::zeros(0, 8).energy(), 0.0);
        let f = FieldState::new(0, vec![c(3.0, 4.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(f.energy(), 25.0);
    }

    #[test]
    fn energy_matches_componentwise_oracle() {
        // deterministic pseudo-random field
        let samples: Vec<Complex64> = (0..97)
            .map(|i| {
                let x = (i as f64 * 0.7548776662).fract() - 0.5;
                let y = (i as f64 * 0.5698402910).fract() - 0.5;
                c(x * 3.0, y * 2.0)
            })
            .collect();
        let oracle: f64 = samples.iter().map(|s| s.re * s.re + s.im * s.im).sum();
        let f = FieldState::new(2, samples).unwrap();
        assert!((f.energy() - oracle).abs() <= 1e-14 * oracle);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(FieldState::new(0, vec![c(f64::NAN, 0.0)]).is_err());
        assert!(FieldState::new(0, vec![]).is_err());
    }

    #[test]
    fn ensemble_consistency() {
        let a = FieldState::zeros(1, 4);
        let b = FieldState::zeros(1, 6);
        let d = FieldState::zeros(2, 4);
        assert!(Ensemble::new(vec![a.clone(), b]).is_err());
        assert!(Ensemble::new(vec![a.clone(), d]).is_err());
        assert_eq!(Ensemble::new(vec![]), Err(Error::EmptyEnsemble));
        let e = Ensemble::new(vec![a.clone(), a]).unwrap();
        assert_eq!(e.size(), 2);
        assert_eq!(e.num_samples(), 4);
        assert_eq!(e.real_embedding().len(), 16);
    }
}
