//! Amplitude-dependent phase rotation.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::field::FieldState;

/// A named map from amplitude `|a|` to a phase in radians.
#[derive(Clone)]
pub struct NamedPhaseFn {
    pub name: String,
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for NamedPhaseFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NamedPhaseFn({})", self.name)
    }
}

impl PartialEq for NamedPhaseFn {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && Arc::ptr_eq(&self.f, &other.f)
    }
}

/// Phase law of the nonlinear step.
///
/// `Kerr` rotates by `gamma |a|^2 dz`. The other laws give the phase
/// added per step directly, without a `dz` factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum PhaseLaw {
    Kerr { gamma: f64 },
    /// `coefficient * |a|^exponent`
    Power { coefficient: f64, exponent: f64 },
    /// `coefficient * |a|^2 / (1 + |a|^2 / saturation)`
    Saturable { coefficient: f64, saturation: f64 },
    #[serde(skip)]
    Function(NamedPhaseFn),
}

/// Nonlinear step configuration.
///
/// `amplitude_gain` scales every output magnitude. Anything other than 1
/// breaks energy conservation; it exists so verification runs can include
/// a negative control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearPhaseSpec {
    #[serde(flatten)]
    pub law: PhaseLaw,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub amplitude_gain: f64,
}

fn one() -> f64 {
    1.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

impl NonlinearPhaseSpec {
    pub fn kerr(gamma: f64) -> Self {
        Self {
            law: PhaseLaw::Kerr { gamma },
            amplitude_gain: 1.0,
        }
    }

    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            law: PhaseLaw::Function(NamedPhaseFn {
                name: name.into(),
                f: Arc::new(f),
            }),
            amplitude_gain: 1.0,
        }
    }

    pub fn with_amplitude_gain(mut self, gain: f64) -> Self {
        self.amplitude_gain = gain;
        self
    }

    /// Phase added to a sample of amplitude `amp` over a step of length `delta_z`.
    pub fn phase(&self, amp: f64, delta_z: f64) -> f64 {
        match &self.law {
            PhaseLaw::Kerr { gamma } => gamma * amp * amp * delta_z,
            PhaseLaw::Power {
                coefficient,
                exponent,
            } => coefficient * amp.powf(*exponent),
            PhaseLaw::Saturable {
                coefficient,
                saturation,
            } => {
                let p = amp * amp;
                coefficient * p / (1.0 + p / saturation)
            }
            PhaseLaw::Function(n) => (n.f)(amp),
        }
    }

    /// True when the step is the identity map.
    pub fn is_identity(&self) -> bool {
        self.amplitude_gain == 1.0
            && match &self.law {
                PhaseLaw::Kerr { gamma } => *gamma == 0.0,
                PhaseLaw::Power { coefficient, .. } | PhaseLaw::Saturable { coefficient, .. } => {
                    *coefficient == 0.0
                }
                PhaseLaw::Function(_) => false,
            }
    }

    pub fn apply_in_place(&self, samples: &mut [Complex64], delta_z: f64) {
        if self.is_identity() {
            return;
        }
        for s in samples.iter_mut() {
            let amp = s.norm();
            let rot = Complex64::from_polar(self.amplitude_gain, self.phase(amp, delta_z));
            *s *= rot;
        }
    }

    /// Inverse map: undo the gain, then rotate back by the phase of the
    /// recovered amplitude.
    pub fn invert_in_place(&self, samples: &mut [Complex64], delta_z: f64) {
        for s in samples.iter_mut() {
            let amp = s.norm() / self.amplitude_gain;
            let rot = Complex64::from_polar(1.0 / self.amplitude_gain, -self.phase(amp, delta_z));
            *s *= rot;
        }
    }
}

/// `out[l] = in[l] exp(j phase(|in[l]|))`; magnitudes are unchanged.
pub fn nonlinear_step(field: &FieldState, spec: &NonlinearPhaseSpec, delta_z: f64) -> FieldState {
    let mut samples = field.samples().to_vec();
    spec.apply_in_place(&mut samples, delta_z);
    FieldState::from_parts(field.position(), samples)
}
