//! Unitary discrete Fourier transform.
//!
//! `F[l, m] = exp(-j 2 pi l m / L) / sqrt(L)`, so `F^-1 = F^H` and both
//! directions preserve the Euclidean norm. Any length is accepted; rustfft
//! falls back to mixed-radix / Bluestein plans for non powers of two.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

#[derive(Clone)]
pub struct UnitaryDft {
    len: usize,
    scale: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for UnitaryDft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UnitaryDft").field("len", &self.len).finish()
    }
}

impl UnitaryDft {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "DFT length must be positive");
        let mut planner = FftPlanner::new();
        Self {
            len,
            scale: 1.0 / (len as f64).sqrt(),
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                actual: n,
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut buf = x.to_vec();
        self.forward_in_place(&mut buf)?;
        Ok(buf)
    }

    pub fn inverse(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut buf = x.to_vec();
        self.inverse_in_place(&mut buf)?;
        Ok(buf)
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) -> Result<()> {
        self.check(buf.len())?;
        self.forward.process(buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
        Ok(())
    }

    pub fn inverse_in_place(&self, buf: &mut [Complex64]) -> Result<()> {
        self.check(buf.len())?;
        self.inverse.process(buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
        Ok(())
    }

    /// Applies `F^H diag(taps) F` to `buf`.
    pub fn filter_in_place(&self, buf: &mut [Complex64], taps: &[Complex64]) -> Result<()> {
        self.check(taps.len())?;
        self.forward_in_place(buf)?;
        buf.iter_mut().zip(taps).for_each(|(v, t)| *v *= t);
        self.inverse_in_place(buf)
    }
}

/// Unitary DFT of `x` with a freshly planned transform.
pub fn dft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("empty input".into()));
    }
    UnitaryDft::new(x.len()).forward(x)
}

/// Unitary inverse DFT of `x`.
pub fn idft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("empty input".into()));
    }
    UnitaryDft::new(x.len()).inverse(x)
}
