//! Empirical correlation and pseudo-covariance matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::Ensemble;

const CHUNK: usize = 1024;

/// `R = mean(x x^H)` and `Q = mean((x - mean x)(x - mean x)^T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEstimate {
    pub matrix: DMatrix<Complex64>,
    pub pseudo_matrix: DMatrix<Complex64>,
    pub sample_count: usize,
}

pub fn estimate_correlation(e: &Ensemble) -> Result<CorrelationEstimate> {
    let m = e.size();
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "correlation needs at least 2 realizations, got {m}"
        )));
    }
    let l = e.num_samples();
    let rows = e.realizations();
    let zero = || DMatrix::<Complex64>::zeros(l, l);

    let mean = rows
        .iter()
        .fold(vec![Complex64::new(0.0, 0.0); l], |mut acc, r| {
            acc.iter_mut().zip(r.samples()).for_each(|(a, s)| *a += s);
            acc
        })
        .into_iter()
        .map(|v| v / m as f64)
        .collect::<Vec<_>>();

    let partials: Vec<(DMatrix<Complex64>, DMatrix<Complex64>)> = rows
        .par_chunks(CHUNK)
        .map(|chunk| {
            let (mut r, mut q) = (zero(), zero());
            let mut centered = vec![Complex64::new(0.0, 0.0); l];
            for f in chunk {
                let x = f.samples();
                centered.iter_mut().zip(x).zip(&mean).for_each(|((c, v), mu)| *c = v - mu);
                for i in 0..l {
                    for j in 0..l {
                        r[(i, j)] += x[i] * x[j].conj();
                        q[(i, j)] += centered[i] * centered[j];
                    }
                }
            }
            (r, q)
        })
        .collect();
    let (mut r, mut q) = (zero(), zero());
    for (pr, pq) in partials {
        r += pr;
        q += pq;
    }
    r /= Complex64::new(m as f64, 0.0);
    q /= Complex64::new(m as f64, 0.0);
    let r = (&r + r.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(CorrelationEstimate {
        matrix: r,
        pseudo_matrix: q,
        sample_count: m,
    })
}

impl CorrelationEstimate {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|v| v.re).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|v| v.re).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Hermitian PSD up to `1e-10 * trace / L`.
    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() > -1e-10 * self.trace() / self.dim() as f64
    }

    /// Natural log of `det R`, or `None` when `R` is not numerically
    /// positive definite.
    pub fn log_det(&self) -> Option<f64> {
        let chol = self.matrix.clone().cholesky()?;
        let floor = 1e-12 * self.trace() / self.dim() as f64;
        let pivots: Vec<f64> = chol.l().diagonal().iter().map(|v| v.re * v.re).collect();
        if pivots.iter().any(|&p| !(p > floor)) {
            return None;
        }
        Some(pivots.iter().map(|p| p.ln()).sum())
    }

    /// Largest pseudo-covariance entry magnitude.
    pub fn max_pseudo_magnitude(&self) -> f64 {
        self.pseudo_matrix.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest off-diagonal magnitude of `R`.
    pub fn max_off_diagonal(&self) -> f64 {
        let l = self.dim();
        (0..l)
            .flat_map(|i| (0..l).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.matrix[(i, j)].norm())
            .fold(0.0, f64::max)
    }
}
