//! Differential entropy estimators over the real embedding of complex vectors.
//!
//! A complex vector of length `L` is treated as `2L` reals, so
//! `h(X) = h(Re X, Im X)` and entropy power is `exp(h / L) / (pi e)`.

use std::collections::HashMap;
use std::f64::consts::{E, PI};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};
use crate::rng::{Purpose, SeedTree};

use super::kdtree::KdTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Knn { k: usize },
    Histogram { bins: usize },
}

/// Entropy estimate in nats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub estimator: EstimatorKind,
    pub sample_count: usize,
    /// Real dimension (2L for complex vectors).
    pub dimension: usize,
    /// True when coincident points forced a 1e-12-scale jitter.
    pub jittered: bool,
}

impl EntropyEstimate {
    /// `exp(h / L) / (pi e)` with `L = dimension / 2`.
    pub fn entropy_power(&self) -> f64 {
        entropy_power(self.value, self.dimension as f64 / 2.0)
    }

    /// Standard error of the entropy power by the delta method.
    pub fn entropy_power_std_error(&self) -> f64 {
        self.entropy_power() * self.standard_error / (self.dimension as f64 / 2.0)
    }
}

/// `exp(h / L) / (pi e)` for a complex vector of length `L`.
pub fn entropy_power(h: f64, complex_dim: f64) -> f64 {
    (h / complex_dim).exp() / (PI * E)
}

/// Entropy of a proper complex Gaussian with correlation determinant `det`.
pub fn gaussian_entropy(complex_dim: usize, log_det: f64) -> f64 {
    complex_dim as f64 * (PI * E).ln() + log_det
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnConfig {
    pub k: usize,
    pub bootstrap_resamples: usize,
    pub seed: u64,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            k: 4,
            bootstrap_resamples: 100,
            seed: 0,
        }
    }
}

fn ln_unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    h * PI.ln() - ln_gamma(h + 1.0)
}

fn knn_log_terms(points: &[f64], dim: usize, k: usize) -> Vec<f64> {
    let tree = KdTree::new(points, dim);
    let n = points.len() / dim;
    (0..n)
        .into_par_iter()
        .map(|i| 0.5 * tree.kth_neighbor_dist2(i, k).ln())
        .collect()
}

/// Kozachenko–Leonenko estimate from `points` (row-major, `dim` columns).
///
/// The standard error bootstraps the per-point log-distance terms with
/// neighbour distances held fixed; resampling the points themselves would
/// create coincident neighbours.
pub fn knn_entropy(points: &[f64], dim: usize, cfg: &KnnConfig) -> Result<EntropyEstimate> {
    if dim == 0 || points.len() % dim != 0 {
        return Err(Error::InvalidArgument(format!(
            "{} values do not form rows of dimension {dim}",
            points.len()
        )));
    }
    let m = points.len() / dim;
    if m < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 samples, got {m}")));
    }
    if !(1..=20).contains(&cfg.k) {
        return Err(Error::InvalidArgument(format!("k must be in 1..=20, got {}", cfg.k)));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("samples must be finite".into()));
    }
    let seeds = SeedTree::new(cfg.seed);
    let mut terms = knn_log_terms(points, dim, cfg.k);
    let mut jittered = false;
    if terms.iter().any(|t| t.is_infinite()) {
        let spread = (points.iter().map(|v| v * v).sum::<f64>() / points.len() as f64).sqrt().max(1.0);
        let mut rng = seeds.stream(0, 0, Purpose::Jitter);
        let moved: Vec<f64> = points
            .iter()
            .map(|v| v + spread * 1e-12 * rng.random_range(-1.0..1.0))
            .collect();
        terms = knn_log_terms(&moved, dim, cfg.k);
        jittered = true;
    }
    let d = dim as f64;
    let offset = digamma(m as f64) - digamma(cfg.k as f64) + ln_unit_ball_volume(dim);
    let mean = terms.iter().sum::<f64>() / m as f64;
    let value = offset + d * mean;

    let b = cfg.bootstrap_resamples.max(2);
    let boot: Vec<f64> = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = seeds.stream(r as u64, 0, Purpose::Bootstrap);
            (0..m).map(|_| terms[rng.random_range(0..m)]).sum::<f64>() / m as f64
        })
        .collect();
    let bm = boot.iter().sum::<f64>() / b as f64;
    let var = boot.iter().map(|v| (v - bm).powi(2)).sum::<f64>() / (b - 1) as f64;
    let standard_error = (d * var.sqrt()).max(f64::EPSILON);

    Ok(EntropyEstimate {
        value,
        standard_error,
        estimator: EstimatorKind::Knn { k: cfg.k },
        sample_count: m,
        dimension: dim,
        jittered,
    })
}

/// Plug-in histogram estimate with `bins` cells per axis spanning the data
/// range. Biased; intended as a coarse cross-check in one or two dimensions.
pub fn histogram_entropy(points: &[f64], dim: usize, bins: usize) -> Result<EntropyEstimate> {
    if dim == 0 || points.len() % dim != 0 || points.is_empty() {
        return Err(Error::InvalidArgument("bad sample layout".into()));
    }
    if bins < 2 {
        return Err(Error::InvalidArgument("need at least 2 bins per axis".into()));
    }
    let m = points.len() / dim;
    let mut lo = vec![f64::MAX; dim];
    let mut hi = vec![f64::MIN; dim];
    for row in points.chunks_exact(dim) {
        for (c, v) in row.iter().enumerate() {
            lo[c] = lo[c].min(*v);
            hi[c] = hi[c].max(*v);
        }
    }
    let width: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| ((h - l) / bins as f64).max(1e-300)).collect();
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    for row in points.chunks_exact(dim) {
        let cell = row
            .iter()
            .enumerate()
            .map(|(c, v)| (((v - lo[c]) / width[c]) as usize).min(bins - 1))
            .collect();
        *counts.entry(cell).or_default() += 1;
    }
    let ln_vol: f64 = width.iter().map(|w| w.ln()).sum();
    let mut sorted: Vec<usize> = counts.into_values().collect();
    sorted.sort_unstable();
    let (mut h, mut h2) = (0.0, 0.0);
    for c in sorted {
        let p = c as f64 / m as f64;
        let info = -p.ln() + ln_vol;
        h += p * info;
        h2 += p * info * info;
    }
    let standard_error = ((h2 - h * h).max(0.0) / m as f64).sqrt().max(f64::EPSILON);
    Ok(EntropyEstimate {
        value: h,
        standard_error,
        estimator: EstimatorKind::Histogram { bins },
        sample_count: m,
        dimension: dim,
        jittered: false,
    })
}
