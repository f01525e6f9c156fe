//! Statistical verification of the bound's building blocks: trace and
//! energy accounting, maximum-entropy ordering, entropy preservation of the
//! nonlinear step, and the entropy-power inequality.
//!
//! Entropy estimates use the k-NN (Kozachenko–Leonenko) estimator on the
//! `2L`-dimensional real embedding and are only reliable for `L <= 4`.

pub mod checks;
pub mod correlation;
pub mod entropy;
mod kdtree;
pub mod report;

pub use checks::*;
pub use correlation::{estimate_correlation, CorrelationEstimate};
pub use entropy::{
    entropy_power, gaussian_entropy, histogram_entropy, knn_entropy, EntropyEstimate, EstimatorKind,
    KnnConfig,
};
pub use report::{CheckRecord, Outcome};
