//! Mass-preference priors: pooling per-user posteriors into a Gaussian
//! population prior and iteratively refining it.
//!
//! The mass-preference prior (MPP) of a population is the moment average of
//! the per-user posterior Gaussians,
//!
//! ```text
//! mean = (1/K) sum_k mu_k
//! cov  = (1/K) sum_k ((mu_k - mean)(mu_k - mean)^T + cov_k)
//! ```
//!
//! so it combines between-user scatter with the remaining per-user
//! uncertainty. Refinement alternates per-user Bayesian fits (with the
//! current MPP as prior) with re-averaging, until the KL divergence between
//! consecutive MPPs drops below a threshold or an iteration cap is hit.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::bayes::{self, MapOptions};
use crate::belief::{BoxBounds, GaussianBelief, TrainingSet};
use crate::error::{Error, Result};
use crate::linalg;

/// Eigenvalue floor applied to the averaged covariance before it is used as
/// a prior.
pub const MPP_PRIOR_FLOOR: f64 = 1e-10;

/// Convergence settings for [`mpp_refine`].
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct MppConfig {
    /// Refinement stops when `KL(new || previous)` falls below this value.
    pub kl_threshold: f64,
    /// Hard cap on refinement iterations.
    pub max_iterations: usize,
}

impl Default for MppConfig {
    fn default() -> Self {
        MppConfig {
            kl_threshold: 1e-3,
            max_iterations: 50,
        }
    }
}

impl MppConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kl_threshold.is_nan() || self.kl_threshold <= 0.0 {
            return Err(Error::config("kl_threshold must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::config("max_iterations must be positive"));
        }
        Ok(())
    }
}

/// Result of [`mpp_refine`]: the converged prior plus its convergence trace.
#[derive(Debug, Clone)]
pub struct MppOutcome {
    pub mpp: GaussianBelief,
    /// Number of refit-and-average passes performed.
    pub iterations: usize,
    /// `KL(new || previous)` after each pass.
    pub kl_trace: Vec<f64>,
    /// Whether the KL threshold was reached before the iteration cap.
    pub converged: bool,
}

/// Moment average of a population of posterior beliefs.
pub fn mpp_average(posteriors: &[GaussianBelief]) -> Result<GaussianBelief> {
    let first = posteriors
        .first()
        .ok_or_else(|| Error::config("mpp_average requires at least one posterior"))?;
    let dim = first.dim();
    for (k, belief) in posteriors.iter().enumerate() {
        if belief.dim() != dim {
            return Err(Error::dimension(format!("posterior {k}"), dim, belief.dim()));
        }
    }
    let count = posteriors.len() as f64;
    let mut mean = first.mean().clone();
    for belief in &posteriors[1..] {
        mean += belief.mean();
    }
    mean /= count;

    let mut cov = DMatrix::zeros(dim, dim);
    for belief in posteriors {
        let centered = belief.mean() - &mean;
        cov += &centered * centered.transpose();
        cov += belief.cov();
    }
    cov /= count;
    Ok(GaussianBelief::from_parts(mean, linalg::symmetrize(&cov)))
}

/// Iteratively refines the mass-preference prior from per-user training
/// sets, starting from `N(0, I)`.
///
/// Per-user fits within one pass are independent and run in parallel; the
/// averaging step is the synchronization point, and results are identical to
/// a sequential execution.
pub fn mpp_refine(
    training_sets: &[TrainingSet],
    bounds: &BoxBounds,
    config: &MppConfig,
    map_options: &MapOptions,
) -> Result<MppOutcome> {
    config.validate()?;
    if training_sets.is_empty() {
        return Err(Error::config("mpp_refine requires at least one user"));
    }
    let dim = bounds.dim();

    let mut mpp = GaussianBelief::standard(dim);
    let mut kl_trace = Vec::new();
    for iteration in 1..=config.max_iterations {
        let prior = mpp.with_floored_cov(MPP_PRIOR_FLOOR);
        let posteriors: Vec<GaussianBelief> = training_sets
            .par_iter()
            .enumerate()
            .map(|(user, training)| {
                bayes::map_estimate(training, &prior, bounds, map_options).map_err(|e| {
                    Error::UserFit {
                        user,
                        source: Box::new(e),
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let refined = mpp_average(&posteriors)?;
        let kl = bayes::gaussian_kl(&refined, &mpp)?;
        kl_trace.push(kl);
        mpp = refined;
        if kl < config.kl_threshold {
            return Ok(MppOutcome {
                mpp,
                iterations: iteration,
                kl_trace,
                converged: true,
            });
        }
    }

    Ok(MppOutcome {
        mpp,
        iterations: config.max_iterations,
        kl_trace,
        converged: false,
    })
}
