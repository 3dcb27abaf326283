//! Bayesian pairwise-preference learning for personalized multimodal route
//! choice.
//!
//! The crate provides, bottom-up:
//!
//! - [`feature`]: the 59-dimensional route/situation feature model
//!   (36 mode-weather indicators followed by 23 quantitative route features)
//!   and the linear route utility it induces;
//! - [`bayes`]: the pairwise-logit likelihood, box-constrained MAP estimation
//!   with a Laplace-approximated Gaussian posterior, incremental belief
//!   updates, and the probit-approximated predictive rule;
//! - [`mass_prior`]: mass-preference priors (MPP) obtained by averaging and
//!   iteratively refining a population of per-user posteriors;
//! - [`mixed_logit`]: the mixed-logit baseline (simulated maximum likelihood,
//!   AIC variable selection, individual-level parameters) and a pooled
//!   maximum-likelihood prior benchmark;
//! - [`synthetic`]: a reproducible synthetic-population generator with known
//!   ground-truth profiles;
//! - [`eval`]: the leave-one-user-out cross-validation harness, with
//!   one-sided Kolmogorov-Smirnov significance tests ([`stats`]) and frozen
//!   CSV/JSON exports ([`report`]).

pub mod bayes;
pub mod belief;
pub mod error;
pub mod eval;
pub mod feature;
pub mod linalg;
pub mod mass_prior;
pub mod mixed_logit;
pub mod optim;
pub mod report;
pub mod seed;
pub mod stats;
pub mod synthetic;

pub use belief::{BoxBounds, ComparisonExample, GaussianBelief, Provenance, TrainingSet};
pub use error::{Error, Result};
pub use feature::{FeatureVector, UserProfile, FEATURE_DIM};
