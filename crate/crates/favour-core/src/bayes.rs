//! Pairwise-logit likelihood, box-constrained MAP estimation with Laplace
//! posterior approximation, incremental updating, and the
//! probit-approximated predictive rule.
//!
//! A user's preference for route `r` over route `q` is modeled as
//! `Pr(r > q | w) = sigmoid(w . d)` with `d = u(r) - u(q)`. Under a Gaussian
//! prior the log-posterior is strictly concave, so the constrained mode is
//! unique; the posterior is approximated by a Gaussian centered at the mode
//! with covariance equal to the inverse negated Hessian there.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::belief::{BoxBounds, GaussianBelief, TrainingSet};
use crate::error::{Error, Result};
use crate::linalg;
use crate::optim::{self, NewtonOptions, TwiceDifferentiable};
use crate::seed;

/// Eigenvalue floor applied to Laplace covariances.
pub const COVARIANCE_FLOOR: f64 = 1e-10;

/// Numerically stable logistic sigmoid `1 / (1 + exp(-x))`.
///
/// The negative branch is the exact complement of the positive branch
/// (`1 - p` is exact for `p` in `[0.5, 1]`), so `sigmoid(x) + sigmoid(-x)`
/// is exactly 1 for every finite `x`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        1.0 - 1.0 / (1.0 + x.exp())
    }
}

/// Numerically stable `log(sigmoid(x))`.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Probability that the preferred route of a comparison with difference
/// vector `d` is chosen under profile `w`.
pub fn pair_probability(d: &[f64], weights: &[f64]) -> Result<f64> {
    if d.len() != weights.len() {
        return Err(Error::dimension("pair probability weights", d.len(), weights.len()));
    }
    let dot: f64 = d.iter().zip(weights).map(|(a, b)| a * b).sum();
    if !dot.is_finite() {
        return Err(Error::numeric("utility difference is not finite"));
    }
    Ok(sigmoid(dot))
}

/// The un-normalized log-posterior of profile weights given comparison data
/// and a Gaussian prior, with analytic gradient and Hessian:
///
/// - value:    `sum_t log sigmoid(w . d_t) - 0.5 (w - m)^T P (w - m)`
/// - gradient: `sum_t (1 - s_t) d_t - P (w - m)`
/// - Hessian:  `- sum_t s_t (1 - s_t) d_t d_t^T - P`
///
/// where `P` is the prior precision and `s_t = sigmoid(w . d_t)`. Examples
/// are folded in a canonical order (lexicographic by components) so that
/// every evaluation is bit-for-bit independent of the input order.
pub struct LogPosterior {
    diffs: DMatrix<f64>,
    prior_mean: DVector<f64>,
    prior_precision: DMatrix<f64>,
}

impl LogPosterior {
    pub fn new(training: &TrainingSet, prior: &GaussianBelief) -> Result<Self> {
        let dim = prior.dim();
        if let Some(t_dim) = training.dim() {
            if t_dim != dim {
                return Err(Error::dimension("training examples", dim, t_dim));
            }
        }
        let prior_precision = linalg::invert_spd(prior.cov(), "prior covariance")?;

        let mut order: Vec<usize> = (0..training.len()).collect();
        order.sort_by(|&a, &b| {
            let da = training.examples()[a].d();
            let db = training.examples()[b].d();
            da.iter()
                .zip(db.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|c| c.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut diffs = DMatrix::zeros(training.len(), dim);
        for (row, &idx) in order.iter().enumerate() {
            diffs.row_mut(row).copy_from(&training.examples()[idx].d().transpose());
        }

        Ok(LogPosterior {
            diffs,
            prior_mean: prior.mean().clone(),
            prior_precision,
        })
    }

    pub fn dim(&self) -> usize {
        self.prior_mean.len()
    }

    fn margins(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.diffs * w
    }
}

impl TwiceDifferentiable for LogPosterior {
    fn value(&self, w: &DVector<f64>) -> f64 {
        let likelihood: f64 = self.margins(w).iter().map(|&m| log_sigmoid(m)).sum();
        let centered = w - &self.prior_mean;
        likelihood - 0.5 * (&self.prior_precision * &centered).dot(&centered)
    }

    fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        let margins = self.margins(w);
        let residuals =
            DVector::from_iterator(margins.len(), margins.iter().map(|&m| 1.0 - sigmoid(m)));
        self.diffs.transpose() * residuals - &self.prior_precision * (w - &self.prior_mean)
    }

    fn hessian(&self, w: &DVector<f64>) -> DMatrix<f64> {
        let margins = self.margins(w);
        let mut weighted = self.diffs.clone();
        for (row, &m) in margins.iter().enumerate() {
            let s = sigmoid(m);
            weighted.row_mut(row).scale_mut(s * (1.0 - s));
        }
        -(self.diffs.transpose() * weighted) - &self.prior_precision
    }
}

/// Options for [`map_estimate`].
#[derive(Debug, Clone)]
pub struct MapOptions {
    /// Number of multistart runs of the local solver.
    pub runs: usize,
    /// Master seed; run `r` draws its starting point from a stream derived
    /// from `(seed, r)` with `r = 1..=runs`.
    pub seed: u64,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
}

impl Default for MapOptions {
    fn default() -> Self {
        MapOptions {
            runs: 5,
            seed: 1,
            max_iterations: 200,
            gradient_tolerance: 1e-6,
        }
    }
}

/// Half-width of the multistart sampling box, intersected with the bounds.
const START_BOX: f64 = 3.0;

fn sample_start(rng: &mut ChaCha8Rng, bounds: &BoxBounds) -> DVector<f64> {
    DVector::from_iterator(
        bounds.dim(),
        (0..bounds.dim()).map(|i| {
            let lo = bounds.lower()[i].max(-START_BOX);
            let hi = bounds.upper()[i].min(START_BOX);
            if lo > hi {
                // Box is disjoint from the sampling cube; start on the
                // nearest bound.
                rng.random::<f64>(); // keep the stream aligned
                if bounds.lower()[i] > START_BOX {
                    bounds.lower()[i]
                } else {
                    bounds.upper()[i]
                }
            } else {
                lo + (hi - lo) * rng.random::<f64>()
            }
        }),
    )
}

/// Laplace covariance: invert the negated full (unconstrained) Hessian at
/// the mode, symmetrize, and floor the eigenvalues at [`COVARIANCE_FLOOR`].
fn laplace_covariance(hessian: &DMatrix<f64>) -> DMatrix<f64> {
    let neg = linalg::symmetrize(&(-hessian));
    let eig = neg.symmetric_eigen();
    let inverted = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues
            .iter()
            .map(|&l| if l > 0.0 { (1.0 / l).max(COVARIANCE_FLOOR) } else { 1.0 / COVARIANCE_FLOOR }),
    );
    let scaled = &eig.eigenvectors * DMatrix::from_diagonal(&inverted);
    linalg::symmetrize(&(scaled * eig.eigenvectors.transpose()))
}

/// Box-constrained MAP estimation with a Laplace-approximated posterior.
///
/// The mode is the best of `runs` multistart projected-Newton solves, with
/// starting points drawn uniformly inside `[-3, 3]` per coordinate
/// intersected with the box. For a fixed seed the result is deterministic
/// and independent of the order of the training examples; ties between runs
/// are broken by the lowest run index.
pub fn map_estimate(
    training: &TrainingSet,
    prior: &GaussianBelief,
    bounds: &BoxBounds,
    options: &MapOptions,
) -> Result<GaussianBelief> {
    if options.runs == 0 {
        return Err(Error::config("map_estimate requires at least one run"));
    }
    if bounds.dim() != prior.dim() {
        return Err(Error::dimension("bounds", prior.dim(), bounds.dim()));
    }
    // With no data the posterior is the prior; return it exactly when the
    // prior mode is feasible.
    if training.is_empty() && bounds.contains(prior.mean()) {
        return Ok(prior.clone());
    }

    let objective = LogPosterior::new(training, prior)?;
    let newton = NewtonOptions {
        max_iterations: options.max_iterations,
        gradient_tolerance: options.gradient_tolerance,
    };

    let mut best: Option<optim::Maximum> = None;
    let mut best_any: Option<optim::Maximum> = None;
    for run in 1..=options.runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::mix(options.seed, &[run as u64]));
        let start = sample_start(&mut rng, bounds);
        let outcome = optim::projected_newton(&objective, start, bounds, &newton);
        if best_any.as_ref().is_none_or(|b| outcome.value > b.value) {
            best_any = Some(outcome.clone());
        }
        if outcome.converged && best.as_ref().is_none_or(|b| outcome.value > b.value) {
            best = Some(outcome);
        }
    }

    let solution = match best {
        Some(solution) => solution,
        None => {
            let fallback = best_any.expect("at least one run executed");
            return Err(Error::NonConvergence {
                iterations: options.max_iterations,
                gradient_norm: fallback.projected_gradient_norm,
                best_iterate: fallback.x.iter().copied().collect(),
                best_value: fallback.value,
            });
        }
    };

    let hessian = objective.hessian(&solution.x);
    let cov = laplace_covariance(&hessian);
    Ok(GaussianBelief::from_parts(solution.x, cov))
}

/// One pass of the incremental refinement loop: treat the current belief as
/// the prior and absorb the newly observed comparisons.
pub fn incremental_update(
    belief: &GaussianBelief,
    new_examples: &TrainingSet,
    bounds: &BoxBounds,
    options: &MapOptions,
) -> Result<GaussianBelief> {
    map_estimate(new_examples, belief, bounds, options)
}

/// Predictive probability that the route with features `fv_r` is preferred
/// to the one with features `fv_q` under the belief, using the probit
/// approximation of the logistic-Gaussian integral:
/// `sigmoid(lambda * mean . d)` with
/// `lambda = (1 + pi d^T cov d / 8)^(-1/2)`.
///
/// The route with the larger probability is the predicted choice; values
/// strictly above 0.5 predict `r`.
pub fn predict_preference(belief: &GaussianBelief, fv_r: &[f64], fv_q: &[f64]) -> Result<f64> {
    if fv_r.len() != fv_q.len() {
        return Err(Error::dimension("predict_preference pair", fv_r.len(), fv_q.len()));
    }
    let d: Vec<f64> = fv_r.iter().zip(fv_q).map(|(a, b)| a - b).collect();
    predict_from_difference(belief, &d)
}

/// [`predict_preference`] on an already-formed difference vector.
pub fn predict_from_difference(belief: &GaussianBelief, d: &[f64]) -> Result<f64> {
    if d.len() != belief.dim() {
        return Err(Error::dimension("difference vector", belief.dim(), d.len()));
    }
    let d = DVector::from_column_slice(d);
    let variance = (belief.cov() * &d).dot(&d).max(0.0);
    let lambda = 1.0 / (1.0 + std::f64::consts::PI * variance / 8.0).sqrt();
    let mean_margin = belief.mean().dot(&d);
    if !mean_margin.is_finite() {
        return Err(Error::numeric("predictive margin is not finite"));
    }
    Ok(sigmoid(lambda * mean_margin))
}

/// Kullback-Leibler divergence `KL(p || q)` between two Gaussian beliefs.
pub fn gaussian_kl(p: &GaussianBelief, q: &GaussianBelief) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::dimension("KL operands", p.dim(), q.dim()));
    }
    let dim = p.dim() as f64;
    let chol_q = q
        .cov()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numeric("KL divergence: covariance of q is singular"))?;
    let chol_p = p
        .cov()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numeric("KL divergence: covariance of p is singular"))?;

    let log_det = |chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>| -> f64 {
        (0..chol.l_dirty().nrows())
            .map(|i| chol.l_dirty()[(i, i)].ln())
            .sum::<f64>()
            * 2.0
    };

    let trace = chol_q.solve(p.cov()).trace();
    let delta = q.mean() - p.mean();
    let mahalanobis = chol_q.solve(&delta).dot(&delta);
    let kl = 0.5 * (trace + mahalanobis - dim + log_det(&chol_q) - log_det(&chol_p));
    Ok(kl.max(0.0))
}
