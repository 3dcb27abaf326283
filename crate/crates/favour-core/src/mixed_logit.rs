//! Mixed-logit baseline: simulated maximum likelihood with random
//! coefficients, AIC-driven variable selection, individual-level parameters,
//! and a pooled maximum-likelihood prior benchmark.
//!
//! Coefficients are modeled as `w_j ~ N(mu_j, sigma_j)`, independent across
//! components. The simulated log-likelihood of a population is
//!
//! ```text
//! sum_users log( (1/B) sum_b prod_k P(chosen_k | w_b) )
//! ```
//!
//! with `w_b = mu + sigma .* xi_b` and base draws `xi_b` fixed per user
//! (common random numbers), so the objective is a smooth deterministic
//! function of `(mu, sigma)`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::belief::{BoxBounds, GaussianBelief, TrainingSet};
use crate::error::{Error, Result};
use crate::feature::UserProfile;
use crate::linalg;
use crate::optim::{self, Differentiable, GradientOptions, NewtonOptions, TwiceDifferentiable};
use crate::seed;

/// One ranked or binary choice situation: the feature vectors of the
/// alternatives and the index of the chosen one.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceObservation {
    alternatives: Vec<Vec<f64>>,
    chosen: usize,
}

impl ChoiceObservation {
    pub fn new(alternatives: Vec<Vec<f64>>, chosen: usize) -> Result<Self> {
        if alternatives.len() < 2 {
            return Err(Error::config("a choice needs at least two alternatives"));
        }
        if chosen >= alternatives.len() {
            return Err(Error::config(format!(
                "chosen index {chosen} out of range for {} alternatives",
                alternatives.len()
            )));
        }
        let dim = alternatives[0].len();
        for (i, alt) in alternatives.iter().enumerate() {
            if alt.len() != dim {
                return Err(Error::dimension(format!("alternative {i}"), dim, alt.len()));
            }
            if alt.iter().any(|v| !v.is_finite()) {
                return Err(Error::numeric("alternative features must be finite"));
            }
        }
        Ok(ChoiceObservation {
            alternatives,
            chosen,
        })
    }

    pub fn alternatives(&self) -> &[Vec<f64>] {
        &self.alternatives
    }

    pub fn chosen(&self) -> usize {
        self.chosen
    }

    pub fn dim(&self) -> usize {
        self.alternatives[0].len()
    }
}

/// Random-coefficient logit model: per-feature mean and standard deviation,
/// plus the mask of features retained by variable selection. Masked-out
/// coordinates carry whatever values were assigned to them (zero during
/// fitting, the reintroduction values afterwards).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MixedLogitModel {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub selected: Vec<bool>,
}

impl MixedLogitModel {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>, selected: Vec<bool>) -> Result<Self> {
        if sigma.len() != mu.len() {
            return Err(Error::dimension("sigma", mu.len(), sigma.len()));
        }
        if selected.len() != mu.len() {
            return Err(Error::dimension("selection mask", mu.len(), selected.len()));
        }
        if sigma.iter().any(|&s| !s.is_finite() || s < 0.0) {
            return Err(Error::config("sigma entries must be finite and non-negative"));
        }
        if mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::config("mu entries must be finite"));
        }
        Ok(MixedLogitModel { mu, sigma, selected })
    }

    /// All-selected model with zero means and a common initial sigma.
    pub fn initial(dim: usize, sigma: f64) -> Self {
        MixedLogitModel {
            mu: vec![0.0; dim],
            sigma: vec![sigma; dim],
            selected: vec![true; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn selected_indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&j| self.selected[j]).collect()
    }
}

/// Multinomial-logit choice probabilities of one observation under a fixed
/// weight vector (softmax of the alternative utilities).
pub fn mnl_probability(observation: &ChoiceObservation, weights: &[f64]) -> Result<Vec<f64>> {
    if weights.len() != observation.dim() {
        return Err(Error::dimension("mnl weights", observation.dim(), weights.len()));
    }
    let utilities: Vec<f64> = observation
        .alternatives()
        .iter()
        .map(|alt| alt.iter().zip(weights).map(|(x, w)| x * w).sum())
        .collect();
    let max = utilities.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !max.is_finite() {
        return Err(Error::numeric("alternative utility overflowed"));
    }
    let exps: Vec<f64> = utilities.iter().map(|u| (u - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

fn log_mnl_chosen(observation: &ChoiceObservation, weights: &[f64]) -> f64 {
    let utilities: Vec<f64> = observation
        .alternatives()
        .iter()
        .map(|alt| alt.iter().zip(weights).map(|(x, w)| x * w).sum())
        .collect();
    let lse = linalg::log_sum_exp(&utilities);
    utilities[observation.chosen()] - lse
}

/// Options for [`smle_fit`].
#[derive(Debug, Clone)]
pub struct SmleOptions {
    /// Monte Carlo draws per user.
    pub draws: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Convergence threshold on the projected gradient norm, per
    /// observation (the absolute threshold scales with the data size).
    pub gradient_tolerance: f64,
    /// Pin every sigma at zero, reducing the model to a plain multinomial
    /// logit.
    pub fix_sigma_zero: bool,
}

impl Default for SmleOptions {
    fn default() -> Self {
        SmleOptions {
            draws: 2000,
            seed: 1,
            max_iterations: 400,
            gradient_tolerance: 1e-5,
            fix_sigma_zero: false,
        }
    }
}

/// Result of a simulated maximum-likelihood fit.
#[derive(Debug, Clone)]
pub struct SmleFit {
    pub model: MixedLogitModel,
    /// Simulated log-likelihood at the fitted parameters.
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Simulated log-likelihood after each accepted optimizer step
    /// (non-decreasing by construction of the line search).
    pub objective_trace: Vec<f64>,
    /// Set when the input was degenerate (no observations) and the initial
    /// model was returned unchanged.
    pub flagged: bool,
}

struct CompiledObservation {
    /// Features, alternatives x active dim.
    x: DMatrix<f64>,
    /// Transposed features, active dim x alternatives.
    x_t: DMatrix<f64>,
    chosen: usize,
}

struct CompiledUser {
    observations: Vec<CompiledObservation>,
    /// Sum over observations of the chosen alternative's features.
    chosen_sum: DVector<f64>,
    /// Base draws, active dim x draws (one contiguous column per draw).
    draws_t: DMatrix<f64>,
}

/// Simulated log-likelihood objective over theta = [mu_active, sigma_active].
///
/// Per user, with `P_kb` the choice probabilities of observation `k` under
/// draw `b`, the per-draw gradient of the log product likelihood w.r.t. `w`
/// is `chosen_sum - M[:, b]` where `M = sum_k X_k^T P_k`; mu and sigma
/// gradients follow by the chain rule through `w_b = mu + sigma .* xi_b`.
struct SmleObjective {
    users: Vec<CompiledUser>,
    active_dim: usize,
}

impl SmleObjective {
    fn compile(
        observations_per_user: &[Vec<ChoiceObservation>],
        active: &[usize],
        full_dim: usize,
        draws: usize,
        master_seed: u64,
    ) -> Result<Self> {
        let d = active.len();
        let mut users = Vec::with_capacity(observations_per_user.len());
        for (user, observations) in observations_per_user.iter().enumerate() {
            let mut compiled = Vec::with_capacity(observations.len());
            let mut chosen_sum = DVector::zeros(d);
            for obs in observations {
                if obs.dim() != full_dim {
                    return Err(Error::dimension(
                        format!("observation of user {user}"),
                        full_dim,
                        obs.dim(),
                    ));
                }
                let x = DMatrix::from_fn(obs.alternatives().len(), d, |a, j| {
                    obs.alternatives()[a][active[j]]
                });
                let x_t = x.transpose();
                chosen_sum += x_t.column(obs.chosen());
                compiled.push(CompiledObservation {
                    x,
                    x_t,
                    chosen: obs.chosen(),
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed::mix(master_seed, &[user as u64]));
            let draws_t = DMatrix::from_fn(d, draws, |_, _| StandardNormal.sample(&mut rng));
            users.push(CompiledUser {
                observations: compiled,
                chosen_sum,
                draws_t,
            });
        }
        Ok(SmleObjective {
            users,
            active_dim: d,
        })
    }

    fn user_term(&self, user: &CompiledUser, theta: &DVector<f64>) -> (f64, DVector<f64>) {
        let d = self.active_dim;
        let draws = user.draws_t.ncols();
        // W[(j, b)] = mu_j + sigma_j * xi_{j, b}, built column by column
        // (column-major storage, so columns are contiguous).
        let mut w = user.draws_t.clone();
        {
            let mu = &theta.as_slice()[..d];
            let sigma = &theta.as_slice()[d..2 * d];
            for (idx, v) in w.as_mut_slice().iter_mut().enumerate() {
                let j = idx % d;
                *v = mu[j] + sigma[j] * *v;
            }
        }

        let mut log_likelihoods = vec![0.0f64; draws];
        // M = sum_k X_k^T P_k, active dim x draws. The matrices involved
        // are tiny (a handful of alternatives), so explicit loops over the
        // contiguous columns beat generic matrix products here.
        let mut m = DMatrix::zeros(d, draws);
        let w_slice = w.as_slice();
        let m_slice = m.as_mut_slice();
        let mut utilities = [0.0f64; 8];
        for obs in &user.observations {
            let n_alts = obs.x.nrows();
            debug_assert!(n_alts <= utilities.len());
            let x_t = obs.x_t.as_slice(); // d x n_alts, one column per alternative
            for b in 0..draws {
                let w_col = &w_slice[b * d..(b + 1) * d];
                let mut max = f64::NEG_INFINITY;
                for (a, slot) in utilities[..n_alts].iter_mut().enumerate() {
                    let x_col = &x_t[a * d..(a + 1) * d];
                    let mut dot = 0.0;
                    for (xv, wv) in x_col.iter().zip(w_col) {
                        dot += xv * wv;
                    }
                    *slot = dot;
                    if dot > max {
                        max = dot;
                    }
                }
                let mut total = 0.0;
                for slot in utilities[..n_alts].iter_mut() {
                    *slot = (*slot - max).exp();
                    total += *slot;
                }
                log_likelihoods[b] += (utilities[obs.chosen] / total).ln();
                let inverse = 1.0 / total;
                let m_col = &mut m_slice[b * d..(b + 1) * d];
                for (a, &value) in utilities[..n_alts].iter().enumerate() {
                    let p = value * inverse;
                    let x_col = &x_t[a * d..(a + 1) * d];
                    for (mv, xv) in m_col.iter_mut().zip(x_col) {
                        *mv += p * xv;
                    }
                }
            }
        }

        // Log-space mixture over draws.
        let max_ll = log_likelihoods.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
        if !max_ll.is_finite() {
            // Every draw underflowed; signal the line search to reject.
            return (f64::NEG_INFINITY, DVector::zeros(2 * d));
        }
        let mut weights = DVector::zeros(draws);
        let mut total = 0.0;
        for b in 0..draws {
            let value = (log_likelihoods[b] - max_ll).exp();
            weights[b] = value;
            total += value;
        }
        let value = max_ll + (total / draws as f64).ln();
        weights /= total;

        // grad_mu = chosen_sum - M w, grad_sigma = chosen_sum .* (Xi w)
        // - rowwise_sum(weights .* M .* Xi).
        let m_weighted = &m * &weights;
        let xi_weighted = &user.draws_t * &weights;
        let mut cross = vec![0.0f64; d];
        {
            let m_slice = m.as_slice();
            let xi_slice = user.draws_t.as_slice();
            for b in 0..draws {
                let weight = weights[b];
                let offset = b * d;
                for j in 0..d {
                    cross[j] += weight * m_slice[offset + j] * xi_slice[offset + j];
                }
            }
        }
        let mut gradient = DVector::zeros(2 * d);
        for j in 0..d {
            gradient[j] = user.chosen_sum[j] - m_weighted[j];
            gradient[d + j] = user.chosen_sum[j] * xi_weighted[j] - cross[j];
        }
        (value, gradient)
    }
}

impl Differentiable for SmleObjective {
    fn value_and_gradient(&self, theta: &DVector<f64>) -> (f64, DVector<f64>) {
        let terms: Vec<(f64, DVector<f64>)> = self
            .users
            .par_iter()
            .map(|user| self.user_term(user, theta))
            .collect();
        let mut value = 0.0;
        let mut gradient = DVector::zeros(2 * self.active_dim);
        for (v, g) in terms {
            value += v;
            gradient += g;
        }
        (value, gradient)
    }
}

fn smle_fit_core(
    observations_per_user: &[Vec<ChoiceObservation>],
    initial: &MixedLogitModel,
    options: &SmleOptions,
) -> Result<SmleFit> {
    if options.draws == 0 {
        return Err(Error::config("smle_fit requires at least one draw"));
    }
    let total_observations: usize = observations_per_user.iter().map(|o| o.len()).sum();
    if total_observations == 0 {
        log::warn!("smle_fit called with zero observations; returning the initial model");
        return Ok(SmleFit {
            model: initial.clone(),
            log_likelihood: 0.0,
            iterations: 0,
            converged: true,
            objective_trace: Vec::new(),
            flagged: true,
        });
    }
    let active = initial.selected_indices();
    if active.is_empty() {
        let log_likelihood = empty_model_log_likelihood(observations_per_user);
        return Ok(SmleFit {
            model: initial.clone(),
            log_likelihood,
            iterations: 0,
            converged: true,
            objective_trace: Vec::new(),
            flagged: false,
        });
    }

    let objective = SmleObjective::compile(
        observations_per_user,
        &active,
        initial.dim(),
        options.draws,
        options.seed,
    )?;

    let d = active.len();
    let mut theta0 = DVector::zeros(2 * d);
    for (slot, &j) in active.iter().enumerate() {
        theta0[slot] = initial.mu[j];
        theta0[d + slot] = if options.fix_sigma_zero { 0.0 } else { initial.sigma[j] };
    }
    let mut lower = vec![f64::NEG_INFINITY; 2 * d];
    let mut upper = vec![f64::INFINITY; 2 * d];
    for slot in 0..d {
        lower[d + slot] = 0.0;
        if options.fix_sigma_zero {
            upper[d + slot] = 0.0;
        }
    }
    let bounds = BoxBounds::new(lower, upper)?;

    let gradient_options = GradientOptions {
        max_iterations: options.max_iterations,
        gradient_tolerance: options.gradient_tolerance * (total_observations as f64).max(1.0),
    };
    let outcome = optim::projected_gradient(&objective, theta0, &bounds, &gradient_options);

    let mut model = initial.clone();
    for (slot, &j) in active.iter().enumerate() {
        model.mu[j] = outcome.x[slot];
        model.sigma[j] = outcome.x[d + slot].max(0.0);
    }
    Ok(SmleFit {
        model,
        log_likelihood: outcome.value,
        iterations: outcome.iterations,
        converged: outcome.converged,
        objective_trace: outcome.value_trace,
        flagged: false,
    })
}

/// Fits `(mu, sigma)` on the selected features of `initial` by simulated
/// maximum likelihood. Masked-out coordinates are left untouched.
/// Non-convergence is an error carrying the best iterate.
pub fn smle_fit(
    observations_per_user: &[Vec<ChoiceObservation>],
    initial: &MixedLogitModel,
    options: &SmleOptions,
) -> Result<SmleFit> {
    let fit = smle_fit_core(observations_per_user, initial, options)?;
    if !fit.converged {
        let active = initial.selected_indices();
        let d = active.len();
        let mut best_iterate = vec![0.0; 2 * d];
        for (slot, &j) in active.iter().enumerate() {
            best_iterate[slot] = fit.model.mu[j];
            best_iterate[d + slot] = fit.model.sigma[j];
        }
        return Err(Error::NonConvergence {
            iterations: options.max_iterations,
            gradient_norm: f64::NAN,
            best_iterate,
            best_value: fit.log_likelihood,
        });
    }
    Ok(fit)
}

/// [`smle_fit`] that keeps the best iterate instead of erroring when the
/// iteration budget runs out (`converged` is false in that case). Used for
/// candidate scoring inside variable selection, where a partially converged
/// likelihood still ranks candidates.
pub fn smle_fit_best_effort(
    observations_per_user: &[Vec<ChoiceObservation>],
    initial: &MixedLogitModel,
    options: &SmleOptions,
) -> Result<SmleFit> {
    smle_fit_core(observations_per_user, initial, options)
}

/// Exact log-likelihood of the featureless model (uniform choice over the
/// alternatives of each observation).
pub fn empty_model_log_likelihood(observations_per_user: &[Vec<ChoiceObservation>]) -> f64 {
    observations_per_user
        .iter()
        .flatten()
        .map(|obs| -((obs.alternatives().len() as f64).ln()))
        .sum()
}

/// Options for [`aic_select`].
#[derive(Debug, Clone)]
pub struct AicOptions {
    /// Draws used for the candidate fits during selection. Selection only
    /// compares candidates against each other, so fewer draws than the
    /// final fit are adequate.
    pub draws: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Initial sigma assigned to a feature when it first enters the model.
    pub sigma_init: f64,
}

impl Default for AicOptions {
    fn default() -> Self {
        AicOptions {
            draws: 30,
            seed: 1,
            max_iterations: 30,
            gradient_tolerance: 1e-3,
            sigma_init: 0.1,
        }
    }
}

/// Result of AIC-based variable selection.
#[derive(Debug, Clone)]
pub struct AicSelection {
    /// Model fitted on the selected features (masked-out coordinates are
    /// zero). The mask records the selection.
    pub model: MixedLogitModel,
    pub aic: f64,
    pub log_likelihood: f64,
}

fn aic_value(selected_count: usize, log_likelihood: f64) -> f64 {
    // mu and sigma are free per selected feature.
    2.0 * (2 * selected_count) as f64 - 2.0 * log_likelihood
}

/// Fits a candidate feature set, warm-starting from the current model.
fn fit_candidate(
    observations_per_user: &[Vec<ChoiceObservation>],
    dim: usize,
    current: &MixedLogitModel,
    selection: &[usize],
    options: &AicOptions,
) -> Result<AicSelection> {
    let mut initial = MixedLogitModel {
        mu: vec![0.0; dim],
        sigma: vec![0.0; dim],
        selected: vec![false; dim],
    };
    for &j in selection {
        initial.selected[j] = true;
        if current.selected[j] {
            initial.mu[j] = current.mu[j];
            initial.sigma[j] = current.sigma[j];
        } else {
            initial.sigma[j] = options.sigma_init;
        }
    }
    let smle = SmleOptions {
        draws: options.draws,
        seed: options.seed,
        max_iterations: options.max_iterations,
        gradient_tolerance: options.gradient_tolerance,
        fix_sigma_zero: false,
    };
    let fit = smle_fit_best_effort(observations_per_user, &initial, &smle)?;
    Ok(AicSelection {
        aic: aic_value(selection.len(), fit.log_likelihood),
        log_likelihood: fit.log_likelihood,
        model: fit.model,
    })
}

/// Greedy forward selection followed by alternating backward/forward
/// refinement, scored by the Akaike Information Criterion
/// `AIC = 2k - 2 log L` with `k` the number of free parameters.
///
/// Candidate evaluations within one step are independent; ties are broken
/// in favor of the lowest feature index. An empty selection is a legal
/// outcome.
pub fn aic_select(
    observations_per_user: &[Vec<ChoiceObservation>],
    candidates: &[usize],
    dim: usize,
    options: &AicOptions,
) -> Result<AicSelection> {
    if candidates.is_empty() {
        return Err(Error::config("aic_select requires at least one candidate"));
    }
    if candidates.iter().any(|&c| c >= dim) {
        return Err(Error::config("candidate index out of range"));
    }
    let total_observations: usize = observations_per_user.iter().map(|o| o.len()).sum();
    if total_observations == 0 {
        return Err(Error::config("aic_select requires observations"));
    }

    let empty_ll = empty_model_log_likelihood(observations_per_user);
    let mut best = AicSelection {
        model: MixedLogitModel {
            mu: vec![0.0; dim],
            sigma: vec![0.0; dim],
            selected: vec![false; dim],
        },
        log_likelihood: empty_ll,
        aic: aic_value(0, empty_ll),
    };

    // Scores a batch of candidate selections, returning the best by
    // (AIC, position). Move lists are built in ascending feature order, so
    // position order is index order and ties resolve to the lower index.
    let evaluate_moves = |current: &AicSelection, moves: &[Vec<usize>]| -> Option<AicSelection> {
        let evaluated: Vec<Option<AicSelection>> = moves
            .par_iter()
            .map(|selection| {
                match fit_candidate(observations_per_user, dim, &current.model, selection, options)
                {
                    Ok(candidate) => Some(candidate),
                    Err(error) => {
                        log::warn!("candidate fit skipped during AIC selection: {error}");
                        None
                    }
                }
            })
            .collect();
        evaluated
            .into_iter()
            .flatten()
            .min_by(|a, b| a.aic.total_cmp(&b.aic))
    };

    let additions = |current: &AicSelection| -> Vec<Vec<usize>> {
        candidates
            .iter()
            .filter(|&&c| !current.model.selected[c])
            .map(|&c| {
                let mut selection = current.model.selected_indices();
                selection.push(c);
                selection.sort_unstable();
                selection
            })
            .collect()
    };
    let removals = |current: &AicSelection| -> Vec<Vec<usize>> {
        let selected = current.model.selected_indices();
        selected
            .iter()
            .map(|&r| selected.iter().copied().filter(|&j| j != r).collect())
            .collect()
    };

    // Forward pass: add the best single feature while the AIC improves.
    loop {
        let moves = additions(&best);
        if moves.is_empty() {
            break;
        }
        match evaluate_moves(&best, &moves) {
            Some(candidate) if candidate.aic < best.aic - 1e-9 => best = candidate,
            _ => break,
        }
    }

    // Backward/forward fine-tuning: single-feature moves while the AIC
    // keeps improving. AIC strictly decreases with each applied move, so
    // the loop terminates; the cap is a safety net.
    for _ in 0..4 * candidates.len() {
        let mut improved = false;
        let backward_moves = removals(&best);
        if let Some(candidate) = evaluate_moves(&best, &backward_moves) {
            if candidate.aic < best.aic - 1e-9 {
                best = candidate;
                improved = true;
            }
        }
        let forward_moves = additions(&best);
        if !forward_moves.is_empty() {
            if let Some(candidate) = evaluate_moves(&best, &forward_moves) {
                if candidate.aic < best.aic - 1e-9 {
                    best = candidate;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }

    Ok(best)
}

/// Re-inserts the features dropped by variable selection with zero mean and
/// a standard deviation comparable to the retained ones (their median).
/// Falls back to 1.0 when nothing was selected.
pub fn reintroduce_excluded(model: &MixedLogitModel) -> MixedLogitModel {
    let selected_sigmas: Vec<f64> = (0..model.dim())
        .filter(|&j| model.selected[j])
        .map(|j| model.sigma[j])
        .collect();
    if selected_sigmas.len() == model.dim() {
        return model.clone();
    }
    let fill = if selected_sigmas.is_empty() {
        log::warn!("reintroduce_excluded: empty selection, using fallback sigma 1.0");
        1.0
    } else {
        median(&selected_sigmas)
    };
    let mut out = model.clone();
    for j in 0..model.dim() {
        if !model.selected[j] {
            out.mu[j] = 0.0;
            out.sigma[j] = fill;
        }
    }
    out
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Individual-level parameters: weighted mean of population draws, with
/// weights proportional to the user's choice likelihood under each draw.
#[derive(Debug, Clone)]
pub struct IndividualEstimate {
    pub profile: UserProfile,
    /// Normalized draw weights (sum to one).
    pub weights: Vec<f64>,
    /// Set when every draw had numerically zero likelihood and the
    /// unweighted mean was used instead.
    pub degenerate: bool,
}

pub fn individual_parameters(
    model: &MixedLogitModel,
    observations: &[ChoiceObservation],
    draws: usize,
    seed: u64,
) -> Result<IndividualEstimate> {
    if draws == 0 {
        return Err(Error::config("individual_parameters requires at least one draw"));
    }
    let dim = model.dim();
    for obs in observations {
        if obs.dim() != dim {
            return Err(Error::dimension("observation", dim, obs.dim()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(draws);
    let mut log_weights = Vec::with_capacity(draws);
    for _ in 0..draws {
        let w: Vec<f64> = (0..dim)
            .map(|j| {
                let xi: f64 = StandardNormal.sample(&mut rng);
                model.mu[j] + model.sigma[j] * xi
            })
            .collect();
        let log_weight: f64 = observations.iter().map(|obs| log_mnl_chosen(obs, &w)).sum();
        samples.push(w);
        log_weights.push(log_weight);
    }

    let lse = linalg::log_sum_exp(&log_weights);
    let (weights, degenerate) = if lse.is_finite() {
        (
            log_weights
                .iter()
                .map(|lw| (lw - lse).exp())
                .collect::<Vec<f64>>(),
            false,
        )
    } else {
        log::warn!(
            "individual_parameters: all draw likelihoods are numerically zero, \
             falling back to the unweighted mean"
        );
        (vec![1.0 / draws as f64; draws], true)
    };

    let mut profile = vec![0.0; dim];
    for (w, &g) in samples.iter().zip(&weights) {
        for j in 0..dim {
            profile[j] += g * w[j];
        }
    }
    Ok(IndividualEstimate {
        profile: UserProfile::new(profile)?,
        weights,
        degenerate,
    })
}

/// Pooled binary-logit likelihood (no prior) over every training user's
/// comparisons, with analytic derivatives.
struct PooledLogit {
    diffs: DMatrix<f64>,
}

impl TwiceDifferentiable for PooledLogit {
    fn value(&self, w: &DVector<f64>) -> f64 {
        (&self.diffs * w)
            .iter()
            .map(|&m| crate::bayes::log_sigmoid(m))
            .sum()
    }

    fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        let margins = &self.diffs * w;
        let residuals = DVector::from_iterator(
            margins.len(),
            margins.iter().map(|&m| 1.0 - crate::bayes::sigmoid(m)),
        );
        self.diffs.transpose() * residuals
    }

    fn hessian(&self, w: &DVector<f64>) -> DMatrix<f64> {
        let margins = &self.diffs * w;
        let mut weighted = self.diffs.clone();
        for (row, &m) in margins.iter().enumerate() {
            let s = crate::bayes::sigmoid(m);
            weighted.row_mut(row).scale_mut(s * (1.0 - s));
        }
        -(self.diffs.transpose() * weighted)
    }
}

/// Floor applied to the diagonal of the observed information matrix.
pub const INFORMATION_FLOOR: f64 = 1e-6;

/// Simulated state-of-the-art benchmark prior: pooled maximum-likelihood
/// point estimate over all training users' comparisons, with diagonal
/// uncertainty from the inverse observed information. Coordinates with no
/// information (a feature that never varies within a pair) keep a zero mean
/// and get the floor-information variance `1 / INFORMATION_FLOOR`.
pub fn ml_prior_benchmark(training_sets: &[TrainingSet]) -> Result<GaussianBelief> {
    let dim = training_sets
        .iter()
        .find_map(|t| t.dim())
        .ok_or_else(|| Error::config("ml_prior_benchmark requires at least one comparison"))?;
    let mut rows = Vec::new();
    for set in training_sets {
        for example in set.iter() {
            if example.dim() != dim {
                return Err(Error::dimension("pooled comparison", dim, example.dim()));
            }
            rows.push(example.d().clone());
        }
    }
    let mut diffs = DMatrix::zeros(rows.len(), dim);
    for (i, row) in rows.iter().enumerate() {
        diffs.row_mut(i).copy_from(&row.transpose());
    }
    let objective = PooledLogit { diffs };

    let options = NewtonOptions {
        max_iterations: 200,
        gradient_tolerance: 1e-6 * (rows.len() as f64).max(1.0),
    };
    let outcome = optim::projected_newton(
        &objective,
        DVector::zeros(dim),
        &BoxBounds::unbounded(dim),
        &options,
    );
    if !outcome.converged {
        return Err(Error::NonConvergence {
            iterations: options.max_iterations,
            gradient_norm: outcome.projected_gradient_norm,
            best_iterate: outcome.x.iter().copied().collect(),
            best_value: outcome.value,
        });
    }

    let information = -objective.hessian(&outcome.x);
    let variances = DVector::from_iterator(
        dim,
        (0..dim).map(|j| 1.0 / information[(j, j)].max(INFORMATION_FLOOR)),
    );
    Ok(GaussianBelief::from_parts(
        outcome.x,
        DMatrix::from_diagonal(&variances),
    ))
}
