//! Leave-one-user-out cross-validation harness.
//!
//! For every test user, population-level knowledge (mass-preference prior,
//! mixed-logit model, pooled ML prior) is built strictly from the remaining
//! users. The test user's comparisons are repeatedly partitioned into a
//! held-out test set and a candidate pool; training sets of increasing size
//! are sampled from the candidates, a per-user model is fitted with each
//! requested method, and its accuracy is scored on the held-out pairs with
//! the strict `> 0.5` decision rule (a probability of exactly one half
//! counts as incorrect).
//!
//! Held-out pairs are presented in a randomized orientation, so a
//! constant or uninformative predictor scores 50% in expectation.
//!
//! Every session is seeded from `(master seed, user, repartition, size,
//! sample)`, which makes any single cell reproducible in isolation and the
//! whole run independent of worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{self, MapOptions};
use crate::belief::{GaussianBelief, TrainingSet};
use crate::error::{Error, Result};
use crate::feature::FEATURE_DIM;
use crate::mass_prior::{self, MppConfig, MPP_PRIOR_FLOOR};
use crate::mixed_logit::{
    self, AicOptions, ChoiceObservation, MixedLogitModel, SmleOptions,
};
use crate::seed::mix;
use crate::stats;
use crate::synthetic::{default_profile_bounds, ChoiceDataset, PreferencePredictor};

/// The learning methods the harness can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Bayesian updating from the mass-preference prior.
    Mpp,
    /// Bayesian updating from the flat prior `N(0, I)`.
    Flat,
    /// The mass-preference prior used as-is, with no personalization.
    MppOnly,
    /// Mixed logit with AIC selection and individual-level parameters.
    MixedLogit,
    /// Individual-level parameters drawn from the (diagonalized)
    /// mass-preference prior instead of the fitted mixed logit.
    MixedLogitMpp,
    /// Bayesian updating from the pooled maximum-likelihood prior.
    MlPrior,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Mpp,
        Method::Flat,
        Method::MppOnly,
        Method::MixedLogit,
        Method::MixedLogitMpp,
        Method::MlPrior,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mpp => "mpp",
            Method::Flat => "flat",
            Method::MppOnly => "mpp-only",
            Method::MixedLogit => "mixed-logit",
            Method::MixedLogitMpp => "mixed-logit-mpp",
            Method::MlPrior => "ml-prior",
        }
    }

    fn tag(self) -> u64 {
        Method::ALL.iter().position(|&m| m == self).unwrap() as u64
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "mpp" => Ok(Method::Mpp),
            "flat" | "flat-prior" => Ok(Method::Flat),
            "mpp-only" => Ok(Method::MppOnly),
            "mixed-logit" => Ok(Method::MixedLogit),
            "mixed-logit-mpp" | "mixed-logit+mpp-prior" => Ok(Method::MixedLogitMpp),
            "ml-prior" | "ml-prior-benchmark" => Ok(Method::MlPrior),
            other => Err(Error::config(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_training_sizes() -> Vec<usize> {
    vec![2, 4, 6, 8, 10, 12, 15]
}
fn default_repartitions() -> usize {
    5
}
fn default_test_size() -> usize {
    5
}
fn default_samples_per_size() -> usize {
    1
}
fn default_seed() -> u64 {
    1
}

/// Cross-validation protocol parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    #[serde(default = "default_training_sizes")]
    pub training_sizes: Vec<usize>,
    #[serde(default = "default_repartitions")]
    pub repartitions: usize,
    #[serde(default = "default_test_size")]
    pub test_size: usize,
    #[serde(default = "default_samples_per_size")]
    pub samples_per_size: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            training_sizes: default_training_sizes(),
            repartitions: default_repartitions(),
            test_size: default_test_size(),
            samples_per_size: default_samples_per_size(),
            seed: default_seed(),
        }
    }
}

impl CvConfig {
    pub fn validate(&self, comparisons_per_user: usize) -> Result<()> {
        if self.repartitions == 0 || self.samples_per_size == 0 || self.test_size == 0 {
            return Err(Error::config("repartitions, samples and test size must be positive"));
        }
        if self.training_sizes.is_empty() {
            return Err(Error::config("at least one training size is required"));
        }
        let max_size = *self.training_sizes.iter().max().unwrap();
        if max_size + self.test_size > comparisons_per_user {
            return Err(Error::config(format!(
                "largest training size {max_size} plus test size {} exceeds the {} \
                 comparisons available per user",
                self.test_size, comparisons_per_user
            )));
        }
        Ok(())
    }
}

fn default_kl_threshold() -> f64 {
    1e-3
}
fn default_mpp_max_iterations() -> usize {
    50
}
fn default_map_runs() -> usize {
    5
}
fn default_draws() -> usize {
    2000
}
fn default_selection_draws() -> usize {
    30
}

/// Estimator settings shared by the harness methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalTuning {
    #[serde(default = "default_kl_threshold")]
    pub kl_threshold: f64,
    #[serde(default = "default_mpp_max_iterations")]
    pub mpp_max_iterations: usize,
    /// Multistart runs per MAP solve.
    #[serde(default = "default_map_runs")]
    pub map_runs: usize,
    /// Monte Carlo draws for individual-level parameters and final
    /// mixed-logit fits.
    #[serde(default = "default_draws")]
    pub draws: usize,
    /// Draws used for the candidate fits inside AIC selection.
    #[serde(default = "default_selection_draws")]
    pub selection_draws: usize,
}

impl Default for EvalTuning {
    fn default() -> Self {
        EvalTuning {
            kl_threshold: default_kl_threshold(),
            mpp_max_iterations: default_mpp_max_iterations(),
            map_runs: default_map_runs(),
            draws: default_draws(),
            selection_draws: default_selection_draws(),
        }
    }
}

/// Full harness configuration; serialized as one flat JSON object.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalConfig {
    #[serde(flatten)]
    pub cv: CvConfig,
    #[serde(flatten)]
    pub tuning: EvalTuning,
}

/// Outcome of one held-out pair inside a session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    /// Probability the model assigned to its predicted winner (>= 0.5 by
    /// the decision rule).
    pub probability: f64,
    pub correct: bool,
}

/// One test session: a method fitted on one sampled training set of one
/// repartition of one user, scored on the held-out pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub method: Method,
    pub user: usize,
    pub repartition: usize,
    pub size: usize,
    pub sample: usize,
    pub accuracy: f64,
    pub outcomes: Vec<PairOutcome>,
}

/// A session that could not be completed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub method: Method,
    pub user: usize,
    pub repartition: usize,
    pub size: usize,
    pub sample: usize,
    pub message: String,
}

/// Aggregate of all sessions of one (method, size) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub method: Method,
    pub size: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub n_sessions: usize,
    /// Mean probability assigned to correct predictions, pooled over the
    /// cell; absent when the cell has no correct prediction.
    pub confidence: Option<f64>,
}

/// One-sided KS comparison of the mpp and flat accuracy samples at a size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsCell {
    pub size: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub significant: bool,
}

/// Everything a harness run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub curves: Vec<CurvePoint>,
    pub sessions: Vec<SessionRecord>,
    pub failures: Vec<FailureRecord>,
    /// Present when both `mpp` and `flat` were evaluated.
    pub ks_mpp_vs_flat: Vec<KsCell>,
    /// Bonferroni-corrected significance level (1/20th of a percent per
    /// tested size): `0.05 / number of sizes`.
    pub corrected_alpha: Option<f64>,
}

/// A comparison kept with both endpoint feature vectors, so the harness can
/// feed Bayesian methods (difference vectors) and choice-based methods
/// (binary observations) from the same split.
#[derive(Debug, Clone)]
struct PairExample {
    preferred: Vec<f64>,
    rejected: Vec<f64>,
}

impl PairExample {
    fn difference(&self) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_iterator(
            self.preferred.len(),
            self.preferred.iter().zip(&self.rejected).map(|(a, b)| a - b),
        )
    }

    fn observation(&self) -> Result<ChoiceObservation> {
        ChoiceObservation::new(vec![self.preferred.clone(), self.rejected.clone()], 0)
    }
}

fn pair_examples(dataset: &ChoiceDataset, user: usize) -> Result<Vec<PairExample>> {
    let record = &dataset.users[user];
    let mut pairs = Vec::with_capacity(record.scenarios.len() * 3);
    for scenario in &record.scenarios {
        let ranked: Vec<&crate::feature::FeatureVector> = scenario
            .ranking
            .iter()
            .map(|&i| &scenario.alternatives[i])
            .collect();
        if ranked.len() != 3 {
            return Err(Error::config("expected ternary scenarios"));
        }
        for (first, second) in [(0, 1), (0, 2), (1, 2)] {
            pairs.push(PairExample {
                preferred: ranked[first].as_slice().to_vec(),
                rejected: ranked[second].as_slice().to_vec(),
            });
        }
    }
    Ok(pairs)
}

/// Deterministic Fisher-Yates shuffle driven by a splitmix-derived stream.
fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        indices.swap(i, j);
    }
    indices
}

fn random_orientations(n: usize, seed: u64) -> Vec<bool> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<bool>()).collect()
}

/// Per-fold population artifacts, built once per test user.
struct FoldContext {
    mpp: Option<GaussianBelief>,
    ml_prior: Option<GaussianBelief>,
    mixed_model: Option<MixedLogitModel>,
    /// Errors that occurred while building the artifacts, by method.
    build_failures: Vec<(Method, String)>,
}

fn build_fold_context(
    dataset: &ChoiceDataset,
    test_user: usize,
    methods: &[Method],
    config: &EvalConfig,
) -> Result<FoldContext> {
    let needs_mpp = methods
        .iter()
        .any(|m| matches!(m, Method::Mpp | Method::MppOnly | Method::MixedLogitMpp));
    let needs_ml_prior = methods.contains(&Method::MlPrior);
    let needs_mixed = methods.contains(&Method::MixedLogit);

    let others: Vec<usize> = (0..dataset.users.len()).filter(|&u| u != test_user).collect();
    let mut build_failures = Vec::new();

    let mut mpp = None;
    if needs_mpp {
        let sets = others
            .iter()
            .map(|&u| dataset.user_training_set(u))
            .collect::<Result<Vec<TrainingSet>>>()?;
        // Leave-one-out hygiene: no example of the test user may reach the
        // prior construction.
        for set in &sets {
            for example in set.iter() {
                if example.provenance.user == test_user {
                    return Err(Error::config(format!(
                        "leave-one-out violation: test user {test_user} found in training pool"
                    )));
                }
            }
        }
        let mpp_config = MppConfig {
            kl_threshold: config.tuning.kl_threshold,
            max_iterations: config.tuning.mpp_max_iterations,
        };
        let map_options = MapOptions {
            runs: config.tuning.map_runs,
            seed: mix(config.cv.seed, &[test_user as u64, 0xA]),
            ..MapOptions::default()
        };
        match mass_prior::mpp_refine(&sets, &default_profile_bounds(), &mpp_config, &map_options)
        {
            Ok(outcome) => mpp = Some(outcome.mpp),
            Err(e) => {
                for &m in methods {
                    if matches!(m, Method::Mpp | Method::MppOnly | Method::MixedLogitMpp) {
                        build_failures.push((m, format!("mpp construction failed: {e}")));
                    }
                }
            }
        }
    }

    let mut ml_prior = None;
    if needs_ml_prior {
        let sets = others
            .iter()
            .map(|&u| dataset.user_training_set(u))
            .collect::<Result<Vec<TrainingSet>>>()?;
        match mixed_logit::ml_prior_benchmark(&sets) {
            Ok(prior) => ml_prior = Some(prior),
            Err(e) => build_failures
                .push((Method::MlPrior, format!("ml prior construction failed: {e}"))),
        }
    }

    let mut mixed_model = None;
    if needs_mixed {
        let observations = others
            .iter()
            .map(|&u| dataset.user_choice_observations(u))
            .collect::<Result<Vec<Vec<ChoiceObservation>>>>()?;
        let candidates: Vec<usize> = (0..FEATURE_DIM).collect();
        let aic_options = AicOptions {
            draws: config.tuning.selection_draws,
            seed: mix(config.cv.seed, &[test_user as u64, 0xB]),
            ..AicOptions::default()
        };
        let fitted = aic_select(&observations, &candidates, &aic_options, config);
        match fitted {
            Ok(model) => mixed_model = Some(model),
            Err(e) => build_failures
                .push((Method::MixedLogit, format!("mixed-logit fit failed: {e}"))),
        }
    }

    Ok(FoldContext {
        mpp,
        ml_prior,
        mixed_model,
        build_failures,
    })
}

/// AIC selection followed by a full-draw refit and reintroduction of the
/// excluded features.
fn aic_select(
    observations: &[Vec<ChoiceObservation>],
    candidates: &[usize],
    aic_options: &AicOptions,
    config: &EvalConfig,
) -> Result<MixedLogitModel> {
    let selection =
        mixed_logit::aic_select(observations, candidates, FEATURE_DIM, aic_options)?;
    let refit = if selection.model.selected_indices().is_empty() {
        selection.model
    } else {
        let smle_options = SmleOptions {
            draws: config.tuning.draws,
            seed: aic_options.seed,
            // Warm-started from the selection fit; a moderate cap keeps
            // fold costs bounded and the best iterate is kept either way.
            max_iterations: 150,
            ..SmleOptions::default()
        };
        let fit = mixed_logit::smle_fit_best_effort(observations, &selection.model, &smle_options)?;
        if !fit.converged {
            log::warn!("mixed-logit refit stopped at the iteration cap; using the best iterate");
        }
        fit.model
    };
    Ok(mixed_logit::reintroduce_excluded(&refit))
}

/// Diagonalized mixed-logit view of a Gaussian belief (independent
/// coefficients, standard deviations from the covariance diagonal).
fn model_from_belief(belief: &GaussianBelief) -> MixedLogitModel {
    let dim = belief.dim();
    MixedLogitModel {
        mu: belief.mean().iter().copied().collect(),
        sigma: (0..dim).map(|j| belief.cov()[(j, j)].max(0.0).sqrt()).collect(),
        selected: vec![true; dim],
    }
}

enum FittedPredictor {
    Belief(GaussianBelief),
    Profile(crate::feature::UserProfile),
}

impl FittedPredictor {
    fn prefer_probability(&self, r: &[f64], q: &[f64]) -> Result<f64> {
        match self {
            FittedPredictor::Belief(b) => b.prefer_probability(r, q),
            FittedPredictor::Profile(p) => p.prefer_probability(r, q),
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn fit_method(
    method: Method,
    context: &FoldContext,
    train: &[&PairExample],
    config: &EvalConfig,
    session_seed: u64,
) -> Result<FittedPredictor> {
    let bounds = default_profile_bounds();
    let map_options = MapOptions {
        runs: config.tuning.map_runs,
        seed: mix(session_seed, &[method.tag()]),
        ..MapOptions::default()
    };
    let training_set = || -> Result<TrainingSet> {
        TrainingSet::from_differences(train.iter().map(|p| p.difference()).collect())
    };
    match method {
        Method::Mpp => {
            let prior = context
                .mpp
                .as_ref()
                .ok_or_else(|| Error::config("mpp unavailable"))?
                .with_floored_cov(MPP_PRIOR_FLOOR);
            let belief = bayes::map_estimate(&training_set()?, &prior, &bounds, &map_options)?;
            Ok(FittedPredictor::Belief(belief))
        }
        Method::MppOnly => {
            let prior = context
                .mpp
                .as_ref()
                .ok_or_else(|| Error::config("mpp unavailable"))?;
            Ok(FittedPredictor::Belief(prior.clone()))
        }
        Method::Flat => {
            let prior = GaussianBelief::standard(FEATURE_DIM);
            let belief = bayes::map_estimate(&training_set()?, &prior, &bounds, &map_options)?;
            Ok(FittedPredictor::Belief(belief))
        }
        Method::MlPrior => {
            let prior = context
                .ml_prior
                .as_ref()
                .ok_or_else(|| Error::config("ml prior unavailable"))?;
            let belief = bayes::map_estimate(&training_set()?, prior, &bounds, &map_options)?;
            Ok(FittedPredictor::Belief(belief))
        }
        Method::MixedLogit | Method::MixedLogitMpp => {
            let model = match method {
                Method::MixedLogit => context
                    .mixed_model
                    .clone()
                    .ok_or_else(|| Error::config("mixed-logit model unavailable"))?,
                _ => model_from_belief(
                    context
                        .mpp
                        .as_ref()
                        .ok_or_else(|| Error::config("mpp unavailable"))?,
                ),
            };
            let observations = train
                .iter()
                .map(|p| p.observation())
                .collect::<Result<Vec<_>>>()?;
            let estimate = mixed_logit::individual_parameters(
                &model,
                &observations,
                config.tuning.draws,
                mix(session_seed, &[method.tag(), 0xC]),
            )?;
            Ok(FittedPredictor::Profile(estimate.profile))
        }
    }
}

fn score_session(
    predictor: &FittedPredictor,
    test: &[(&PairExample, bool)],
) -> Result<(f64, Vec<PairOutcome>)> {
    let mut outcomes = Vec::with_capacity(test.len());
    let mut correct_count = 0usize;
    for &(pair, flipped) in test {
        let (first, second) = if flipped {
            (&pair.rejected, &pair.preferred)
        } else {
            (&pair.preferred, &pair.rejected)
        };
        let p = predictor.prefer_probability(first, second)?;
        let predicted_first = p > 0.5;
        let correct = predicted_first != flipped;
        if correct {
            correct_count += 1;
        }
        outcomes.push(PairOutcome {
            probability: if predicted_first { p } else { 1.0 - p },
            correct,
        });
    }
    Ok((correct_count as f64 / test.len() as f64, outcomes))
}

struct FoldOutcome {
    sessions: Vec<SessionRecord>,
    failures: Vec<FailureRecord>,
}

fn run_fold(
    dataset: &ChoiceDataset,
    test_user: usize,
    methods: &[Method],
    config: &EvalConfig,
) -> Result<FoldOutcome> {
    let context = build_fold_context(dataset, test_user, methods, config)?;
    let pairs = pair_examples(dataset, test_user)?;
    let seed = config.cv.seed;

    let mut sessions = Vec::new();
    let mut failures = Vec::new();
    for repartition in 0..config.cv.repartitions {
        let split_seed = mix(seed, &[test_user as u64, repartition as u64, 0x5]);
        let order = shuffled_indices(pairs.len(), split_seed);
        let (test_idx, candidate_idx) = order.split_at(config.cv.test_size);
        let orientations = random_orientations(
            test_idx.len(),
            mix(seed, &[test_user as u64, repartition as u64, 0x6]),
        );
        let test: Vec<(&PairExample, bool)> = test_idx
            .iter()
            .zip(&orientations)
            .map(|(&i, &flip)| (&pairs[i], flip))
            .collect();

        for &size in &config.cv.training_sizes {
            for sample in 0..config.cv.samples_per_size {
                let session_seed =
                    mix(seed, &[test_user as u64, repartition as u64, size as u64, sample as u64]);
                let chosen = shuffled_indices(candidate_idx.len(), session_seed);
                let train: Vec<&PairExample> = chosen[..size.min(candidate_idx.len())]
                    .iter()
                    .map(|&i| &pairs[candidate_idx[i]])
                    .collect();

                for &method in methods {
                    if let Some((_, message)) =
                        context.build_failures.iter().find(|(m, _)| *m == method)
                    {
                        failures.push(FailureRecord {
                            method,
                            user: test_user,
                            repartition,
                            size,
                            sample,
                            message: message.clone(),
                        });
                        continue;
                    }
                    let result = fit_method(method, &context, &train, config, session_seed)
                        .and_then(|predictor| score_session(&predictor, &test));
                    match result {
                        Ok((accuracy, outcomes)) => sessions.push(SessionRecord {
                            method,
                            user: test_user,
                            repartition,
                            size,
                            sample,
                            accuracy,
                            outcomes,
                        }),
                        Err(e) => failures.push(FailureRecord {
                            method,
                            user: test_user,
                            repartition,
                            size,
                            sample,
                            message: e.to_string(),
                        }),
                    }
                }
            }
        }
    }
    Ok(FoldOutcome { sessions, failures })
}

/// Mean probability assigned to correct predictions in one (method, size)
/// cell, pooled over that cell's held-out pairs. `None` when nothing was
/// predicted correctly (an empty cell, not a zero).
pub fn predictive_confidence(
    sessions: &[SessionRecord],
    method: Method,
    size: usize,
) -> Option<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for session in sessions
        .iter()
        .filter(|s| s.method == method && s.size == size)
    {
        for outcome in session.outcomes.iter().filter(|o| o.correct) {
            total += outcome.probability;
            count += 1;
        }
    }
    (count > 0).then(|| total / count as f64)
}

/// Runs the full leave-one-user-out experiment.
pub fn louo_cv(
    dataset: &ChoiceDataset,
    methods: &[Method],
    config: &EvalConfig,
) -> Result<EvalOutput> {
    dataset.validate()?;
    if dataset.users.len() < 2 {
        return Err(Error::config("leave-one-user-out needs at least two users"));
    }
    config.cv.validate(dataset.spec.comparisons_per_user())?;
    if methods.is_empty() {
        return Err(Error::config("at least one method is required"));
    }
    // Canonical order, duplicates dropped.
    let methods: Vec<Method> = Method::ALL
        .iter()
        .copied()
        .filter(|m| methods.contains(m))
        .collect();

    let folds: Vec<FoldOutcome> = (0..dataset.users.len())
        .into_par_iter()
        .map(|user| run_fold(dataset, user, &methods, config))
        .collect::<Result<Vec<_>>>()?;

    let mut sessions = Vec::new();
    let mut failures = Vec::new();
    for fold in folds {
        sessions.extend(fold.sessions);
        failures.extend(fold.failures);
    }

    let mut curves = Vec::new();
    for &method in &methods {
        for &size in &config.cv.training_sizes {
            let accuracies: Vec<f64> = sessions
                .iter()
                .filter(|s| s.method == method && s.size == size)
                .map(|s| s.accuracy)
                .collect();
            if accuracies.is_empty() {
                continue;
            }
            curves.push(CurvePoint {
                method,
                size,
                mean_accuracy: stats::mean(&accuracies),
                std_accuracy: stats::sample_std(&accuracies),
                n_sessions: accuracies.len(),
                confidence: predictive_confidence(&sessions, method, size),
            });
        }
    }

    let (ks_mpp_vs_flat, corrected_alpha) =
        if methods.contains(&Method::Mpp) && methods.contains(&Method::Flat) {
            let alpha = 0.05 / config.cv.training_sizes.len() as f64;
            let mut cells = Vec::new();
            for &size in &config.cv.training_sizes {
                let sample = |method: Method| -> Vec<f64> {
                    sessions
                        .iter()
                        .filter(|s| s.method == method && s.size == size)
                        .map(|s| s.accuracy)
                        .collect()
                };
                let mpp_acc = sample(Method::Mpp);
                let flat_acc = sample(Method::Flat);
                if mpp_acc.is_empty() || flat_acc.is_empty() {
                    continue;
                }
                let test = stats::ks_test_one_sided(&mpp_acc, &flat_acc)?;
                cells.push(KsCell {
                    size,
                    statistic: test.statistic,
                    p_value: test.p_value,
                    significant: test.p_value < alpha,
                });
            }
            (cells, Some(alpha))
        } else {
            (Vec::new(), None)
        };

    Ok(EvalOutput {
        curves,
        sessions,
        failures,
        ks_mpp_vs_flat,
        corrected_alpha,
    })
}
