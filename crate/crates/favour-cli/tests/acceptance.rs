//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line. Run with `cargo test -p favour-cli --test acceptance`
//! (add `-- --nocapture` to see the per-criterion lines and measurements).

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use favour_core::bayes::{
    gaussian_kl, predict_from_difference, sigmoid, LogPosterior, MapOptions,
};
use favour_core::eval::{louo_cv, EvalConfig, EvalOutput, Method};
use favour_core::mass_prior::{mpp_average, mpp_refine, MppConfig};
use favour_core::mixed_logit::{
    aic_select, individual_parameters, reintroduce_excluded, smle_fit, AicOptions,
    ChoiceObservation, MixedLogitModel, SmleOptions,
};
use favour_core::optim::TwiceDifferentiable;
use favour_core::synthetic::{sample_population, PopulationSpec};
use favour_core::{BoxBounds, GaussianBelief, TrainingSet};

fn report(criterion: &str, passed: bool, detail: &str) {
    println!(
        "acceptance {criterion}: {} ({detail})",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "{criterion} failed: {detail}");
}

fn curve(output: &EvalOutput, method: Method, size: usize) -> f64 {
    output
        .curves
        .iter()
        .find(|p| p.method == method && p.size == size)
        .unwrap_or_else(|| panic!("missing curve point {method} s={size}"))
        .mean_accuracy
}

// ---------------------------------------------------------------------------
// Criterion 1: analytic derivatives of the log-posterior match central
// finite differences (gradient rel. error < 1e-5, Hessian rel. error < 1e-4)
// at 100 random instances, in under a minute.
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_log_posterior_derivatives_match_finite_differences() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let dims = [2usize, 3, 5, 8, 13, 59];
    let mut worst_gradient = 0.0f64;
    let mut worst_hessian = 0.0f64;

    for instance in 0..100 {
        let dim = dims[instance % dims.len()];
        let n_examples = rng.random_range(0..=20usize);
        let diffs: Vec<DVector<f64>> = (0..n_examples)
            .map(|_| {
                DVector::from_fn(dim, |_, _| {
                    let base: f64 = StandardNormal.sample(&mut rng);
                    // Mix in feature-sized magnitudes.
                    if rng.random::<f64>() < 0.2 {
                        base * 15.0
                    } else {
                        base
                    }
                })
            })
            .collect();
        let training = TrainingSet::from_differences(diffs).unwrap();

        let a = DMatrix::from_fn(dim, dim, |_, _| {
            let v: f64 = StandardNormal.sample(&mut rng);
            v
        });
        let cov = &a * a.transpose() / dim as f64 + DMatrix::identity(dim, dim) * 0.1;
        let mean = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
        let prior = GaussianBelief::new(mean, cov).unwrap();
        let objective = LogPosterior::new(&training, &prior).unwrap();
        let w = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));

        // Central finite differences of the value.
        let h = 1e-5;
        let mut fd_gradient = DVector::zeros(dim);
        for i in 0..dim {
            let mut plus = w.clone();
            let mut minus = w.clone();
            plus[i] += h;
            minus[i] -= h;
            fd_gradient[i] = (objective.value(&plus) - objective.value(&minus)) / (2.0 * h);
        }
        let gradient = objective.gradient(&w);
        let gradient_error =
            (&gradient - &fd_gradient).norm() / fd_gradient.norm().max(1e-8);
        worst_gradient = worst_gradient.max(gradient_error);

        // Central finite differences of the analytic gradient.
        let mut fd_hessian = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            let mut plus = w.clone();
            let mut minus = w.clone();
            plus[i] += h;
            minus[i] -= h;
            let column = (objective.gradient(&plus) - objective.gradient(&minus)) / (2.0 * h);
            fd_hessian.column_mut(i).copy_from(&column);
        }
        let hessian = objective.hessian(&w);
        let hessian_error = (&hessian - &fd_hessian).norm() / fd_hessian.norm().max(1e-8);
        worst_hessian = worst_hessian.max(hessian_error);
    }

    let elapsed = started.elapsed();
    report(
        "criterion 1 (derivative oracle)",
        worst_gradient < 1e-5 && worst_hessian < 1e-4 && elapsed < Duration::from_secs(60),
        &format!(
            "gradient rel err {worst_gradient:.2e}, hessian rel err {worst_hessian:.2e}, \
             elapsed {elapsed:.1?}"
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: the moderated predictive rule matches Monte Carlo integration
// of the logistic-Gaussian integral within 0.01 across 50 random
// beliefs/pairs, in under two minutes.
// ---------------------------------------------------------------------------

/// Monte Carlo estimate of `E[sigmoid(w . d)]` for `w ~ N(mean, cov)`.
/// `w . d` is the 1-D Gaussian `N(mean . d, d^T cov d)`, so the integral is
/// evaluated by sampling that scalar; `full_dimensional_mc` below checks the
/// reduction itself on small instances.
fn projected_mc(mean_margin: f64, variance: f64, draws: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = variance.max(0.0).sqrt();
    let mut total = 0.0;
    for _ in 0..draws {
        let z: f64 = StandardNormal.sample(&mut rng);
        total += sigmoid(mean_margin + scale * z);
    }
    total / draws as f64
}

fn full_dimensional_mc(
    belief: &GaussianBelief,
    d: &DVector<f64>,
    draws: usize,
    seed: u64,
) -> f64 {
    let eig = belief.cov().clone().symmetric_eigen();
    let roots = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()),
    );
    let sqrt_cov = &eig.eigenvectors * DMatrix::from_diagonal(&roots);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = belief.dim();
    let mut total = 0.0;
    for _ in 0..draws {
        let z = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
        let w = belief.mean() + &sqrt_cov * z;
        total += sigmoid(w.dot(d));
    }
    total / draws as f64
}

#[test]
fn criterion_2_predictive_rule_matches_monte_carlo() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;

    // Beliefs and pairs are drawn so that the mean margin covers [-4, 4]
    // (decision-relevant probabilities up to ~0.98) and the moderation
    // variance d^T cov d covers [0, 8].
    for instance in 0..50u64 {
        let dim = [1usize, 2, 5, 17, 59][instance as usize % 5];
        let mut mean = DVector::from_fn(dim, |_, _| {
            let v: f64 = StandardNormal.sample(&mut rng);
            v
        });
        let a = DMatrix::from_fn(dim, dim, |_, _| {
            let v: f64 = StandardNormal.sample(&mut rng);
            v
        });
        let mut cov = &a * a.transpose() / dim as f64;
        let d = DVector::from_fn(dim, |_, _| {
            let v: f64 = StandardNormal.sample(&mut rng);
            v
        });

        let target_margin = rng.random::<f64>() * 8.0 - 4.0;
        let raw_margin = mean.dot(&d);
        if raw_margin.abs() > 1e-9 {
            mean *= target_margin / raw_margin;
        }
        let target_variance = rng.random::<f64>() * 8.0;
        let raw_variance = (&cov * &d).dot(&d);
        if raw_variance > 1e-12 {
            cov *= target_variance / raw_variance;
        }
        let belief = GaussianBelief::new(mean, cov).unwrap();

        let approx = predict_from_difference(&belief, d.as_slice()).unwrap();
        let mean_margin = belief.mean().dot(&d);
        let variance = (belief.cov() * &d).dot(&d);
        let mc = projected_mc(mean_margin, variance, 1_000_000, 777 + instance);
        worst = worst.max((approx - mc).abs());
    }

    // Validate the scalar projection against full-dimensional sampling on a
    // few small instances.
    let mut projection_gap = 0.0f64;
    for seed in 0..3u64 {
        let dim = 3;
        let mean = DVector::from_fn(dim, |_, _| {
            let v: f64 = StandardNormal.sample(&mut rng);
            v
        });
        let a = DMatrix::from_fn(dim, dim, |_, _| {
            let v: f64 = StandardNormal.sample(&mut rng);
            v
        });
        let cov = &a * a.transpose() * 0.3;
        let belief = GaussianBelief::new(mean, cov).unwrap();
        let d = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
        let full = full_dimensional_mc(&belief, &d, 200_000, 31 + seed);
        let projected = projected_mc(
            belief.mean().dot(&d),
            (belief.cov() * &d).dot(&d),
            200_000,
            131 + seed,
        );
        projection_gap = projection_gap.max((full - projected).abs());
    }

    let elapsed = started.elapsed();
    report(
        "criterion 2 (predictive-rule oracle)",
        worst < 0.01 && projection_gap < 0.01 && elapsed < Duration::from_secs(120),
        &format!(
            "max |approx - mc| {worst:.4}, projection check {projection_gap:.4}, \
             elapsed {elapsed:.1?}"
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: prior-averaging unit cases hold exactly and refinement on
// empty training sets converges immediately to the N(0, I) fixed point.
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_mpp_fixed_points() {
    // K = 1 identity.
    let mean = DVector::from_vec(vec![0.7, -0.3, 0.1]);
    let cov = DMatrix::from_row_slice(
        3,
        3,
        &[1.0, 0.2, 0.0, 0.2, 0.8, 0.1, 0.0, 0.1, 0.6],
    );
    let single = GaussianBelief::new(mean.clone(), cov.clone()).unwrap();
    let avg = mpp_average(std::slice::from_ref(&single)).unwrap();
    let k1_exact = avg.mean() == &mean && avg.cov() == &cov;

    // Symmetric pair: mean 0, covariance m m^T + I.
    let m = DVector::from_vec(vec![1.5, -0.5]);
    let pair = [
        GaussianBelief::new(m.clone(), DMatrix::identity(2, 2)).unwrap(),
        GaussianBelief::new(-m.clone(), DMatrix::identity(2, 2)).unwrap(),
    ];
    let avg2 = mpp_average(&pair).unwrap();
    let expected = &m * m.transpose() + DMatrix::identity(2, 2);
    let pair_exact =
        avg2.mean() == &DVector::zeros(2) && (avg2.cov() - expected).norm() == 0.0;

    // Empty training sets: the standard prior is a fixed point.
    let sets = vec![TrainingSet::empty(); 3];
    let outcome = mpp_refine(
        &sets,
        &BoxBounds::unbounded(4),
        &MppConfig::default(),
        &MapOptions::default(),
    )
    .unwrap();
    let fixed_point = outcome.converged
        && outcome.iterations <= 2
        && outcome.mpp.mean() == &DVector::zeros(4)
        && (outcome.mpp.cov() - DMatrix::identity(4, 4)).norm() == 0.0;

    report(
        "criterion 3 (mpp fixed points)",
        k1_exact && pair_exact && fixed_point,
        &format!(
            "k1 exact {k1_exact}, symmetric pair exact {pair_exact}, empty refinement \
             converged in {} iterations",
            outcome.iterations
        ),
    );
}

// ---------------------------------------------------------------------------
// Criteria 4 and 5 share the default synthetic run (40 users, default
// heterogeneity, seed 1). The Bayesian methods and the mixed-logit baselines
// are evaluated in two fixtures so that the criterion-4 runtime budget is
// measured on the criterion-4 workload.
// ---------------------------------------------------------------------------

fn default_dataset() -> &'static favour_core::synthetic::ChoiceDataset {
    static DATASET: OnceLock<favour_core::synthetic::ChoiceDataset> = OnceLock::new();
    DATASET.get_or_init(|| {
        sample_population(&PopulationSpec::default()).expect("default spec is valid")
    })
}

fn bayes_run() -> &'static (EvalOutput, Duration) {
    static RUN: OnceLock<(EvalOutput, Duration)> = OnceLock::new();
    RUN.get_or_init(|| {
        let started = Instant::now();
        let output = louo_cv(
            default_dataset(),
            &[Method::Mpp, Method::Flat, Method::MppOnly],
            &EvalConfig::default(),
        )
        .expect("evaluation completes");
        (output, started.elapsed())
    })
}

fn mixed_run() -> &'static EvalOutput {
    static RUN: OnceLock<EvalOutput> = OnceLock::new();
    RUN.get_or_init(|| {
        louo_cv(
            default_dataset(),
            &[Method::MixedLogit, Method::MixedLogitMpp],
            &EvalConfig::default(),
        )
        .expect("evaluation completes")
    })
}

#[test]
fn criterion_4_transfer_learning_trend() {
    let (output, elapsed) = bayes_run();
    let config = EvalConfig::default();
    let sizes = config.cv.training_sizes.clone();

    let gap_at = |s: usize| curve(output, Method::Mpp, s) - curve(output, Method::Flat, s);
    let first_gap = gap_at(sizes[0]);
    let gap_large_enough = first_gap >= 0.05;

    let mut non_increasing = true;
    for window in sizes.windows(2) {
        // Non-increasing up to 1.5 accuracy points of sampling noise.
        if gap_at(window[1]) > gap_at(window[0]) + 0.015 + 1e-9 {
            non_increasing = false;
        }
    }

    let mpp_only = curve(output, Method::MppOnly, sizes[0]);
    let flat_needs_more_than_ten = sizes
        .iter()
        .filter(|&&s| s <= 10)
        .all(|&s| curve(output, Method::Flat, s) <= mpp_only);

    let ks_at_two = output
        .ks_mpp_vs_flat
        .iter()
        .find(|cell| cell.size == sizes[0])
        .expect("ks cell for the smallest size");
    let alpha = output.corrected_alpha.expect("corrected alpha present");
    let ks_rejects = ks_at_two.p_value < alpha;

    let within_budget = *elapsed < Duration::from_secs(30 * 60);
    let no_failures = output.failures.is_empty();

    report(
        "criterion 4 (transfer-learning trend)",
        gap_large_enough && non_increasing && flat_needs_more_than_ten && ks_rejects
            && within_budget
            && no_failures,
        &format!(
            "gap@2 {:.3}, non-increasing {}, flat<=mpp-only through s=10 {}, \
             ks p {:.2e} vs alpha {:.2e}, elapsed {:.0?}, failures {}",
            first_gap,
            non_increasing,
            flat_needs_more_than_ten,
            ks_at_two.p_value,
            alpha,
            elapsed,
            output.failures.len()
        ),
    );
}

#[test]
fn criterion_5_baseline_ordering() {
    let (bayes, _) = bayes_run();
    let mixed = mixed_run();

    let small_sizes = [2usize, 4];
    let mixed_underperforms = small_sizes.iter().all(|&s| {
        curve(mixed, Method::MixedLogit, s) < curve(bayes, Method::Mpp, s)
    });

    let gap_at_15 =
        curve(bayes, Method::Mpp, 15) - curve(mixed, Method::MixedLogitMpp, 15);
    let mpp_seed_closes_gap = gap_at_15 <= 0.02;

    report(
        "criterion 5 (baseline ordering)",
        mixed_underperforms && mpp_seed_closes_gap && mixed.failures.is_empty(),
        &format!(
            "mixed-logit@2 {:.3} vs mpp@2 {:.3}, mixed-logit-mpp@15 {:.3} vs mpp@15 {:.3} \
             (gap {:.3}), failures {}",
            curve(mixed, Method::MixedLogit, 2),
            curve(bayes, Method::Mpp, 2),
            curve(mixed, Method::MixedLogitMpp, 15),
            curve(bayes, Method::Mpp, 15),
            gap_at_15,
            mixed.failures.len()
        ),
    );
}

// ---------------------------------------------------------------------------
// Criteria 6 and 7: mixed-logit recovery on a 5-feature population with
// known mixing distribution, and the individual-level parameters improving
// on the population mean.
// ---------------------------------------------------------------------------

const RECOVERY_MU: [f64; 5] = [0.8, -0.5, 0.3, 0.0, -1.0];
const RECOVERY_SIGMA: [f64; 5] = [0.5, 0.4, 0.5, 0.3, 0.6];

struct RecoveryPopulation {
    observations: Vec<Vec<ChoiceObservation>>,
    true_profiles: Vec<Vec<f64>>,
}

fn recovery_population() -> &'static RecoveryPopulation {
    static POP: OnceLock<RecoveryPopulation> = OnceLock::new();
    POP.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(606);
        let n_users = 200;
        let scenarios = 10;
        let mut observations = Vec::with_capacity(n_users);
        let mut true_profiles = Vec::with_capacity(n_users);
        for _ in 0..n_users {
            let w: Vec<f64> = (0..5)
                .map(|j| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    RECOVERY_MU[j] + RECOVERY_SIGMA[j] * z
                })
                .collect();
            let mut user_obs = Vec::with_capacity(scenarios);
            for _ in 0..scenarios {
                let alternatives: Vec<Vec<f64>> = (0..3)
                    .map(|_| (0..5).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect())
                    .collect();
                let utilities: Vec<f64> = alternatives
                    .iter()
                    .map(|alt| alt.iter().zip(&w).map(|(x, wj)| x * wj).sum::<f64>())
                    .collect();
                // Multinomial-logit choice via the Gumbel-max trick.
                let chosen = (0..3)
                    .map(|i| {
                        let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                        (i, utilities[i] - (-u.ln()).ln())
                    })
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap()
                    .0;
                user_obs.push(ChoiceObservation::new(alternatives, chosen).unwrap());
            }
            observations.push(user_obs);
            true_profiles.push(w);
        }
        RecoveryPopulation {
            observations,
            true_profiles,
        }
    })
}

/// Independent multinomial-logit MLE: Newton ascent with backtracking on
/// the exact (non-simulated) log-likelihood, softmax computed from scratch.
fn direct_mnl_mle(observations: &[&ChoiceObservation], dim: usize) -> DVector<f64> {
    let mut w = DVector::zeros(dim);
    for _ in 0..100 {
        let mut gradient = DVector::zeros(dim);
        let mut hessian = DMatrix::zeros(dim, dim);
        let mut value = 0.0;
        for obs in observations {
            let utilities: Vec<f64> = obs
                .alternatives()
                .iter()
                .map(|alt| alt.iter().enumerate().map(|(j, x)| x * w[j]).sum())
                .collect();
            let max = utilities.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let exps: Vec<f64> = utilities.iter().map(|u| (u - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            value += utilities[obs.chosen()] - max - total.ln();
            let probs: Vec<f64> = exps.iter().map(|e| e / total).collect();
            let mut expected: DVector<f64> = DVector::zeros(dim);
            for (alt, &p) in obs.alternatives().iter().zip(&probs) {
                for j in 0..dim {
                    expected[j] += p * alt[j];
                }
            }
            for j in 0..dim {
                gradient[j] += obs.alternatives()[obs.chosen()][j] - expected[j];
            }
            // Hessian: -sum_k X^T (diag(p) - p p^T) X.
            for (a, alt_a) in obs.alternatives().iter().enumerate() {
                for (b, alt_b) in obs.alternatives().iter().enumerate() {
                    let coeff = if a == b {
                        probs[a] * (1.0 - probs[a])
                    } else {
                        -probs[a] * probs[b]
                    };
                    for i in 0..dim {
                        for j in 0..dim {
                            hessian[(i, j)] -= coeff * alt_a[i] * alt_b[j];
                        }
                    }
                }
            }
        }
        if gradient.norm() < 1e-10 * observations.len() as f64 {
            break;
        }
        let step = (-hessian)
            .cholesky()
            .map(|c| c.solve(&gradient))
            .unwrap_or_else(|| gradient.clone());
        // Backtracking on the exact log-likelihood.
        let value_at = |w: &DVector<f64>| -> f64 {
            observations
                .iter()
                .map(|obs| {
                    let utilities: Vec<f64> = obs
                        .alternatives()
                        .iter()
                        .map(|alt| alt.iter().enumerate().map(|(j, x)| x * w[j]).sum())
                        .collect();
                    let max = utilities.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                    let total: f64 = utilities.iter().map(|u| (u - max).exp()).sum();
                    utilities[obs.chosen()] - max - total.ln()
                })
                .sum()
        };
        let mut alpha = 1.0;
        for _ in 0..30 {
            let candidate = &w + &step * alpha;
            if value_at(&candidate) > value {
                w = candidate;
                break;
            }
            alpha *= 0.5;
        }
    }
    w
}

#[test]
fn criterion_6_mixed_logit_recovery() {
    let started = Instant::now();
    let population = recovery_population();

    // Full simulated-likelihood fit recovers the mixing means.
    let initial = MixedLogitModel::initial(5, 0.4);
    let options = SmleOptions {
        draws: 2000,
        seed: 9,
        max_iterations: 2000,
        gradient_tolerance: 3e-5,
        fix_sigma_zero: false,
    };
    let fit = smle_fit(&population.observations, &initial, &options).unwrap();
    let mu_error = fit
        .model
        .mu
        .iter()
        .zip(&RECOVERY_MU)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);

    // Degenerate case: sigma pinned at zero matches the direct MNL MLE.
    let degenerate_options = SmleOptions {
        draws: 8,
        seed: 9,
        max_iterations: 4000,
        gradient_tolerance: 1e-8,
        fix_sigma_zero: true,
    };
    let degenerate = smle_fit(&population.observations, &initial, &degenerate_options).unwrap();
    let pooled: Vec<&ChoiceObservation> = population.observations.iter().flatten().collect();
    let oracle = direct_mnl_mle(&pooled, 5);
    let mnl_gap = degenerate
        .model
        .mu
        .iter()
        .zip(oracle.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);

    let elapsed = started.elapsed();
    report(
        "criterion 6 (mixed-logit recovery)",
        mu_error < 0.15 && mnl_gap < 1e-4 && elapsed < Duration::from_secs(300),
        &format!(
            "mu recovery L-inf {mu_error:.3}, degenerate-vs-MNL gap {mnl_gap:.2e}, \
             elapsed {elapsed:.1?}"
        ),
    );
}

#[test]
fn criterion_7_individual_parameters_beat_population_mean() {
    let population = recovery_population();

    // Population model: AIC selection, full-draw refit, reintroduction.
    let candidates: Vec<usize> = (0..5).collect();
    let selection = aic_select(
        &population.observations,
        &candidates,
        5,
        &AicOptions {
            draws: 100,
            seed: 17,
            max_iterations: 200,
            gradient_tolerance: 1e-4,
            sigma_init: 0.3,
        },
    )
    .unwrap();
    let refit = smle_fit(
        &population.observations,
        &selection.model,
        &SmleOptions {
            draws: 2000,
            seed: 17,
            max_iterations: 800,
            gradient_tolerance: 1e-5,
            fix_sigma_zero: false,
        },
    )
    .unwrap();
    let model = reintroduce_excluded(&refit.model);

    let mut population_error = 0.0;
    let mut individual_error = 0.0;
    for (user, observations) in population.observations.iter().enumerate() {
        let truth = &population.true_profiles[user];
        let estimate =
            individual_parameters(&model, observations, 2000, 700 + user as u64).unwrap();
        let mut pop_sq = 0.0;
        let mut ind_sq = 0.0;
        for j in 0..5 {
            pop_sq += (model.mu[j] - truth[j]).powi(2);
            ind_sq += (estimate.profile.weights()[j] - truth[j]).powi(2);
        }
        population_error += pop_sq.sqrt();
        individual_error += ind_sq.sqrt();
    }
    population_error /= population.observations.len() as f64;
    individual_error /= population.observations.len() as f64;
    let reduction = 1.0 - individual_error / population_error;

    report(
        "criterion 7 (individual-level parameters)",
        reduction >= 0.20,
        &format!(
            "mean L2 error {individual_error:.3} vs population-mean {population_error:.3} \
             (reduction {:.1}%)",
            reduction * 100.0
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 8: `favour eval` produces byte-identical result CSVs for any
// worker count and across repeated runs.
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_eval_is_deterministic_across_worker_counts() {
    let binary = env!("CARGO_BIN_EXE_favour");
    let scratch = std::env::temp_dir().join(format!("favour-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&scratch).unwrap();

    let spec_path = scratch.join("spec.json");
    std::fs::write(
        &spec_path,
        r#"{"n_users": 6, "base_scenarios": 4, "seed": 33}"#,
    )
    .unwrap();
    let data_path = scratch.join("data.json");
    let status = std::process::Command::new(binary)
        .args([
            "simulate",
            "--spec",
            spec_path.to_str().unwrap(),
            "--out",
            data_path.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());

    let cv_path = scratch.join("cv.json");
    std::fs::write(
        &cv_path,
        r#"{"training_sizes": [2, 4], "repartitions": 2, "test_size": 5, "seed": 7}"#,
    )
    .unwrap();

    let mut outputs: Vec<(String, Vec<u8>)> = Vec::new();
    // Worker counts 1 through 8, plus a repeat at 4 to cover rerun
    // determinism at a fixed worker count.
    let worker_runs: Vec<(usize, &str)> = (1..=8)
        .map(|w| (w, "a"))
        .chain(std::iter::once((4, "b")))
        .collect();
    for (workers, tag) in worker_runs {
        let out_dir = scratch.join(format!("results-{workers}-{tag}"));
        let status = std::process::Command::new(binary)
            .args([
                "eval",
                "--data",
                data_path.to_str().unwrap(),
                "--methods",
                "mpp,flat",
                "--cv",
                cv_path.to_str().unwrap(),
                "--out",
                out_dir.to_str().unwrap(),
                "--workers",
                &workers.to_string(),
            ])
            .status()
            .unwrap();
        assert!(status.success(), "eval failed at workers={workers}");
        let csv = std::fs::read(out_dir.join("curves.csv")).unwrap();
        outputs.push((format!("workers={workers}/{tag}"), csv));
    }

    let (reference_name, reference) = &outputs[0];
    let identical = outputs.iter().all(|(_, bytes)| bytes == reference);
    report(
        "criterion 8 (determinism)",
        identical,
        &format!(
            "{} runs compared against {reference_name}, curves.csv {} bytes",
            outputs.len(),
            reference.len()
        ),
    );
    std::fs::remove_dir_all(&scratch).ok();
}

// ---------------------------------------------------------------------------
// Supporting property checks backing the criteria above.
// ---------------------------------------------------------------------------

#[test]
fn log_posterior_is_concave_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for _ in 0..100 {
        let dim = rng.random_range(2..6usize);
        let diffs: Vec<DVector<f64>> = (0..rng.random_range(1..15usize))
            .map(|_| DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng)))
            .collect();
        let training = TrainingSet::from_differences(diffs).unwrap();
        let prior = GaussianBelief::standard(dim);
        let objective = LogPosterior::new(&training, &prior).unwrap();
        let w = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
        let hessian = objective.hessian(&w);
        let max_eigenvalue = hessian
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        assert!(max_eigenvalue <= 1e-10, "hessian not negative semidefinite");
    }
}

#[test]
fn posterior_covariance_shrinks_with_more_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let bounds = BoxBounds::unbounded(3);
    let options = MapOptions::default();
    let prior = GaussianBelief::standard(3);
    for _ in 0..10 {
        let diffs: Vec<DVector<f64>> = (0..12)
            .map(|_| DVector::from_fn(3, |_, _| StandardNormal.sample(&mut rng)))
            .collect();
        let small = TrainingSet::from_differences(diffs[..6].to_vec()).unwrap();
        let large = TrainingSet::from_differences(diffs.clone()).unwrap();
        let belief_small =
            favour_core::bayes::map_estimate(&small, &prior, &bounds, &options).unwrap();
        let belief_large =
            favour_core::bayes::map_estimate(&large, &prior, &bounds, &options).unwrap();
        assert!(belief_large.cov().trace() <= belief_small.cov().trace() + 1e-6);
    }
}

#[test]
fn kl_divergence_is_non_negative_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for _ in 0..1000 {
        let dim = rng.random_range(1..5usize);
        let random_belief = |rng: &mut ChaCha8Rng| {
            let mean = DVector::from_fn(dim, |_, _| StandardNormal.sample(rng));
            let a = DMatrix::from_fn(dim, dim, |_, _| {
                let v: f64 = StandardNormal.sample(rng);
                v
            });
            let cov = &a * a.transpose() + DMatrix::identity(dim, dim) * 0.05;
            GaussianBelief::new(mean, cov).unwrap()
        };
        let p = random_belief(&mut rng);
        let q = random_belief(&mut rng);
        assert!(gaussian_kl(&p, &q).unwrap() >= 0.0);
    }
}
