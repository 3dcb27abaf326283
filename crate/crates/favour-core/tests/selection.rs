//! Variable-selection experiments: planted informative features, pure-noise
//! candidates, and redundant duplicates.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use favour_core::mixed_logit::{aic_select, AicOptions, ChoiceObservation};

/// Builds choice observations where utility depends only on the features in
/// `informative` (with the given weights); all other features are noise.
fn planted_population(
    n_users: usize,
    scenarios: usize,
    dim: usize,
    informative: &[(usize, f64)],
    seed: u64,
) -> Vec<Vec<ChoiceObservation>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_users)
        .map(|_| {
            (0..scenarios)
                .map(|_| {
                    let alternatives: Vec<Vec<f64>> = (0..3)
                        .map(|_| (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
                        .collect();
                    let utilities: Vec<f64> = alternatives
                        .iter()
                        .map(|alt| {
                            informative
                                .iter()
                                .map(|&(j, weight)| weight * alt[j])
                                .sum::<f64>()
                        })
                        .collect();
                    // Logit choice via Gumbel perturbation.
                    let chosen = (0..3)
                        .map(|i| {
                            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                            (i, utilities[i] - (-u.ln()).ln())
                        })
                        .max_by(|a, b| a.1.total_cmp(&b.1))
                        .unwrap()
                        .0;
                    ChoiceObservation::new(alternatives, chosen).unwrap()
                })
                .collect()
        })
        .collect()
}

fn options() -> AicOptions {
    AicOptions {
        draws: 50,
        seed: 2,
        max_iterations: 60,
        gradient_tolerance: 1e-3,
        sigma_init: 0.1,
    }
}

#[test]
fn planted_feature_is_selected_from_noise() {
    // One strongly informative feature among noise, 500 observations.
    let observations = planted_population(50, 10, 6, &[(2, 2.5)], 41);
    let candidates: Vec<usize> = (0..6).collect();
    let selection = aic_select(&observations, &candidates, 6, &options()).unwrap();
    let selected = selection.model.selected_indices();
    assert!(
        selected.contains(&2),
        "informative feature not selected: {selected:?}"
    );
    // The planted feature dominates; at most one stray noise feature
    // sneaks in at this sample size.
    assert!(selected.len() <= 2, "selected {selected:?}");
}

#[test]
fn noise_only_candidates_yield_a_near_empty_selection() {
    let observations = planted_population(60, 10, 5, &[], 42);
    let candidates: Vec<usize> = (0..5).collect();
    let selection = aic_select(&observations, &candidates, 5, &options()).unwrap();
    let selected = selection.model.selected_indices();
    assert!(selected.len() <= 2, "noise selection {selected:?}");
}

#[test]
fn duplicate_candidates_select_exactly_one_copy() {
    // Feature 3 duplicates feature 0 exactly; the tie resolves to the
    // lower index and the copy never enters.
    let base = planted_population(50, 10, 4, &[(0, 2.0)], 43);
    let observations: Vec<Vec<ChoiceObservation>> = base
        .into_iter()
        .map(|user| {
            user.into_iter()
                .map(|obs| {
                    let alternatives: Vec<Vec<f64>> = obs
                        .alternatives()
                        .iter()
                        .map(|alt| {
                            let mut alt = alt.clone();
                            alt[3] = alt[0];
                            alt
                        })
                        .collect();
                    ChoiceObservation::new(alternatives, obs.chosen()).unwrap()
                })
                .collect()
        })
        .collect();
    let candidates: Vec<usize> = (0..4).collect();
    let selection = aic_select(&observations, &candidates, 4, &options()).unwrap();
    let selected = selection.model.selected_indices();
    assert!(selected.contains(&0), "kept {selected:?}");
    assert!(!selected.contains(&3), "duplicate selected: {selected:?}");
}

#[test]
fn selection_improves_on_the_empty_model() {
    let observations = planted_population(50, 10, 6, &[(1, 1.5), (4, -1.0)], 44);
    let candidates: Vec<usize> = (0..6).collect();
    let selection = aic_select(&observations, &candidates, 6, &options()).unwrap();
    let n_obs: usize = observations.iter().map(|o| o.len()).sum();
    let empty_aic = 2.0 * (n_obs as f64) * (3.0f64).ln(); // 2k - 2logL with k=0
    assert!(selection.aic <= empty_aic);
    assert!(!selection.model.selected_indices().is_empty());
}
