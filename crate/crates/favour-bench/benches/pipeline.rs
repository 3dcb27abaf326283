//! Benchmarks for the hot paths of the learning stack: MAP estimation,
//! the predictive rule, prior averaging, and dataset simulation.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use favour_core::bayes::{map_estimate, predict_preference, MapOptions};
use favour_core::mass_prior::mpp_average;
use favour_core::mixed_logit::{individual_parameters, MixedLogitModel};
use favour_core::synthetic::{
    default_profile_bounds, sample_population, PopulationSpec,
};
use favour_core::{GaussianBelief, TrainingSet};

fn survey_scale_fixture() -> (TrainingSet, Vec<GaussianBelief>) {
    let dataset = sample_population(&PopulationSpec::default()).expect("default spec is valid");
    let training = dataset.user_training_set(0).expect("user 0 exists");
    let bounds = default_profile_bounds();
    let prior = GaussianBelief::standard(59);
    let options = MapOptions::default();
    let posteriors: Vec<GaussianBelief> = (0..8)
        .map(|u| {
            let set = dataset.user_training_set(u).expect("user exists");
            map_estimate(&set, &prior, &bounds, &options).expect("fit converges")
        })
        .collect();
    (training, posteriors)
}

fn bench_map_estimate(c: &mut Criterion) {
    let (training, _) = survey_scale_fixture();
    let prior = GaussianBelief::standard(59);
    let bounds = default_profile_bounds();
    let options = MapOptions::default();
    c.bench_function("map_estimate_59d_30_examples", |b| {
        b.iter(|| {
            map_estimate(
                black_box(&training),
                black_box(&prior),
                &bounds,
                &options,
            )
            .unwrap()
        })
    });
}

fn bench_predict(c: &mut Criterion) {
    let (training, _) = survey_scale_fixture();
    let prior = GaussianBelief::standard(59);
    let belief = map_estimate(
        &training,
        &prior,
        &default_profile_bounds(),
        &MapOptions::default(),
    )
    .unwrap();
    let fv_r: Vec<f64> = (0..59).map(|i| (i % 5) as f64).collect();
    let fv_q: Vec<f64> = (0..59).map(|i| ((i + 2) % 7) as f64).collect();
    c.bench_function("predict_preference_59d", |b| {
        b.iter(|| predict_preference(black_box(&belief), black_box(&fv_r), black_box(&fv_q)).unwrap())
    });
}

fn bench_mpp_average(c: &mut Criterion) {
    let (_, posteriors) = survey_scale_fixture();
    c.bench_function("mpp_average_8_users_59d", |b| {
        b.iter(|| mpp_average(black_box(&posteriors)).unwrap())
    });
}

fn bench_individual_parameters(c: &mut Criterion) {
    let dataset = sample_population(&PopulationSpec::default()).unwrap();
    let observations = dataset.user_choice_observations(0).unwrap();
    let model = MixedLogitModel::initial(59, 0.3);
    c.bench_function("individual_parameters_2000_draws", |b| {
        b.iter(|| individual_parameters(black_box(&model), &observations, 2000, 1).unwrap())
    });
}

fn bench_simulate(c: &mut Criterion) {
    let spec = PopulationSpec {
        n_users: 10,
        ..PopulationSpec::default()
    };
    c.bench_function("sample_population_10_users", |b| {
        b.iter_batched(
            || spec.clone(),
            |spec| sample_population(black_box(&spec)).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(
    benches,
    bench_map_estimate,
    bench_predict,
    bench_mpp_average,
    bench_individual_parameters,
    bench_simulate
);
criterion_main!(benches);
