//! `favour`: dataset simulation, prior construction, per-user fitting and
//! the leave-one-user-out evaluation experiment, as a command-line tool.
//!
//! Exit codes: 0 on success, 2 when an evaluation finished but some
//! sessions failed (a failures report is in the manifest), 1 on fatal
//! errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use favour_core::bayes;
use favour_core::eval::{self, EvalConfig, Method};
use favour_core::mass_prior::{self, MppConfig};
use favour_core::mixed_logit::{self, AicOptions, SmleOptions};
use favour_core::report::{self, RunManifest};
use favour_core::synthetic::{self, ChoiceDataset, PopulationSpec};
use favour_core::{GaussianBelief, TrainingSet};

#[derive(Parser)]
#[command(name = "favour", version, about = "Personalized multimodal route-preference learning")]
struct Cli {
    /// Size of the worker pool (defaults to the number of cores). Results
    /// are identical for any worker count.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic choice dataset with known ground-truth profiles.
    Simulate(SimulateArgs),
    /// Learn the mass-preference prior from every user in a dataset.
    Mpp(MppArgs),
    /// Fit the mixed-logit population model (AIC selection plus
    /// reintroduction of the excluded features).
    FitMixedLogit(FitMixedLogitArgs),
    /// Pooled maximum-likelihood benchmark prior.
    BaselineMlPrior(BaselineMlPriorArgs),
    /// Run the leave-one-user-out cross-validation experiment.
    Eval(EvalArgs),
    /// Predictive probability that route r is preferred over route q.
    Predict(PredictArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Population spec JSON; defaults to the built-in survey-scale spec.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Overrides the seed in the spec.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MppArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    kl_threshold: f64,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    /// Multistart runs per MAP solve.
    #[arg(long, default_value_t = 5)]
    runs: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct FitMixedLogitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Monte Carlo draws for the final fit.
    #[arg(long, default_value_t = 2000)]
    draws: usize,
    /// Draws used for the candidate fits during AIC selection.
    #[arg(long, default_value_t = 200)]
    selection_draws: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct BaselineMlPriorArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated methods: mpp, flat, mpp-only, mixed-logit,
    /// mixed-logit-mpp, ml-prior.
    #[arg(long)]
    methods: String,
    /// Cross-validation config JSON; defaults apply for missing keys.
    #[arg(long)]
    cv: Option<PathBuf>,
    /// Overrides the seed in the cv config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for curves.csv and manifest.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Belief JSON ({"mean": [...], "cov": [[...]]}; extra keys ignored).
    #[arg(long)]
    belief: PathBuf,
    /// Pair JSON ({"r": [...], "q": [...]}).
    #[arg(long)]
    pair: PathBuf,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let content = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&content).with_context(|| format!("parsing {}", path.display()))
}

fn write_pretty_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn load_dataset(path: &Path) -> Result<ChoiceDataset> {
    let content = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(ChoiceDataset::from_json(&content)?)
}

fn all_training_sets(dataset: &ChoiceDataset) -> Result<Vec<TrainingSet>> {
    Ok((0..dataset.users.len())
        .map(|u| dataset.user_training_set(u))
        .collect::<favour_core::Result<Vec<_>>>()?)
}

fn run_simulate(args: &SimulateArgs) -> Result<()> {
    let mut spec: PopulationSpec = match &args.spec {
        Some(path) => read_json(path)?,
        None => PopulationSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let dataset = synthetic::sample_population(&spec)?;
    std::fs::write(&args.out, dataset.to_json()?)
        .with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!(
        "wrote {} users x {} scenarios to {}",
        dataset.users.len(),
        dataset.spec.scenarios_per_user(),
        args.out.display()
    );
    Ok(())
}

fn run_mpp(args: &MppArgs) -> Result<()> {
    let dataset = load_dataset(&args.data)?;
    let sets = all_training_sets(&dataset)?;
    let config = MppConfig {
        kl_threshold: args.kl_threshold,
        max_iterations: args.max_iter,
    };
    let map_options = bayes::MapOptions {
        runs: args.runs,
        seed: args.seed,
        ..bayes::MapOptions::default()
    };
    let outcome = mass_prior::mpp_refine(
        &sets,
        &synthetic::default_profile_bounds(),
        &config,
        &map_options,
    )?;

    let mut value = serde_json::to_value(&outcome.mpp)?;
    let object = value.as_object_mut().expect("belief serializes to an object");
    object.insert("kl_trace".into(), serde_json::to_value(&outcome.kl_trace)?);
    object.insert("iterations".into(), outcome.iterations.into());
    object.insert("converged".into(), outcome.converged.into());
    object.insert("kl_threshold".into(), args.kl_threshold.into());
    object.insert("max_iterations".into(), args.max_iter.into());
    object.insert("seed".into(), args.seed.into());
    write_pretty_json(&args.out, &value)?;
    eprintln!(
        "mpp converged={} after {} iterations (final kl {:.3e})",
        outcome.converged,
        outcome.iterations,
        outcome.kl_trace.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn run_fit_mixed_logit(args: &FitMixedLogitArgs) -> Result<()> {
    let dataset = load_dataset(&args.data)?;
    let observations = (0..dataset.users.len())
        .map(|u| dataset.user_choice_observations(u))
        .collect::<favour_core::Result<Vec<_>>>()?;
    let candidates: Vec<usize> = (0..favour_core::FEATURE_DIM).collect();
    let aic_options = AicOptions {
        draws: args.selection_draws,
        seed: args.seed,
        ..AicOptions::default()
    };
    let selection = mixed_logit::aic_select(
        &observations,
        &candidates,
        favour_core::FEATURE_DIM,
        &aic_options,
    )?;
    let refit = if selection.model.selected_indices().is_empty() {
        selection.model.clone()
    } else {
        let options = SmleOptions {
            draws: args.draws,
            seed: args.seed,
            ..SmleOptions::default()
        };
        mixed_logit::smle_fit(&observations, &selection.model, &options)?.model
    };
    let model = mixed_logit::reintroduce_excluded(&refit);

    let mut value = serde_json::to_value(&model)?;
    let object = value.as_object_mut().expect("model serializes to an object");
    object.insert("aic".into(), selection.aic.into());
    object.insert(
        "selected_count".into(),
        model.selected.iter().filter(|&&s| s).count().into(),
    );
    object.insert("draws".into(), args.draws.into());
    object.insert("seed".into(), args.seed.into());
    write_pretty_json(&args.out, &value)?;
    eprintln!(
        "selected {} of {} features (aic {:.2})",
        model.selected.iter().filter(|&&s| s).count(),
        model.selected.len(),
        selection.aic
    );
    Ok(())
}

fn run_baseline_ml_prior(args: &BaselineMlPriorArgs) -> Result<()> {
    let dataset = load_dataset(&args.data)?;
    let sets = all_training_sets(&dataset)?;
    let prior = mixed_logit::ml_prior_benchmark(&sets)?;
    write_pretty_json(&args.out, &serde_json::to_value(&prior)?)?;
    Ok(())
}

fn run_eval(args: &EvalArgs) -> Result<ExitCode> {
    let dataset = load_dataset(&args.data)?;
    let mut config: EvalConfig = match &args.cv {
        Some(path) => read_json(path)?,
        None => EvalConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.cv.seed = seed;
    }
    let methods = args
        .methods
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<Method>())
        .collect::<favour_core::Result<Vec<_>>>()?;
    if methods.is_empty() {
        bail!("--methods must name at least one method");
    }

    let output = eval::louo_cv(&dataset, &methods, &config)?;
    let manifest = RunManifest::new(
        &output,
        &config,
        &methods,
        dataset.metadata.spec_hash.clone(),
        dataset.users.len(),
    );
    report::export_results(&args.out, &output, &manifest)?;
    eprintln!(
        "wrote {} curve points and {} sessions to {}",
        output.curves.len(),
        output.sessions.len(),
        args.out.display()
    );
    if output.failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "{} sessions failed; see {}",
            output.failures.len(),
            args.out.join(report::MANIFEST_FILE).display()
        );
        Ok(ExitCode::from(2))
    }
}

#[derive(serde::Deserialize)]
struct PairFile {
    r: Vec<f64>,
    q: Vec<f64>,
}

fn run_predict(args: &PredictArgs) -> Result<()> {
    let belief: GaussianBelief = read_json(&args.belief)?;
    let pair: PairFile = read_json(&args.pair)?;
    let probability = bayes::predict_preference(&belief, &pair.r, &pair.q)?;
    let prefers = if probability > 0.5 { "r" } else { "q" };
    println!(
        "{}",
        serde_json::json!({ "probability": probability, "prefers": prefers })
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Simulate(args) => run_simulate(args).map(|()| ExitCode::SUCCESS),
        Command::Mpp(args) => run_mpp(args).map(|()| ExitCode::SUCCESS),
        Command::FitMixedLogit(args) => run_fit_mixed_logit(args).map(|()| ExitCode::SUCCESS),
        Command::BaselineMlPrior(args) => run_baseline_ml_prior(args).map(|()| ExitCode::SUCCESS),
        Command::Eval(args) => run_eval(args),
        Command::Predict(args) => run_predict(args).map(|()| ExitCode::SUCCESS),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: could not configure {workers} workers: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(&cli) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::FAILURE
        }
    }
}
