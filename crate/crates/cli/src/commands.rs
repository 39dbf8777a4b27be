//! One function per subcommand. Each is a pure function of the resolved
//! configuration and the files under the run directory, so re-running a
//! command reproduces its artifacts byte for byte.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use rankward::eval::{alpha_sweep, segment_lift, segments_csv, LoggedOrder};
use rankward::logs::{build_eval_set, build_training_set, write_log};
use rankward::policy::{train, Policy};
use rankward::reward::{fit_propensity_curve, RankDiscount};
use rankward::rng::{child_rng, STREAM_BEHAVIOR, STREAM_NEGATIVES};
use rankward::sim::{ground_truth, run_ab_test, sample_catalog, AbReport, RankingPolicy};
use rankward::stats::BootstrapConfig;
use rankward::RewardSpec64;

use crate::artifacts::{
    ab_report_path, ground_truth_path, loss_path, manifest_path, model_path, propensity_path,
    read_model, read_model_file, read_sessions, segments_path, sessions_path, sweep_path,
    write_json, write_text, ModelArtifact,
};
use crate::config::{LoggingPolicy, RunConfig};
use crate::manifest::Manifest;

/// The A/B artifact: which models met, and every lift row.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AbArtifact {
    pub treatment: String,
    pub control: String,
    pub report: AbReport<f64>,
}

fn bootstrap(config: &RunConfig) -> BootstrapConfig {
    BootstrapConfig {
        replicates: config.eval.bootstrap_replicates,
        confidence: config.eval.confidence,
        seed: config.seed,
    }
}

fn logging_policy(config: &RunConfig) -> Result<RankingPolicy<f64>> {
    Ok(match &config.logging {
        LoggingPolicy::Random => RankingPolicy::Random,
        LoggingPolicy::OracleNoisy { noise } => RankingPolicy::OracleNoisy { noise: *noise },
        LoggingPolicy::Model { path } => {
            let artifact =
                read_model_file(path, "point logging.model at a trained model artifact")?;
            RankingPolicy::Model(Policy::single(artifact.scorer))
        }
    })
}

fn ensure_out_dir(config: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&config.out_dir).with_context(|| {
        format!("cannot create output directory {}", config.out_dir.display())
    })
}

/// Samples the catalog, replays the logging policy over fresh shoppers,
/// and writes `sessions.jsonl`, `ground_truth.json`, and the manifest.
pub fn cmd_simulate(config: &RunConfig) -> Result<()> {
    ensure_out_dir(config)?;
    let catalog = sample_catalog(&config.sim, config.seed)?;
    let policy = logging_policy(config)?;
    let sessions = rankward::sim::simulate_batch(
        &policy,
        &catalog,
        &config.sim,
        config.n_sessions,
        config.seed,
        STREAM_BEHAVIOR,
    )?;
    let log = sessions_path(config);
    write_log(&log, &sessions)
        .with_context(|| format!("cannot write sessions log {}", log.display()))?;
    write_json(&ground_truth_path(config), &ground_truth(&catalog, &config.sim)?)?;
    Manifest::of(config)?.write(&manifest_path(config))?;
    log::info!("simulated {} sessions into {}", sessions.len(), config.out_dir.display());
    Ok(())
}

/// Fits the examination-decay curve from the logged click positions and
/// writes it as `propensity.json`.
pub fn cmd_fit_propensity(config: &RunConfig) -> Result<()> {
    let sessions = read_sessions(config)?;
    let fitted = fit_propensity_curve(&sessions)?;
    write_json(&propensity_path(config), &fitted)?;
    if let RankDiscount::Fitted { exponent, .. } = &fitted {
        log::info!("fitted examination exponent {exponent:.4}");
    }
    Ok(())
}

/// Builds the named spec's training set from the log and trains a
/// scorer on it, writing `model_<spec>.json` and `loss_<spec>.csv`.
pub fn cmd_train(config: &RunConfig, spec_name: &str) -> Result<()> {
    let spec = config.spec(spec_name)?;
    let sessions = read_sessions(config)?;
    ensure_out_dir(config)?;
    let mut negatives_rng = child_rng(config.seed, STREAM_NEGATIVES, 0);
    let dataset =
        build_training_set(&sessions, &spec, config.negatives_per_context, &mut negatives_rng)?;
    let input_dim = dataset.item_dim().unwrap_or(0) + dataset.context_dim().unwrap_or(0);
    let init = config.train.init_scorer(input_dim, config.seed)?;
    let optimizer = config.train.optimizer(dataset.contexts.len(), config.seed);
    let outcome = train(&dataset, init, &RankDiscount::Log, &optimizer)
        .with_context(|| format!("training spec `{spec_name}` failed"))?;

    let artifact = ModelArtifact { spec_name: spec_name.to_string(), spec, scorer: outcome.scorer };
    write_json(&model_path(config, spec_name), &artifact)?;
    let mut csv = String::from("epoch,loss\n");
    for (epoch, loss) in outcome.loss_trace.iter().enumerate() {
        csv.push_str(&format!("{},{loss}\n", epoch + 1));
    }
    write_text(&loss_path(config, spec_name), &csv)?;
    log::info!(
        "trained `{spec_name}` on {} contexts over {} epochs",
        dataset.contexts.len(),
        optimizer.epochs
    );
    Ok(())
}

/// Loads the spec's trained model, refusing one whose recorded spec no
/// longer matches the configuration's definition of `spec_name`.
fn read_matching_model(config: &RunConfig, spec_name: &str) -> Result<ModelArtifact> {
    let spec = config.spec(spec_name)?;
    let artifact = read_model(config, spec_name)?;
    if artifact.spec_name != spec_name || artifact.spec != spec {
        bail!(
            "model {} is tagged `{}` ({}) but the configuration defines `{spec_name}` as {}; \
             retrain it or fix the config",
            model_path(config, spec_name).display(),
            artifact.spec_name,
            artifact.spec.describe(),
            spec.describe()
        );
    }
    Ok(artifact)
}

/// Counterfactually scores the spec's model against the logged order on
/// the held-out log and writes per-segment lifts to `segments.csv`.
pub fn cmd_eval(config: &RunConfig, spec_name: &str) -> Result<()> {
    let spec = config.spec(spec_name)?;
    let artifact = read_matching_model(config, spec_name)?;
    let sessions = read_sessions(config)?;
    let eval_set = build_eval_set(&sessions, &spec)?;
    let policy = Policy::single(artifact.scorer);
    let rows =
        segment_lift(&eval_set, &policy, &LoggedOrder, &spec, &RankDiscount::Log, &bootstrap(config))?;
    write_text(&segments_path(config), &segments_csv(&rows))?;
    log::info!("evaluated `{spec_name}` over {} segment rows", rows.len());
    Ok(())
}

/// Runs a paired online test between two trained models on fresh
/// sessions and writes `ab_report.json`.
///
/// The shopper stream is offset from the logging seed so test traffic
/// never replays the sessions the models were trained on.
pub fn cmd_abtest(config: &RunConfig, treatment: &str, control: &str) -> Result<()> {
    let arm_t = read_matching_model(config, treatment)?;
    let arm_c = read_matching_model(config, control)?;
    ensure_out_dir(config)?;
    let catalog = sample_catalog(&config.sim, config.seed)?;
    let report = run_ab_test(
        &RankingPolicy::Model(Policy::single(arm_t.scorer)),
        &RankingPolicy::Model(Policy::single(arm_c.scorer)),
        &catalog,
        &config.sim,
        config.ab_sessions,
        &bootstrap(config),
        config.seed.wrapping_add(1),
    )?;
    let artifact =
        AbArtifact { treatment: treatment.to_string(), control: control.to_string(), report };
    write_json(&ab_report_path(config), &artifact)?;
    log::info!("ab-tested `{treatment}` against `{control}`");
    Ok(())
}

/// Sweeps the acquisition/engagement mixing weight over a grid and
/// writes the per-α counterfactual estimates to `sweep.csv`.
///
/// The acquisition end is the purchase-spec model, the engagement end
/// the engagement-spec model; estimates come from the engagement- and
/// purchase-spec evaluation sets built over the held-out log, with the
/// engagement set doubling as the score-calibration sample.
pub fn cmd_sweep(config: &RunConfig, alpha_grid: Option<&[f64]>) -> Result<()> {
    let acquisition = read_matching_model(config, "purchase")?;
    let engagement = read_matching_model(config, "engagement")?;
    let sessions = read_sessions(config)?;
    let grid = alpha_grid.unwrap_or(&config.eval.alpha_grid);
    let eval_sets = [
        build_eval_set(&sessions, &RewardSpec64::engagement())?,
        build_eval_set(&sessions, &RewardSpec64::purchase())?,
    ];
    let curve = alpha_sweep(
        &acquisition.scorer,
        &engagement.scorer,
        grid,
        &eval_sets,
        &eval_sets[0],
        &RankDiscount::Log,
        &bootstrap(config),
    )?;
    write_text(&sweep_path(config), &curve.to_csv())?;
    log::info!("swept {} mixing weights", curve.alphas.len());
    Ok(())
}
