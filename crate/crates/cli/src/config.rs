//! The run configuration: one TOML file driving every pipeline stage.
//!
//! Every knob has an embedded default except the master seed, which must
//! be supplied in the file or with `--seed` so no run is accidentally
//! unseeded. `print-config` dumps the full default configuration, making
//! all constants inspectable in one place.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use rankward::policy::{DeltaRefresh, ScoringFunction};
use rankward::reward::{AttributionKind, LabelSource, RewardKind};
use rankward::rng::{child_rng, STREAM_TRAIN};
use rankward::{RewardSpec64, SimConfig64, TrainConfig64};

/// Reward-spec presets that are always available by name.
pub const PRESET_SPECS: [&str; 3] = ["engagement", "purchase", "revenue"];

/// Everything a run needs: simulator, logging policy, training recipe,
/// reward specs, and evaluation settings.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every stochastic stage derives from it.
    pub seed: u64,
    /// Directory all artifacts are written to and read from.
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Sessions written by `simulate`.
    #[serde(default = "default_n_sessions")]
    pub n_sessions: usize,
    /// Fresh sessions per arm in `abtest`.
    #[serde(default = "default_ab_sessions")]
    pub ab_sessions: usize,
    /// Unengaged impressed items sampled into each training context.
    #[serde(default = "default_negatives")]
    pub negatives_per_context: usize,
    /// Worker-thread cap; 0 uses every core.
    #[serde(default)]
    pub threads: usize,
    /// The synthetic marketplace.
    #[serde(default)]
    pub sim: SimConfig64,
    /// How logged sessions were ranked.
    #[serde(default)]
    pub logging: LoggingPolicy,
    /// Gradient-descent recipe shared by every spec.
    #[serde(default)]
    pub train: TrainSection,
    /// Custom reward specs by name, next to the built-in presets.
    #[serde(default)]
    pub specs: BTreeMap<String, SpecSection>,
    /// Counterfactual evaluation settings.
    #[serde(default)]
    pub eval: EvalSection,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_n_sessions() -> usize {
    50_000
}
fn default_ab_sessions() -> usize {
    20_000
}
fn default_negatives() -> usize {
    6
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out_dir: default_out_dir(),
            n_sessions: default_n_sessions(),
            ab_sessions: default_ab_sessions(),
            negatives_per_context: default_negatives(),
            threads: 0,
            sim: SimConfig64::default(),
            logging: LoggingPolicy::default(),
            train: TrainSection::default(),
            specs: BTreeMap::new(),
            eval: EvalSection::default(),
        }
    }
}

/// The ranker that produced the logs.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "policy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LoggingPolicy {
    /// Uniformly random exploration traffic.
    Random,
    /// True click probabilities perturbed by Gaussian noise: a decent
    /// but imperfect production ranker.
    OracleNoisy {
        #[serde(default = "default_oracle_noise")]
        noise: f64,
    },
    /// A previously trained model artifact.
    Model { path: PathBuf },
}

fn default_oracle_noise() -> f64 {
    0.25
}

impl Default for LoggingPolicy {
    fn default() -> Self {
        LoggingPolicy::Random
    }
}

/// Scorer shape plus optimizer settings.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub model: ModelShape,
    /// Hidden width when `model = "mlp"`.
    pub hidden: usize,
    pub learning_rate: f64,
    /// Base epoch count; smaller datasets are given proportionally more
    /// passes so every spec sees comparable gradient work.
    pub epochs: usize,
    pub minibatch_size: usize,
    pub l2_penalty: f64,
    pub delta_refresh: DeltaRefresh,
}

/// The scoring-function family to train.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ModelShape {
    Linear,
    Mlp,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            model: ModelShape::Mlp,
            hidden: 16,
            learning_rate: 0.3,
            epochs: 80,
            minibatch_size: 512,
            l2_penalty: 1e-4,
            delta_refresh: DeltaRefresh::PerEpoch,
        }
    }
}

/// Contexts at which the epoch count is taken as-is; smaller corpora
/// scale it up, capped at four extra passes' worth.
const EPOCH_SCALE_REFERENCE: f64 = 40_000.0;

impl TrainSection {
    /// Builds the optimizer config for a dataset of `n_contexts`.
    pub fn optimizer(&self, n_contexts: usize, seed: u64) -> TrainConfig64 {
        let scale = (EPOCH_SCALE_REFERENCE / n_contexts.max(1) as f64).clamp(1.0, 4.0);
        TrainConfig64 {
            learning_rate: self.learning_rate,
            epochs: (self.epochs as f64 * scale) as usize,
            minibatch_size: self.minibatch_size,
            l2_penalty: self.l2_penalty,
            delta_refresh: self.delta_refresh,
            seed,
        }
    }

    /// A deterministic untrained scorer for `input_dim` features.
    ///
    /// Initialization draws from the training stream at an index no
    /// epoch shuffle can reach, so init and shuffling never share draws.
    pub fn init_scorer(&self, input_dim: usize, seed: u64) -> Result<ScoringFunction<f64>> {
        Ok(match self.model {
            ModelShape::Linear => ScoringFunction::linear(input_dim),
            ModelShape::Mlp => ScoringFunction::mlp(
                input_dim,
                self.hidden,
                &mut child_rng(seed, STREAM_TRAIN, u64::MAX),
            )?,
        })
    }
}

/// A reward spec assembled from parts, with the engagement preset's
/// variance-reduction settings wherever a field is omitted.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpecSection {
    pub kind: RewardKind,
    pub attribution: AttributionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_source: Option<LabelSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clipping_cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_normalize: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idcg_normalize: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_value_buckets: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partial_label: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub debias_cap: Option<f64>,
}

impl SpecSection {
    fn build(&self) -> RewardSpec64 {
        let base = RewardSpec64::engagement();
        RewardSpec64 {
            kind: self.kind,
            attribution: self.attribution,
            label_source: self.label_source.unwrap_or(base.label_source),
            clipping_cap: self.clipping_cap.or(base.clipping_cap),
            self_normalize: self.self_normalize.unwrap_or(base.self_normalize),
            idcg_normalize: self.idcg_normalize.unwrap_or(base.idcg_normalize),
            n_value_buckets: self.n_value_buckets.unwrap_or(base.n_value_buckets),
            partial_label: self.partial_label.unwrap_or(base.partial_label),
            debias_cap: self.debias_cap.unwrap_or(base.debias_cap),
        }
    }
}

/// Bootstrap and α-grid settings for `eval`, `abtest`, and `sweep`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub alpha_grid: Vec<f64>,
    pub bootstrap_replicates: usize,
    pub confidence: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            alpha_grid: rankward::eval::default_alpha_grid(),
            bootstrap_replicates: 1000,
            confidence: 0.95,
        }
    }
}

/// Command-line overrides applied on top of the loaded file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl RunConfig {
    /// Loads `path` (or the defaults when `None`), applies `overrides`,
    /// and validates. A seed must come from the file or the override.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
        let mut config = match path {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read config {}", path.display()))?;
                let mut table: toml::Table = text
                    .parse()
                    .with_context(|| format!("cannot parse config {}", path.display()))?;
                if let Some(seed) = overrides.seed {
                    table.entry("seed").or_insert_with(|| toml::Value::Integer(seed as i64));
                }
                if !table.contains_key("seed") {
                    bail!(
                        "config {} has no seed; set `seed = <n>` or pass --seed",
                        path.display()
                    );
                }
                table
                    .try_into::<RunConfig>()
                    .with_context(|| format!("invalid config {}", path.display()))?
            }
            None => {
                let seed = overrides
                    .seed
                    .ok_or_else(|| anyhow!("no config file given; pass --config or --seed"))?;
                RunConfig { seed, ..RunConfig::default() }
            }
        };
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        if let Some(out) = &overrides.out {
            config.out_dir = out.clone();
        }
        if let Some(threads) = overrides.threads {
            config.threads = threads;
        }
        config.validate()?;
        Ok(config)
    }

    /// Rejects configurations no stage could run with.
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if let LoggingPolicy::OracleNoisy { noise } = self.logging {
            if !(noise >= 0.0) || !noise.is_finite() {
                bail!("logging noise must be finite and >= 0");
            }
        }
        for name in self.specs.keys() {
            if PRESET_SPECS.contains(&name.as_str()) {
                bail!("spec name `{name}` is reserved for the built-in preset");
            }
        }
        for &alpha in &self.eval.alpha_grid {
            if !(0.0..=1.0).contains(&alpha) {
                bail!("alpha grid values must lie in [0, 1], got {alpha}");
            }
        }
        if self.eval.alpha_grid.is_empty() {
            bail!("alpha grid must not be empty");
        }
        if self.eval.bootstrap_replicates == 0 {
            bail!("bootstrap_replicates must be >= 1");
        }
        if !(0.0 < self.eval.confidence && self.eval.confidence < 1.0) {
            bail!("confidence must lie strictly between 0 and 1");
        }
        Ok(())
    }

    /// Looks a reward spec up by preset or configured name.
    pub fn spec(&self, name: &str) -> Result<RewardSpec64> {
        match name {
            "engagement" => Ok(RewardSpec64::engagement()),
            "purchase" => Ok(RewardSpec64::purchase()),
            "revenue" => Ok(RewardSpec64::revenue()),
            other => self.specs.get(other).map(SpecSection::build).ok_or_else(|| {
                anyhow!("unknown reward spec `{other}`; valid specs: {}", self.spec_names().join(", "))
            }),
        }
    }

    /// Every resolvable spec name: presets first, then configured ones.
    pub fn spec_names(&self) -> Vec<String> {
        PRESET_SPECS
            .iter()
            .map(|s| s.to_string())
            .chain(self.specs.keys().cloned())
            .collect()
    }

    /// The full configuration as TOML, defaults included.
    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let config = RunConfig::default();
        let text = config.to_toml().unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn seed_is_mandatory() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "n_sessions = 10\n").unwrap();
        let err = RunConfig::load(Some(&path), &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
        assert!(RunConfig::load(None, &Overrides::default()).is_err());
    }

    #[test]
    fn overrides_beat_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 3\nout_dir = \"a\"\n").unwrap();
        let overrides = Overrides {
            seed: Some(9),
            out: Some(PathBuf::from("b")),
            threads: Some(2),
        };
        let config = RunConfig::load(Some(&path), &overrides).unwrap();
        assert_eq!(config.seed, 9);
        assert_eq!(config.out_dir, PathBuf::from("b"));
        assert_eq!(config.threads, 2);
    }

    #[test]
    fn seed_override_satisfies_a_seedless_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "n_sessions = 10\n").unwrap();
        let overrides = Overrides { seed: Some(4), ..Overrides::default() };
        let config = RunConfig::load(Some(&path), &overrides).unwrap();
        assert_eq!(config.seed, 4);
        assert_eq!(config.n_sessions, 10);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 1\nn_sesions = 10\n").unwrap();
        assert!(RunConfig::load(Some(&path), &Overrides::default()).is_err());
    }

    #[test]
    fn unknown_spec_error_lists_every_valid_name() {
        let mut config = RunConfig::default();
        config.specs.insert(
            "premium_last".into(),
            SpecSection {
                kind: RewardKind::Purchase,
                attribution: AttributionKind::LastTouch,
                label_source: None,
                clipping_cap: None,
                self_normalize: None,
                idcg_normalize: None,
                n_value_buckets: None,
                partial_label: None,
                debias_cap: None,
            },
        );
        let err = config.spec("premum_last").unwrap_err().to_string();
        for name in ["engagement", "purchase", "revenue", "premium_last"] {
            assert!(err.contains(name), "{err}");
        }
        let spec = config.spec("premium_last").unwrap();
        assert_eq!(spec.kind, RewardKind::Purchase);
        assert_eq!(spec.attribution, AttributionKind::LastTouch);
        assert_eq!(spec.partial_label, RewardSpec64::engagement().partial_label);
    }

    #[test]
    fn preset_names_cannot_be_shadowed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "seed = 1\n[specs.purchase]\nkind = \"purchase\"\nattribution = \"all_touch\"\n",
        )
        .unwrap();
        let err = RunConfig::load(Some(&path), &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("reserved"), "{err}");
    }

    #[test]
    fn epoch_scaling_grows_small_corpora_only() {
        let train = TrainSection::default();
        assert_eq!(train.optimizer(40_000, 1).epochs, 80);
        assert_eq!(train.optimizer(400_000, 1).epochs, 80);
        assert_eq!(train.optimizer(10_000, 1).epochs, 320);
        assert_eq!(train.optimizer(1, 1).epochs, 320);
        assert_eq!(train.optimizer(0, 1).epochs, 320);
    }

    #[test]
    fn scorer_init_is_deterministic_in_the_seed() {
        let train = TrainSection::default();
        let a = train.init_scorer(12, 7).unwrap();
        let b = train.init_scorer(12, 7).unwrap();
        let c = train.init_scorer(12, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let linear = TrainSection { model: ModelShape::Linear, ..train };
        assert_eq!(linear.init_scorer(12, 7).unwrap().input_dim(), 12);
    }
}
