//! Artifact layout inside the run directory, and typed readers that
//! turn a missing file into an actionable error naming its path.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use rankward::logs::read_log;
use rankward::policy::ScoringFunction;
use rankward::{RewardSpec64, SessionRecord64};

use crate::config::RunConfig;

/// A trained scorer together with the spec it was trained under, so
/// evaluation can refuse objective mixups.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ModelArtifact {
    pub spec_name: String,
    pub spec: RewardSpec64,
    pub scorer: ScoringFunction<f64>,
}

pub fn sessions_path(config: &RunConfig) -> PathBuf {
    config.out_dir.join("sessions.jsonl")
}
pub fn ground_truth_path(config: &RunConfig) -> PathBuf {
    config.out_dir.join("ground_truth.json")
}
pub fn manifest_path(config: &RunConfig) -> PathBuf {
    config.out_dir.join("manifest.json")
}
pub fn propensity_path(config: &RunConfig) -> PathBuf {
    config.out_dir.join("propensity.json")
}
pub fn model_path(config: &RunConfig, spec_name: &str) -> PathBuf {
    config.out_dir.join(format!("model_{spec_name}.json"))
}
pub fn loss_path(config: &RunConfig, spec_name: &str) -> PathBuf {
    config.out_dir.join(format!("loss_{spec_name}.csv"))
}
pub fn segments_path(config: &RunConfig) -> PathBuf {
    config.out_dir.join("segments.csv")
}
pub fn ab_report_path(config: &RunConfig) -> PathBuf {
    config.out_dir.join("ab_report.json")
}
pub fn sweep_path(config: &RunConfig) -> PathBuf {
    config.out_dir.join("sweep.csv")
}

/// Reads the simulated log, or says how to produce it.
pub fn read_sessions(config: &RunConfig) -> Result<Vec<SessionRecord64>> {
    let path = sessions_path(config);
    if !path.exists() {
        bail!("missing sessions log {}; run `rankward simulate` first", path.display());
    }
    read_log(&path).with_context(|| format!("cannot read sessions log {}", path.display()))
}

/// Reads a trained model, or says how to produce it.
pub fn read_model(config: &RunConfig, spec_name: &str) -> Result<ModelArtifact> {
    let path = model_path(config, spec_name);
    read_model_file(&path, &format!("run `rankward train --spec {spec_name}` first"))
}

/// Reads a model artifact from an explicit path.
pub fn read_model_file(path: &Path, hint: &str) -> Result<ModelArtifact> {
    if !path.exists() {
        bail!("missing model {}; {hint}", path.display());
    }
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read model {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse model {}", path.display()))
}

/// Writes a value as pretty JSON.
pub fn write_json<V: Serialize>(path: &Path, value: &V) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text.as_bytes())
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Writes a ready-made text artifact.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text.as_bytes())
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_inputs_name_their_path_and_remedy() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig {
            seed: 1,
            out_dir: dir.path().join("run"),
            ..RunConfig::default()
        };
        let err = read_sessions(&config).unwrap_err().to_string();
        assert!(err.contains("sessions.jsonl"), "{err}");
        assert!(err.contains("rankward simulate"), "{err}");
        let err = read_model(&config, "purchase").unwrap_err().to_string();
        assert!(err.contains("model_purchase.json"), "{err}");
        assert!(err.contains("train --spec purchase"), "{err}");
    }

    #[test]
    fn model_artifacts_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model_engagement.json");
        let artifact = ModelArtifact {
            spec_name: "engagement".into(),
            spec: RewardSpec64::engagement(),
            scorer: ScoringFunction::linear(4),
        };
        write_json(&path, &artifact).unwrap();
        let back = read_model_file(&path, "unused").unwrap();
        assert_eq!(back, artifact);
    }
}
