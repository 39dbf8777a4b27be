//! Provenance manifests tying artifacts to a configuration and seed.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

/// What `simulate` records next to its artifacts. Contains nothing
/// time- or host-dependent, so identical runs write identical bytes.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Manifest {
    pub seed: u64,
    /// Hash of the full resolved configuration.
    pub config_sha256: String,
    pub n_sessions: usize,
}

/// Hex SHA-256 of the configuration's canonical JSON form. Field order
/// follows the struct definitions, so equal configs hash equally and
/// any field change — however deep — changes the digest.
pub fn config_hash(config: &RunConfig) -> Result<String> {
    let canonical = serde_json::to_vec(config)?;
    Ok(format!("{:x}", Sha256::digest(&canonical)))
}

impl Manifest {
    pub fn of(config: &RunConfig) -> Result<Manifest> {
        Ok(Manifest {
            seed: config.seed,
            config_sha256: config_hash(config)?,
            n_sessions: config.n_sessions,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text.as_bytes())
            .with_context(|| format!("cannot write manifest {}", path.display()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_configs_hash_equally() {
        let a = RunConfig { seed: 5, ..RunConfig::default() };
        let b = RunConfig { seed: 5, ..RunConfig::default() };
        assert_eq!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
    }

    #[test]
    fn any_field_change_moves_the_hash() {
        let base = RunConfig { seed: 5, ..RunConfig::default() };
        let mut sessions = base.clone();
        sessions.n_sessions += 1;
        let mut nested = base.clone();
        nested.sim.click.price_damping += 0.1;
        let mut seeded = base.clone();
        seeded.seed = 6;
        let reference = config_hash(&base).unwrap();
        for changed in [&sessions, &nested, &seeded] {
            assert_ne!(config_hash(changed).unwrap(), reference);
        }
    }

    #[test]
    fn manifest_serialization_is_byte_stable() {
        let config = RunConfig { seed: 5, ..RunConfig::default() };
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        Manifest::of(&config).unwrap().write(&a).unwrap();
        Manifest::of(&config).unwrap().write(&b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}
