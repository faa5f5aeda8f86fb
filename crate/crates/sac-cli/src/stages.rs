//! Stage bookkeeping: every pipeline stage records a manifest with the hash
//! of the configuration it ran under plus the hashes of its upstream stages.
//! Re-running with an unchanged configuration is a no-op; an artifact whose
//! recorded upstream hashes no longer match the current configuration is
//! stale and refused unless `--force` is given.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sac_core::embedding::Fnv64;

use crate::AppError;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub config_hash: String,
    pub upstream: BTreeMap<String, String>,
}

/// Hash any serializable configuration fragment.
pub fn config_hash(value: &impl serde::Serialize) -> String {
    let json = serde_json::to_string(value).expect("config fragments serialize");
    let mut h = Fnv64::new();
    h.update(json.as_bytes());
    format!("{:016x}", h.finish())
}

pub struct StageRunner {
    manifest_dir: PathBuf,
    force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageOutcome {
    Skipped,
    Ran,
}

impl StageOutcome {
    pub fn ran(self) -> bool {
        self == StageOutcome::Ran
    }
}

impl StageRunner {
    pub fn new(workdir: &Path, force: bool) -> Self {
        StageRunner {
            manifest_dir: workdir.join("manifests"),
            force,
        }
    }

    fn manifest_path(&self, stage: &str) -> PathBuf {
        self.manifest_dir.join(format!("{stage}.json"))
    }

    pub fn read_manifest(&self, stage: &str) -> Option<StageManifest> {
        let raw = fs::read_to_string(self.manifest_path(stage)).ok()?;
        serde_json::from_str(&raw).ok()
    }

    /// Run (or skip) one stage.
    ///
    /// * fresh manifest + artifact present -> skip;
    /// * matching config but mismatched upstream hashes -> the artifact is
    ///   stale: rebuild when the upstream was refreshed in this invocation
    ///   (`upstream_refreshed`) or under `--force`, refuse otherwise;
    /// * anything else -> build and record.
    pub fn run(
        &self,
        stage: &str,
        own_hash: String,
        upstream: &[(&str, String)],
        upstream_refreshed: bool,
        artifact_present: impl Fn() -> bool,
        build: impl FnOnce() -> Result<(), AppError>,
    ) -> Result<StageOutcome, AppError> {
        let upstream_map: BTreeMap<String, String> = upstream
            .iter()
            .map(|(name, hash)| (name.to_string(), hash.clone()))
            .collect();

        if !self.force {
            if let Some(manifest) = self.read_manifest(stage) {
                if manifest.config_hash == own_hash && artifact_present() {
                    if manifest.upstream == upstream_map {
                        log::info!("stage {stage}: up-to-date, skipping");
                        return Ok(StageOutcome::Skipped);
                    }
                    if !upstream_refreshed {
                        return Err(AppError::Validation(format!(
                            "stage {stage}: artifact is stale (built against different upstream \
                             configuration: recorded {:?}, current {:?}); rerun the upstream \
                             stage and this one, or pass --force to rebuild",
                            manifest.upstream, upstream_map
                        )));
                    }
                }
            }
        }

        log::info!("stage {stage}: running");
        build()?;
        let manifest = StageManifest {
            stage: stage.to_string(),
            config_hash: own_hash,
            upstream: upstream_map,
        };
        fs::create_dir_all(&self.manifest_dir).map_err(|e| {
            AppError::Runtime(format!("cannot create {}: {e}", self.manifest_dir.display()))
        })?;
        let path = self.manifest_path(stage);
        fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap())
            .map_err(|e| AppError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        Ok(StageOutcome::Ran)
    }
}
