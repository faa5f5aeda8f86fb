//! Run configuration: a TOML file with one section per pipeline concern.
//!
//! String values of the form `${VAR}` are replaced from the environment at
//! load time (intended for secrets like service URLs); everything else is
//! plain data. API keys are never stored in the config file — the backends
//! read `SAC_LLM_API_KEY` / `SAC_EMBED_API_KEY` directly.

use std::fs;
use std::path::{Path, PathBuf};

use sac_core::chunking::ChunkConfig;
use sac_core::corpus::SpanUnit;
use sac_core::embedding::EmbeddingProviderConfig;
use sac_core::index::{Bm25Params, HybridWeights};
use sac_core::summary::SummaryConfig;

use crate::AppError;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunConfig {
    pub corpus_root: PathBuf,
    pub benchmark_file: PathBuf,
    #[serde(default = "default_workdir")]
    pub workdir: PathBuf,
    /// Row label; derived from the summary/hybrid sections when absent.
    #[serde(default)]
    pub strategy: Option<String>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "sac_core::evaluation::default_k_list")]
    pub k_list: Vec<usize>,
    #[serde(default)]
    pub span_unit: SpanUnit,
    #[serde(default)]
    pub chunk: ChunkConfig,
    #[serde(default)]
    pub summary: SummarySection,
    #[serde(default)]
    pub provider: EmbeddingProviderConfig,
    #[serde(default)]
    pub bm25: Bm25Params,
    /// Token-index the augmented text (true) or raw chunk text (false) for
    /// the sparse retriever.
    #[serde(default = "default_true")]
    pub sparse_on_augmented: bool,
    #[serde(default)]
    pub hybrid: HybridSection,
}

fn default_true() -> bool {
    true
}

fn default_workdir() -> PathBuf {
    PathBuf::from("work")
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummaryBackendKind {
    Stub,
    Remote,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SummarySection {
    /// Prepend summaries to chunks (off = plain-chunking baseline).
    pub enabled: bool,
    pub backend: SummaryBackendKind,
    /// Chat-completion service base URL (remote backend only).
    pub base_url: Option<String>,
    /// Concurrent in-flight summarization calls.
    pub concurrency: usize,
    #[serde(flatten)]
    pub config: SummaryConfig,
}

impl Default for SummarySection {
    fn default() -> Self {
        SummarySection {
            enabled: true,
            backend: SummaryBackendKind::Stub,
            base_url: None,
            concurrency: 4,
            config: SummaryConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct HybridSection {
    pub enabled: bool,
    pub w_semantic: f64,
    /// Candidate pool taken from each retriever before fusion.
    pub pool: usize,
}

impl Default for HybridSection {
    fn default() -> Self {
        HybridSection {
            enabled: false,
            w_semantic: 0.75,
            pool: 128,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, AppError> {
        let raw = fs::read_to_string(path).map_err(|e| {
            AppError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        let interpolated = interpolate_env(&raw).map_err(AppError::Validation)?;
        let config: RunConfig = toml::from_str(&interpolated).map_err(|e| {
            AppError::Validation(format!("config {}: {e}", path.display()))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), AppError> {
        self.chunk.validate()?;
        self.summary.config.validate()?;
        self.provider.validate()?;
        self.bm25.validate()?;
        HybridWeights::new(self.hybrid.w_semantic)?;
        if self.k_list.is_empty() {
            return Err(AppError::Validation("k_list must not be empty".into()));
        }
        if self.k_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AppError::Validation(
                "k_list must be sorted ascending and unique".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(AppError::Validation("seeds must not be empty".into()));
        }
        if self.hybrid.enabled {
            let max_k = *self.k_list.last().unwrap();
            if self.hybrid.pool < max_k {
                return Err(AppError::Validation(format!(
                    "hybrid pool ({}) must cover the largest k ({max_k})",
                    self.hybrid.pool
                )));
            }
        }
        if self.summary.enabled
            && self.summary.backend == SummaryBackendKind::Remote
            && self.summary.base_url.is_none()
        {
            return Err(AppError::Validation(
                "summary.backend = \"remote\" requires summary.base_url".into(),
            ));
        }
        Ok(())
    }

    /// The strategy label stamped onto metric rows.
    pub fn strategy_label(&self) -> String {
        if let Some(label) = &self.strategy {
            return label.clone();
        }
        if self.hybrid.enabled {
            return format!("hybrid-w{}", (self.hybrid.w_semantic * 100.0).round() as u32);
        }
        if self.summary.enabled {
            format!("sac-{}", self.summary.config.strategy.as_str())
        } else {
            "baseline".to_string()
        }
    }

    pub fn search_mode(&self) -> Result<sac_core::index::SearchMode, AppError> {
        Ok(if self.hybrid.enabled {
            sac_core::index::SearchMode::Hybrid {
                weights: HybridWeights::new(self.hybrid.w_semantic)?,
                pool: self.hybrid.pool,
            }
        } else {
            sac_core::index::SearchMode::Dense
        })
    }
}

/// Replace `${VAR}` occurrences with environment values.
fn interpolate_env(raw: &str) -> Result<String, String> {
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let tail = &rest[start + 2..];
        let end = tail
            .find('}')
            .ok_or_else(|| "unterminated ${...} in config".to_string())?;
        let name = &tail[..end];
        let value = std::env::var(name)
            .map_err(|_| format!("config references ${{{name}}} but it is not set"))?;
        out.push_str(&value);
        rest = &tail[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_toml() -> &'static str {
        "corpus_root = \"corpus\"\nbenchmark_file = \"bench.json\"\n"
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let config: RunConfig = toml::from_str(minimal_toml()).unwrap();
        config.validate().unwrap();
        assert_eq!(config.k_list, vec![1, 2, 4, 8, 15, 32, 64]);
        assert_eq!(config.seeds, vec![0, 1, 2]);
        assert_eq!(config.chunk.chunk_size, 500);
        assert_eq!(config.summary.config.char_length, 150);
        assert_eq!(config.strategy_label(), "sac-generic");
    }

    #[test]
    fn baseline_and_hybrid_labels() {
        let mut config: RunConfig = toml::from_str(minimal_toml()).unwrap();
        config.summary.enabled = false;
        assert_eq!(config.strategy_label(), "baseline");
        config.hybrid.enabled = true;
        config.hybrid.w_semantic = 0.75;
        assert_eq!(config.strategy_label(), "hybrid-w75");
        config.strategy = Some("custom".into());
        assert_eq!(config.strategy_label(), "custom");
    }

    #[test]
    fn unsorted_k_list_is_rejected() {
        let toml_text = format!("{}k_list = [4, 2]\n", minimal_toml());
        let config: RunConfig = toml::from_str(&toml_text).unwrap();
        assert!(config.validate().is_err());
    }

    #[test]
    fn env_interpolation_replaces_and_reports_missing() {
        std::env::set_var("SAC_TEST_URL", "http://example.test");
        let out = interpolate_env("base = \"${SAC_TEST_URL}/v1\"").unwrap();
        assert_eq!(out, "base = \"http://example.test/v1\"");
        let err = interpolate_env("x = \"${SAC_TEST_UNSET_VAR}\"").unwrap_err();
        assert!(err.contains("SAC_TEST_UNSET_VAR"));
    }

    #[test]
    fn summary_section_flattens_config_fields() {
        let toml_text = format!(
            "{}[summary]\nstrategy = \"expert\"\nchar_length = 300\nbackend = \"stub\"\n",
            minimal_toml()
        );
        let config: RunConfig = toml::from_str(&toml_text).unwrap();
        assert_eq!(config.summary.config.char_length, 300);
        assert_eq!(config.strategy_label(), "sac-expert");
    }
}
