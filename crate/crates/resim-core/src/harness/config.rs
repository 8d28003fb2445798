//! TOML run configuration: one `[run]` table plus repeated `[[test]]` tables.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(#[from] Box<toml::de::Error>),
    #[error("test '{test}': {message}")]
    Invalid { test: String, message: String },
    #[error("unknown measure id '{0}'")]
    UnknownMeasure(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub run: RunSection,
    #[serde(default, rename = "test", skip_serializing_if = "Vec::is_empty")]
    pub tests: Vec<TestSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSection {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Measure ids to run; empty selects the full registry.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub measures: Vec<String>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    /// Correlate representation distances with test-accuracy gaps.
    AccuracyCorr,
    /// Correlate representation distances with output divergence.
    OutputCorr,
    /// Recover a planted model grouping.
    Group,
    /// Check monotone similarity decay along a layer sequence.
    Layer,
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestKind::AccuracyCorr => "accuracy-corr",
            TestKind::OutputCorr => "output-corr",
            TestKind::Group => "group",
            TestKind::Layer => "layer",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputDiff {
    Jsd,
    Disagreement,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestSection {
    pub kind: TestKind,
    pub name: String,
    #[serde(default = "default_tag")]
    pub dataset: String,
    #[serde(default = "default_tag")]
    pub arch: String,
    /// Group tests: one inner list per group. Layer tests: one inner list per
    /// model, in layer order. Prediction tests: a single inner list of models.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<Vec<PathBuf>>,
    /// Per-model probability matrices, aligned with the model list.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    /// Single-model shorthand for layer tests.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub layer_order: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_diff: Option<OutputDiff>,
}

fn default_tag() -> String {
    "default".to_string()
}

impl TestSection {
    /// The per-model layer sequences of a layer test, whichever key was used.
    pub fn layer_chains(&self) -> Vec<Vec<PathBuf>> {
        if self.layer_order.is_empty() {
            self.groups.clone()
        } else {
            vec![self.layer_order.clone()]
        }
    }

    /// The flat model list of a prediction test.
    pub fn model_paths(&self) -> &[PathBuf] {
        &self.groups[0]
    }

    fn invalid(&self, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid { test: self.name.clone(), message: message.into() }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.name.is_empty() {
            return Err(self.invalid("name must not be empty"));
        }
        match self.kind {
            TestKind::AccuracyCorr | TestKind::OutputCorr => {
                if self.groups.len() != 1 {
                    return Err(self.invalid("prediction tests take exactly one model list"));
                }
                let n = self.groups[0].len();
                if n < 3 {
                    return Err(self.invalid("prediction tests need at least 3 models"));
                }
                if self.outputs.len() != n {
                    return Err(self.invalid(format!(
                        "{} output files for {} models",
                        self.outputs.len(),
                        n
                    )));
                }
                if self.labels.is_none() {
                    return Err(self.invalid("prediction tests need a labels file"));
                }
                if self.kind == TestKind::OutputCorr && self.output_diff.is_none() {
                    return Err(self.invalid("output-corr tests need output_diff"));
                }
            }
            TestKind::Group => {
                if self.groups.len() < 2 {
                    return Err(self.invalid("group tests need at least 2 groups"));
                }
                if self.groups.iter().any(|g| g.len() < 2) {
                    return Err(self.invalid("every group needs at least 2 members"));
                }
            }
            TestKind::Layer => {
                let chains = self.layer_chains();
                if chains.is_empty() {
                    return Err(self.invalid("layer tests need layer_order or groups"));
                }
                if !self.layer_order.is_empty() && !self.groups.is_empty() {
                    return Err(self.invalid("give layer_order or groups, not both"));
                }
                if chains.iter().any(|c| c.len() < 3) {
                    return Err(self.invalid("every layer sequence needs at least 3 layers"));
                }
                let len = chains[0].len();
                if chains.iter().any(|c| c.len() != len) {
                    return Err(self.invalid("all models must list the same number of layers"));
                }
            }
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(Box::new)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut seen = BTreeSet::new();
        for test in &self.tests {
            test.validate()?;
            if !seen.insert((&test.name, &test.dataset, &test.arch)) {
                return Err(ConfigError::Invalid {
                    test: test.name.clone(),
                    message: "duplicate (name, dataset, arch) combination".to_string(),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_group_toml() -> &'static str {
        r#"
            [run]
            seed = 7

            [[test]]
            kind = "group"
            name = "planted"
            groups = [["a.npy", "b.npy"], ["c.npy", "d.npy"]]
        "#
    }

    #[test]
    fn parses_minimal_group_config() {
        let cfg = RunConfig::parse(minimal_group_toml()).unwrap();
        assert_eq!(cfg.run.seed, 7);
        assert_eq!(cfg.run.out_dir, PathBuf::from("results"));
        assert!(cfg.run.measures.is_empty());
        assert_eq!(cfg.tests.len(), 1);
        assert_eq!(cfg.tests[0].kind, TestKind::Group);
        assert_eq!(cfg.tests[0].dataset, "default");
    }

    #[test]
    fn rejects_single_group() {
        let bad = r#"
            [run]
            seed = 1
            [[test]]
            kind = "group"
            name = "lonely"
            groups = [["a.npy", "b.npy"]]
        "#;
        assert!(matches!(RunConfig::parse(bad), Err(ConfigError::Invalid { .. })));
    }

    #[test]
    fn rejects_prediction_without_labels() {
        let bad = r#"
            [run]
            seed = 1
            [[test]]
            kind = "accuracy-corr"
            name = "pred"
            groups = [["a.npy", "b.npy", "c.npy"]]
            outputs = ["pa.npy", "pb.npy", "pc.npy"]
        "#;
        let err = RunConfig::parse(bad).unwrap_err();
        assert!(err.to_string().contains("labels"), "{err}");
    }

    #[test]
    fn rejects_short_layer_chain_and_mixed_keys() {
        let short = r#"
            [run]
            seed = 1
            [[test]]
            kind = "layer"
            name = "chain"
            layer_order = ["l0.npy", "l1.npy"]
        "#;
        assert!(RunConfig::parse(short).is_err());
        let mixed = r#"
            [run]
            seed = 1
            [[test]]
            kind = "layer"
            name = "chain"
            layer_order = ["l0.npy", "l1.npy", "l2.npy"]
            groups = [["l0.npy", "l1.npy", "l2.npy"]]
        "#;
        assert!(RunConfig::parse(mixed).is_err());
    }

    #[test]
    fn rejects_duplicate_cell_key() {
        let dup = r#"
            [run]
            seed = 1
            [[test]]
            kind = "group"
            name = "same"
            groups = [["a.npy", "b.npy"], ["c.npy", "d.npy"]]
            [[test]]
            kind = "group"
            name = "same"
            groups = [["a.npy", "b.npy"], ["c.npy", "d.npy"]]
        "#;
        assert!(RunConfig::parse(dup).is_err());
    }

    #[test]
    fn serializes_round_trip() {
        let cfg = RunConfig::parse(minimal_group_toml()).unwrap();
        let text = toml::to_string_pretty(&cfg).unwrap();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back.tests[0].groups, cfg.tests[0].groups);
        assert_eq!(back.run.seed, cfg.run.seed);
    }
}
