//! Run configuration file (TOML). The schema is documented in
//! `docs/config.md` at the repository root.

use std::path::{Path, PathBuf};

use pedf_core::classification::ClassifierConfig;
use pedf_core::clustering::ClustererConfig;
use pedf_core::evaluation::{BenchConfig, ModelSpec};
use pedf_core::event_log::{GeneratorSpec, ParseConfig};
use pedf_core::network::TrainingConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub dataset: Option<DatasetConfig>,
    #[serde(default)]
    pub parse: ParseConfig,
    #[serde(default)]
    pub split: SplitConfig,
    pub model: Option<ModelConfig>,
    pub bench: Option<BenchSection>,
    pub generate: Option<GenerateConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    /// Shown in reports; defaults to the file stem.
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    /// Train on the training part only (`true`) or on every case.
    #[serde(default = "default_true")]
    pub train_on_split: bool,
}

fn default_train_fraction() -> f64 {
    0.7
}

fn default_true() -> bool {
    true
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { train_fraction: default_train_fraction(), seed: 0, train_on_split: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub clusterer: ClustererConfig,
    pub classifier: ClassifierConfig,
    #[serde(default)]
    pub seed: u64,
}

impl ModelConfig {
    pub fn training(&self) -> TrainingConfig {
        TrainingConfig { clusterer: self.clusterer.clone(), classifier: self.classifier.clone(), seed: self.seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    #[serde(default = "default_known")]
    pub known_fractions: Vec<f64>,
    #[serde(default = "default_cap")]
    pub cap: usize,
    pub models: Vec<ModelSpec>,
}

fn default_known() -> Vec<f64> {
    vec![0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
}

fn default_cap() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub n_cases: usize,
    #[serde(default)]
    pub seed: u64,
    pub spec: GeneratorSpec,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub generated: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub report_csv: Option<PathBuf>,
    pub report_text: Option<PathBuf>,
    /// Wall-clock training times; not reproducible, hence separate.
    pub timings: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        // check the version before the schema so old files get a precise message
        let raw: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        match raw.get("version").and_then(toml::Value::as_integer) {
            Some(v) if v == i64::from(CONFIG_VERSION) => {}
            Some(v) => {
                return Err(CliError::Config(format!("config version {v} is not supported (expected {CONFIG_VERSION})")))
            }
            None => return Err(CliError::Config(format!("missing `version = {CONFIG_VERSION}`"))),
        }
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a config file; relative paths inside it are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = RunConfig::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(d) = &mut self.dataset {
            fix(&mut d.path);
        }
        let o = &mut self.output;
        for p in [&mut o.generated, &mut o.model, &mut o.report_csv, &mut o.report_text, &mut o.timings].into_iter().flatten() {
            fix(p);
        }
    }

    pub fn dataset(&self) -> Result<&DatasetConfig> {
        self.dataset.as_ref().ok_or_else(|| CliError::Config("missing [dataset] section".into()))
    }

    pub fn model(&self) -> Result<&ModelConfig> {
        self.model.as_ref().ok_or_else(|| CliError::Config("missing [model] section".into()))
    }

    pub fn generate(&self) -> Result<&GenerateConfig> {
        self.generate.as_ref().ok_or_else(|| CliError::Config("missing [generate] section".into()))
    }

    pub fn dataset_name(&self) -> String {
        self.dataset.as_ref().map_or_else(String::new, |d| {
            d.name.clone().unwrap_or_else(|| {
                d.path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
            })
        })
    }

    pub fn bench_config(&self) -> Result<BenchConfig> {
        let b = self.bench.as_ref().ok_or_else(|| CliError::Config("missing [bench] section".into()))?;
        Ok(BenchConfig {
            dataset_name: self.dataset_name(),
            train_fraction: self.split.train_fraction,
            split_seed: self.split.seed,
            known_fractions: b.known_fractions.clone(),
            cap: b.cap,
            models: b.models.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
version = 1

[dataset]
path = "data/log.csv"

[parse]
case_column = "Case ID"
event_column = "Activity"
time_column = "Complete Timestamp"
record_limit = 50000

[split]
train_fraction = 0.7
seed = 3

[model]
clusterer = { kind = "kmeans", k = 50 }
classifier = { kind = "random_forest", n_trees = 100 }

[bench]
known_fractions = [0.2, 0.5]
models = [
  { kind = "pedf", clusterer = { kind = "canopy" }, classifier = { kind = "naive_bayes" } },
  { kind = "markov" },
  { kind = "ppm", max_order = 2 },
]

[output]
model = "out/model.json"
report_csv = "/abs/report.csv"
"#;

    #[test]
    fn parses_full_config_and_resolves_paths() {
        let mut cfg = RunConfig::from_toml(FULL).unwrap();
        cfg.resolve_paths(Path::new("/runs/x"));
        assert_eq!(cfg.dataset().unwrap().path, Path::new("/runs/x/data/log.csv"));
        assert_eq!(cfg.output.model.as_deref(), Some(Path::new("/runs/x/out/model.json")));
        assert_eq!(cfg.output.report_csv.as_deref(), Some(Path::new("/abs/report.csv")));
        assert_eq!(cfg.parse.record_limit, Some(50_000));
        assert_eq!(cfg.dataset_name(), "log");
        let bench = cfg.bench_config().unwrap();
        assert_eq!(bench.models.len(), 3);
        assert_eq!(bench.split_seed, 3);
        assert_eq!(bench.cap, 10);
        assert_eq!(cfg.model().unwrap().training().clusterer, ClustererConfig::KMeans { k: 50, max_iter: 100 });
    }

    #[test]
    fn version_is_checked() {
        let err = RunConfig::from_toml("version = 2").unwrap_err();
        assert!(err.to_string().contains("version 2"), "{err}");
        assert!(RunConfig::from_toml("[split]\nseed = 1").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml("version = 1\n[split]\nsed = 1").unwrap_err();
        assert_eq!(err.category(), "config");
    }
}
