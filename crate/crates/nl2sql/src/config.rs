//! TOML configuration. Every section and key is optional; unknown keys are
//! rejected. Relative paths are taken relative to the config file.
//!
//! ```toml
//! [schema]
//! flat = ["schemas/utility.schema"]
//! spider_tables = "spider/tables.json"
//!
//! [dataset]
//! custom = "data/utility.jsonl"
//! custom_db = "utility"    # needed when more than one schema is loaded
//! spider_train = ["spider/train_spider.json", "spider/train_others.json"]
//! spider_dev = "spider/dev.json"
//! min_coverage = 2
//!
//! [backend]
//! kind = "http"            # http | replay | baseline
//! endpoint = "http://127.0.0.1:8080"
//! predictions = "preds.jsonl"
//! timeout_secs = 30
//!
//! [repair]
//! enabled = true
//! threshold = 2
//! qualifiers = false
//!
//! [prompt]
//! schema = true
//!
//! [evaluate]
//! databases = "db"
//! statement_timeout_ms = 5000
//! parallelism = 4
//! ignore_values = false
//! report = "report.json"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Http,
    Replay,
    Baseline,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub schema: SchemaConfig,
    pub dataset: DatasetConfig,
    pub backend: BackendConfig,
    pub repair: RepairConfig,
    pub prompt: PromptConfig,
    pub evaluate: EvaluateConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemaConfig {
    pub flat: Vec<PathBuf>,
    pub spider_tables: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub custom: Option<PathBuf>,
    pub custom_db: Option<String>,
    pub spider_train: Vec<PathBuf>,
    pub spider_dev: Option<PathBuf>,
    pub min_coverage: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackendConfig {
    pub kind: Option<BackendKind>,
    pub endpoint: Option<String>,
    pub predictions: Option<PathBuf>,
    pub timeout_secs: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RepairConfig {
    pub enabled: Option<bool>,
    pub threshold: Option<usize>,
    pub qualifiers: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PromptConfig {
    pub schema: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateConfig {
    pub databases: Option<PathBuf>,
    pub statement_timeout_ms: Option<u64>,
    pub parallelism: Option<usize>,
    pub ignore_values: Option<bool>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Toml { path: PathBuf, source: toml::de::Error },
    #[error("{}: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
}

impl Config {
    pub fn parse(text: &str, base: &Path, path: &Path) -> Result<Config, ConfigError> {
        let mut config: Config =
            toml::from_str(text).map_err(|source| ConfigError::Toml { path: path.into(), source })?;
        config.validate().map_err(|message| ConfigError::Invalid { path: path.into(), message })?;
        config.rebase(base);
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Config::parse(&text, path.parent().unwrap_or(Path::new(".")), path)
    }

    fn validate(&self) -> Result<(), String> {
        if self.evaluate.parallelism == Some(0) {
            return Err("evaluate.parallelism must be at least 1".into());
        }
        if self.evaluate.statement_timeout_ms == Some(0) {
            return Err("evaluate.statement_timeout_ms must be positive".into());
        }
        Ok(())
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.schema.flat.iter_mut().for_each(fix);
        self.schema.spider_tables.iter_mut().for_each(fix);
        self.dataset.custom.iter_mut().for_each(fix);
        self.dataset.spider_train.iter_mut().for_each(fix);
        self.dataset.spider_dev.iter_mut().for_each(fix);
        self.backend.predictions.iter_mut().for_each(fix);
        self.evaluate.databases.iter_mut().for_each(fix);
        self.evaluate.report.iter_mut().for_each(fix);
    }
}
