use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adversarial::TrainConfig;
use crate::data::{FeaturizeConfig, Schema, SplitScheme};
use crate::error::{Error, Result};
use crate::nn::ModelConfig;

/// Environment variable the `dti` binary reads as the cache directory.
pub const CACHE_DIR_ENV: &str = "DTI_CACHE_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub path: PathBuf,
    /// Dataset label used in summary tables; defaults to the file stem.
    pub name: Option<String>,
    pub schema: Schema,
    /// Entities with at most this many records are removed.
    pub filter_threshold: usize,
    pub single_pass: bool,
    pub skip_bad: bool,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            path: PathBuf::from("data.csv"),
            name: None,
            schema: Schema::default(),
            filter_threshold: 0,
            single_pass: false,
            skip_bad: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub schemes: Vec<SplitScheme>,
    pub n_folds: usize,
    pub seeds: Vec<u64>,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self {
            schemes: SplitScheme::ALL.to_vec(),
            n_folds: 5,
            seeds: vec![0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Feature cache location; defaults to `{dir}/cache`.
    pub cache_dir: Option<PathBuf>,
    /// Also report the unsquared Pearson r next to r².
    pub report_r: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            cache_dir: None,
            report_r: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSection,
    pub features: FeaturizeConfig,
    pub split: SplitSection,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub output: OutputSection,
}

/// Sets dotted keys (`train.lambda=0.5`) in a TOML table. Values are read as
/// TOML literals when possible and as strings otherwise.
pub fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
        let path: Vec<&str> = key.trim().split('.').collect();
        if path.iter().any(|p| p.is_empty()) {
            return Err(Error::Config(format!("bad override key {key:?}")));
        }
        let raw = raw.trim();
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        let mut cur = &mut *table;
        for part in &path[..path.len() - 1] {
            let entry = cur
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            cur = entry
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("override {key:?}: {part:?} is not a section")))?;
        }
        cur.insert(path[path.len() - 1].to_string(), value);
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        apply_overrides(&mut table, overrides)?;
        let cfg: Self = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads a config file (or starts from defaults when `path` is `None`)
    /// and applies command-line overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            None => String::new(),
        };
        Self::from_toml(&text, overrides).map_err(|e| match (e, path) {
            (Error::Config(m), Some(p)) => Error::Config(format!("{}: {m}", p.display())),
            (e, _) => e,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks value ranges and that the input table exists.
    pub fn validate(&self) -> Result<()> {
        if !self.data.path.is_file() {
            return Err(Error::Config(format!(
                "data file {} does not exist",
                self.data.path.display()
            )));
        }
        self.validate_values()
    }

    /// Checks value ranges without touching the filesystem.
    pub fn validate_values(&self) -> Result<()> {
        self.features.ecfp().validate()?;
        if self.split.seeds.is_empty() {
            return Err(Error::Config("split.seeds must not be empty".into()));
        }
        if self.split.schemes.is_empty() {
            return Err(Error::Config("split.schemes must not be empty".into()));
        }
        if self.split.n_folds < 2 {
            return Err(Error::Config(format!(
                "split.n_folds must be at least 2, got {}",
                self.split.n_folds
            )));
        }
        if self.model.gconv_widths.is_empty() && self.model.variant.uses_graphconv() {
            return Err(Error::Config("model.gconv_widths must not be empty".into()));
        }
        self.train.validate()
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.output
            .cache_dir
            .clone()
            .unwrap_or_else(|| self.output.dir.join("cache"))
    }

    pub fn dataset_name(&self) -> String {
        self.data.name.clone().unwrap_or_else(|| {
            self.data
                .path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into())
        })
    }

    /// JSON echo embedded in every output artifact.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
