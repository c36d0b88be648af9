//! Experiment configuration: a TOML file, overridden field by field by
//! command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use csgm_core::baseline::LogisticConfig;
use csgm_core::csgm::DEFAULT_BOUNDARY;
use csgm_core::dataset::{Delimiter, FieldDecl, DEFAULT_MISSING_TOKEN};
use csgm_core::{Criterion, EmConfig, Encoding, Schema, SelectionSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CONFIG_FILE_NAME: &str = "dataset.toml";
pub const SNAPSHOT_FILE_NAME: &str = "effective_config.toml";
pub const DEFAULT_TRAIN_FRACTION: f64 = 2.0 / 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DatasetName {
    German,
    Australian,
    Japanese,
    Custom,
}

impl DatasetName {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetName::German => "german",
            DatasetName::Australian => "australian",
            DatasetName::Japanese => "japanese",
            DatasetName::Custom => "custom",
        }
    }
}

impl fmt::Display for DatasetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Inclusive range of candidate component counts, written `MIN:MAX`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComponentRange {
    pub min: usize,
    pub max: usize,
}

impl FromStr for ComponentRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("expected MIN:MAX, got `{s}`"))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("`{t}` is not a non-negative integer"))
        };
        let (min, max) = (parse(a)?, parse(b)?);
        if min == 0 || max < min {
            return Err(format!("range {min}:{max} must satisfy 1 <= MIN <= MAX"));
        }
        Ok(Self { min, max })
    }
}

impl fmt::Display for ComponentRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.min, self.max)
    }
}

impl Serialize for ComponentRange {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ComponentRange {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub name: DatasetName,
    /// Relative paths are resolved against the config file's directory.
    pub path: PathBuf,
    pub delimiter: Delimiter,
    #[serde(default = "default_missing_token")]
    pub missing_token: String,
    pub positive_label: String,
    pub fields: Vec<FieldDecl>,
}

fn default_missing_token() -> String {
    DEFAULT_MISSING_TOKEN.to_owned()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    pub seed: Option<u64>,
    pub encoding: Option<Encoding>,
    pub smote: Option<bool>,
    pub standardize: Option<bool>,
    pub train_fraction: Option<f64>,
    pub criterion: Option<Criterion>,
    pub range: Option<ComponentRange>,
    pub boundary: Option<f64>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmSection {
    pub max_iter: Option<usize>,
    pub rel_tol: Option<f64>,
    pub reg_eps: Option<f64>,
    pub n_restarts: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticSection {
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub l2: Option<f64>,
}

/// On-disk layout of a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub dataset: DatasetSection,
    #[serde(default)]
    pub pipeline: PipelineSection,
    #[serde(default)]
    pub em: EmSection,
    #[serde(default)]
    pub logistic: LogisticSection,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: ConfigFile = toml::from_str(&text).map_err(|source| CliError::Config {
            path: path.to_owned(),
            source,
        })?;
        if cfg.dataset.path.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.dataset.path = base.join(&cfg.dataset.path);
        }
        Ok(cfg)
    }
}

/// Command-line values that replace config entries when present.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub dataset: Option<DatasetName>,
    pub config: Option<PathBuf>,
    pub data_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub smote: Option<bool>,
    pub criterion: Option<Criterion>,
    pub range: Option<ComponentRange>,
    pub boundary: Option<f64>,
    pub encoding: Option<Encoding>,
    pub no_standardize: bool,
    pub out: Option<PathBuf>,
}

/// Fully resolved settings of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub dataset: DatasetName,
    pub data_path: PathBuf,
    pub schema: Schema,
    pub missing_token: String,
    pub encoding: Encoding,
    pub smote: bool,
    pub standardize: bool,
    pub train_fraction: f64,
    pub selection: SelectionSpec,
    pub boundary: f64,
    /// Its `seed` equals `seed`.
    pub em: EmConfig,
    pub logistic: LogisticConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// Directory holding `<name>/dataset.toml` for the bundled datasets: the
/// explicit flag, then `CSGM_DATA_DIR`, then `./data` if it has the dataset,
/// then the copy shipped with the sources.
pub fn data_dir(explicit: Option<&Path>, name: DatasetName) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_owned();
    }
    if let Some(p) = std::env::var_os("CSGM_DATA_DIR") {
        return PathBuf::from(p);
    }
    let local = PathBuf::from("data");
    if bundled_config_path(name, &local).is_file() {
        return local;
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn bundled_config_path(name: DatasetName, data_dir: &Path) -> PathBuf {
    data_dir.join(name.as_str()).join(CONFIG_FILE_NAME)
}

impl PipelineConfig {
    pub fn resolve(ov: &Overrides) -> CliResult<Self> {
        let path = match (&ov.config, ov.dataset) {
            (Some(p), _) => p.clone(),
            (None, Some(DatasetName::Custom)) => {
                return Err(CliError::Usage("--dataset custom requires --config".into()));
            }
            (None, Some(name)) => bundled_config_path(name, &data_dir(ov.data_dir.as_deref(), name)),
            (None, None) => return Err(CliError::Usage("one of --dataset or --config is required".into())),
        };
        let file = ConfigFile::load(&path)?;
        Self::from_file(file, ov)
    }

    pub fn from_file(file: ConfigFile, ov: &Overrides) -> CliResult<Self> {
        let p = &file.pipeline;
        let seed = ov
            .seed
            .or(p.seed)
            .ok_or_else(|| CliError::Usage("a seed is required (--seed or pipeline.seed)".into()))?;
        let range = ov.range.or(p.range).unwrap_or(ComponentRange { min: 1, max: 12 });
        let boundary = ov.boundary.or(p.boundary).unwrap_or(DEFAULT_BOUNDARY);
        if !(0.0..=1.0).contains(&boundary) {
            return Err(CliError::Usage(format!("boundary {boundary} is outside [0, 1]")));
        }
        let train_fraction = p.train_fraction.unwrap_or(DEFAULT_TRAIN_FRACTION);
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(CliError::Usage(format!("train_fraction {train_fraction} is outside (0, 1)")));
        }
        let defaults = EmConfig::default();
        let em = EmConfig {
            max_iter: file.em.max_iter.unwrap_or(defaults.max_iter),
            rel_tol: file.em.rel_tol.unwrap_or(defaults.rel_tol),
            reg_eps: file.em.reg_eps.unwrap_or(defaults.reg_eps),
            n_restarts: file.em.n_restarts.unwrap_or(defaults.n_restarts),
            seed,
            ..defaults
        };
        em.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let lr = LogisticConfig::default();
        let logistic = LogisticConfig {
            epochs: file.logistic.epochs.unwrap_or(lr.epochs),
            learning_rate: file.logistic.learning_rate.unwrap_or(lr.learning_rate),
            l2: file.logistic.l2.unwrap_or(lr.l2),
            seed: None,
        };
        let d = file.dataset;
        let dataset = ov.dataset.unwrap_or(d.name);
        let schema = Schema {
            delimiter: d.delimiter,
            positive_label: d.positive_label,
            fields: d.fields,
        };
        let out_dir = ov
            .out
            .clone()
            .or_else(|| p.out.clone())
            .unwrap_or_else(|| PathBuf::from(format!("out/{dataset}-seed{seed}")));
        Ok(Self {
            dataset,
            data_path: d.path,
            schema,
            missing_token: d.missing_token,
            encoding: ov.encoding.or(p.encoding).unwrap_or(Encoding::Dummy),
            smote: ov.smote.or(p.smote).unwrap_or(false),
            standardize: !ov.no_standardize && p.standardize.unwrap_or(true),
            train_fraction,
            selection: SelectionSpec {
                min: range.min,
                max: range.max,
                criterion: ov.criterion.or(p.criterion).unwrap_or_default(),
            },
            boundary,
            em,
            logistic,
            seed,
            out_dir,
        })
    }

    /// The settings in config-file form; loading the result reproduces the run.
    pub fn to_file(&self) -> ConfigFile {
        ConfigFile {
            dataset: DatasetSection {
                name: self.dataset,
                path: self.data_path.clone(),
                delimiter: self.schema.delimiter,
                missing_token: self.missing_token.clone(),
                positive_label: self.schema.positive_label.clone(),
                fields: self.schema.fields.clone(),
            },
            pipeline: PipelineSection {
                seed: Some(self.seed),
                encoding: Some(self.encoding),
                smote: Some(self.smote),
                standardize: Some(self.standardize),
                train_fraction: Some(self.train_fraction),
                criterion: Some(self.selection.criterion),
                range: Some(ComponentRange {
                    min: self.selection.min,
                    max: self.selection.max,
                }),
                boundary: Some(self.boundary),
                out: Some(self.out_dir.clone()),
            },
            em: EmSection {
                max_iter: Some(self.em.max_iter),
                rel_tol: Some(self.em.rel_tol),
                reg_eps: Some(self.em.reg_eps),
                n_restarts: Some(self.em.n_restarts),
            },
            logistic: LogisticSection {
                epochs: Some(self.logistic.epochs),
                learning_rate: Some(self.logistic.learning_rate),
                l2: Some(self.logistic.l2),
            },
        }
    }

    pub fn snapshot_toml(&self) -> String {
        toml::to_string(&self.to_file()).expect("config is always representable as TOML")
    }
}
