//! The data path shared by every command: load → drop incomplete rows →
//! encode → split → standardize, plus the oversampled training set.

use csgm_core::dataset::{self, Encoder, Standardization};
use csgm_core::resample::smote_balance;
use csgm_core::{EncodedDataset, SmoteConfig, SplitSpec};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::CliResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ClassCounts {
    pub rows: usize,
    pub zeros: usize,
    pub ones: usize,
}

impl ClassCounts {
    fn of(data: &EncodedDataset) -> Self {
        let [zeros, ones] = data.class_counts();
        Self {
            rows: zeros + ones,
            zeros,
            ones,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Prepared {
    pub loaded: ClassCounts,
    pub complete: ClassCounts,
    pub encoder: Encoder,
    /// Standardized when the run asks for it.
    pub train: EncodedDataset,
    pub test: EncodedDataset,
}

/// Counts reported by `prepare`.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub dataset: String,
    pub loaded: ClassCounts,
    pub dropped_missing: usize,
    pub complete: ClassCounts,
    pub n_features: usize,
    pub encoding: csgm_core::Encoding,
    pub standardized: bool,
    pub constant_columns: Vec<String>,
    pub train: ClassCounts,
    pub test: ClassCounts,
    /// Training set after oversampling; absent when oversampling is off.
    pub train_oversampled: Option<ClassCounts>,
}

fn label_counts(table: &csgm_core::RawTable) -> ClassCounts {
    let ones = table.positive_count();
    ClassCounts {
        rows: table.n_rows(),
        zeros: table.n_rows() - ones,
        ones,
    }
}

pub fn smote_config(cfg: &PipelineConfig) -> Option<SmoteConfig> {
    cfg.smote.then(|| SmoteConfig::new(cfg.seed))
}

pub fn prepare(cfg: &PipelineConfig) -> CliResult<Prepared> {
    let raw = dataset::load_csv(&cfg.data_path, &cfg.schema, &cfg.missing_token).map_err(|e| e.in_stage("loading"))?;
    let complete = dataset::drop_missing(&raw).map_err(|e| e.in_stage("missing-value removal"))?;
    let dropped = raw.n_rows() - complete.n_rows();
    if dropped > 0 {
        log::info!("dropped {dropped} rows with missing values");
    }
    let encoder = Encoder::fit(&complete, cfg.encoding).map_err(|e| e.in_stage("encoding"))?;
    let encoded = encoder.transform(&complete).map_err(|e| e.in_stage("encoding"))?;
    let spec = SplitSpec::new(cfg.train_fraction, cfg.seed).map_err(|e| e.in_stage("split"))?;
    let (train, test) = dataset::train_test_split(&encoded, spec).map_err(|e| e.in_stage("split"))?;
    let (train, test) = if cfg.standardize {
        dataset::standardize_fit_apply(&train, &test).map_err(|e| e.in_stage("standardization"))?
    } else {
        (train, test)
    };
    Ok(Prepared {
        loaded: label_counts(&raw),
        complete: label_counts(&complete),
        encoder,
        train,
        test,
    })
}

impl Prepared {
    /// Rows the mixture is fitted on: the training split, oversampled when
    /// the run asks for it.
    pub fn fitting_set(&self, cfg: &PipelineConfig) -> CliResult<EncodedDataset> {
        Ok(match smote_config(cfg) {
            Some(s) => smote_balance(&self.train, &s).map_err(|e| e.in_stage("oversampling"))?,
            None => self.train.clone(),
        })
    }

    pub fn summary(&self, cfg: &PipelineConfig, fitting_set: Option<&EncodedDataset>) -> Summary {
        let constant_columns = self
            .train
            .standardization()
            .map(|s: &Standardization| {
                s.constant
                    .iter()
                    .zip(self.train.feature_names())
                    .filter(|(&c, _)| c)
                    .map(|(_, n)| n.clone())
                    .collect()
            })
            .unwrap_or_default();
        Summary {
            dataset: cfg.dataset.to_string(),
            loaded: self.loaded,
            dropped_missing: self.loaded.rows - self.complete.rows,
            complete: self.complete,
            n_features: self.train.n_features(),
            encoding: cfg.encoding,
            standardized: cfg.standardize,
            constant_columns,
            train: ClassCounts::of(&self.train),
            test: ClassCounts::of(&self.test),
            train_oversampled: fitting_set.map(ClassCounts::of),
        }
    }
}
