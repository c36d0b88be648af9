//! Published scores for the three bundled datasets. These numbers are
//! external: they were reported for the original study and are shown next to
//! this implementation's results, never computed by it.

use csgm_core::ConfusionMatrix;
use serde::{Deserialize, Serialize};

use crate::config::DatasetName;

const SCORES_CSV: &str = include_str!("../reference/published_scores.csv");
const CONFUSION_CSV: &str = include_str!("../reference/published_confusion.csv");

/// Percentages as printed: accuracy with two decimals, the rest rounded to
/// whole percent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublishedScore {
    pub dataset: DatasetName,
    pub model: String,
    pub split: String,
    pub accuracy: f64,
    pub auc: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
struct ConfusionRecord {
    dataset: DatasetName,
    split: String,
    tn: usize,
    fp: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    tp: usize,
}

pub fn published_scores() -> Vec<PublishedScore> {
    csv::Reader::from_reader(SCORES_CSV.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .expect("bundled score table is well formed")
}

pub fn published_scores_for(dataset: DatasetName) -> Vec<PublishedScore> {
    published_scores().into_iter().filter(|s| s.dataset == dataset).collect()
}

/// Confusion matrices of the mixture classifier as published, keyed by
/// dataset and split (`train` / `test`).
pub fn published_confusion() -> Vec<(DatasetName, String, ConfusionMatrix)> {
    csv::Reader::from_reader(CONFUSION_CSV.as_bytes())
        .deserialize::<ConfusionRecord>()
        .map(|r| {
            let r = r.expect("bundled confusion table is well formed");
            (r.dataset, r.split, ConfusionMatrix::new(r.tn, r.fp, r.fn_, r.tp))
        })
        .collect()
}
