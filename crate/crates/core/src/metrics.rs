//! Confusion matrices, threshold scores and ROC analysis.

use serde::{Deserialize, Serialize};

use crate::csgm::CsgmModel;
use crate::dataset::EncodedDataset;
use crate::error::{Error, Result};

/// 2×2 counts. Rows of the printed matrix are actual 0 / actual 1, columns
/// predicted 0 / predicted 1: `[[tn, fp], [fn, tp]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tp: usize,
}

impl ConfusionMatrix {
    pub fn new(tn: usize, fp: usize, fn_: usize, tp: usize) -> Self {
        Self { tn, fp, fn_, tp }
    }

    pub fn total(&self) -> usize {
        self.tn + self.fp + self.fn_ + self.tp
    }

    pub fn as_rows(&self) -> [[usize; 2]; 2] {
        [[self.tn, self.fp], [self.fn_, self.tp]]
    }
}

pub fn confusion_matrix(predicted: &[u8], actual: &[u8]) -> Result<ConfusionMatrix> {
    if predicted.len() != actual.len() {
        return Err(Error::DimensionMismatch {
            expected: actual.len(),
            found: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::InvalidInput("no samples to evaluate".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &a) in predicted.iter().zip(actual) {
        match (p, a) {
            (0, 0) => cm.tn += 1,
            (1, 0) => cm.fp += 1,
            (0, 1) => cm.fn_ += 1,
            (1, 1) => cm.tp += 1,
            _ => return Err(Error::InvalidInput(format!("non-binary label pair ({p}, {a})"))),
        }
    }
    Ok(cm)
}

/// `(tn + tp) / total`; NaN for an empty matrix.
pub fn accuracy(cm: &ConfusionMatrix) -> f64 {
    (cm.tn + cm.tp) as f64 / cm.total() as f64
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// `tp / (tp + fp)`, `None` when nothing was predicted positive.
pub fn precision(cm: &ConfusionMatrix) -> Option<f64> {
    ratio(cm.tp, cm.tp + cm.fp)
}

/// `tp / (tp + fn)`, `None` when there are no actual positives.
pub fn recall(cm: &ConfusionMatrix) -> Option<f64> {
    ratio(cm.tp, cm.tp + cm.fn_)
}

/// Harmonic mean of precision and recall; `None` if either is undefined or
/// both are zero.
pub fn f1(cm: &ConfusionMatrix) -> Option<f64> {
    let (p, r) = (precision(cm)?, recall(cm)?);
    (p + r > 0.0).then(|| 2.0 * p * r / (p + r))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// Sorted by threshold, descending; first point (0, 0), last (1, 1).
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl RocCurve {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["threshold", "fpr", "tpr"])?;
        for p in &self.points {
            w.write_record([p.threshold.to_string(), p.fpr.to_string(), p.tpr.to_string()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Sweeps thresholds over the distinct scores plus one sentinel above the
/// maximum and one below the minimum. At threshold `t` a sample is predicted
/// positive iff `score > t`. AUC is the trapezoidal area of the polyline.
pub fn roc_curve(scores: &[f64], actual: &[u8]) -> Result<RocCurve> {
    if scores.len() != actual.len() {
        return Err(Error::DimensionMismatch {
            expected: actual.len(),
            found: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("non-finite score".into()));
    }
    let positives = actual.iter().filter(|&&a| a == 1).count();
    let negatives = actual.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let max = scores[order[0]];
    let min = scores[order[order.len() - 1]];
    let mut points = vec![RocPoint {
        threshold: max + 1.0,
        fpr: 0.0,
        tpr: 0.0,
    }];
    // Walking down the sorted scores, everything strictly above the current
    // distinct value has been counted as predicted positive.
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        points.push(RocPoint {
            threshold: t,
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
        });
        while i < order.len() && scores[order[i]] == t {
            if actual[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
    }
    points.push(RocPoint {
        threshold: min - 1.0,
        fpr: 1.0,
        tpr: 1.0,
    });
    let auc = points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum();
    Ok(RocCurve { points, auc })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterAccuracy {
    pub cluster: usize,
    pub label: u8,
    pub n: usize,
    pub zeros: usize,
    pub ones: usize,
    /// `None` when no sample was assigned to the cluster.
    pub accuracy: Option<f64>,
}

/// Hard-assigns every sample and reports, per cluster, the share of members
/// whose label equals the cluster label.
pub fn per_cluster_accuracy(model: &CsgmModel, data: &EncodedDataset) -> Result<Vec<ClusterAccuracy>> {
    let assignments = model.assign_batch(data.features().view())?;
    let mut counts = vec![[0usize; 2]; model.n_components()];
    for (&k, &y) in assignments.iter().zip(data.labels()) {
        counts[k][y as usize] += 1;
    }
    Ok(counts
        .iter()
        .enumerate()
        .map(|(k, &[zeros, ones])| {
            let label = model.cluster_labels[k];
            let n = zeros + ones;
            let hits = if label == 1 { ones } else { zeros };
            ClusterAccuracy {
                cluster: k,
                label,
                n,
                zeros,
                ones,
                accuracy: ratio(hits, n),
            }
        })
        .collect())
}

/// Everything reported for one evaluated split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    /// `None` when the split holds a single class.
    pub auc: Option<f64>,
    pub per_cluster: Vec<ClusterAccuracy>,
}

pub fn evaluate(model: &CsgmModel, data: &EncodedDataset) -> Result<EvaluationReport> {
    let scores = model.posterior_batch(data.features().view())?;
    let predicted: Vec<u8> = scores.iter().map(|&p| u8::from(p > model.decision_boundary)).collect();
    let confusion = confusion_matrix(&predicted, data.labels())?;
    let auc = match roc_curve(&scores, data.labels()) {
        Ok(c) => Some(c.auc),
        Err(Error::SingleClass) => None,
        Err(e) => return Err(e),
    };
    Ok(EvaluationReport {
        accuracy: accuracy(&confusion),
        precision: precision(&confusion),
        recall: recall(&confusion),
        f1: f1(&confusion),
        auc,
        per_cluster: per_cluster_accuracy(model, data)?,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_inverted() {
        let cm = confusion_matrix(&[1, 1, 0], &[1, 1, 0]).unwrap();
        assert_eq!(cm, ConfusionMatrix::new(1, 0, 0, 2));
        assert_eq!((precision(&cm), recall(&cm), f1(&cm)), (Some(1.0), Some(1.0), Some(1.0)));
        let inv = confusion_matrix(&[0, 0, 1], &[1, 1, 0]).unwrap();
        assert_eq!((inv.tn, inv.tp), (0, 0));
        assert!(confusion_matrix(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn layout_matches_rows() {
        let cm = ConfusionMatrix::new(307, 151, 56, 402);
        assert_eq!(cm.as_rows(), [[307, 151], [56, 402]]);
        assert_eq!(cm.total(), 916);
        let json = serde_json::to_value(cm).unwrap();
        assert_eq!(json["fn"], 56);
    }

    #[test]
    fn undefined_scores() {
        let cm = ConfusionMatrix::new(3, 2, 4, 0);
        assert_eq!(precision(&cm), Some(0.0));
        assert_eq!(recall(&cm), Some(0.0));
        assert_eq!(f1(&cm), None);
        let none_predicted = ConfusionMatrix::new(3, 0, 4, 0);
        assert_eq!(precision(&none_predicted), None);
    }

    #[test]
    fn roc_extremes() {
        let perfect = roc_curve(&[0.9, 0.8, 0.3, 0.1], &[1, 1, 0, 0]).unwrap();
        assert_eq!(perfect.auc, 1.0);
        let flat = roc_curve(&[0.5; 4], &[1, 0, 1, 0]).unwrap();
        assert_eq!(flat.auc, 0.5);
        let corners: Vec<(f64, f64)> = flat.points.iter().map(|p| (p.fpr, p.tpr)).collect();
        assert_eq!(corners.first(), Some(&(0.0, 0.0)));
        assert_eq!(corners.last(), Some(&(1.0, 1.0)));
        assert!(corners.iter().all(|c| *c == (0.0, 0.0) || *c == (1.0, 1.0)));
    }

    #[test]
    fn roc_small_case() {
        let c = roc_curve(&[0.9, 0.4, 0.35, 0.8], &[1, 0, 1, 1]).unwrap();
        assert!((c.auc - 2.0 / 3.0).abs() < 1e-15);
        assert!(c.points.windows(2).all(|w| w[0].threshold > w[1].threshold));
    }

    #[test]
    fn roc_point_at_threshold_matches_strict_prediction() {
        let scores = [0.2, 0.5, 0.5, 0.7, 0.9, 0.1];
        let actual = [0, 1, 0, 1, 1, 0];
        let c = roc_curve(&scores, &actual).unwrap();
        let at = c.points.iter().find(|p| p.threshold == 0.5).unwrap();
        let predicted: Vec<u8> = scores.iter().map(|&s| u8::from(s > 0.5)).collect();
        let cm = confusion_matrix(&predicted, &actual).unwrap();
        assert_eq!(at.tpr, recall(&cm).unwrap());
        assert_eq!(at.fpr, cm.fp as f64 / 3.0);
    }

    #[test]
    fn roc_single_class() {
        assert!(matches!(roc_curve(&[0.1, 0.2], &[1, 1]), Err(Error::SingleClass)));
    }

    #[test]
    fn roc_csv_header() {
        let c = roc_curve(&[0.9, 0.1], &[1, 0]).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("threshold,fpr,tpr\n"));
        assert_eq!(text.lines().count(), 1 + c.points.len());
    }
}
