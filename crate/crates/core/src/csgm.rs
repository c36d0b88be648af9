//! Credit scoring with a Gaussian mixture: clusters found without labels are
//! turned into a binary classifier.
//!
//! 1. every sample gets dependency probabilities over the clusters and is
//!    assigned to the most probable one;
//! 2. each cluster records the share `r*(1|z_k)` of good-credit training
//!    members and is labeled good when that share exceeds one half;
//! 3. a sample's probability of good credit is `Σ_k r*(1|z_k) p(x ∈ z_k)`;
//! 4. the sample is labeled good when that probability exceeds the decision
//!    boundary `D`.
//!
//! Ratios and `D` are frozen after training; scoring new samples only repeats
//! steps 1 and 4.

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::{EncodedDataset, Standardization};
use crate::error::{Error, Result};
use crate::gmm::{e_step, select_components, Criterion, CriterionRow, EmConfig, FitReport, GmmParams};
use crate::metrics::{accuracy, confusion_matrix};
use crate::resample::{smote_balance, SmoteConfig};

pub const DEFAULT_BOUNDARY: f64 = 0.5;

/// A fitted classifier. Everything needed to score an encoded applicant
/// record offline is stored here.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsgmModel {
    pub gmm: GmmParams,
    /// `r*(1|z_k)` per cluster.
    pub ratio_good: Vec<f64>,
    pub cluster_labels: Vec<u8>,
    pub decision_boundary: f64,
    /// `[count of label 0, count of label 1]` among training members.
    pub cluster_counts: Vec<[usize; 2]>,
    /// Clusters that received no training member; their ratio is the global
    /// positive rate.
    pub empty_clusters: Vec<bool>,
    pub feature_names: Vec<String>,
    pub standardization: Option<Standardization>,
    pub seed: u64,
}

/// `p(x ∈ z_k)` for every cluster.
pub fn dependency_probabilities(x: ArrayView1<f64>, gmm: &GmmParams) -> Result<Array1<f64>> {
    gmm.responsibilities(x)
}

/// Index of the largest probability; exact ties go to the lowest index.
pub fn assign_cluster(probs: &[f64]) -> Result<usize> {
    let (first, rest) = probs
        .split_first()
        .ok_or_else(|| Error::InvalidInput("empty probability vector".into()))?;
    let mut best = (0, *first);
    for (i, &p) in rest.iter().enumerate() {
        if p > best.1 {
            best = (i + 1, p);
        }
    }
    Ok(best.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterLabeling {
    pub ratio_good: Vec<f64>,
    pub cluster_labels: Vec<u8>,
    pub cluster_counts: Vec<[usize; 2]>,
    pub empty_clusters: Vec<bool>,
}

/// Per-cluster good-credit ratios and labels from hard assignments. A cluster
/// is labeled 1 only when its ratio is strictly above one half.
pub fn label_clusters(assignments: &[usize], labels: &[u8], n_components: usize) -> Result<ClusterLabeling> {
    if n_components == 0 {
        return Err(Error::InvalidInput("need at least one cluster".into()));
    }
    if assignments.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: assignments.len(),
            found: labels.len(),
        });
    }
    let mut counts = vec![[0usize; 2]; n_components];
    for (&a, &y) in assignments.iter().zip(labels) {
        if a >= n_components || y > 1 {
            return Err(Error::InvalidInput(format!("assignment {a} / label {y} out of range")));
        }
        counts[a][y as usize] += 1;
    }
    let positives = labels.iter().filter(|&&y| y == 1).count();
    let prior = if labels.is_empty() { 0.5 } else { positives as f64 / labels.len() as f64 };
    let mut ratio_good = Vec::with_capacity(n_components);
    let mut empty = Vec::with_capacity(n_components);
    for [zeros, ones] in &counts {
        let n = zeros + ones;
        if n == 0 {
            ratio_good.push(prior);
            empty.push(true);
        } else {
            ratio_good.push(*ones as f64 / n as f64);
            empty.push(false);
        }
    }
    if empty.iter().any(|&e| e) {
        log::warn!("{} cluster(s) without training members use the prior {prior:.4}", empty.iter().filter(|&&e| e).count());
    }
    Ok(ClusterLabeling {
        cluster_labels: ratio_good.iter().map(|&r| u8::from(r > 0.5)).collect(),
        ratio_good,
        cluster_counts: counts,
        empty_clusters: empty,
    })
}

impl CsgmModel {
    pub fn n_components(&self) -> usize {
        self.gmm.n_components()
    }

    /// Same model with another decision boundary.
    pub fn with_boundary(&self, boundary: f64) -> Result<Self> {
        check_boundary(boundary)?;
        Ok(Self {
            decision_boundary: boundary,
            ..self.clone()
        })
    }

    /// Dependency probabilities for every row.
    pub fn memberships(&self, data: ArrayView2<f64>) -> Result<ndarray::Array2<f64>> {
        Ok(e_step(data, &self.gmm)?.responsibilities)
    }

    /// `p(y = 1 | x)` for every row.
    pub fn posterior_batch(&self, data: ArrayView2<f64>) -> Result<Vec<f64>> {
        let ratio = Array1::from(self.ratio_good.clone());
        Ok(self
            .memberships(data)?
            .dot(&ratio)
            .iter()
            .map(|p| p.clamp(0.0, 1.0))
            .collect())
    }

    pub fn predict_batch(&self, data: ArrayView2<f64>) -> Result<Vec<u8>> {
        Ok(self
            .posterior_batch(data)?
            .into_iter()
            .map(|p| u8::from(p > self.decision_boundary))
            .collect())
    }

    /// Most probable cluster of every row.
    pub fn assign_batch(&self, data: ArrayView2<f64>) -> Result<Vec<usize>> {
        self.memberships(data)?
            .rows()
            .into_iter()
            .map(|r| assign_cluster(r.as_slice().expect("standard layout")))
            .collect()
    }

    /// Label of the most probable cluster of every row.
    pub fn predict_hard_batch(&self, data: ArrayView2<f64>) -> Result<Vec<u8>> {
        Ok(self
            .assign_batch(data)?
            .into_iter()
            .map(|k| self.cluster_labels[k])
            .collect())
    }
}

/// `p(y = 1 | x) = Σ_k r*(1|z_k) · p(x ∈ z_k)`.
pub fn posterior_good(x: ArrayView1<f64>, model: &CsgmModel) -> Result<f64> {
    let probs = dependency_probabilities(x, &model.gmm)?;
    let p: f64 = probs.iter().zip(&model.ratio_good).map(|(p, r)| p * r).sum();
    Ok(p.clamp(0.0, 1.0))
}

/// 1 when `p(y = 1 | x)` is strictly above the decision boundary.
pub fn predict(x: ArrayView1<f64>, model: &CsgmModel) -> Result<u8> {
    Ok(u8::from(posterior_good(x, model)? > model.decision_boundary))
}

fn check_boundary(boundary: f64) -> Result<()> {
    if (0.0..=1.0).contains(&boundary) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("decision boundary {boundary} is outside [0, 1]")))
    }
}

/// Candidate component counts and the criterion used to choose among them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionSpec {
    pub min: usize,
    pub max: usize,
    pub criterion: Criterion,
}

impl Default for SelectionSpec {
    fn default() -> Self {
        Self {
            min: 1,
            max: 12,
            criterion: Criterion::Bic,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CsgmFit {
    pub model: CsgmModel,
    pub report: FitReport,
    pub selection_table: Vec<CriterionRow>,
    /// Training rows as seen by EM (after oversampling, if any).
    pub training_set: EncodedDataset,
    /// Soft-label accuracy on `training_set` at the stored boundary.
    pub train_accuracy: f64,
}

/// Oversampling (optional) → component selection → EM at the chosen count →
/// hard assignment of the training rows → cluster labeling.
pub fn fit_csgm(
    train: &EncodedDataset,
    em_cfg: &EmConfig,
    selection: &SelectionSpec,
    smote: Option<&SmoteConfig>,
    boundary: f64,
) -> Result<CsgmFit> {
    check_boundary(boundary)?;
    em_cfg.validate()?;
    let training_set = match smote {
        Some(cfg) => smote_balance(train, cfg).map_err(|e| e.in_stage("oversampling"))?,
        None => train.clone(),
    };
    let data = training_set.features().view();
    let chosen = select_components(data, (selection.min, selection.max), em_cfg, selection.criterion)
        .map_err(|e| e.in_stage("component selection"))?;
    let gmm = chosen.params;
    let memberships = e_step(data, &gmm).map_err(|e| e.in_stage("cluster assignment"))?;
    let assignments = memberships
        .responsibilities
        .rows()
        .into_iter()
        .map(|r| assign_cluster(r.as_slice().expect("standard layout")))
        .collect::<Result<Vec<_>>>()?;
    let labeling = label_clusters(&assignments, training_set.labels(), gmm.n_components())
        .map_err(|e| e.in_stage("cluster labeling"))?;
    let model = CsgmModel {
        gmm,
        ratio_good: labeling.ratio_good,
        cluster_labels: labeling.cluster_labels,
        decision_boundary: boundary,
        cluster_counts: labeling.cluster_counts,
        empty_clusters: labeling.empty_clusters,
        feature_names: training_set.feature_names().to_vec(),
        standardization: training_set.standardization().cloned(),
        seed: em_cfg.seed,
    };
    let predicted = model.predict_batch(data).map_err(|e| e.in_stage("training evaluation"))?;
    let cm = confusion_matrix(&predicted, training_set.labels())?;
    Ok(CsgmFit {
        model,
        report: chosen.report,
        selection_table: chosen.table,
        train_accuracy: accuracy(&cm),
        training_set,
    })
}
