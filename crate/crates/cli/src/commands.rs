//! One function per subcommand. Each writes its files into the run's output
//! directory together with `effective_config.toml`, and returns what it wrote
//! so callers can inspect results without re-reading files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use csgm_core::baseline::{fit_logistic, LogisticModel};
use csgm_core::gmm::{select_components, write_criterion_csv, CriterionRow};
use csgm_core::metrics::{self, evaluate, per_cluster_accuracy, roc_curve, EvaluationReport};
use csgm_core::{fit_csgm, json, ConfusionMatrix, CsgmFit, CsgmModel, EncodedDataset, FitReport, RocCurve};
use serde::Serialize;

use crate::config::{PipelineConfig, SNAPSHOT_FILE_NAME};
use crate::error::{CliError, CliResult};
use crate::pipeline::{prepare, smote_config, ClassCounts, Prepared, Summary};
use crate::reference::published_scores_for;

pub const MODEL_FILE: &str = "model.json";
pub const FIT_REPORT_FILE: &str = "fit_report.json";
pub const SELECTION_FILE: &str = "selection.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = json::to_string(value)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

fn write_with<F>(path: &Path, f: F) -> CliResult<()>
where
    F: FnOnce(&mut Vec<u8>) -> csgm_core::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    write_bytes(path, &buf)
}

/// Creates the output directory and writes the config snapshot into it.
fn start_run(cfg: &PipelineConfig) -> CliResult<PathBuf> {
    let dir = cfg.out_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    write_bytes(&dir.join(SNAPSHOT_FILE_NAME), cfg.snapshot_toml().as_bytes())?;
    Ok(dir)
}

fn pct(x: Option<f64>) -> String {
    x.map(|v| format!("{:.2}%", 100.0 * v)).unwrap_or_else(|| "n/a".into())
}

/// Writes `train.csv`, `test.csv`, `train_oversampled.csv` (when
/// oversampling), `encoder.json` and `summary.json`.
pub fn cmd_prepare(cfg: &PipelineConfig) -> CliResult<Summary> {
    let dir = start_run(cfg)?;
    let prepared = prepare(cfg)?;
    write_with(&dir.join("train.csv"), |w| prepared.train.write_csv(w))?;
    write_with(&dir.join("test.csv"), |w| prepared.test.write_csv(w))?;
    let oversampled = match cfg.smote {
        true => {
            let set = prepared.fitting_set(cfg)?;
            write_with(&dir.join("train_oversampled.csv"), |w| set.write_csv(w))?;
            Some(set)
        }
        false => None,
    };
    write_json(&dir.join("encoder.json"), &prepared.encoder)?;
    let summary = prepared.summary(cfg, oversampled.as_ref());
    write_json(&dir.join("summary.json"), &summary)?;
    println!(
        "{}: {} rows loaded ({} labeled 0, {} labeled 1), {} after dropping incomplete rows, d = {}",
        summary.dataset,
        summary.loaded.rows,
        summary.loaded.zeros,
        summary.loaded.ones,
        summary.complete.rows,
        summary.n_features
    );
    println!(
        "train {} ({} / {}), test {} ({} / {})",
        summary.train.rows, summary.train.zeros, summary.train.ones, summary.test.rows, summary.test.zeros, summary.test.ones
    );
    if let Some(o) = summary.train_oversampled {
        println!("train after oversampling {} ({} / {})", o.rows, o.zeros, o.ones);
    }
    Ok(summary)
}

#[derive(Clone, Debug)]
pub struct SelectOutcome {
    pub chosen: usize,
    pub table: Vec<CriterionRow>,
}

/// Writes `selection.csv` and prints the chosen component count.
pub fn cmd_select(cfg: &PipelineConfig) -> CliResult<SelectOutcome> {
    let dir = start_run(cfg)?;
    let prepared = prepare(cfg)?;
    let set = prepared.fitting_set(cfg)?;
    let sel = &cfg.selection;
    let s = select_components(set.features().view(), (sel.min, sel.max), &cfg.em, sel.criterion)
        .map_err(|e| e.in_stage("component selection"))?;
    write_with(&dir.join(SELECTION_FILE), |w| write_criterion_csv(&s.table, w))?;
    println!("chosen number of components: {} ({})", s.chosen, s.criterion);
    Ok(SelectOutcome {
        chosen: s.chosen,
        table: s.table,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterSummary {
    pub cluster: usize,
    pub label: u8,
    pub ratio_good: f64,
    pub empty: bool,
    pub train_zeros: usize,
    pub train_ones: usize,
    pub test_zeros: usize,
    pub test_ones: usize,
}

/// Contents of `fit_report.json`.
#[derive(Clone, Debug, Serialize)]
pub struct TrainReport {
    pub dataset: String,
    pub seed: u64,
    pub criterion: String,
    pub chosen_components: usize,
    pub selection: Vec<CriterionRow>,
    pub em: FitReport,
    pub fitting_set: ClassCounts,
    pub train_accuracy: f64,
    pub clusters: Vec<ClusterSummary>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub fit: CsgmFit,
    pub report: TrainReport,
}

fn train_on(cfg: &PipelineConfig, prepared: &Prepared) -> CliResult<CsgmFit> {
    let smote = smote_config(cfg);
    Ok(fit_csgm(&prepared.train, &cfg.em, &cfg.selection, smote.as_ref(), cfg.boundary)?)
}

/// Writes `model.json`, `fit_report.json` and `selection.csv`.
pub fn cmd_train(cfg: &PipelineConfig) -> CliResult<TrainOutcome> {
    let dir = start_run(cfg)?;
    let prepared = prepare(cfg)?;
    let fit = train_on(cfg, &prepared)?;
    let test_counts = per_cluster_accuracy(&fit.model, &prepared.test)?;
    let model = &fit.model;
    let clusters = (0..model.n_components())
        .map(|k| ClusterSummary {
            cluster: k,
            label: model.cluster_labels[k],
            ratio_good: model.ratio_good[k],
            empty: model.empty_clusters[k],
            train_zeros: model.cluster_counts[k][0],
            train_ones: model.cluster_counts[k][1],
            test_zeros: test_counts[k].zeros,
            test_ones: test_counts[k].ones,
        })
        .collect();
    let [zeros, ones] = fit.training_set.class_counts();
    let report = TrainReport {
        dataset: cfg.dataset.to_string(),
        seed: cfg.seed,
        criterion: cfg.selection.criterion.to_string(),
        chosen_components: model.n_components(),
        selection: fit.selection_table.clone(),
        em: fit.report.clone(),
        fitting_set: ClassCounts {
            rows: zeros + ones,
            zeros,
            ones,
        },
        train_accuracy: fit.train_accuracy,
        clusters,
    };
    write_json(&dir.join(MODEL_FILE), model)?;
    write_json(&dir.join(FIT_REPORT_FILE), &report)?;
    write_with(&dir.join(SELECTION_FILE), |w| write_criterion_csv(&fit.selection_table, w))?;
    println!(
        "{} components ({}), train accuracy {}, EM {} iterations (converged: {})",
        report.chosen_components,
        report.criterion,
        pct(Some(report.train_accuracy)),
        fit.report.iterations,
        fit.report.converged
    );
    Ok(TrainOutcome { fit, report })
}

pub fn load_model(path: &Path) -> CliResult<CsgmModel> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(serde_json::from_str(&text).map_err(csgm_core::Error::from)?)
}

/// The split a stored model is scored on; `train` means the rows the model
/// was fitted on, including synthetic ones.
fn split_data(cfg: &PipelineConfig, model: &CsgmModel, split: Split) -> CliResult<EncodedDataset> {
    let prepared = prepare(cfg)?;
    if prepared.train.feature_names() != model.feature_names.as_slice() {
        return Err(CliError::Data(format!(
            "model features ({}) do not match the prepared data ({})",
            model.feature_names.len(),
            prepared.train.n_features()
        )));
    }
    match split {
        Split::Train => prepared.fitting_set(cfg),
        Split::Test => Ok(prepared.test),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitReport {
    pub split: Split,
    pub n: usize,
    pub boundary: f64,
    #[serde(flatten)]
    pub report: EvaluationReport,
}

/// Writes `report_<split>.json`. `boundary` replaces the model's stored
/// decision boundary when given.
pub fn cmd_evaluate(cfg: &PipelineConfig, model_path: &Path, split: Split, boundary: Option<f64>) -> CliResult<SplitReport> {
    let dir = start_run(cfg)?;
    let mut model = load_model(model_path)?;
    if let Some(d) = boundary {
        model = model.with_boundary(d)?;
    }
    let data = split_data(cfg, &model, split)?;
    let report = SplitReport {
        split,
        n: data.n_samples(),
        boundary: model.decision_boundary,
        report: evaluate(&model, &data)?,
    };
    write_json(&dir.join(format!("report_{}.json", split.as_str())), &report)?;
    let r = &report.report;
    let c = &r.confusion;
    println!("{} set, n = {}, D = {}", split.as_str(), report.n, report.boundary);
    println!("confusion [[tn fp] [fn tp]] = [[{} {}] [{} {}]]", c.tn, c.fp, c.fn_, c.tp);
    println!(
        "accuracy {}  precision {}  recall {}  F1 {}  AUC {}",
        pct(Some(r.accuracy)),
        pct(r.precision),
        pct(r.recall),
        pct(r.f1),
        pct(r.auc)
    );
    for cl in &r.per_cluster {
        println!(
            "  cluster {:>2}  label {}  n {:>4}  zeros {:>4}  ones {:>4}  accuracy {}",
            cl.cluster,
            cl.label,
            cl.n,
            cl.zeros,
            cl.ones,
            pct(cl.accuracy)
        );
    }
    Ok(report)
}

/// Writes `roc_<split>.csv` (threshold, fpr, tpr) for the posterior scores.
pub fn cmd_roc(cfg: &PipelineConfig, model_path: &Path, split: Split) -> CliResult<RocCurve> {
    let dir = start_run(cfg)?;
    let model = load_model(model_path)?;
    let data = split_data(cfg, &model, split)?;
    let scores = model.posterior_batch(data.features().view())?;
    let curve = roc_curve(&scores, data.labels())?;
    write_with(&dir.join(format!("roc_{}.csv", split.as_str())), |w| curve.write_csv(w))?;
    println!("{} points, AUC {:.4}", curve.points.len(), curve.auc);
    Ok(curve)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub model: String,
    pub split: String,
    /// `this-run` or `published` (external reference value).
    pub source: String,
    pub accuracy: f64,
    pub auc: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub confusion: Option<ConfusionMatrix>,
}

fn scored_row(model: &str, split: Split, scores: &[f64], boundary: f64, labels: &[u8]) -> CliResult<BenchmarkRow> {
    let predicted: Vec<u8> = scores.iter().map(|&p| u8::from(p > boundary)).collect();
    let cm = metrics::confusion_matrix(&predicted, labels)?;
    let auc = match roc_curve(scores, labels) {
        Ok(c) => Some(c.auc),
        Err(csgm_core::Error::SingleClass) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(BenchmarkRow {
        model: model.into(),
        split: split.as_str().into(),
        source: "this-run".into(),
        accuracy: metrics::accuracy(&cm),
        auc,
        precision: metrics::precision(&cm),
        recall: metrics::recall(&cm),
        f1: metrics::f1(&cm),
        confusion: Some(cm),
    })
}

fn logistic_scores(model: &LogisticModel, data: &EncodedDataset) -> CliResult<Vec<f64>> {
    Ok(model.predict_proba_batch(data.features().view())?)
}

/// Trains the mixture classifier and the logistic baseline on the same rows
/// and writes `benchmark.csv` / `benchmark.json` with published reference
/// values appended.
pub fn cmd_benchmark(cfg: &PipelineConfig) -> CliResult<Vec<BenchmarkRow>> {
    let dir = start_run(cfg)?;
    let prepared = prepare(cfg)?;
    let fit = train_on(cfg, &prepared)?;
    let logistic = fit_logistic(&fit.training_set, &cfg.logistic).map_err(|e| e.in_stage("logistic baseline"))?;
    let mut rows = Vec::new();
    for (split, data) in [(Split::Train, &fit.training_set), (Split::Test, &prepared.test)] {
        let csgm = fit.model.posterior_batch(data.features().view())?;
        rows.push(scored_row("csgm", split, &csgm, fit.model.decision_boundary, data.labels())?);
        let lr = logistic_scores(&logistic, data)?;
        rows.push(scored_row("logistic-regression", split, &lr, 0.5, data.labels())?);
    }
    for p in published_scores_for(cfg.dataset) {
        rows.push(BenchmarkRow {
            model: p.model,
            split: p.split,
            source: "published".into(),
            accuracy: p.accuracy / 100.0,
            auc: Some(p.auc / 100.0),
            precision: Some(p.precision / 100.0),
            recall: Some(p.recall / 100.0),
            f1: Some(p.f1 / 100.0),
            confusion: None,
        });
    }
    write_with(&dir.join("benchmark.csv"), |w| write_benchmark_csv(&rows, w))?;
    write_json(&dir.join("benchmark.json"), &rows)?;
    print_benchmark(&rows);
    Ok(rows)
}

pub fn write_benchmark_csv<W: Write>(rows: &[BenchmarkRow], out: W) -> csgm_core::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "split", "source", "accuracy", "auc", "precision", "recall", "f1"])?;
    let cell = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.split.clone(),
            r.source.clone(),
            format!("{}", r.accuracy),
            cell(r.auc),
            cell(r.precision),
            cell(r.recall),
            cell(r.f1),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn print_benchmark(rows: &[BenchmarkRow]) {
    println!(
        "{:<22} {:<6} {:<10} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "model", "split", "source", "accuracy", "auc", "precision", "recall", "f1"
    );
    for r in rows {
        println!(
            "{:<22} {:<6} {:<10} {:>9} {:>9} {:>9} {:>9} {:>9}",
            r.model,
            r.split,
            r.source,
            pct(Some(r.accuracy)),
            pct(r.auc),
            pct(r.precision),
            pct(r.recall),
            pct(r.f1)
        );
    }
}
