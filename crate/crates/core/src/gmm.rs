//! Full-covariance Gaussian mixtures fitted by Expectation-Maximization, with
//! AIC/BIC selection of the component count.
//!
//! All density work happens in log space. Responsibilities are normalized with
//! log-sum-exp before leaving log space, so the 60-odd dimensional dummy-encoded
//! inputs do not underflow.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, lower_triangular_inverse, mean_diagonal, regularized_cholesky};

/// Ridge escalation stops at this multiple of the base ridge (1e-6 → 1e-2).
const MAX_RIDGE_GROWTH: f64 = 1e4;
/// Base ridge, relative to the mean variance, for densities evaluated outside EM.
const DENSITY_RIDGE: f64 = 1e-6;
/// Components with less responsibility mass than this abort the restart.
pub const MIN_COMPONENT_MASS: f64 = 1e-10;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Mixture weights, component means and full covariance matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "GmmDocument", try_from = "GmmDocument")]
pub struct GmmParams {
    weights: Array1<f64>,
    means: Array2<f64>,
    covariances: Vec<Array2<f64>>,
}

#[derive(Serialize, Deserialize)]
struct GmmDocument {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covariances: Vec<Vec<Vec<f64>>>,
}

impl From<GmmParams> for GmmDocument {
    fn from(p: GmmParams) -> Self {
        let rows = |m: &Array2<f64>| m.axis_iter(Axis(0)).map(|r| r.to_vec()).collect::<Vec<_>>();
        Self {
            weights: p.weights.to_vec(),
            means: rows(&p.means),
            covariances: p.covariances.iter().map(rows).collect(),
        }
    }
}

fn matrix_from_rows(rows: Vec<Vec<f64>>, cols: usize) -> Result<Array2<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidInput("ragged matrix".into()));
    }
    Array2::from_shape_vec((n, cols), rows.into_iter().flatten().collect())
        .map_err(|e| Error::InvalidInput(e.to_string()))
}

impl TryFrom<GmmDocument> for GmmParams {
    type Error = Error;

    fn try_from(doc: GmmDocument) -> Result<Self> {
        let d = doc.means.first().map_or(0, Vec::len);
        let means = matrix_from_rows(doc.means, d)?;
        let covariances = doc
            .covariances
            .into_iter()
            .map(|c| matrix_from_rows(c, d))
            .collect::<Result<Vec<_>>>()?;
        GmmParams::new(Array1::from(doc.weights), means, covariances)
    }
}

impl GmmParams {
    pub fn new(weights: Array1<f64>, means: Array2<f64>, covariances: Vec<Array2<f64>>) -> Result<Self> {
        let k = weights.len();
        let d = means.ncols();
        if k == 0 || d == 0 {
            return Err(Error::InvalidInput("mixture needs at least one component and dimension".into()));
        }
        if means.nrows() != k || covariances.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: means.nrows().min(covariances.len()),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || (weights.sum() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput("weights must be non-negative and sum to 1".into()));
        }
        for cov in &covariances {
            if cov.dim() != (d, d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: cov.nrows(),
                });
            }
            for i in 0..d {
                for j in 0..i {
                    if (cov[[i, j]] - cov[[j, i]]).abs() > 1e-9 {
                        return Err(Error::InvalidInput("covariance is not symmetric".into()));
                    }
                }
            }
        }
        if means.iter().chain(covariances.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite mixture parameter".into()));
        }
        Ok(Self {
            weights,
            means,
            covariances,
        })
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn means(&self) -> &Array2<f64> {
        &self.means
    }

    pub fn covariances(&self) -> &[Array2<f64>] {
        &self.covariances
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.ncols()
    }

    /// `ln ω_k + ln φ(x_n | μ_k, Σ_k)` for every row and component.
    pub fn weighted_log_densities(&self, data: ArrayView2<f64>) -> Result<Array2<f64>> {
        if data.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: data.ncols(),
            });
        }
        let mut out = Array2::<f64>::zeros((data.nrows(), self.n_components()));
        for k in 0..self.n_components() {
            let factor = ComponentFactor::new(self.means.row(k), self.covariances[k].view())?;
            let ln_w = self.weights[k].ln();
            let log_pdf = factor.log_pdf_rows(data);
            out.column_mut(k).assign(&log_pdf.mapv(|v| v + ln_w));
        }
        Ok(out)
    }

    /// Dependency probabilities of a single sample (one row of the E-step).
    pub fn responsibilities(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        let row = x.insert_axis(Axis(0));
        let lp = self.weighted_log_densities(row)?;
        let (resp, _) = normalize_log_rows(lp)?;
        Ok(resp.row(0).to_owned())
    }
}

/// Cached pieces of one Gaussian: `ln φ(x) = log_norm − ½‖L⁻¹(x − μ)‖²`.
struct ComponentFactor {
    mean: Array1<f64>,
    inv_factor_t: Array2<f64>,
    log_norm: f64,
}

impl ComponentFactor {
    fn new(mean: ArrayView1<f64>, cov: ArrayView2<f64>) -> Result<Self> {
        let d = mean.len();
        let scale = mean_diagonal(cov);
        let base = if scale > 0.0 && scale.is_finite() { DENSITY_RIDGE * scale } else { DENSITY_RIDGE };
        let (l, _) = regularized_cholesky(cov, base, base * MAX_RIDGE_GROWTH)?;
        let log_det_half: f64 = l.diag().iter().map(|v| v.ln()).sum();
        Ok(Self {
            mean: mean.to_owned(),
            inv_factor_t: lower_triangular_inverse(l.view()).reversed_axes(),
            log_norm: -0.5 * d as f64 * LN_2PI - log_det_half,
        })
    }

    fn log_pdf_rows(&self, data: ArrayView2<f64>) -> Array1<f64> {
        let centered = &data - &self.mean;
        let z = centered.dot(&self.inv_factor_t);
        z.map_axis(Axis(1), |r| self.log_norm - 0.5 * r.dot(&r))
    }
}

/// `ln φ(x | mean, cov)` via a Cholesky factor of `cov`. If `cov` is not
/// positive definite a ridge of 1e-6 × its mean diagonal is added and grown
/// tenfold up to 1e-2 × the mean diagonal before giving up.
pub fn log_gaussian_pdf(x: ArrayView1<f64>, mean: ArrayView1<f64>, cov: ArrayView2<f64>) -> Result<f64> {
    let d = mean.len();
    if x.len() != d || cov.dim() != (d, d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x.len(),
        });
    }
    let factor = ComponentFactor::new(mean, cov)?;
    Ok(factor.log_pdf_rows(x.insert_axis(Axis(0)))[0])
}

fn log_sum_exp(row: ArrayView1<f64>) -> f64 {
    let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !max.is_finite() {
        return max;
    }
    max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Normalizes each row of log-weights into probabilities; returns them with
/// the sum of the per-row log normalizers.
fn normalize_log_rows(mut lp: Array2<f64>) -> Result<(Array2<f64>, f64)> {
    let mut total = 0.0;
    for (n, mut row) in lp.axis_iter_mut(Axis(0)).enumerate() {
        let lse = log_sum_exp(row.view());
        if !lse.is_finite() {
            return Err(Error::ZeroDensity { row: n });
        }
        total += lse;
        row.mapv_inplace(|v| (v - lse).exp());
    }
    Ok((lp, total))
}

/// Output of the E-step.
#[derive(Clone, Debug)]
pub struct EStep {
    /// N × N_c matrix of `r(z_nk)`.
    pub responsibilities: Array2<f64>,
    /// `Σ_n ln Σ_k ω_k φ(x_n | μ_k, Σ_k)` under the parameters used.
    pub log_likelihood: f64,
}

pub fn e_step(data: ArrayView2<f64>, params: &GmmParams) -> Result<EStep> {
    let lp = params.weighted_log_densities(data)?;
    let (responsibilities, log_likelihood) = normalize_log_rows(lp)?;
    Ok(EStep {
        responsibilities,
        log_likelihood,
    })
}

/// Weighted maximum-likelihood update. `reg_eps` is added to every covariance
/// diagonal; if a covariance is still not positive definite the ridge grows
/// tenfold, at most to `1e4 · reg_eps`.
pub fn m_step(data: ArrayView2<f64>, resp: ArrayView2<f64>, reg_eps: f64) -> Result<GmmParams> {
    m_step_from(data, resp, reg_eps, None)
}

/// `ln|Σ| + tr(Σ⁻¹ S)`, the covariance-dependent part of one component's
/// negated expected complete-data log-likelihood per unit mass, for scatter
/// `S` about the updated mean. `None` if `Σ` has no Cholesky factor.
fn covariance_objective(cov: ArrayView2<f64>, scatter: ArrayView2<f64>) -> Option<f64> {
    let l = cholesky(cov)?;
    let log_det = 2.0 * l.diag().iter().map(|v| v.ln()).sum::<f64>();
    let inv = lower_triangular_inverse(l.view());
    let whitened = inv.dot(&scatter).dot(&inv.t());
    Some(log_det + whitened.diag().sum())
}

/// M-step that, given the current parameters, keeps a component's old
/// covariance whenever the ridged update would score worse on
/// [`covariance_objective`]. Weights and means are exact maximizers, so the
/// expected complete-data log-likelihood never decreases.
fn m_step_from(
    data: ArrayView2<f64>,
    resp: ArrayView2<f64>,
    reg_eps: f64,
    previous: Option<&GmmParams>,
) -> Result<GmmParams> {
    let (n, d) = data.dim();
    if resp.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: resp.nrows(),
        });
    }
    let k = resp.ncols();
    let mass = resp.sum_axis(Axis(0));
    if let Some((component, &m)) = mass.iter().enumerate().find(|(_, &m)| !(m >= MIN_COMPONENT_MASS)) {
        return Err(Error::DegenerateComponent { component, mass: m });
    }
    let total: f64 = mass.sum();
    let weights = mass.mapv(|m| m / total);
    let mut means = resp.t().dot(&data);
    for (mut row, &m) in means.axis_iter_mut(Axis(0)).zip(mass.iter()) {
        row.mapv_inplace(|v| v / m);
    }
    let mut covariances = Vec::with_capacity(k);
    for j in 0..k {
        let centered = &data - &means.row(j);
        let r = resp.column(j);
        let weighted = &centered * &r.insert_axis(Axis(1));
        let mut scatter = centered.t().dot(&weighted) / mass[j];
        for a in 0..d {
            for b in 0..a {
                let s = 0.5 * (scatter[[a, b]] + scatter[[b, a]]);
                scatter[[a, b]] = s;
                scatter[[b, a]] = s;
            }
        }
        let mut cov = scatter.clone();
        cov.diag_mut().mapv_inplace(|v| v + reg_eps);
        let (_, extra) = regularized_cholesky(cov.view(), reg_eps * 10.0, reg_eps * MAX_RIDGE_GROWTH)?;
        if extra > 0.0 {
            log::debug!("component {j}: covariance ridge raised by {extra:e}");
            cov.diag_mut().mapv_inplace(|v| v + extra);
        }
        if let Some(prev) = previous {
            let old = prev.covariances[j].view();
            let keep_old = match (covariance_objective(old, scatter.view()), covariance_objective(cov.view(), scatter.view())) {
                (Some(o), Some(c)) => o < c,
                (Some(_), None) => true,
                _ => false,
            };
            if keep_old {
                cov = old.to_owned();
            }
        }
        covariances.push(cov);
    }
    GmmParams::new(weights, means, covariances)
}

/// EM settings. `reg_eps` is relative: the ridge added to each covariance is
/// `reg_eps` times the mean diagonal of the data's covariance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub n_components: usize,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub reg_eps: f64,
    pub n_restarts: usize,
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            n_components: 1,
            max_iter: 500,
            rel_tol: 1e-6,
            reg_eps: 1e-6,
            n_restarts: 5,
            seed: 0,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.n_components > 0
            && self.max_iter > 0
            && self.n_restarts > 0
            && self.rel_tol > 0.0
            && self.rel_tol < 1.0
            && self.reg_eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid EM configuration {self:?}")))
        }
    }

    pub fn with_components(&self, n_components: usize) -> Self {
        Self {
            n_components,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Log-likelihood after each E-step of the winning restart.
    pub log_likelihood_trace: Vec<f64>,
    pub converged: bool,
    /// Number of M-steps taken by the winning restart.
    pub iterations: usize,
    pub best_restart: usize,
    /// Absolute covariance ridge used.
    pub ridge: f64,
    /// Final log-likelihood of every restart; `None` for restarts that collapsed.
    pub restart_log_likelihoods: Vec<Option<f64>>,
}

impl FitReport {
    pub fn final_log_likelihood(&self) -> f64 {
        *self.log_likelihood_trace.last().expect("trace is never empty")
    }
}

/// Population mean and covariance of the rows.
pub fn data_covariance(data: ArrayView2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = data.nrows() as f64;
    let mean = data.sum_axis(Axis(0)) / n;
    let centered = &data - &mean;
    let cov = centered.t().dot(&centered) / n;
    (mean, cov)
}

/// k-means++ seeding: first mean uniform, then rows drawn with probability
/// proportional to squared distance from the nearest chosen mean.
fn seed_means(data: ArrayView2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = data.nrows();
    let mut chosen = vec![rng.gen_range(0..n)];
    let dist = |i: usize, c: usize| {
        data.row(i)
            .iter()
            .zip(data.row(c).iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
    };
    let mut nearest: Vec<f64> = (0..n).map(|i| dist(i, chosen[0])).collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.gen_range(0..n)
        };
        chosen.push(next);
        for (i, v) in nearest.iter_mut().enumerate() {
            *v = v.min(dist(i, next));
        }
    }
    data.select(Axis(0), &chosen)
}

struct RestartOutcome {
    params: GmmParams,
    trace: Vec<f64>,
    converged: bool,
    iterations: usize,
}

fn run_restart(
    data: ArrayView2<f64>,
    cfg: &EmConfig,
    restart: usize,
    global_cov: &Array2<f64>,
    ridge: f64,
) -> Result<RestartOutcome> {
    let k = cfg.n_components;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(restart as u64);
    let means = seed_means(data, k, &mut rng);
    let mut init_cov = global_cov.clone();
    init_cov.diag_mut().mapv_inplace(|v| v + ridge);
    let (_, extra) = regularized_cholesky(init_cov.view(), ridge * 10.0, ridge * MAX_RIDGE_GROWTH)?;
    init_cov.diag_mut().mapv_inplace(|v| v + extra);
    let mut params = GmmParams::new(Array1::from_elem(k, 1.0 / k as f64), means, vec![init_cov; k])?;

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut before_step: Option<GmmParams> = None;
    loop {
        let e = e_step(data, &params)?;
        let ll = e.log_likelihood;
        if let Some(&prev) = trace.last() {
            let prev: f64 = prev;
            if ll < prev {
                // Only round-off can lower the likelihood here; undo the step.
                log::debug!("restart {restart}: log-likelihood fell by {:e}, keeping the previous step", prev - ll);
                params = before_step.take().expect("a step was taken");
                iterations -= 1;
                converged = true;
                break;
            }
            if (ll - prev) < cfg.rel_tol * prev.abs() {
                converged = true;
            }
        }
        trace.push(ll);
        if converged || iterations == cfg.max_iter {
            break;
        }
        let next = m_step_from(data, e.responsibilities.view(), ridge, Some(&params))?;
        before_step = Some(std::mem::replace(&mut params, next));
        iterations += 1;
    }
    Ok(RestartOutcome {
        params,
        trace,
        converged,
        iterations,
    })
}

/// Fits an `n_components` mixture with `n_restarts` independently seeded
/// EM runs and keeps the run with the highest final log-likelihood (lowest
/// restart index on ties). Restart `r` draws from stream `r` of a ChaCha
/// generator keyed by `seed`, so the result does not depend on execution order.
pub fn fit_em(data: ArrayView2<f64>, cfg: &EmConfig) -> Result<(GmmParams, FitReport)> {
    cfg.validate()?;
    let n = data.nrows();
    if n <= cfg.n_components {
        return Err(Error::InvalidInput(format!(
            "{n} samples cannot support {} components",
            cfg.n_components
        )));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in data".into()));
    }
    let (_, global_cov) = data_covariance(data);
    let scale = mean_diagonal(global_cov.view());
    let ridge = if scale > 0.0 { cfg.reg_eps * scale } else { cfg.reg_eps };

    let mut best: Option<(usize, RestartOutcome)> = None;
    let mut finals = Vec::with_capacity(cfg.n_restarts);
    let mut last_err = None;
    for r in 0..cfg.n_restarts {
        match run_restart(data, cfg, r, &global_cov, ridge) {
            Ok(out) => {
                let ll = *out.trace.last().expect("non-empty trace");
                finals.push(Some(ll));
                let better = best
                    .as_ref()
                    .is_none_or(|(_, b)| ll > *b.trace.last().expect("non-empty trace"));
                if better {
                    best = Some((r, out));
                }
            }
            Err(e) => {
                log::debug!("restart {r} with {} components failed: {e}", cfg.n_components);
                finals.push(None);
                last_err = Some(e);
            }
        }
    }
    match best {
        Some((best_restart, out)) => Ok((
            out.params,
            FitReport {
                log_likelihood_trace: out.trace,
                converged: out.converged,
                iterations: out.iterations,
                best_restart,
                ridge,
                restart_log_likelihoods: finals,
            },
        )),
        None => Err(Error::AllRestartsFailed {
            restarts: cfg.n_restarts,
            last: Box::new(last_err.expect("at least one restart ran")),
        }),
    }
}

/// Free parameters of a full-covariance mixture: `(N_c − 1)` weights,
/// `N_c·d` means and `N_c·d(d+1)/2` covariance entries.
pub fn param_count(n_components: usize, d: usize) -> usize {
    (n_components - 1) + n_components * d + n_components * d * (d + 1) / 2
}

pub fn aic(log_lik: f64, k: usize) -> f64 {
    2.0 * k as f64 - 2.0 * log_lik
}

pub fn bic(log_lik: f64, k: usize, n: usize) -> f64 {
    k as f64 * (n as f64).ln() - 2.0 * log_lik
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Aic,
    #[default]
    Bic,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Aic => "aic",
            Criterion::Bic => "bic",
        })
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aic" => Ok(Criterion::Aic),
            "bic" => Ok(Criterion::Bic),
            other => Err(Error::InvalidInput(format!("unknown criterion `{other}`"))),
        }
    }
}

/// One candidate of a component-count sweep. Score fields are `None` when
/// every restart of that candidate collapsed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionRow {
    pub n_components: usize,
    pub log_likelihood: Option<f64>,
    pub aic: Option<f64>,
    pub bic: Option<f64>,
}

impl CriterionRow {
    pub fn score(&self, criterion: Criterion) -> Option<f64> {
        match criterion {
            Criterion::Aic => self.aic,
            Criterion::Bic => self.bic,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Selection {
    pub chosen: usize,
    pub criterion: Criterion,
    pub table: Vec<CriterionRow>,
    /// The fitted mixture for the chosen count.
    pub params: GmmParams,
    pub report: FitReport,
}

/// Writes `n_components,log_likelihood,aic,bic`; failed candidates have empty
/// score fields.
pub fn write_criterion_csv<W: std::io::Write>(table: &[CriterionRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n_components", "log_likelihood", "aic", "bic"])?;
    let cell = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for row in table {
        w.write_record([
            row.n_components.to_string(),
            cell(row.log_likelihood),
            cell(row.aic),
            cell(row.bic),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Fits one mixture per candidate count in `min..=max` and picks the count
/// minimizing `criterion` (smaller count on ties).
pub fn select_components(
    data: ArrayView2<f64>,
    range: (usize, usize),
    cfg: &EmConfig,
    criterion: Criterion,
) -> Result<Selection> {
    let (min, max) = range;
    let (n, d) = data.dim();
    if min < 1 || max < min {
        return Err(Error::InvalidInput(format!("invalid component range {min}:{max}")));
    }
    if n <= max {
        return Err(Error::InvalidInput(format!("{n} samples cannot support {max} components")));
    }
    let mut table = Vec::with_capacity(max - min + 1);
    let mut best: Option<(f64, usize, GmmParams, FitReport)> = None;
    for k in min..=max {
        match fit_em(data, &cfg.with_components(k)) {
            Ok((params, report)) => {
                let ll = report.final_log_likelihood();
                let p = param_count(k, d);
                let row = CriterionRow {
                    n_components: k,
                    log_likelihood: Some(ll),
                    aic: Some(aic(ll, p)),
                    bic: Some(bic(ll, p, n)),
                };
                let score = row.score(criterion).expect("fitted row has scores");
                log::info!("{k} components: log-likelihood {ll:.3}, {criterion} {score:.3}");
                if best.as_ref().is_none_or(|(s, ..)| score < *s) {
                    best = Some((score, k, params, report));
                }
                table.push(row);
            }
            Err(e) => {
                log::warn!("{k} components: fit failed: {e}");
                table.push(CriterionRow {
                    n_components: k,
                    log_likelihood: None,
                    aic: None,
                    bic: None,
                });
            }
        }
    }
    let (_, chosen, params, report) = best.ok_or(Error::NoCandidateFitted)?;
    Ok(Selection {
        chosen,
        criterion,
        table,
        params,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::f64::consts::PI;

    fn one_d(weights: &[f64], means: &[f64], vars: &[f64]) -> GmmParams {
        GmmParams::new(
            Array1::from(weights.to_vec()),
            Array2::from_shape_vec((means.len(), 1), means.to_vec()).unwrap(),
            vars.iter().map(|v| array![[*v]]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn standard_normal_at_mode() {
        let v = log_gaussian_pdf(array![0.0].view(), array![0.0].view(), array![[1.0]].view()).unwrap();
        assert!((v - (-0.5 * (2.0 * PI).ln())).abs() < 1e-14);
        assert!((v + 0.9189).abs() < 1e-4);
    }

    #[test]
    fn bivariate_identity() {
        let eye = Array2::<f64>::eye(2);
        let at_mode = log_gaussian_pdf(array![0.0, 0.0].view(), array![0.0, 0.0].view(), eye.view()).unwrap();
        assert!((at_mode + (2.0 * PI).ln()).abs() < 1e-14);
        let off = log_gaussian_pdf(array![1.0, 0.0].view(), array![0.0, 0.0].view(), eye.view()).unwrap();
        assert!((off - (at_mode - 0.5)).abs() < 1e-14);
        assert!((off + 2.3379).abs() < 1e-4);
    }

    #[test]
    fn pdf_dimension_checks() {
        let r = log_gaussian_pdf(array![0.0].view(), array![0.0, 0.0].view(), Array2::eye(2).view());
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn single_component_responsibility_is_one() {
        let p = one_d(&[1.0], &[0.0], &[1.0]);
        let e = e_step(array![[-3.0], [0.5], [10.0]].view(), &p).unwrap();
        assert!(e.responsibilities.iter().all(|&r| r == 1.0));
    }

    #[test]
    fn symmetric_and_scalar_responsibilities() {
        let p = one_d(&[0.5, 0.5], &[0.0, 2.0], &[1.0, 1.0]);
        let e = e_step(array![[1.0], [0.0]].view(), &p).unwrap();
        assert!((e.responsibilities[[0, 0]] - 0.5).abs() < 1e-15);
        // φ(0;0,1) / (φ(0;0,1) + φ(0;2,1)) = 1 / (1 + e^{-2})
        let expect = 1.0 / (1.0 + (-2.0f64).exp());
        assert!((e.responsibilities[[1, 0]] - expect).abs() < 1e-15);
        assert!((e.responsibilities[[1, 0]] - 0.8808).abs() < 1e-4);
        assert!((e.responsibilities[[1, 1]] - 0.1192).abs() < 1e-4);
    }

    #[test]
    fn zero_density_row_is_reported() {
        let p = GmmParams::new(array![1.0, 0.0], array![[0.0], [0.0]], vec![array![[1.0]], array![[1.0]]]).unwrap();
        let e = e_step(array![[1e200]].view(), &p);
        assert!(matches!(e, Err(Error::ZeroDensity { row: 0 })));
    }

    #[test]
    fn m_step_weighted_mean() {
        let data = array![[0.0, 0.0], [2.0, 2.0]];
        let resp = array![[1.0], [1.0]];
        let p = m_step(data.view(), resp.view(), 1e-6).unwrap();
        assert_eq!(p.means(), &array![[1.0, 1.0]]);
        assert_eq!(p.weights(), &array![1.0]);
    }

    #[test]
    fn m_step_split_points() {
        let data = array![[-1.0], [1.0]];
        let resp = array![[0.5, 0.5], [0.5, 0.5]];
        let eps = 1e-3;
        let p = m_step(data.view(), resp.view(), eps).unwrap();
        for k in 0..2 {
            assert_eq!(p.means()[[k, 0]], 0.0);
            assert!((p.covariances()[k][[0, 0]] - (1.0 + eps)).abs() < 1e-15);
            assert_eq!(p.weights()[k], 0.5);
        }
    }

    #[test]
    fn m_step_single_point_is_pure_ridge() {
        let p = m_step(array![[3.0, -1.0]].view(), array![[1.0]].view(), 1e-4).unwrap();
        assert_eq!(p.covariances()[0], Array2::<f64>::eye(2) * 1e-4);
    }

    #[test]
    fn m_step_flags_empty_component() {
        let r = m_step(array![[0.0], [1.0]].view(), array![[1.0, 0.0], [1.0, 0.0]].view(), 1e-6);
        assert!(matches!(r, Err(Error::DegenerateComponent { component: 1, .. })));
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(param_count(1, 1), 2);
        assert_eq!(param_count(2, 2), 11);
        assert_eq!(param_count(6, 62), 12095);
    }

    #[test]
    fn information_criteria() {
        assert_eq!(aic(0.0, 1), 2.0);
        assert_eq!(aic(-10.0, 3), 26.0);
        assert!(aic(-100.0, 5) < aic(-100.0, 6));
        assert_eq!(bic(-7.5, 9, 1), 15.0);
        let e2 = 2.0f64.exp();
        // BIC with n = e² evaluated directly: 3·2 + 20.
        assert!((3.0 * e2.ln() + 20.0 - 26.0).abs() < 1e-12);
        assert!(bic(-10.0, 3, 8) > aic(-10.0, 3));
    }

    #[test]
    fn single_component_fit_is_closed_form() {
        let data = array![[0.0, 1.0], [2.0, 0.5], [4.0, 3.0], [1.0, -1.0]];
        let (p, report) = fit_em(data.view(), &EmConfig::default()).unwrap();
        let (mean, mut cov) = data_covariance(data.view());
        cov.diag_mut().mapv_inplace(|v| v + report.ridge);
        for (a, b) in p.means().row(0).iter().zip(mean.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in p.covariances()[0].iter().zip(cov.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(report.converged);
    }

    #[test]
    fn fit_rejects_too_few_samples() {
        let cfg = EmConfig {
            n_components: 3,
            ..EmConfig::default()
        };
        assert!(fit_em(array![[0.0], [1.0], [2.0]].view(), &cfg).is_err());
    }

    #[test]
    fn json_document_shape() {
        let p = one_d(&[0.25, 0.75], &[-1.0, 2.0], &[1.0, 0.5]);
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v["weights"], serde_json::json!([0.25, 0.75]));
        assert_eq!(v["means"], serde_json::json!([[-1.0], [2.0]]));
        assert_eq!(v["covariances"], serde_json::json!([[[1.0]], [[0.5]]]));
        let back: GmmParams = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn invalid_weights_rejected() {
        let r = GmmParams::new(array![0.5, 0.6], array![[0.0], [1.0]], vec![array![[1.0]], array![[1.0]]]);
        assert!(r.is_err());
    }

    #[test]
    fn criterion_parsing() {
        assert_eq!("AIC".parse::<Criterion>().unwrap(), Criterion::Aic);
        assert!("mdl".parse::<Criterion>().is_err());
    }
}
