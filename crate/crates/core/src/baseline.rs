//! Plain logistic regression trained by full-batch gradient descent, used as
//! a reference classifier in benchmarks.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::EncodedDataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    /// `None` starts from all-zero weights; `Some(seed)` draws small uniform
    /// initial weights.
    pub seed: Option<u64>,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            epochs: 2000,
            learning_rate: 0.1,
            l2: 1e-4,
            seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Regularized loss before each update.
    pub loss_trace: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean negative log-likelihood plus `l2/2 · ‖w‖²`, with its gradient in
/// `(weights, bias)`.
pub fn loss_and_gradient(
    x: ArrayView2<f64>,
    y: &[u8],
    weights: ArrayView1<f64>,
    bias: f64,
    l2: f64,
) -> (f64, Array1<f64>, f64) {
    let n = x.nrows() as f64;
    let z = x.dot(&weights) + bias;
    let mut loss = 0.0;
    let mut residual = Array1::<f64>::zeros(z.len());
    for (i, &zi) in z.iter().enumerate() {
        let yi = f64::from(y[i]);
        // -[y ln σ(z) + (1 - y) ln(1 - σ(z))] = softplus(z) - y z
        loss += softplus(zi) - yi * zi;
        residual[i] = sigmoid(zi) - yi;
    }
    loss = loss / n + 0.5 * l2 * weights.dot(&weights);
    let grad_w = x.t().dot(&residual) / n + &weights * l2;
    let grad_b = residual.sum() / n;
    (loss, grad_w, grad_b)
}

pub fn fit_logistic(train: &EncodedDataset, cfg: &LogisticConfig) -> Result<LogisticModel> {
    if cfg.epochs == 0 || !(cfg.learning_rate > 0.0) || !(cfg.l2 >= 0.0) {
        return Err(Error::InvalidInput(format!("invalid logistic configuration {cfg:?}")));
    }
    let x = train.features().view();
    let d = train.n_features();
    let mut weights = match cfg.seed {
        None => Array1::zeros(d),
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Array1::from_shape_fn(d, |_| rng.gen_range(-0.01..0.01))
        }
    };
    let mut bias = 0.0;
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let (loss, gw, gb) = loss_and_gradient(x, train.labels(), weights.view(), bias, cfg.l2);
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        loss_trace.push(loss);
        weights.scaled_add(-cfg.learning_rate, &gw);
        bias -= cfg.learning_rate * gb;
    }
    Ok(LogisticModel {
        weights: weights.to_vec(),
        bias,
        loss_trace,
    })
}

impl LogisticModel {
    pub fn predict_proba(&self, x: ArrayView1<f64>) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                found: x.len(),
            });
        }
        let z: f64 = x.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>() + self.bias;
        Ok(sigmoid(z))
    }

    pub fn predict_proba_batch(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        x.rows().into_iter().map(|r| self.predict_proba(r)).collect()
    }

    /// Label 1 iff the probability is strictly above 0.5.
    pub fn predict(&self, x: ArrayView1<f64>) -> Result<u8> {
        Ok(u8::from(self.predict_proba(x)? > 0.5))
    }
}

/// Convenience wrapper for single-sample scoring.
pub fn predict_logistic(model: &LogisticModel, x: ArrayView1<f64>) -> Result<f64> {
    model.predict_proba(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn data(x: Array2<f64>, y: Vec<u8>) -> EncodedDataset {
        let d = x.ncols();
        EncodedDataset::new(x, y, (0..d).map(|j| format!("f{j}")).collect()).unwrap()
    }

    #[test]
    fn separable_pair() {
        let train = data(array![[-1.0], [1.0]], vec![0, 1]);
        let m = fit_logistic(&train, &LogisticConfig::default()).unwrap();
        assert_eq!(m.predict(array![-1.0].view()).unwrap(), 0);
        assert_eq!(m.predict(array![1.0].view()).unwrap(), 1);
    }

    #[test]
    fn uninformative_features() {
        let train = data(Array2::from_elem((4, 2), 0.0), vec![0, 1, 0, 1]);
        let m = fit_logistic(&train, &LogisticConfig::default()).unwrap();
        for row in train.features().rows() {
            assert!((m.predict_proba(row).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_model_and_bias_monotonicity() {
        let m = LogisticModel {
            weights: vec![0.0],
            bias: 0.0,
            loss_trace: vec![],
        };
        assert_eq!(predict_logistic(&m, array![3.0].view()).unwrap(), 0.5);
        let unit = LogisticModel { weights: vec![1.0], ..m.clone() };
        assert_eq!(unit.predict_proba(array![0.0].view()).unwrap(), 0.5);
        assert_eq!(unit.predict(array![0.0].view()).unwrap(), 0);
        let mut last = 0.0;
        for b in [-50.0, -1.0, 0.0, 1.0, 50.0, 800.0] {
            let p = LogisticModel { bias: b, ..m.clone() }.predict_proba(array![0.0].view()).unwrap();
            assert!(p >= last);
            last = p;
        }
        assert_eq!(last, 1.0);
        assert!(m.predict_proba(array![0.0, 1.0].view()).is_err());
    }

    #[test]
    fn seeded_initialization_is_deterministic() {
        let train = data(array![[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]], vec![0, 1, 1]);
        let cfg = LogisticConfig {
            seed: Some(7),
            epochs: 10,
            ..LogisticConfig::default()
        };
        assert_eq!(fit_logistic(&train, &cfg).unwrap(), fit_logistic(&train, &cfg).unwrap());
    }

    #[test]
    fn divergence_is_reported() {
        let train = data(array![[1e308], [-1e308]], vec![0, 1]);
        let cfg = LogisticConfig {
            learning_rate: 1e10,
            l2: 0.0,
            ..LogisticConfig::default()
        };
        assert!(matches!(fit_logistic(&train, &cfg), Err(Error::Diverged { .. })));
    }
}
