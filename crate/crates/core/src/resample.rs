//! SMOTE oversampling of the minority class.
//!
//! Each synthetic sample lies on the segment between a randomly drawn minority
//! sample and its single nearest minority neighbour.

use ndarray::{Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::EncodedDataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoteTarget {
    /// Oversample until the minority count equals the majority count.
    #[default]
    BalanceToMajority,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub seed: u64,
    #[serde(default)]
    pub target: SmoteTarget,
}

impl SmoteConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            target: SmoteTarget::BalanceToMajority,
        }
    }
}

fn squared_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// For every row, the index of its nearest other row (lowest index on ties).
/// `None` when there is only one row.
fn nearest_neighbours(points: &Array2<f64>) -> Vec<Option<usize>> {
    let n = points.nrows();
    (0..n)
        .map(|i| {
            let mut best: Option<(usize, f64)> = None;
            for j in (0..n).filter(|&j| j != i) {
                let d = squared_distance(points.row(i), points.row(j));
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
            best.map(|(j, _)| j)
        })
        .collect()
}

/// Appends synthetic minority rows after the original rows until both classes
/// have the same count. Balanced input is returned unchanged.
pub fn smote_balance(train: &EncodedDataset, cfg: &SmoteConfig) -> Result<EncodedDataset> {
    let [zeros, ones] = train.class_counts();
    if zeros == 0 || ones == 0 {
        return Err(Error::SingleClass);
    }
    if zeros == ones {
        return Ok(train.clone());
    }
    let (minority_label, deficit) = if zeros < ones { (0u8, ones - zeros) } else { (1u8, zeros - ones) };
    let minority_idx: Vec<usize> = train
        .labels()
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == minority_label)
        .map(|(i, _)| i)
        .collect();
    let minority = train.features().select(Axis(0), &minority_idx);
    let neighbours = nearest_neighbours(&minority);
    if minority.nrows() == 1 {
        log::warn!("minority class has a single sample; SMOTE duplicates it");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let d = train.n_features();
    let mut synthetic = Array2::<f64>::zeros((deficit, d));
    for mut out in synthetic.axis_iter_mut(Axis(0)) {
        let i = rng.gen_range(0..minority.nrows());
        let x1 = minority.row(i);
        match neighbours[i] {
            Some(j) => {
                let x2 = minority.row(j);
                let alpha = loop {
                    let a: f64 = rng.gen();
                    if a > 0.0 {
                        break a;
                    }
                };
                for k in 0..d {
                    out[k] = x1[k] + alpha * (x2[k] - x1[k]);
                }
            }
            None => out.assign(&x1),
        }
    }
    let mut balanced = train.clone();
    balanced.append_rows(synthetic, &vec![minority_label; deficit])?;
    Ok(balanced)
}
