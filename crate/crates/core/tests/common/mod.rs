#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `B Bᵀ + shift·I` for a random `d×d` matrix `B`.
pub fn random_spd(d: usize, shift: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let b = Array2::from_shape_fn((d, d), |_| rng.gen_range(-1.0..1.0));
    b.dot(&b.t()) + Array2::<f64>::eye(d) * shift
}

pub fn normal_vec(d: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
    Array1::from_shape_fn(d, |_| StandardNormal.sample(rng))
}

/// Samples from an isotropic Gaussian mixture; returns the rows and the
/// component each row came from.
pub fn sample_mixture(
    centers: &[Vec<f64>],
    weights: &[f64],
    sd: f64,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> (Array2<f64>, Vec<usize>) {
    let d = centers[0].len();
    let mut data = Array2::zeros((n, d));
    let mut comp = Vec::with_capacity(n);
    for i in 0..n {
        let mut u: f64 = rng.gen();
        let mut k = weights.len() - 1;
        for (j, &w) in weights.iter().enumerate() {
            if u < w {
                k = j;
                break;
            }
            u -= w;
        }
        for j in 0..d {
            let z: f64 = StandardNormal.sample(rng);
            data[[i, j]] = centers[k][j] + sd * z;
        }
        comp.push(k);
    }
    (data, comp)
}
