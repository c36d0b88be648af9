mod common;

use csgm_core::gmm::{log_gaussian_pdf, GmmParams};
use nalgebra::{DMatrix, DVector};
use ndarray::{array, Array2};

/// `-½[d ln 2π + ln|Σ| + (x−μ)ᵀ Σ⁻¹ (x−μ)]` with an explicit inverse and determinant.
fn brute_force(x: &[f64], mean: &[f64], cov: &Array2<f64>) -> f64 {
    let d = x.len();
    let m = DMatrix::from_fn(d, d, |i, j| cov[[i, j]]);
    let inv = m.clone().try_inverse().unwrap();
    let diff = DVector::from_fn(d, |i, _| x[i] - mean[i]);
    let quad = (diff.transpose() * inv * &diff)[(0, 0)];
    -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + m.determinant().ln() + quad)
}

#[test]
fn matches_explicit_inverse_and_determinant() {
    let mut rng = common::rng(11);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let d = 1 + case % 5;
        let cov = common::random_spd(d, 0.5, &mut rng);
        let mean = common::normal_vec(d, &mut rng);
        let x = &mean + &common::normal_vec(d, &mut rng);
        let got = log_gaussian_pdf(x.view(), mean.view(), cov.view()).unwrap();
        let want = brute_force(x.as_slice().unwrap(), mean.as_slice().unwrap(), &cov);
        let err = (got - want).abs();
        worst = worst.max(err);
        assert!(err < 1e-9, "case {case} (d = {d}): {got} vs {want}");
    }
    println!("largest deviation {worst:e}");
}

#[test]
fn one_dimensional_density_integrates_to_one() {
    // Simpson's rule over ±12 standard deviations.
    for (mu, var) in [(0.0, 1.0), (3.5, 0.25), (-2.0, 9.0)] {
        let sd: f64 = f64::sqrt(var);
        let (a, b) = (mu - 12.0 * sd, mu + 12.0 * sd);
        let n = 20_000;
        let h = (b - a) / n as f64;
        let f = |x: f64| {
            log_gaussian_pdf(array![x].view(), array![mu].view(), array![[var]].view())
                .unwrap()
                .exp()
        };
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        let integral = s * h / 3.0;
        assert!((integral - 1.0).abs() < 1e-6, "mean {mu}, var {var}: {integral}");
    }
}

#[test]
fn mixture_densities_agree_with_component_densities() {
    let mut rng = common::rng(5);
    let d = 3;
    let covs: Vec<_> = (0..2).map(|_| common::random_spd(d, 0.3, &mut rng)).collect();
    let means = Array2::from_shape_fn((2, d), |(k, j)| (k as f64 * 2.0) - j as f64);
    let params = GmmParams::new(array![0.3, 0.7], means.clone(), covs.clone()).unwrap();
    let data = Array2::from_shape_fn((7, d), |(i, j)| (i as f64 - 3.0) * 0.4 + j as f64 * 0.1);
    let wl = params.weighted_log_densities(data.view()).unwrap();
    for i in 0..data.nrows() {
        for k in 0..2 {
            let direct = params.weights()[k].ln() + log_gaussian_pdf(data.row(i), means.row(k), covs[k].view()).unwrap();
            assert!((wl[[i, k]] - direct).abs() < 1e-10);
        }
    }
}
