mod common;

use csgm_core::gmm::{e_step, fit_em, select_components, Criterion, EmConfig};
use ndarray::Axis;
use rand::Rng;

fn assert_em_invariants(data: ndarray::ArrayView2<f64>, cfg: &EmConfig, what: &str) {
    let (params, report) = fit_em(data, cfg).unwrap();
    for w in report.log_likelihood_trace.windows(2) {
        assert!(w[1] >= w[0] - 1e-8, "{what}: log-likelihood fell from {} to {}", w[0], w[1]);
    }
    let wsum: f64 = params.weights().sum();
    assert!((wsum - 1.0).abs() < 1e-12, "{what}: weights sum to {wsum}");
    let e = e_step(data, &params).unwrap();
    for row in e.responsibilities.axis_iter(Axis(0)) {
        assert!((row.sum() - 1.0).abs() < 1e-12, "{what}: responsibilities sum to {}", row.sum());
    }
    assert_eq!(e.log_likelihood, report.final_log_likelihood(), "{what}: returned params are not the traced ones");
}

#[test]
fn fifty_random_instances() {
    let mut rng = common::rng(2024);
    for case in 0..50u64 {
        let d = rng.gen_range(1..=4);
        let k_true = rng.gen_range(1..=4);
        let centers: Vec<Vec<f64>> = (0..k_true)
            .map(|_| (0..d).map(|_| rng.gen_range(-4.0..4.0)).collect())
            .collect();
        let weights = vec![1.0 / k_true as f64; k_true];
        let n = rng.gen_range(60..300);
        let (data, _) = common::sample_mixture(&centers, &weights, rng.gen_range(0.3..1.5), n, &mut rng);
        let cfg = EmConfig {
            n_components: rng.gen_range(1..=5),
            n_restarts: 2,
            seed: case,
            ..EmConfig::default()
        };
        assert_em_invariants(data.view(), &cfg, &format!("case {case}"));
    }
}

#[test]
fn recovers_two_separated_components() {
    for seed in 0..10u64 {
        let mut rng = common::rng(100 + seed);
        let (data, _) = common::sample_mixture(&[vec![-3.0], vec![3.0]], &[0.5, 0.5], 1.0, 1000, &mut rng);
        let cfg = EmConfig {
            n_components: 2,
            seed,
            ..EmConfig::default()
        };
        let (params, _) = fit_em(data.view(), &cfg).unwrap();
        let mut comps: Vec<(f64, f64)> = (0..2).map(|k| (params.means()[[k, 0]], params.weights()[k])).collect();
        comps.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!((comps[0].0 + 3.0).abs() < 0.2, "seed {seed}: mean {}", comps[0].0);
        assert!((comps[1].0 - 3.0).abs() < 0.2, "seed {seed}: mean {}", comps[1].0);
        for (_, w) in comps {
            assert!((w - 0.5).abs() < 0.05, "seed {seed}: weight {w}");
        }
    }
}

#[test]
fn bic_finds_three_clusters() {
    let mut rng = common::rng(77);
    let centers = [vec![0.0, 0.0], vec![6.0, 0.0], vec![0.0, 6.0]];
    let (data, _) = common::sample_mixture(&centers, &[0.3, 0.3, 0.4], 0.8, 600, &mut rng);
    let cfg = EmConfig {
        seed: 3,
        ..EmConfig::default()
    };
    let s = select_components(data.view(), (1, 6), &cfg, Criterion::Bic).unwrap();
    assert_eq!(s.chosen, 3);
    assert_eq!(s.table.len(), 6);
    let chosen_row = &s.table[2];
    for row in &s.table {
        assert!(row.bic.unwrap() >= chosen_row.bic.unwrap());
    }
}

#[test]
fn single_candidate_range() {
    let mut rng = common::rng(1);
    let (data, _) = common::sample_mixture(&[vec![0.0], vec![5.0]], &[0.5, 0.5], 1.0, 100, &mut rng);
    let s = select_components(data.view(), (1, 1), &EmConfig::default(), Criterion::Aic).unwrap();
    assert_eq!(s.chosen, 1);
    assert_eq!(s.table.len(), 1);
}

#[test]
fn same_seed_same_fit() {
    let mut rng = common::rng(9);
    let centers = [vec![0.0, 1.0, 2.0], vec![3.0, -1.0, 0.0]];
    let (data, _) = common::sample_mixture(&centers, &[0.5, 0.5], 1.0, 250, &mut rng);
    let cfg = EmConfig {
        n_components: 3,
        seed: 42,
        ..EmConfig::default()
    };
    let a = fit_em(data.view(), &cfg).unwrap();
    let b = fit_em(data.view(), &cfg).unwrap();
    assert_eq!(a, b);
    let json_a = csgm_core::json::to_string(&a.0).unwrap();
    let json_b = csgm_core::json::to_string(&b.0).unwrap();
    assert_eq!(json_a, json_b);
    let back: csgm_core::GmmParams = serde_json::from_str(&json_a).unwrap();
    assert_eq!(back, a.0);
}

#[test]
fn criteria_consistent_with_log_likelihood() {
    let mut rng = common::rng(31);
    let (data, _) = common::sample_mixture(&[vec![0.0, 0.0], vec![4.0, 4.0]], &[0.5, 0.5], 1.0, 200, &mut rng);
    let s = select_components(data.view(), (1, 4), &EmConfig::default(), Criterion::Aic).unwrap();
    for row in &s.table {
        let k = csgm_core::gmm::param_count(row.n_components, 2) as f64;
        let ll = row.log_likelihood.unwrap();
        assert!((row.aic.unwrap() - (2.0 * k - 2.0 * ll)).abs() < 1e-9);
        assert!((row.bic.unwrap() - (k * 200f64.ln() - 2.0 * ll)).abs() < 1e-9);
    }
}
