//! Cross-module invariants: projection geometry, normalizer equivariance,
//! selection-policy structure, sampling moments, and RND behavior under
//! randomized inputs.

use caution_core::linalg::{
    empirical_covariance, empirical_mean, norm, sample_gaussian, CovarianceFactor, Subspace,
};
use caution_core::rewards::fit_normalizer;
use caution_core::rnd::{init_linear_rnd, init_relu_rnd, load_model, save_model, RndModel,
    UncertaintyVariant};
use caution_core::rng::derive_stream;
use caution_core::selection::{select_bon, select_lcb, Candidate};
use ndarray::{Array1, Array2};
use proptest::prelude::*;

fn finite_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-50.0f64..50.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_idempotent_and_orthogonal(
        entries in finite_vec(15),
        probe in finite_vec(5),
    ) {
        let raw = Array2::from_shape_vec((5, 3), entries).unwrap();
        // random matrices may be near rank-deficient; those are rejected by
        // construction, which is itself the contract
        if let Ok(s) = Subspace::orthonormalize(&raw) {
            let y = Array1::from_vec(probe);
            let pv = s.project_v(&y).unwrap();
            let pp = s.project_perp(&y).unwrap();
            let pv2 = s.project_v(&pv).unwrap();
            prop_assert!(norm(&(&pv2 - &pv)) < 1e-8 * (1.0 + norm(&pv)));
            prop_assert!(pv.dot(&pp).abs() < 1e-7 * (1.0 + norm(&y)).powi(2));
            prop_assert!(norm(&(&pv + &pp - &y)) < 1e-8 * (1.0 + norm(&y)));
        }
    }

    #[test]
    fn normalizer_is_affine_equivariant(
        values in proptest::collection::vec(-100.0f64..100.0, 3..20),
        scale in 0.1f64..10.0,
        shift in -50.0f64..50.0,
        probe in -100.0f64..100.0,
    ) {
        let shifted: Vec<f64> = values.iter().map(|v| v * scale + shift).collect();
        if let (Ok(a), Ok(b)) = (fit_normalizer(&values), fit_normalizer(&shifted)) {
            // z-scores are invariant under positive affine maps of the data
            prop_assert!((a.normalize(probe) - b.normalize(probe * scale + shift)).abs() < 1e-6);
        }
    }

    #[test]
    fn lcb_at_lambda_zero_is_bon(scores in proptest::collection::vec(-10.0f64..10.0, 1..20)) {
        let slate: Vec<Candidate> = scores
            .iter()
            .enumerate()
            .map(|(i, &s)| Candidate::scored(i, s, s.abs()))
            .collect();
        let bon = select_bon(&slate).unwrap();
        let lcb = select_lcb(&slate, 0.0).unwrap();
        prop_assert_eq!(bon.chosen_index, lcb.chosen_index);
    }

    #[test]
    fn bon_argmax_is_affine_invariant(
        scores in proptest::collection::vec(-10.0f64..10.0, 1..20),
        scale in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let slate: Vec<Candidate> = scores
            .iter()
            .enumerate()
            .map(|(i, &s)| Candidate::scored(i, s, 0.0))
            .collect();
        let mapped: Vec<Candidate> = scores
            .iter()
            .enumerate()
            .map(|(i, &s)| Candidate::scored(i, s * scale + shift, 0.0))
            .collect();
        prop_assert_eq!(
            select_bon(&slate).unwrap().chosen_index,
            select_bon(&mapped).unwrap().chosen_index
        );
    }

    #[test]
    fn lcb_chosen_uncertainty_never_rises_with_lambda(
        scores in proptest::collection::vec(-5.0f64..5.0, 2..15),
        alphas in proptest::collection::vec(0.0f64..5.0, 2..15),
    ) {
        let n = scores.len().min(alphas.len());
        let slate: Vec<Candidate> = (0..n)
            .map(|i| Candidate::scored(i, scores[i], alphas[i]))
            .collect();
        let mut prev = f64::INFINITY;
        for lambda in [0.0, 0.5, 1.0, 2.0, 8.0] {
            let chosen = select_lcb(&slate, lambda).unwrap().chosen_index;
            let alpha = slate[chosen].uncertainty;
            prop_assert!(alpha <= prev + 1e-12);
            prev = alpha;
        }
    }
}

#[test]
fn gaussian_sampling_matches_requested_moments() {
    let variances = [1.0, 4.0, 0.25];
    let cov = CovarianceFactor::diagonal(&variances).unwrap();
    let mut rng = derive_stream(2024, 0);
    let samples = sample_gaussian(&cov, &mut rng, 200_000);
    let mean = empirical_mean(&samples);
    let emp_cov = empirical_covariance(&samples);
    let n = samples.len() as f64;
    for i in 0..3 {
        let se = (variances[i] / n).sqrt();
        assert!(
            mean[i].abs() < 4.0 * se,
            "mean[{i}] = {} exceeds 4 SE = {}",
            mean[i],
            4.0 * se
        );
        // relative tolerance on the diagonal; chi-square SE is sqrt(2/n)·var
        let var_se = (2.0 / n).sqrt() * variances[i];
        assert!((emp_cov[(i, i)] - variances[i]).abs() < 4.0 * var_se);
    }
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let cross_se = (variances[i] * variances[j] / n).sqrt();
        assert!(emp_cov[(i, j)].abs() < 4.0 * cross_se);
    }
}

#[test]
fn linear_uncertainty_concentrates_at_sqrt2_perp_norm() {
    let (d, k, m) = (16, 4, 2048);
    let subspace = Subspace::coordinate(d, k).unwrap();
    let mut rng = derive_stream(7, 0);
    let mut model = init_linear_rnd(d, m, &subspace, &mut rng).unwrap();
    model.train_idealized();
    let cov = CovarianceFactor::identity(d);
    let mut ratios = Vec::new();
    for y in sample_gaussian(&cov, &mut rng, 500) {
        let alpha = model.uncertainty(&y, UncertaintyVariant::Norm).unwrap();
        let perp = norm(&subspace.project_perp(&y).unwrap());
        ratios.push(alpha / (2f64.sqrt() * perp));
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!((mean - 1.0).abs() < 0.02, "mean ratio {mean}");
    // and uncertainty vanishes on V itself
    let coords = Array1::from_shape_fn(k, |_| rng.normal());
    let on_v = subspace.embed(&coords).unwrap();
    assert!(model.uncertainty(&on_v, UncertaintyVariant::Norm).unwrap() < 1e-10);
}

#[test]
fn relu_ensemble_variance_shrinks_with_members() {
    let (d, k, m) = (8, 3, 32);
    let subspace = Subspace::coordinate(d, k).unwrap();
    let mut y = Array1::zeros(d);
    y[k] = 1.0;
    let mut spreads = Vec::new();
    for &t in &[1usize, 4, 16] {
        let mut rng = derive_stream(31, t as u64);
        let mut values = Vec::new();
        for _ in 0..300 {
            let mut model = init_relu_rnd(d, m, t, &subspace, &mut rng).unwrap();
            model.train_idealized();
            values.push(model.uncertainty(&y, UncertaintyVariant::Squared).unwrap());
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (values.len() - 1) as f64;
        spreads.push(var);
    }
    // averaging independent members shrinks the spread roughly like 1/T
    assert!(spreads[1] < spreads[0] * 0.6, "T=4 {} vs T=1 {}", spreads[1], spreads[0]);
    assert!(spreads[2] < spreads[1] * 0.6, "T=16 {} vs T=4 {}", spreads[2], spreads[1]);
}

#[test]
fn rnd_model_roundtrip_preserves_uncertainty() {
    let (d, k, m) = (6, 2, 16);
    let subspace = Subspace::coordinate(d, k).unwrap();
    let mut rng = derive_stream(91, 0);
    let mut model = RndModel::Relu(init_relu_rnd(d, m, 3, &subspace, &mut rng).unwrap());
    model.train_idealized();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    for _ in 0..20 {
        let y = Array1::from_shape_fn(d, |_| rng.normal());
        assert_eq!(
            model.uncertainty(&y, UncertaintyVariant::Norm).unwrap(),
            loaded.uncertainty(&y, UncertaintyVariant::Norm).unwrap()
        );
    }
}
