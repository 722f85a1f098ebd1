use coreset_core::coresets::*;
use coreset_core::models::*;
use coreset_core::quadrature::kl_pair;
use coreset_core::rng::stream;
use coreset_core::weights::CoresetWeights;
use proptest::prelude::*;

#[test]
fn uniform_probabilities() {
    assert_eq!(SamplingProbabilities::uniform(4).unwrap().as_slice(), &[0.25; 4]);
    assert!(SamplingProbabilities::uniform(0).is_err());
}

#[test]
fn thresholded_two_point_example() {
    let m = CauchyLocationModel::new(5.0, vec![1.0, 2.0]).unwrap();
    let p = importance_probabilities(&m, ProbabilityMode::XSquaredThresholded).unwrap();
    assert!((p.as_slice()[0] - 0.2).abs() < 1e-15 && (p.as_slice()[1] - 0.8).abs() < 1e-15);
}

#[test]
fn all_zero_scores_fall_back_to_uniform() {
    let m = CauchyLocationModel::new(5.0, vec![0.0; 5]).unwrap();
    let p = importance_probabilities(&m, ProbabilityMode::XSquaredThresholded).unwrap();
    assert_eq!(p.as_slice(), &[0.2; 5]);
}

#[test]
fn single_draw_gets_weight_n() {
    let p = SamplingProbabilities::uniform(7).unwrap();
    let w = importance_weighted(&p, 1, &mut stream(1, &[])).unwrap();
    assert_eq!(w.support_len(), 1);
    assert_eq!(w.entries()[0].1, 7.0);
    assert!(importance_weighted(&p, 0, &mut stream(1, &[])).is_err());
}

#[test]
fn degenerate_probabilities_give_unit_weight() {
    let p = SamplingProbabilities::new(vec![1.0, 1e-300, 1e-300]).unwrap();
    let w = importance_weighted(&p, 9, &mut stream(2, &[])).unwrap();
    assert!((w.get(0) - 1.0).abs() < 1e-12);
}

#[test]
fn importance_weights_are_unbiased() {
    let (n, m, reps) = (20usize, 10usize, 10_000usize);
    let p = SamplingProbabilities::uniform(n).unwrap();
    let mut rng = stream(3, &[]);
    let mut sum = vec![0.0; n];
    let mut sq = vec![0.0; n];
    let mut totals = Vec::with_capacity(reps);
    for _ in 0..reps {
        let w = importance_weighted(&p, m, &mut rng).unwrap();
        for (i, v) in w.to_dense().into_iter().enumerate() {
            sum[i] += v;
            sq[i] += v * v;
        }
        totals.push(w.sum());
    }
    for i in 0..n {
        let mean = sum[i] / reps as f64;
        let var = (sq[i] - reps as f64 * mean * mean) / (reps as f64 - 1.0);
        let se = (var / reps as f64).sqrt();
        assert!((mean - 1.0).abs() <= 3.0 * se, "index {i}: {mean} ± {se}");
    }
    let total_mean = totals.iter().sum::<f64>() / reps as f64;
    assert!((total_mean - n as f64).abs() < 1e-9);
}

#[test]
fn optimal_scale_recovers_exactness() {
    let m = CauchyLocationModel::generate(200, 5.0, &mut stream(4, &[])).unwrap();
    let one = optimal_scale(&m, &CoresetWeights::ones(200)).unwrap();
    assert!((one.alpha - 1.0).abs() < 1e-3 && one.kl < 1e-9);
    let two = optimal_scale(&m, &CoresetWeights::ones(200).scaled(2.0).unwrap()).unwrap();
    assert!((two.alpha - 0.5).abs() < 1e-3, "{two:?}");
}

#[test]
fn optimal_scale_never_worse_than_unscaled() {
    let mut rng = stream(5, &[]);
    let models = [
        Model::Cauchy(CauchyLocationModel::generate(300, 5.0, &mut rng).unwrap()),
        Model::LogReg(LogRegModel::generate(300, [1.0, 6.0], &mut rng).unwrap()),
    ];
    for model in &models {
        let p = importance_probabilities(model, ProbabilityMode::XSquaredThresholded).unwrap();
        for _ in 0..3 {
            let w = importance_weighted(&p, 150, &mut rng).unwrap();
            let unscaled = kl_pair(&Reduced(model), &w).unwrap().reverse;
            let r = optimal_scale(model, &w).unwrap();
            assert!(r.kl <= unscaled + 1e-6, "{} > {unscaled}", r.kl);
        }
    }
    assert!(optimal_scale(&models[0], &CoresetWeights::zeros(300)).is_err());
}

#[test]
fn scale_objectives_agree_on_exact_rescaling() {
    let m = CauchyLocationModel::generate(200, 5.0, &mut stream(4, &[])).unwrap();
    let w = CoresetWeights::ones(200).scaled(2.0).unwrap();
    let ws = scale_workspace(&Reduced(&m), &w).unwrap();
    let field = ws.field(&Reduced(&m), &w).unwrap();
    for objective in [ScaleObjective::Forward, ScaleObjective::Reverse, ScaleObjective::Smaller] {
        let r = scale_search(&ws, &field, objective).unwrap();
        assert!((r.alpha - 0.5).abs() < 1e-3, "{objective:?} {r:?}");
        assert!(r.kl < 1e-9);
    }
}

#[test]
fn smaller_objective_beats_both_directions() {
    let mut rng = stream(6, &[]);
    let model = CauchyLocationModel::generate(3000, 5.0, &mut rng).unwrap();
    let p = importance_probabilities(&model, ProbabilityMode::XSquaredThresholded).unwrap();
    for _ in 0..3 {
        let w = importance_weighted(&p, 8, &mut rng).unwrap();
        let ws = scale_workspace(&Reduced(&model), &w).unwrap();
        let field = ws.field(&Reduced(&model), &w).unwrap();
        let fwd = scale_search(&ws, &field, ScaleObjective::Forward).unwrap();
        let rev = scale_search(&ws, &field, ScaleObjective::Reverse).unwrap();
        let best = scale_search(&ws, &field, ScaleObjective::Smaller).unwrap();
        assert_eq!(fwd.kl, fwd.pair.forward);
        assert_eq!(rev.kl, rev.pair.reverse);
        assert_eq!(best.kl, fwd.pair.min().min(rev.pair.min()));
        let unscaled = ws.kl_pair(&field, 1.0).unwrap();
        assert!(best.kl <= unscaled.min() + 1e-9);
        for k in -20..=4 {
            let a = ws.kl_pair(&field, 2f64.powi(k)).unwrap();
            assert!(best.kl <= a.min() * (1.0 + 1e-6) + 1e-9, "α = 2^{k}: {} > {}", best.kl, a.min());
        }
    }
}

#[test]
fn identical_potentials_are_matched_exactly() {
    let m = CauchyLocationModel::new(5.0, vec![20.0; 40]).unwrap();
    let p = SamplingProbabilities::uniform(40).unwrap();
    let r = subsample_optimize(&m, &p, 5, 200, &mut stream(6, &[])).unwrap();
    assert!((r.weights.sum() - 40.0).abs() < 1e-6, "{}", r.weights.sum());
    assert!(r.solution.objective < 1e-10);
}

#[test]
fn full_support_is_recovered() {
    let m = LogRegModel::generate(12, [1.0, 6.0], &mut stream(7, &[])).unwrap();
    let p = SamplingProbabilities::uniform(12).unwrap();
    let r = subsample_optimize(&m, &p, 400, 1000, &mut stream(8, &[])).unwrap();
    assert_eq!(r.support.len(), 12);
    assert!(r.solution.objective <= 1e-10, "{}", r.solution.objective);
}

#[test]
fn subsample_optimize_respects_support() {
    let mut rng = stream(9, &[]);
    let m = CauchyLocationModel::generate(500, 5.0, &mut rng).unwrap();
    let p = SamplingProbabilities::uniform(500).unwrap();
    let r = subsample_optimize(&m, &p, 17, 1000, &mut rng).unwrap();
    assert!(r.weights.indices().all(|i| r.support.binary_search(&i).is_ok()));
    assert!(r.weights.entries().iter().all(|e| e.1 >= 0.0));
    assert!(r.solution.converged);
    assert!(r.solution.objective <= r.baseline);
    assert!(subsample_optimize(&m, &p, 20, 10, &mut rng).is_err());
}

proptest! {
    #[test]
    fn thresholded_probabilities_are_valid(scores in prop::collection::vec(0.0f64..100.0, 1..50)) {
        let p = thresholded(&scores).unwrap();
        let total: f64 = p.as_slice().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(p.as_slice().iter().all(|&q| q > 0.0));
    }

    #[test]
    fn importance_support_at_most_m(m in 1usize..40, seed: u64) {
        let p = SamplingProbabilities::uniform(30).unwrap();
        let w = importance_weighted(&p, m, &mut stream(seed, &[])).unwrap();
        prop_assert!(w.support_len() <= m);
        prop_assert!((w.sum() - 30.0).abs() < 1e-9);
    }
}
