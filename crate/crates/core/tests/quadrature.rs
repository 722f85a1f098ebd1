mod common;

use std::sync::Arc;

use common::GaussianPair;
use coreset_core::grid::Grid;
use coreset_core::models::*;
use coreset_core::quadrature::*;
use coreset_core::rng::stream;
use coreset_core::weights::CoresetWeights;
use coreset_core::CoresetError;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn gaussian_workspace() -> Workspace {
    Workspace::new(&GaussianPair, Grid::uniform_1d(-14.0, 14.0, 20_000).unwrap()).unwrap()
}

#[test]
fn gaussian_kl_matches_closed_form() {
    let ws = gaussian_workspace();
    let w = CoresetWeights::from_dense(&[2.0, 1.0]).unwrap();
    let field = ws.field(&GaussianPair, &w).unwrap();
    let pair = ws.kl_pair(&field, 1.0).unwrap();
    assert!((pair.forward - 0.5).abs() <= 1e-6, "{pair:?}");
    assert!((pair.reverse - 0.5).abs() <= 1e-6, "{pair:?}");

    let adaptive = kl_pair(&GaussianPair, &w).unwrap();
    assert!((adaptive.forward - 0.5).abs() <= 1e-6, "{adaptive:?}");
    assert!((adaptive.reverse - 0.5).abs() <= 1e-6, "{adaptive:?}");
}

#[test]
fn gaussian_sample_mean() {
    let ws = gaussian_workspace();
    let xs = ws.posterior().sample(100_000, &mut stream(1, &[]));
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    assert!(mean.abs() < 0.02, "{mean}");
}

#[test]
fn sampling_frequencies_pass_chi_squared() {
    let grid = Arc::new(Grid::uniform_1d(0.0, 64.0, 64).unwrap());
    let log_density: Vec<f64> = (0..64)
        .map(|i| if i < 32 { -((i as f64) - 12.0).powi(2) / 60.0 } else { f64::NEG_INFINITY })
        .collect();
    let dist = GridDistribution::from_log_density(grid, log_density).unwrap();
    let count = 50_000;
    let xs = dist.sample(count, &mut stream(2, &[]));
    let mut observed = [0usize; 64];
    for x in xs {
        observed[x.floor() as usize] += 1;
    }
    assert!(observed[32..].iter().all(|&o| o == 0));
    let stat: f64 = dist
        .masses()
        .iter()
        .zip(observed)
        .take(32)
        .map(|(p, o)| {
            let e = p * count as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let p_value = 1.0 - ChiSquared::new(31.0).unwrap().cdf(stat);
    assert!(p_value > 0.001, "χ² = {stat}, p = {p_value}");
}

#[test]
fn point_mass_samples_stay_in_cell() {
    let grid = Arc::new(Grid::uniform_1d(0.0, 4.0, 64).unwrap());
    let mut lm = vec![f64::NEG_INFINITY; 64];
    lm[10] = 0.0;
    let dist = GridDistribution::from_log_masses(grid.clone(), lm).unwrap();
    let (lo, hi) = grid.cell(10)[0];
    for x in dist.sample(500, &mut stream(3, &[])) {
        assert!(x >= lo && x <= hi);
    }
}

#[test]
fn two_cell_kl_and_moments() {
    let grid = Arc::new(Grid::uniform_1d(0.0, 1.0, 64).unwrap());
    let p = [0.5f64, 0.5].map(f64::ln);
    let q = [0.25f64, 0.75].map(f64::ln);
    assert!((kl_log_masses(&p, &q) - 0.143841).abs() < 1e-6);
    let (means, cov) = weighted_covariance(&[0.5, 0.5], &[vec![0.0, 1.0]]);
    assert!((means[0] - 0.5).abs() < 1e-15 && (cov[(0, 0)] - 0.25).abs() < 1e-15);
    let dist = GridDistribution::from_log_masses(grid, vec![0.0; 64]).unwrap();
    assert!((dist.expectation(|_| 3.5) - 3.5).abs() < 1e-12);
}

#[test]
fn kl_mismatched_grids_rejected() {
    let a = GridDistribution::from_log_density(Arc::new(Grid::uniform_1d(0.0, 1.0, 64).unwrap()), vec![0.0; 64]).unwrap();
    let b = GridDistribution::from_log_density(Arc::new(Grid::uniform_1d(0.0, 2.0, 64).unwrap()), vec![0.0; 64]).unwrap();
    assert_eq!(kl(&a, &b).unwrap_err(), CoresetError::GridMismatch);
    assert_eq!(kl(&a, &a).unwrap(), 0.0);
}

#[test]
fn kl_infinite_when_support_missing() {
    let g = Arc::new(Grid::uniform_1d(0.0, 1.0, 64).unwrap());
    let p = GridDistribution::from_log_density(g.clone(), vec![0.0; 64]).unwrap();
    let mut lq = vec![0.0; 64];
    lq[3] = f64::NEG_INFINITY;
    let q = GridDistribution::from_log_density(g, lq).unwrap();
    assert_eq!(kl(&p, &q).unwrap(), f64::INFINITY);
    assert!(kl(&q, &p).unwrap().is_finite());
}

#[test]
fn all_negative_infinite_masses_rejected() {
    let g = Arc::new(Grid::uniform_1d(0.0, 1.0, 64).unwrap());
    assert_eq!(
        GridDistribution::from_log_density(g, vec![f64::NEG_INFINITY; 64]).unwrap_err(),
        CoresetError::DegenerateDistribution
    );
}

#[test]
fn auto_grid_contains_both_modes() {
    let m = CauchyLocationModel::generate(5000, 5.0, &mut stream(4, &[])).unwrap();
    let ones = CoresetWeights::ones(5000);
    let g = auto_grid(&ThetaSpace(&m), &[&ones], &GridOptions::default()).unwrap();
    let ax = g.axis(0);
    assert!(ax.lower() < -5.0 && ax.upper() > 5.0);
    assert!((ax.lower() + ax.upper()).abs() <= ax.width(0));
}

#[test]
fn auto_grid_prior_only_is_wide() {
    let m = CauchyLocationModel::generate(50, 5.0, &mut stream(5, &[])).unwrap();
    let zeros = CoresetWeights::zeros(50);
    let g = auto_grid(&ThetaSpace(&m), &[&zeros], &GridOptions::default()).unwrap();
    let ax = g.axis(0);
    assert!(ax.lower() <= -20.0 && ax.upper() >= 20.0);
    assert!((ax.lower() + ax.upper()).abs() <= ax.width(0));
}

#[test]
fn build_posterior_special_weights() {
    let m = CauchyLocationModel::generate(100, 5.0, &mut stream(6, &[])).unwrap();
    let t = ThetaSpace(&m);
    let ones = CoresetWeights::ones(100);
    let zeros = CoresetWeights::zeros(100);
    let g = Arc::new(auto_grid(&t, &[&ones, &zeros], &GridOptions::default()).unwrap());
    let prior = build_posterior(&t, &zeros, g.clone()).unwrap();
    let mut p = [0.0; 2];
    for k in (0..g.len()).step_by(97) {
        g.node(k, &mut p);
        let expected = m.log_prior(&p[..1]) + g.log_volume(k) - prior.log_normalizer();
        assert!((prior.log_masses()[k] - expected).abs() < 1e-10);
    }
    let post = build_posterior(&t, &ones, g.clone()).unwrap();
    let padded = build_posterior(&ThetaSpace(&m), &ones.padded(100).unwrap(), g).unwrap();
    assert_eq!(post.log_masses(), padded.log_masses());
}

#[test]
fn kl_pair_at_full_weights_is_zero() {
    let mut rng = stream(7, &[]);
    let c = CauchyLocationModel::generate(300, 5.0, &mut rng).unwrap();
    let l = LogRegModel::generate(300, [1.0, 6.0], &mut rng).unwrap();
    for pair in [
        kl_pair(&Reduced(&c), &CoresetWeights::ones(300)).unwrap(),
        kl_pair(&Reduced(&l), &CoresetWeights::ones(300)).unwrap(),
    ] {
        assert_eq!(pair.forward, 0.0);
        assert_eq!(pair.reverse, 0.0);
    }
}

#[test]
fn reverse_kl_shrinks_as_scale_approaches_one() {
    let m = CauchyLocationModel::generate(300, 5.0, &mut stream(8, &[])).unwrap();
    let t = Reduced(&m);
    let ones = CoresetWeights::ones(300);
    let mut last = f64::INFINITY;
    for a in [0.5, 0.7, 0.9, 0.99, 1.0] {
        let rev = kl_pair(&t, &ones.scaled(a).unwrap()).unwrap().reverse;
        assert!(rev >= 0.0 && rev < last, "α = {a}: {rev} vs {last}");
        last = rev;
    }
    assert_eq!(last, 0.0);
}

#[test]
fn theta_space_and_reduced_kl_agree() {
    let mut rng = stream(9, &[]);
    let m = CauchyLocationModel::generate(200, 5.0, &mut rng).unwrap();
    let idx: Vec<(usize, f64)> = (0..20).map(|i| (i * 10, 10.0)).collect();
    let w = CoresetWeights::from_entries(200, idx).unwrap();
    let theta = ThetaSpace(&m);
    let g = auto_grid(&theta, &[&CoresetWeights::ones(200), &w], &GridOptions { cells_1d: 200_000, ..Default::default() }).unwrap();
    let ws = Workspace::new(&theta, g).unwrap();
    let direct = ws.kl_pair(&ws.field(&theta, &w).unwrap(), 1.0).unwrap();
    let reduced = kl_pair(&Reduced(&m), &w).unwrap();
    assert!((direct.forward - reduced.forward).abs() < 1e-4 * reduced.forward, "{direct:?} {reduced:?}");
    assert!((direct.reverse - reduced.reverse).abs() < 1e-4 * reduced.reverse, "{direct:?} {reduced:?}");
}

#[test]
fn refinement_changes_kl_little() {
    let mut rng = stream(10, &[]);
    let m = LogRegModel::generate(1000, [1.0, 6.0], &mut rng).unwrap();
    let t = Reduced(&m);
    let w = CoresetWeights::from_entries(1000, (0..500).map(|i| (2 * i, 2.0))).unwrap();
    let ws = Workspace::covering(&t, &[&w], &AdaptiveOptions::default()).unwrap();
    let fine = ws.refined(&t).unwrap();
    let a = ws.kl_pair(&ws.field(&t, &w).unwrap(), 1.0).unwrap().forward;
    let b = fine.kl_pair(&fine.field(&t, &w).unwrap(), 1.0).unwrap().forward;
    assert!(((a - b) / b).abs() < 1e-4, "{a} {b}");
}

#[test]
fn duplicated_indices_give_equal_covariance_rows() {
    let m = CauchyLocationModel::generate(50, 5.0, &mut stream(11, &[])).unwrap();
    let t = Reduced(&m);
    let ws = Workspace::covering(&t, &[], &AdaptiveOptions::default()).unwrap();
    let cov = covariance_of_potentials(ws.posterior(), &t, &[3, 7, 3]).unwrap();
    for j in 0..3 {
        assert_eq!(cov[(0, j)], cov[(2, j)]);
    }
    assert!(covariance_of_potentials(ws.posterior(), &t, &[50]).is_err());
}

fn min_eigenvalue(a: &coreset_core::linalg::Matrix) -> f64 {
    let n = a.rows();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[(i, j)]);
    m.symmetric_eigen().eigenvalues.min()
}

#[test]
fn covariance_is_positive_semidefinite() {
    let mut rng = stream(12, &[]);
    let l = LogRegModel::generate(40, [1.0, 6.0], &mut rng).unwrap();
    let t = Reduced(&l);
    let ws = Workspace::covering(&t, &[], &AdaptiveOptions::default()).unwrap();
    let idx: Vec<usize> = (0..40).collect();
    let cov = covariance_of_potentials(ws.posterior(), &t, &idx).unwrap();
    assert!(min_eigenvalue(&cov) >= -1e-10 * cov.trace());
}

proptest! {
    #[test]
    fn kl_nonnegative_and_zero_on_identity(a in prop::collection::vec(-5.0f64..5.0, 64), b in prop::collection::vec(-5.0f64..5.0, 64)) {
        let g = Arc::new(Grid::uniform_1d(0.0, 1.0, 64).unwrap());
        let p = GridDistribution::from_log_density(g.clone(), a).unwrap();
        let q = GridDistribution::from_log_density(g, b).unwrap();
        prop_assert!(kl(&p, &q).unwrap() >= 0.0);
        prop_assert_eq!(kl(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn normalization_ignores_constant_shifts(a in prop::collection::vec(-5.0f64..5.0, 64), c in -50.0f64..50.0) {
        let g = Arc::new(Grid::uniform_1d(0.0, 1.0, 64).unwrap());
        let p = GridDistribution::from_log_density(g.clone(), a.clone()).unwrap();
        let q = GridDistribution::from_log_density(g, a.iter().map(|x| x + c).collect()).unwrap();
        let total: f64 = p.masses().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for (x, y) in p.log_masses().iter().zip(q.log_masses()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn random_covariances_are_psd(cols in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 16), 1..6), raw in prop::collection::vec(0.01f64..1.0, 16)) {
        let total: f64 = raw.iter().sum();
        let masses: Vec<f64> = raw.iter().map(|m| m / total).collect();
        let (_, cov) = weighted_covariance(&masses, &cols);
        prop_assert!(min_eigenvalue(&cov) >= -1e-10 * cov.trace().max(1e-300));
    }
}
