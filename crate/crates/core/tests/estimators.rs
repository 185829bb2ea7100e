mod common;

use biased_density::basis::project_all;
use biased_density::bench::Truth;
use biased_density::estimator::{adaptive_estimate, AdaptiveOptions, NaiveEstimate};
use biased_density::sampling::{sample_biased, SeedSpec};
use biased_density::{BiasSpec, CornerDensity, Quadrature};

fn naive_vs_adaptive(w: BiasSpec) -> (f64, f64) {
    let f = CornerDensity::Monotone.model();
    let quad = Quadrature::default();
    let j_max = biased_density::estimator::BlockScheme::new(500).unwrap().j_max();
    let truth = Truth::new(&f, j_max, 2049, &quad).unwrap();
    let (mut naive, mut adaptive) = (Vec::new(), Vec::new());
    for r in 0..200 {
        let s = sample_biased(&f, &w, 500, SeedSpec::new(21, r)).unwrap();
        adaptive.push(truth.series_ise(&adaptive_estimate(&s).unwrap()).unwrap());
        let ne = NaiveEstimate::new(&s, AdaptiveOptions::default()).unwrap();
        naive.push(truth.grid_ise(|x| ne.eval(x)));
    }
    (common::mean(&naive), common::mean(&adaptive))
}

#[test]
fn naive_estimate_loses_when_bias_is_rougher_than_density() {
    // sawtooth w with kinks every 0.1
    let ys: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let ws: Vec<f64> = (0..=10).map(|i| if i % 2 == 0 { 0.4 } else { 1.6 }).collect();
    let (naive, adaptive) = naive_vs_adaptive(BiasSpec::table(ys, ws).unwrap());
    assert!(adaptive <= naive, "adaptive {adaptive} naive {naive}");
}

#[test]
fn naive_estimate_with_smooth_linear_bias_is_competitive() {
    // a smooth w does not penalize the naive estimate
    let (naive, adaptive) = naive_vs_adaptive(BiasSpec::linear(1.0, -0.95).unwrap());
    assert!(naive < 2.0 * adaptive && adaptive < 2.0 * naive, "adaptive {adaptive} naive {naive}");
}

#[test]
fn projected_estimate_is_nonnegative_with_same_mass() {
    let f = CornerDensity::Normal.model();
    let w = BiasSpec::linear(0.1, 0.9).unwrap();
    let s = sample_biased(&f, &w, 25, SeedSpec::new(1, 0)).unwrap();
    let e = biased_density::estimator::adaptive_estimate_with(&s, AdaptiveOptions { project_nonnegative: true }).unwrap();
    let mass = common::trapezoid(|x| e.eval(x), 0.0, 1.0, common::ORACLE_NODES);
    assert!((mass - e.coeffs[0]).abs() < 1e-4, "{mass} vs {}", e.coeffs[0]);
    assert!((0..=1000).all(|i| e.eval(i as f64 / 1000.0) >= 0.0));
}

#[test]
fn large_sample_estimate_is_close() {
    let f = CornerDensity::Normal.model();
    let w = BiasSpec::linear(0.1, 0.9).unwrap();
    let quad = Quadrature::default();
    let s = sample_biased(&f, &w, 5_000, SeedSpec::new(2, 0)).unwrap();
    let e = adaptive_estimate(&s).unwrap();
    let truth = Truth::new(&f, e.coeffs.len() - 1, 1025, &quad).unwrap();
    let ise = truth.series_ise(&e).unwrap();
    assert!(ise < 0.01, "{ise}");
    let theta = project_all(&f, 2, &quad).unwrap();
    assert!((e.coeffs[2] - theta[2]).abs() < 0.05);
}
