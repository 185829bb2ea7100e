mod common;

use biased_density::basis::project_all;
use biased_density::bench::{ise, Truth};
use biased_density::difficulty::{equivalent_biased_n, rcdb};
use biased_density::estimator::{adaptive_estimate, block_weight, cox_cdf, d_hat, naive_estimate, BlockScheme, CoxStats};
use biased_density::sampling::{read_sample_csv, write_sample_csv, BiasedSample};
use biased_density::{evaluate_series, BiasSpec, CornerDensity, Quadrature};
use proptest::prelude::*;

fn unit_values(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, len..len + 60)
}

fn linear_bias() -> impl Strategy<Value = (f64, f64)> {
    // w = a + b y with w(0), w(1) in [0.05, 3]
    (0.05f64..3.0, 0.05f64..3.0).prop_map(|(w0, w1)| (w0, w1 - w0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sample_csv_round_trip(values in prop::collection::vec(-1e6f64..1e6, 1..200)) {
        let mut buf = Vec::new();
        write_sample_csv(&mut buf, &values).unwrap();
        prop_assert_eq!(read_sample_csv(buf.as_slice()).unwrap(), values);
    }

    #[test]
    fn bias_scale_leaves_estimates_unchanged(values in unit_values(5), (a, b) in linear_bias(), c in 0.01f64..100.0) {
        let w = BiasSpec::linear(a, b).unwrap();
        let s1 = BiasedSample::new(values.clone(), w.clone()).unwrap();
        let s2 = BiasedSample::new(values, w.scaled(c).unwrap()).unwrap();
        let e1 = adaptive_estimate(&s1).unwrap();
        let e2 = adaptive_estimate(&s2).unwrap();
        for (x, y) in e1.coeffs.iter().zip(&e2.coeffs).chain(e1.weights.iter().zip(&e2.weights)) {
            prop_assert!((x - y).abs() < 1e-12, "{} vs {}", x, y);
        }
        prop_assert!((d_hat(&s1) - d_hat(&s2)).abs() < 1e-12);
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let n1 = naive_estimate(&s1, &grid).unwrap();
        let n2 = naive_estimate(&s2, &grid).unwrap();
        for (i, x) in grid.iter().enumerate() {
            prop_assert!((cox_cdf(&s1, *x) - cox_cdf(&s2, *x)).abs() < 1e-12);
            prop_assert!((n1[i] - n2[i]).abs() < 1e-12 * n1[i].abs().max(1.0), "{} vs {}", n1[i], n2[i]);
        }
    }

    #[test]
    fn cox_cdf_is_monotone_and_reaches_one(values in unit_values(2), (a, b) in linear_bias()) {
        let s = BiasedSample::new(values.clone(), BiasSpec::linear(a, b).unwrap()).unwrap();
        let mut prev = 0.0;
        for i in 0..=200 {
            let v = cox_cdf(&s, i as f64 / 200.0);
            prop_assert!(v >= prev);
            prev = v;
        }
        let max = values.iter().cloned().fold(f64::MIN, f64::max);
        prop_assert_eq!(cox_cdf(&s, max), 1.0);
    }

    #[test]
    fn cox_cdf_with_unit_weight_is_the_ecdf(values in unit_values(1), x in 0.0f64..=1.0) {
        let s = BiasedSample::new(values.clone(), BiasSpec::constant(1.0).unwrap()).unwrap();
        let ecdf = values.iter().filter(|&&y| y <= x).count() as f64 / values.len() as f64;
        prop_assert_eq!(cox_cdf(&s, x), ecdf);
    }

    #[test]
    fn rcdb_is_at_least_one((a, b) in linear_bias(), which in 0usize..3) {
        let f = CornerDensity::ALL[which].model();
        let r = rcdb(&f, &BiasSpec::linear(a, b).unwrap(), &Quadrature::default()).unwrap();
        prop_assert!(r >= 1.0 - 1e-10, "{}", r);
    }

    #[test]
    fn equivalent_size_is_monotone(n in 2usize..5000, r in 1.0f64..10.0) {
        let lo = equivalent_biased_n(n, r).unwrap();
        let hi = equivalent_biased_n(n + 1, r).unwrap();
        prop_assert!(hi >= lo);
    }

    #[test]
    fn shrink_weights_lie_in_the_admissible_range(values in unit_values(10), (a, b) in linear_bias()) {
        let s = BiasedSample::new(values, BiasSpec::linear(a, b).unwrap()).unwrap();
        let e = adaptive_estimate(&s).unwrap();
        let scheme = BlockScheme::new(s.n()).unwrap();
        for (w, t) in e.weights.iter().zip(&scheme.thresholds) {
            prop_assert!(*w == 0.0 || (*w > t / (1.0 + t) && *w <= 1.0), "w {} t {}", w, t);
        }
    }

    #[test]
    fn parseval_ise_matches_quadrature(coeffs in prop::collection::vec(-0.5f64..0.5, 1..40), which in 0usize..3) {
        let quad = Quadrature::default();
        let f = CornerDensity::ALL[which].model();
        let truth = Truth::new(&f, 64, 1025, &quad).unwrap();
        let p = truth.parseval_ise(&coeffs).unwrap();
        let q = ise(|x| evaluate_series(&coeffs, x).unwrap(), &f, &quad.with_min_nodes(4097)).unwrap();
        prop_assert!((p - q).abs() < 1e-6, "{} vs {}", p, q);
    }
}

#[test]
fn block_scheme_at_25() {
    let s = BlockScheme::new(25).unwrap();
    assert_eq!(s.blocks, vec![1..2, 2..6, 6..15, 15..31]);
    assert_eq!(s.j_max(), 30);
}

#[test]
fn block_weight_boundaries() {
    let t = 1.0 / 2f64.ln();
    assert_eq!(block_weight((1.0 + t) * 0.01, 0.01, t), 0.0);
    let w = block_weight((1.0 + t) * 0.01 * 1.000001, 0.01, t);
    assert!(w > t / (1.0 + t) && w < t / (1.0 + t) + 1e-6);
}

#[test]
fn projection_matches_trapezoid_oracle() {
    let f = common::normal();
    let got = project_all(&CornerDensity::Normal.model(), 8, &Quadrature::default()).unwrap();
    for j in [0usize, 2, 4, 8] {
        let want = common::cosine_coefficient(|x| f.pdf(x), j);
        assert!((got[j] - want).abs() < 1e-8, "j={j}: {} vs {want}", got[j]);
    }
    // odd coefficients vanish by symmetry about 1/2
    assert!(got[1].abs() < 1e-12 && got[3].abs() < 1e-12);
}

#[test]
fn coefficient_density_projection_is_exact() {
    let c = [1.0, 0.3, -0.2, 0.1];
    let f = biased_density::DensityModel::from_coefficients(&c).unwrap();
    let got = project_all(&f, 6, &Quadrature::default()).unwrap();
    for j in 0..7 {
        let want = c.get(j).copied().unwrap_or(0.0);
        assert!((got[j] - want).abs() < 1e-12);
    }
}

#[test]
fn cox_stats_agree_with_single_coefficient_functions() {
    let values: Vec<f64> = (0..37).map(|i| ((i * 7919) % 101) as f64 / 100.0).collect();
    let s = BiasedSample::new(values, BiasSpec::linear(0.2, 0.7).unwrap()).unwrap();
    let stats = CoxStats::compute(&s, 12);
    for j in 0..=12 {
        let one = biased_density::estimator::fourier_hat(&s, j);
        assert!((stats.theta_hat[j] - one).abs() < 1e-12);
    }
    assert!((stats.d_hat - d_hat(&s)).abs() < 1e-12);
}
