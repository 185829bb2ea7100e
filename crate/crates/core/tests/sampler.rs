mod common;

use biased_density::sampling::{sample_biased_with_stats, sample_direct, SeedSpec, Sampler};
use biased_density::{BiasSpec, CornerDensity};
use common::{ks_critical_001, ks_distance, CdfTable};

const N: usize = 100_000;

fn configs() -> Vec<(&'static str, CornerDensity, BiasSpec, Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>)> {
    let n = common::normal();
    let m = common::monotone();
    let n2 = common::normal();
    let m2 = common::monotone();
    vec![
        ("normal, w=1", CornerDensity::Normal, BiasSpec::constant(1.0).unwrap(), Box::new(move |x| n.pdf(x)), Box::new(|_| 1.0)),
        ("normal, w=0.1+0.9y", CornerDensity::Normal, BiasSpec::linear(0.1, 0.9).unwrap(), Box::new(move |x| n2.pdf(x)), Box::new(|y| 0.1 + 0.9 * y)),
        ("monotone, w=1", CornerDensity::Monotone, BiasSpec::constant(1.0).unwrap(), Box::new(move |x| m.pdf(x)), Box::new(|_| 1.0)),
        ("monotone, w=1-0.95y", CornerDensity::Monotone, BiasSpec::linear(1.0, -0.95).unwrap(), Box::new(move |x| m2.pdf(x)), Box::new(|y| 1.0 - 0.95 * y)),
    ]
}

#[test]
fn biased_draws_pass_ks_at_one_tenth_percent() {
    for (i, (label, dens, bias, f, w)) in configs().into_iter().enumerate() {
        let cdf = CdfTable::new(|y| f(y) * w(y));
        let (s, _) = sample_biased_with_stats(&dens.model(), &bias, N, SeedSpec::new(11, i as u64)).unwrap();
        let d = ks_distance(s.values(), |y| cdf.at(y));
        assert!(d < ks_critical_001(N), "{label}: KS distance {d}");
    }
}

#[test]
fn acceptance_rate_matches_mu_over_envelope() {
    for (i, (label, dens, bias, f, w)) in configs().into_iter().enumerate() {
        let mu = common::trapezoid(|x| f(x) * w(x), 0.0, 1.0, common::ORACLE_NODES);
        let envelope = Sampler::new(&dens.model(), &bias).unwrap().envelope();
        let (_, stats) = sample_biased_with_stats(&dens.model(), &bias, N, SeedSpec::new(12, i as u64)).unwrap();
        let rate = stats.accepted as f64 / stats.proposals as f64;
        if bias.is_constant() {
            assert_eq!(stats.accepted, stats.proposals, "{label}");
            continue;
        }
        let p = mu / envelope;
        let se = (p * (1.0 - p) / stats.proposals as f64).sqrt();
        assert!((rate - p).abs() < 3.0 * se, "{label}: rate {rate} vs {p} (se {se})");
    }
}

#[test]
fn direct_normal_ks_with_table_slack() {
    let f = common::normal();
    let cdf = CdfTable::new(|x| f.pdf(x));
    let v = sample_direct(&CornerDensity::Normal.model(), N, SeedSpec::new(5, 0)).unwrap();
    let d = ks_distance(&v, |x| cdf.at(x));
    assert!(d < 1.95 / (N as f64).sqrt() * 1.5, "{d}");
}

#[test]
fn length_bias_shifts_the_mean() {
    let f = common::normal();
    let g = CdfTable::new(|y| f.pdf(y) * (0.1 + 0.9 * y));
    let (s, _) = sample_biased_with_stats(
        &CornerDensity::Normal.model(),
        &BiasSpec::linear(0.1, 0.9).unwrap(),
        N,
        SeedSpec::new(3, 0),
    )
    .unwrap();
    let m = common::mean(s.values());
    let se = common::sd(s.values()) / (N as f64).sqrt();
    assert!((m - g.mean()).abs() < 4.0 * se, "{m} vs {}", g.mean());
    assert!((g.mean() - 0.537).abs() < 0.002, "{}", g.mean());

    let mono = CornerDensity::Monotone.model();
    let (b, _) = sample_biased_with_stats(&mono, &BiasSpec::linear(1.0, -0.95).unwrap(), N, SeedSpec::new(3, 1)).unwrap();
    let d = sample_direct(&mono, N, SeedSpec::new(3, 2)).unwrap();
    assert!(common::mean(b.values()) < common::mean(&d));
}
