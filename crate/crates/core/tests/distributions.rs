use approx::assert_relative_eq;
use cpa_auction::exec::rng_stream;
use cpa_auction::{BidStrategy, PriceToBeat, ValueDistribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, LogNormal};

fn families() -> Vec<ValueDistribution> {
    vec![
        ValueDistribution::uniform(0.0, 1.0).unwrap(),
        ValueDistribution::uniform(2.0, 3.0).unwrap(),
        ValueDistribution::power(0.5).unwrap(),
        ValueDistribution::power(3.0).unwrap(),
        ValueDistribution::exponential(2.0).unwrap(),
        ValueDistribution::log_normal(0.0, 0.5).unwrap(),
    ]
}

/// Inverse-CDF or library-free draws, independent of the crate's samplers.
fn draw(d: &ValueDistribution, rng: &mut ChaCha20Rng) -> f64 {
    let u: f64 = rng.random();
    match *d {
        ValueDistribution::Uniform { lo, hi } => lo + (hi - lo) * u,
        ValueDistribution::Power { a } => u.powf(1.0 / a),
        ValueDistribution::Exponential { rate } => -(1.0 - u).ln() / rate,
        ValueDistribution::LogNormal { mu, sigma } => LogNormal::new(mu, sigma).unwrap().sample(rng),
        ValueDistribution::PointMass { value } => value,
    }
}

fn sample_mean(d: ValueDistribution, count: usize) -> f64 {
    let mut rng = rng_stream(3, 0);
    d.sample_n(&mut rng, count).iter().sum::<f64>() / count as f64
}

#[test]
fn sample_means() {
    assert!((sample_mean(ValueDistribution::uniform(0.0, 1.0).unwrap(), 1_000_000) - 0.5).abs() <= 0.002);
    assert!((sample_mean(ValueDistribution::power(1.0).unwrap(), 1_000_000) - 0.5).abs() <= 0.002);
    assert!((sample_mean(ValueDistribution::exponential(1.0).unwrap(), 1_000_000) - 1.0).abs() <= 0.005);
}

#[test]
fn samples_are_reproducible() {
    for d in families() {
        let a = d.sample_n(&mut rng_stream(9, 4), 100);
        let b = d.sample_n(&mut rng_stream(9, 4), 100);
        let c = d.sample_n(&mut rng_stream(9, 5), 100);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}

#[test]
fn expected_max_examples() {
    assert_relative_eq!(
        ValueDistribution::power(1.0).unwrap().expected_max(2).unwrap(),
        2.0 / 3.0,
        max_relative = 1e-12
    );
    let (l1, l2) = (1.0, 1.0);
    let exp_oracle = 1.0 / l1 + 1.0 / l2 - 1.0 / (l1 + l2);
    assert_relative_eq!(
        ValueDistribution::exponential(1.0).unwrap().expected_max(2).unwrap(),
        exp_oracle,
        max_relative = 1e-12
    );
    for d in families() {
        assert_relative_eq!(d.expected_max(1).unwrap(), d.mean(), max_relative = 1e-9);
    }
    for a in [0.5, 2.0, 7.0] {
        for k in 1..8 {
            let kf = k as f64;
            assert_relative_eq!(
                ValueDistribution::power(a).unwrap().expected_max(k).unwrap(),
                a * kf / (a * kf + 1.0),
                max_relative = 1e-12
            );
        }
    }
}

#[test]
fn closed_forms_agree_with_quadrature() {
    for d in families() {
        for k in 1..=10 {
            let closed = d.expected_max(k).unwrap();
            let quad = d.expected_max_quadrature(k).unwrap();
            assert_relative_eq!(closed, quad, max_relative = 1e-8);
        }
    }
}

#[test]
fn second_order_stat_examples() {
    assert_relative_eq!(
        ValueDistribution::uniform(0.0, 1.0)
            .unwrap()
            .second_order_stat(2)
            .unwrap(),
        1.0 / 3.0,
        max_relative = 1e-12
    );
    assert_relative_eq!(
        ValueDistribution::power(1.0).unwrap().second_order_stat(3).unwrap(),
        0.5,
        max_relative = 1e-12
    );
    assert_relative_eq!(
        ValueDistribution::exponential(1.0)
            .unwrap()
            .second_order_stat(2)
            .unwrap(),
        0.5,
        max_relative = 1e-12
    );
    assert!(ValueDistribution::uniform(0.0, 1.0)
        .unwrap()
        .second_order_stat(1)
        .is_err());
}

#[test]
fn second_order_stat_matches_monte_carlo() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let samples = 200_000;
    for d in families() {
        for n in 2..=10 {
            let mut draws = vec![0.0; n];
            let (mut s, mut ss) = (0.0, 0.0);
            for _ in 0..samples {
                draws.iter_mut().for_each(|x| *x = draw(&d, &mut rng));
                draws.sort_by(f64::total_cmp);
                let y2 = draws[n - 2];
                s += y2;
                ss += y2 * y2;
            }
            let m = samples as f64;
            let mean = s / m;
            let se = ((ss / m - mean * mean) / (m - 1.0)).sqrt();
            let exact = d.second_order_stat(n).unwrap();
            assert!(
                (mean - exact).abs() <= 4.0 * se,
                "{d:?} n={n}: {mean} vs {exact} (se {se})"
            );
        }
    }
}

#[test]
fn derived_price_to_beat_has_the_law_of_the_max() {
    let samples = 1_000_000;
    for (k, d) in [(1, families()[0]), (3, families()[4]), (4, families()[5])] {
        let ptb = PriceToBeat::derived(k, d, BidStrategy::linear(1.0).unwrap());
        let mut rng = rng_stream(77, k as u64);
        let mut xs: Vec<f64> = (0..samples).map(|_| ptb.sample(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let n = samples as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = d.cdf(x).powi(k as i32);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 1.95 / n.sqrt(), "k={k}: KS statistic {ks}");
        for x in [0.1, 0.5, 1.0, 2.0] {
            assert_relative_eq!(
                ptb.win_probability(x),
                d.cdf_left(x).powi(k as i32),
                max_relative = 1e-12
            );
        }
    }
}

#[test]
fn constructors_reject_invalid_parameters() {
    assert!(ValueDistribution::power(0.0).is_err());
    assert!(ValueDistribution::power(f64::NAN).is_err());
    assert!(ValueDistribution::uniform(1.0, 1.0).is_err());
    assert!(ValueDistribution::exponential(-1.0).is_err());
    assert!(ValueDistribution::log_normal(0.0, 0.0).is_err());
}

#[test]
fn tagged_records_parse_strictly() {
    let d: ValueDistribution = serde_json::from_str(r#"{"family":"log_normal","mu":0.0,"sigma":1.0}"#).unwrap();
    assert_eq!(d, ValueDistribution::log_normal(0.0, 1.0).unwrap());
    assert!(serde_json::from_str::<ValueDistribution>(r#"{"family":"uniform","lo":0,"hi":1,"x":2}"#).is_err());
    let p: PriceToBeat = serde_json::from_str(
        r#"{"kind":"derived","opponents":2,"values":{"family":"power","a":1.0},"strategy":{"slope":0.5}}"#,
    )
    .unwrap();
    assert_eq!(
        p,
        PriceToBeat::derived(
            2,
            ValueDistribution::power(1.0).unwrap(),
            BidStrategy::linear(0.5).unwrap()
        )
    );
}
