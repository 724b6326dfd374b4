use ising_qaoa::metrics::{
    apply_bubbles, coarse_compare, coarse_grain, eta, kl_divergence, shot_floor, tvd,
};
use ising_qaoa::noise::{sample_with_flips, Basis, SampleSet};
use ising_qaoa::rng::rng_from_seed;
use ising_qaoa::simulator::SpectrumBounds;
use ising_qaoa::Error;
use proptest::prelude::*;
use rand::Rng;

fn random_distribution(len: usize, seed: u64, sparsity: f64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    let mut v: Vec<f64> = (0..len)
        .map(|_| {
            if rng.random::<f64>() < sparsity {
                0.0
            } else {
                rng.random::<f64>().powi(3)
            }
        })
        .collect();
    v[0] += 1e-3;
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

fn peaked(n: usize) -> Vec<f64> {
    // weight decays with the Hamming weight of the string
    let mut v: Vec<f64> = (0..1u64 << n)
        .map(|x| 0.3f64.powi(x.count_ones() as i32))
        .collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

#[test]
fn eta_maps_the_spectrum_onto_the_unit_interval() {
    let b = SpectrumBounds::new(-7.5, 12.0).unwrap();
    assert_eq!(eta(-7.5, &b).unwrap(), 1.0);
    assert_eq!(eta(12.0, &b).unwrap(), 0.0);
    assert!((eta(2.25, &b).unwrap() - 0.5).abs() < 1e-15);
    assert!(matches!(
        eta(-8.0, &b),
        Err(Error::InconsistentEnergy { .. })
    ));
    assert!(matches!(
        eta(12.5, &b),
        Err(Error::InconsistentEnergy { .. })
    ));
    assert_eq!(eta(-7.5 - 1e-10, &b).unwrap(), 1.0);
}

#[test]
fn kl_matches_a_direct_sum() {
    let p = [0.5, 0.25, 0.25, 0.0];
    let q = [0.25, 0.25, 0.25, 0.25];
    let expected = 0.5 * (2.0f64).ln();
    assert!((kl_divergence(&p, &q, 0.0).unwrap() - expected).abs() < 1e-15);
}

#[test]
fn kl_floor_patches_only_empty_theory_bins() {
    let p = [0.5, 0.5, 0.0];
    let q = [1.0, 0.0, 0.0];
    assert_eq!(kl_divergence(&p, &q, 0.0).unwrap(), f64::INFINITY);
    let floor = shot_floor(100);
    assert!((floor - 1e-3).abs() < 1e-18);
    let patched = [1.0 / (1.0 + floor), floor / (1.0 + floor)];
    let expected = 0.5 * (0.5 / patched[0]).ln() + 0.5 * (0.5 / patched[1]).ln();
    assert!((kl_divergence(&p, &q, floor).unwrap() - expected).abs() < 1e-12);
    assert!(kl_divergence(&p, &q, 1.0).is_err());
}

#[test]
fn distances_reject_bad_inputs() {
    assert!(matches!(
        tvd(&[0.5, 0.5], &[1.0]),
        Err(Error::DimensionMismatch { .. })
    ));
    assert!(matches!(
        tvd(&[0.5, 0.6], &[0.5, 0.5]),
        Err(Error::NotNormalized(_))
    ));
    assert!(tvd(&[1.5, -0.5], &[0.5, 0.5]).is_err());
}

#[test]
fn bubbles_partition_the_observed_strings() {
    let n = 10;
    let samples = sample_with_flips(&peaked(n), n, 5000, &[0.03; 10], Basis::X, 8).unwrap();
    let set = coarse_grain(&samples, 250).unwrap();
    assert!(!set.is_empty());
    let total_shots: usize = set.bubbles().iter().map(|b| b.shots).sum();
    assert_eq!(total_shots, samples.len());
    let members: usize = set.bubbles().iter().map(|b| b.members).sum();
    assert!(members <= 1 << n);
    for (&x, &c) in &samples.counts() {
        let b = set
            .bubble_of(x)
            .expect("observed strings are always assigned");
        assert!(c <= set.bubbles()[b].shots);
        let bubble = &set.bubbles()[b];
        assert!((x ^ bubble.center).count_ones() <= bubble.radius);
    }
    // recount membership from the assignment
    let mut recount = vec![0usize; set.len()];
    for x in 0..1u64 << n {
        if let Some(b) = set.bubble_of(x) {
            recount[b] += 1;
        }
    }
    assert_eq!(
        recount,
        set.bubbles().iter().map(|b| b.members).collect::<Vec<_>>()
    );
    assert_eq!(coarse_grain(&samples, 250).unwrap(), set);
    let json = set.to_json().unwrap();
    assert!(json.contains("mean_radius"));
}

#[test]
fn single_string_samples_make_one_point_bubble() {
    let s = SampleSet::new(6, Basis::X, vec![9; 40], None).unwrap();
    let set = coarse_grain(&s, 10).unwrap();
    assert_eq!(set.len(), 1);
    assert_eq!(set.bubbles()[0].radius, 0);
    assert_eq!(set.mean_radius(), 0.0);
}

#[test]
fn coarse_comparison_separates_right_and_wrong_theories() {
    let n = 10;
    let truth = peaked(n);
    let samples = sample_with_flips(&truth, n, 10_000, &[0.0; 10], Basis::X, 4).unwrap();
    let uniform = vec![1.0 / 1024.0; 1024];
    let right = coarse_compare(&samples, &truth, 300).unwrap();
    let wrong = coarse_compare(&samples, &uniform, 300).unwrap();
    assert!(right.tvd < 0.05, "{right:?}");
    assert!(wrong.tvd > 3.0 * right.tvd);
    assert!(wrong.kl > 3.0 * right.kl);
    assert!(right.mean_radius > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tvd_is_a_metric(s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>(), n in 1usize..7) {
        let (p, q, r) = (random_distribution(1 << n, s1, 0.3), random_distribution(1 << n, s2, 0.3), random_distribution(1 << n, s3, 0.3));
        let d = tvd(&p, &q).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d));
        prop_assert!((d - tvd(&q, &p).unwrap()).abs() < 1e-15);
        prop_assert_eq!(tvd(&p, &p).unwrap(), 0.0);
        prop_assert!(tvd(&p, &r).unwrap() <= d + tvd(&q, &r).unwrap() + 1e-12);
    }

    #[test]
    fn kl_is_non_negative_and_bounds_tvd(s1 in any::<u64>(), s2 in any::<u64>(), n in 1usize..7) {
        let p = random_distribution(1 << n, s1, 0.3);
        let q = random_distribution(1 << n, s2, 0.0);
        let kl = kl_divergence(&p, &q, 0.0).unwrap();
        prop_assert!(kl >= 0.0);
        prop_assert!(kl_divergence(&p, &p, 0.0).unwrap().abs() < 1e-12);
        // Pinsker
        let d = tvd(&p, &q).unwrap();
        prop_assert!(d <= (kl / 2.0).sqrt() + 1e-12);
    }

    #[test]
    fn coarse_graining_contracts_both_distances(
        s1 in any::<u64>(),
        s2 in any::<u64>(),
        seed in any::<u64>(),
        target in 1usize..200,
    ) {
        let n = 8;
        let p = random_distribution(1 << n, s1, 0.5);
        let q = random_distribution(1 << n, s2, 0.0);
        let samples = sample_with_flips(&p, n, 800, &[0.02; 8], Basis::X, seed).unwrap();
        let set = coarse_grain(&samples, target).unwrap();
        let (cp, cq) = (apply_bubbles(&set, &p).unwrap(), apply_bubbles(&set, &q).unwrap());
        prop_assert!((cp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(tvd(&cp, &cq).unwrap() <= tvd(&p, &q).unwrap() + 1e-12);
        prop_assert!(kl_divergence(&cp, &cq, 0.0).unwrap() <= kl_divergence(&p, &q, 0.0).unwrap() + 1e-12);
    }
}
