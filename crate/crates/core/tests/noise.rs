mod common;

use common::{
    dense_qaoa_state, expm, ising_part, random_couplings, sigma_z, total, x_basis_probabilities,
    y_basis_probabilities, Mixer,
};
use ising_qaoa::ionphysics::{equilibrium_positions, transverse_modes, TrapConfig};
use ising_qaoa::model::{build_power_law, IsingModel};
use ising_qaoa::noise::{
    energy_from_distributions, estimate_energy_from_shots, evolve_drifted, evolve_with_light_shift,
    noisy_experiment, noisy_experiment_scan, noisy_measure, phonon_flip_probability,
    sample_drifted_params, sample_with_flips, trap_phonon_flips, Basis, DriftSample,
    FlipProbability, NoiseModel, SampleSet, ShotPlan,
};
use ising_qaoa::rng::rng_from_seed;
use ising_qaoa::simulator::{
    output_distribution, y_basis_distribution, AngleSchedule, QaoaSimulator,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn model(n: usize, b: f64) -> IsingModel {
    IsingModel::new(build_power_law(n, 1.0, 1.0).unwrap(), b).unwrap()
}

#[test]
fn light_shift_layer_matches_dense_exponential() {
    let mut rng = rng_from_seed(31);
    for &(bz, gamma) in &[(0.3, 0.7), (-0.8, 1.9), (0.05, 0.2)] {
        let j = random_couplings(4, &mut rng);
        let m = IsingModel::new(j.clone(), -0.5).unwrap();
        let psi = QaoaSimulator::new(&m)
            .unwrap()
            .prepare(&AngleSchedule::single(0.4, 0.9).unwrap())
            .unwrap();
        let out = evolve_with_light_shift(&psi, &j, bz, gamma, 16).unwrap();

        let v = dense_qaoa_state(&j, -0.5, &[0.4], &[0.9], Mixer::Field);
        let h = ising_part(&j) + total(&sigma_z(), 4) * Complex64::new(bz, 0.0);
        let w = expm(&h, gamma) * v;
        for (a, e) in output_distribution(&out)
            .iter()
            .zip(x_basis_probabilities(&w, 4))
        {
            assert!((a - e).abs() < 1e-8);
        }
        for (a, e) in y_basis_distribution(&out)
            .iter()
            .zip(y_basis_probabilities(&w, 4))
        {
            assert!((a - e).abs() < 1e-8, "bz {bz}: {a} vs {e}");
        }
    }
}

#[test]
fn light_shift_respects_the_cap() {
    let m = model(6, -0.3);
    let psi = QaoaSimulator::new(&m)
        .unwrap()
        .prepare(&AngleSchedule::single(0.4, 0.9).unwrap())
        .unwrap();
    assert!(matches!(
        evolve_with_light_shift(&psi, m.couplings(), 0.2, 0.5, 5),
        Err(ising_qaoa::Error::QubitCap { n: 6, cap: 5 })
    ));
    // without a stray field no propagator is needed
    assert!(evolve_with_light_shift(&psi, m.couplings(), 0.0, 0.5, 5).is_ok());
}

#[test]
fn drifted_coupling_scale_is_a_rescaled_model() {
    let base = model(7, -0.4);
    let schedule = AngleSchedule::new(vec![0.3, 0.5], vec![0.8, 0.4]).unwrap();
    let drift = DriftSample {
        j0_factor: 1.07,
        bz_over_j0: 0.0,
    };
    let a = evolve_drifted(&base, &schedule, drift, 16).unwrap();
    let scaled = IsingModel::new(base.couplings().scaled(1.07).unwrap(), -0.4).unwrap();
    let b = QaoaSimulator::new(&scaled)
        .unwrap()
        .prepare(&schedule)
        .unwrap();
    assert!((a.inner(&b).unwrap().norm() - 1.0).abs() < 1e-12);
}

#[test]
fn drift_draws_have_the_configured_spread() {
    let noise = NoiseModel::default();
    let draws: Vec<DriftSample> = (0..4000)
        .map(|k| sample_drifted_params(&noise, 1000 + k))
        .collect();
    let stats = |v: Vec<f64>| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let s = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt();
        (m, s)
    };
    let (mj, sj) = stats(draws.iter().map(|d| d.j0_factor).collect());
    let (mb, sb) = stats(draws.iter().map(|d| d.bz_over_j0).collect());
    assert!((mj - 1.0).abs() < 4.0 * 0.02 / 4000f64.sqrt());
    assert!((sj / 0.02 - 1.0).abs() < 0.06);
    assert!(mb.abs() < 4.0 * 0.3 / 4000f64.sqrt());
    assert!((sb / 0.3 - 1.0).abs() < 0.06);
    assert_eq!(
        sample_drifted_params(&noise, 7),
        sample_drifted_params(&noise, 7)
    );
}

#[test]
fn half_flips_randomize_every_bit() {
    let n = 5;
    let mut dist = vec![0.0; 1 << n];
    dist[0b10110] = 1.0;
    let shots = 20_000;
    let s = sample_with_flips(&dist, n, shots, &[0.5; 5], Basis::X, 3).unwrap();
    for i in 0..n {
        let ones = s.shots().iter().filter(|&&x| (x >> i) & 1 == 1).count() as f64 / shots as f64;
        assert!(
            (ones - 0.5).abs() < 4.0 * 0.5 / (shots as f64).sqrt(),
            "bit {i}: {ones}"
        );
    }
}

#[test]
fn certain_flips_complement_and_no_flips_copy() {
    let n = 4;
    let mut dist = vec![0.0; 1 << n];
    dist[0b0011] = 1.0;
    let none = sample_with_flips(&dist, n, 300, &[0.0; 4], Basis::Y, 1).unwrap();
    assert!(none.shots().iter().all(|&x| x == 0b0011));
    let all = sample_with_flips(&dist, n, 300, &[1.0; 4], Basis::Y, 1).unwrap();
    assert!(all.shots().iter().all(|&x| x == 0b1100));
}

#[test]
fn detection_error_adds_to_phonon_flips() {
    let noise = NoiseModel {
        p_flip: FlipProbability::PerIon(vec![0.01, 0.02, 0.03]),
        detection_error: 0.03,
        ..NoiseModel::default()
    };
    let p = noise.flip_probabilities(3).unwrap();
    for (a, e) in p.iter().zip([0.04, 0.05, 0.06]) {
        assert!((a - e).abs() < 1e-15);
    }
    assert!(noise.flip_probabilities(4).is_err());
    let bad = NoiseModel {
        detection_error: 1.5,
        ..NoiseModel::default()
    };
    assert!(bad.validate().is_err());
}

#[test]
fn noise_config_json_rejects_unknown_fields() {
    let text = r#"{"p_flip": 0.05, "detection_error": 0.03}"#;
    let noise: NoiseModel = serde_json::from_str(text).unwrap();
    assert_eq!(noise.p_flip, FlipProbability::Uniform(0.05));
    assert_eq!(noise.drift_block, 500);
    assert!(serde_json::from_str::<NoiseModel>(r#"{"p_flp": 0.05}"#).is_err());
}

#[test]
fn exact_distributions_reproduce_the_simulated_energy() {
    let m = model(6, -0.35);
    let sim = QaoaSimulator::new(&m).unwrap();
    let psi = sim
        .prepare(&AngleSchedule::new(vec![0.2, 0.4], vec![1.1, 0.7]).unwrap())
        .unwrap();
    let e = energy_from_distributions(&output_distribution(&psi), &y_basis_distribution(&psi), &m)
        .unwrap();
    assert!((e - sim.expectation_h(&psi).unwrap()).abs() < 1e-10);
}

#[test]
fn shot_estimate_is_consistent_and_its_error_shrinks() {
    let m = model(6, -0.35);
    let sim = QaoaSimulator::new(&m).unwrap();
    let psi = sim
        .prepare(&AngleSchedule::single(0.3, 0.9).unwrap())
        .unwrap();
    let exact = sim.expectation_h(&psi).unwrap();
    let (px, py) = (output_distribution(&psi), y_basis_distribution(&psi));
    let ideal = NoiseModel::ideal();
    let estimate = |shots: usize, seed: u64| {
        let x = noisy_measure(&px, Basis::X, shots, &ideal, seed).unwrap();
        let y = noisy_measure(&py, Basis::Y, shots, &ideal, seed + 1).unwrap();
        estimate_energy_from_shots(&x, Some(&y), &m).unwrap()
    };
    let small = estimate(2_000, 10);
    let large = estimate(32_000, 20);
    assert!((small.energy - exact).abs() < 4.0 * small.stderr);
    assert!((large.energy - exact).abs() < 4.0 * large.stderr);
    let ratio = small.stderr / large.stderr;
    assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
}

#[test]
fn field_free_estimate_needs_no_y_shots() {
    let m = model(5, 0.0);
    let dist = output_distribution(
        &QaoaSimulator::new(&m)
            .unwrap()
            .prepare(&AngleSchedule::single(0.3, 0.3).unwrap())
            .unwrap(),
    );
    let x = noisy_measure(&dist, Basis::X, 500, &NoiseModel::ideal(), 2).unwrap();
    assert!(estimate_energy_from_shots(&x, None, &m).is_ok());
    assert!(estimate_energy_from_shots(&x, None, &model(5, -0.2)).is_err());
}

#[test]
fn sample_csv_round_trips() {
    let s = SampleSet::new(4, Basis::X, vec![0, 5, 15, 8], Some(1)).unwrap();
    let csv = s.to_csv();
    assert!(csv.starts_with("s0,s1,s2,s3\n0,0,0,0\n1,0,1,0\n"));
    let back = SampleSet::from_csv(csv.as_bytes(), Basis::X).unwrap();
    assert_eq!(back.shots(), s.shots());
    assert!(SampleSet::from_csv("s0,s1\n0,1\n1\n".as_bytes(), Basis::X).is_err());
    assert!(SampleSet::new(3, Basis::X, vec![8], None).is_err());
}

#[test]
fn experiments_are_reproducible_per_seed() {
    let m = model(6, -0.3);
    let schedule = AngleSchedule::single(0.3, 0.9).unwrap();
    let noise = NoiseModel {
        p_flip: FlipProbability::Uniform(0.05),
        detection_error: 0.03,
        ..NoiseModel::default()
    };
    let plan = ShotPlan::default();
    let a = noisy_experiment(&m, &schedule, plan, &noise, 5).unwrap();
    let b = noisy_experiment(&m, &schedule, plan, &noise, 5).unwrap();
    let c = noisy_experiment(&m, &schedule, plan, &noise, 6).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.x_samples, c.x_samples);
    assert_eq!(a.x_samples.len(), 1100);
    assert_eq!(a.y_samples.as_ref().unwrap().len(), 800);
    // x and y shots must not share a random stream
    assert_ne!(
        &a.x_samples.shots()[..800],
        a.y_samples.as_ref().unwrap().shots()
    );
    let scan = noisy_experiment_scan(&m, &[schedule.clone(), schedule], plan, &noise, 5).unwrap();
    assert_ne!(scan[0].x_samples, scan[1].x_samples);
}

#[test]
fn bit_flips_raise_the_measured_energy_near_the_optimum() {
    let m = model(8, -0.3);
    let schedule = AngleSchedule::single(0.2, 1.0).unwrap();
    let flips = NoiseModel {
        p_flip: FlipProbability::Uniform(0.08),
        detection_error: 0.03,
        ..NoiseModel::ideal()
    };
    let plan = ShotPlan {
        shots_x: 8000,
        shots_y: 8000,
        ..ShotPlan::default()
    };
    let ideal = noisy_experiment(&m, &schedule, plan, &NoiseModel::ideal(), 1).unwrap();
    let noisy = noisy_experiment(&m, &schedule, plan, &flips, 1).unwrap();
    assert!(ideal.ideal_energy < 0.0);
    assert!(
        noisy.estimate.energy
            > ideal.estimate.energy + 3.0 * (noisy.estimate.stderr + ideal.estimate.stderr)
    );
}

#[test]
fn phonon_flips_for_two_ions_by_hand() {
    let (nu_t, nu_a, omega, mu, nu_r): (f64, f64, f64, f64, f64) = (4.0e6, 0.5e6, 3e5, 4.05e6, 2e4);
    let modes = transverse_modes(&equilibrium_positions(2).unwrap(), nu_t, nu_a).unwrap();
    let f = phonon_flip_probability(&modes, omega, mu, nu_r, nu_t, 1e3).unwrap();
    let eta2 = nu_r / nu_t;
    let tilt = (nu_t * nu_t - nu_a * nu_a).sqrt();
    let expected =
        0.5 * eta2 * omega * omega * (1.0 / (mu - nu_t).powi(2) + 1.0 / (mu - tilt).powi(2));
    for p in &f.per_ion {
        assert!((p - expected).abs() < 1e-12 * expected);
    }
    assert!(
        (f.com_term - 0.5 * eta2 * omega * omega / (mu - nu_t).powi(2)).abs() < 1e-12 * expected
    );
}

#[test]
fn reference_trap_flips_are_a_few_percent() {
    let f = trap_phonon_flips(&TrapConfig::reference("system2_n12").unwrap()).unwrap();
    assert_eq!(f.per_ion.len(), 12);
    assert!(f.mean() > 0.005 && f.mean() < 0.2, "{}", f.mean());
    assert!(f.com_term < 0.1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sampling_only_returns_supported_strings(seed in any::<u64>(), n in 1usize..7) {
        let mut rng = rng_from_seed(seed);
        use rand::Rng;
        let mut dist: Vec<f64> = (0..1 << n).map(|_| if rng.random::<f64>() < 0.3 { rng.random::<f64>() } else { 0.0 }).collect();
        dist[0] += 0.1;
        let total: f64 = dist.iter().sum();
        dist.iter_mut().for_each(|p| *p /= total);
        let s = sample_with_flips(&dist, n, 500, &vec![0.0; n], Basis::X, seed).unwrap();
        prop_assert!(s.shots().iter().all(|&x| dist[x as usize] > 0.0));
        prop_assert_eq!(s, sample_with_flips(&dist, n, 500, &vec![0.0; n], Basis::X, seed).unwrap());
    }
}
