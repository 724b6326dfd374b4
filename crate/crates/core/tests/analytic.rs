mod common;

use common::{dense_qaoa_energy, random_couplings, Mixer};
use ising_qaoa::analytic::{
    qaoa1_energy, qaoa1_energy_rotation, qaoa1_model_energy, random_angle_baseline,
    sigma_eta_estimate, size_factor, AngleBox,
};
use ising_qaoa::metrics::eta;
use ising_qaoa::model::{
    build_compound, build_power_law, CouplingMatrix, IsingModel, MixerConvention,
};
use ising_qaoa::rng::rng_from_seed;
use ising_qaoa::simulator::{extremal_energies, initial_state, AngleSchedule, QaoaSimulator};
use rand::Rng;

fn simulated(model: &IsingModel, beta: f64, gamma: f64) -> f64 {
    QaoaSimulator::new(model)
        .unwrap()
        .energy(&AngleSchedule::single(gamma, beta).unwrap())
        .unwrap()
}

#[test]
fn two_and_three_site_closed_forms_match_dense_oracle() {
    // small cases first: these fix the pair convention
    let j2 = CouplingMatrix::from_rows(&[vec![0.0, 0.8], vec![0.8, 0.0]]).unwrap();
    let j3 = CouplingMatrix::from_rows(&[
        vec![0.0, 1.0, 0.3],
        vec![1.0, 0.0, 0.6],
        vec![0.3, 0.6, 0.0],
    ])
    .unwrap();
    for j in [j2, j3] {
        for &(b, beta, gamma) in &[(-0.3, 0.7, 0.4), (-1.0, 2.1, 1.3), (0.5, 0.2, 2.9)] {
            let e = qaoa1_energy(&j, b, beta, gamma).e_total;
            let d = dense_qaoa_energy(&j, b, &[gamma], &[beta], Mixer::Field);
            assert!((e - d).abs() < 1e-12, "{e} vs {d}");
        }
    }
}

#[test]
fn matches_simulator_on_random_eight_site_instances() {
    let mut rng = rng_from_seed(21);
    let model = IsingModel::new(random_couplings(8, &mut rng), -0.3).unwrap();
    for _ in 0..100 {
        let (beta, gamma) = (
            rng.random_range(0.0..std::f64::consts::PI),
            rng.random_range(0.0..std::f64::consts::PI),
        );
        let a = qaoa1_model_energy(&model, beta, gamma).e_total;
        assert!((a - simulated(&model, beta, gamma)).abs() < 1e-9);
    }
}

#[test]
fn unit_mixer_matches_simulator_and_dense_oracle() {
    let mut rng = rng_from_seed(22);
    for n in [3, 5, 6] {
        let j = random_couplings(n, &mut rng);
        let model = IsingModel::new(j.clone(), 0.0)
            .unwrap()
            .with_mixer(MixerConvention::Unit);
        let (beta, gamma) = (rng.random_range(0.0..1.5), rng.random_range(0.0..1.5));
        let a = qaoa1_model_energy(&model, beta, gamma).e_total;
        assert!((a - simulated(&model, beta, gamma)).abs() < 1e-10);
        assert!((a - dense_qaoa_energy(&j, 0.0, &[gamma], &[beta], Mixer::Unit)).abs() < 1e-10);
    }
}

#[test]
fn periodic_in_the_rotation_angle() {
    let j = build_power_law(6, 1.0, 1.0).unwrap();
    for &(theta, gamma) in &[(0.3, 0.4), (1.1, 2.0)] {
        let a = qaoa1_energy_rotation(&j, -0.4, theta, gamma).e_total;
        let b = qaoa1_energy_rotation(&j, -0.4, theta + std::f64::consts::PI, gamma).e_total;
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn vanishing_terms() {
    let j = build_compound(7, 1.0, 0.3, 0.2).unwrap();
    let at_half_pi = qaoa1_energy_rotation(&j, -0.3, std::f64::consts::FRAC_PI_2, 0.8);
    assert!(at_half_pi.e_ii.abs() < 1e-14);
    let at_zero_gamma = qaoa1_energy(&j, -0.3, 0.9, 0.0);
    assert_eq!(at_zero_gamma.e_iii, 0.0);
    assert!((at_zero_gamma.e_total - at_zero_gamma.e_i).abs() < 1e-15);
}

#[test]
fn sigma_estimate_size_factor() {
    assert!((size_factor(20) - 0.02).abs() < 0.005);
    let s = sigma_eta_estimate(1.0, -0.3, 20, 10.0).unwrap();
    assert!((s - (1.72f64).sqrt() / 10.0 * size_factor(20)).abs() < 1e-15);
}

#[test]
fn degenerate_box_has_zero_spread() {
    let model = IsingModel::new(build_power_law(6, 1.0, 1.0).unwrap(), -0.3).unwrap();
    let bounds = extremal_energies(&model, false).unwrap();
    let point = AngleBox {
        beta: (0.4, 0.4),
        gamma: (0.7, 0.7),
    };
    let stats = random_angle_baseline(&model, &bounds, 200, point, 5).unwrap();
    assert!(stats.std_eta < 1e-15);
    let expected = eta(qaoa1_model_energy(&model, 0.4, 0.7).e_total, &bounds).unwrap();
    assert!((stats.mean_eta - expected).abs() < 1e-12);
}

#[test]
fn baseline_is_deterministic_per_seed() {
    let model = IsingModel::new(build_power_law(8, 1.0, 1.1).unwrap(), -0.3).unwrap();
    let bounds = extremal_energies(&model, false).unwrap();
    let a = random_angle_baseline(&model, &bounds, 500, AngleBox::default(), 1).unwrap();
    let b = random_angle_baseline(&model, &bounds, 500, AngleBox::default(), 1).unwrap();
    let c = random_angle_baseline(&model, &bounds, 500, AngleBox::default(), 2).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn random_mean_compared_with_initial_state() {
    // Random angles scramble the initial product state: the mean energy sits
    // near the middle of the spectrum rather than at the initial-state value.
    let model = IsingModel::new(build_power_law(10, 1.0, 1.1).unwrap(), -0.3).unwrap();
    let bounds = extremal_energies(&model, false).unwrap();
    let sim = QaoaSimulator::new(&model).unwrap();
    let eta0 = eta(
        sim.expectation_h(&initial_state(10).unwrap()).unwrap(),
        &bounds,
    )
    .unwrap();
    let stats = random_angle_baseline(&model, &bounds, 4000, AngleBox::default(), 3).unwrap();
    assert!(eta0 > 0.5);
    let mid = eta(0.0, &bounds).unwrap();
    assert!(
        (stats.mean_eta - mid).abs() < 0.05,
        "mean {} vs mid {mid}",
        stats.mean_eta
    );
    assert!(stats.mean_eta < eta0);
}
