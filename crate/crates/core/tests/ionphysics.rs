use ising_qaoa::ionphysics::{
    coupling_single_family, coupling_two_families, equilibrium_positions, fit_compound,
    fit_power_law, transverse_modes, yb171_recoil_355nm, FitForm, TrapConfig, DEFAULT_GUARD_BAND,
    REFERENCE_CONFIGS,
};
use ising_qaoa::model::{build_compound, build_power_law};
use ising_qaoa::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Transverse Hessian in units of the axial frequency squared, built from scratch.
fn hessian(u: &[f64], ratio2: f64) -> DMatrix<f64> {
    let n = u.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            ratio2
                - (0..n)
                    .filter(|&k| k != i)
                    .map(|k| 1.0 / (u[i] - u[k]).abs().powi(3))
                    .sum::<f64>()
        } else {
            1.0 / (u[i] - u[j]).abs().powi(3)
        }
    })
}

#[test]
fn equilibrium_balances_the_forces() {
    for n in [2, 3, 5, 12, 20, 40] {
        let u = equilibrium_positions(n).unwrap();
        assert!(u.windows(2).all(|w| w[1] > w[0]));
        for i in 0..n {
            let coulomb: f64 = (0..n)
                .filter(|&k| k != i)
                .map(|k| (u[i] - u[k]).signum() / (u[i] - u[k]).powi(2))
                .sum();
            assert!((u[i] - coulomb).abs() < 1e-10, "n={n} ion {i}");
            assert!((u[i] + u[n - 1 - i]).abs() < 1e-10);
        }
    }
}

#[test]
fn modes_are_orthonormal_and_ordered() {
    let u = equilibrium_positions(15).unwrap();
    let modes = transverse_modes(&u, 4.4e6, 0.5e6).unwrap();
    let n = modes.n();
    for a in 0..n {
        for c in 0..n {
            let dot: f64 = (0..n).map(|i| modes.b(i, a) * modes.b(i, c)).sum();
            assert!((dot - if a == c { 1.0 } else { 0.0 }).abs() < 1e-12);
        }
    }
    let nu = modes.frequencies();
    assert!(nu.windows(2).all(|w| w[0] >= w[1]));
    // centre of mass mode sits at the trap frequency with uniform participation
    assert!((nu[0] - 4.4e6).abs() < 1e-6 * 4.4e6);
    for i in 0..n {
        assert!((modes.b(i, 0) - 1.0 / (n as f64).sqrt()).abs() < 1e-10);
    }
}

#[test]
fn two_ion_coupling_closed_form() {
    let (nu_t, nu_a, omega, mu, nu_r) = (4.0e6, 0.5e6, 3e5, 4.05e6, 2e4);
    let modes = transverse_modes(&equilibrium_positions(2).unwrap(), nu_t, nu_a).unwrap();
    let j = coupling_single_family(&modes, omega, mu, nu_r, DEFAULT_GUARD_BAND).unwrap();
    let tilt2 = nu_t * nu_t - nu_a * nu_a;
    let expected =
        omega * omega * nu_r / 2.0 * (1.0 / (mu * mu - nu_t * nu_t) - 1.0 / (mu * mu - tilt2));
    assert!((j.get(0, 1) - expected).abs() < 1e-9 * expected.abs());
    assert!(j.get(0, 1) > 0.0);
}

#[test]
fn couplings_equal_the_resolvent_of_the_hessian() {
    // Σ_m b_im b_jm / (μ² − ν_m²) is the (i, j) entry of (μ² − ν_a² K)⁻¹
    let (nu_t, nu_a, omega, mu, nu_r): (f64, f64, f64, f64, f64) =
        (4.7e6, 0.6e6, 4.4e5, 4.745e6, 1.85e4);
    for n in [3, 8, 12] {
        let u = equilibrium_positions(n).unwrap();
        let k = hessian(&u, (nu_t / nu_a).powi(2));
        let resolvent = (DMatrix::identity(n, n) * (mu * mu) - k * (nu_a * nu_a))
            .try_inverse()
            .unwrap();
        let modes = transverse_modes(&u, nu_t, nu_a).unwrap();
        let j = coupling_single_family(&modes, omega, mu, nu_r, DEFAULT_GUARD_BAND).unwrap();
        for i in 0..n {
            for l in (i + 1)..n {
                let expected = omega * omega * nu_r * resolvent[(i, l)];
                assert!(
                    (j.get(i, l) - expected).abs() < 1e-8 * expected.abs(),
                    "n={n} ({i},{l})"
                );
            }
        }
    }
}

#[test]
fn undriven_family_adds_nothing() {
    let u = equilibrium_positions(6).unwrap();
    let my = transverse_modes(&u, 4.4e6, 0.5e6).unwrap();
    let mz = transverse_modes(&u, 4.26e6, 0.5e6).unwrap();
    let single = coupling_single_family(&my, 4e5, 4.445e6, 1e4, DEFAULT_GUARD_BAND).unwrap();
    let both =
        coupling_two_families(&my, &mz, 4e5, 0.0, 4.445e6, 1e4, 0.0, DEFAULT_GUARD_BAND).unwrap();
    assert_eq!(single, both);
}

#[test]
fn drive_near_a_mode_is_rejected() {
    let u = equilibrium_positions(5).unwrap();
    let modes = transverse_modes(&u, 4.4e6, 0.5e6).unwrap();
    let mu = modes.frequencies()[2] + 200.0;
    assert!(matches!(
        coupling_single_family(&modes, 4e5, mu, 1e4, DEFAULT_GUARD_BAND),
        Err(Error::Resonance { mode: 2, .. })
    ));
}

#[test]
fn recoil_frequency_of_ytterbium() {
    let nu = yb171_recoil_355nm();
    assert!((nu - 18.5e3).abs() < 0.2e3, "{nu}");
}

#[test]
fn reference_configs_give_antiferromagnetic_decaying_couplings() {
    for name in REFERENCE_CONFIGS.iter().filter(|n| **n != "system2_n30") {
        let cfg = TrapConfig::reference(name).unwrap();
        assert!((cfg.detuning() - 45e3).abs() < 1e-6);
        let j = cfg.couplings().unwrap();
        let means = j.separation_means();
        assert!(means.iter().all(|&m| m > 0.0), "{name}");
        assert!(means.windows(2).all(|w| w[1] < w[0]), "{name}");
        let fit = fit_compound(&j).unwrap();
        assert!(fit.residual < 0.05, "{name}: {fit:?}");
    }
    assert!(TrapConfig::reference("system3_n12").is_none());
    // 30 ions at 0.36 MHz buckle along z (4.26 MHz) in a harmonic axial well
    let buckled = TrapConfig::reference("system2_n30").unwrap();
    assert!(matches!(
        buckled.couplings(),
        Err(Error::ZigZagInstability(_))
    ));
}

#[test]
fn trap_config_json_is_strict() {
    let cfg = TrapConfig::reference("system2_n12").unwrap();
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(serde_json::from_str::<TrapConfig>(&text).unwrap(), cfg);
    let extra = text.replacen('{', "{\"colour\":1,", 1);
    assert!(serde_json::from_str::<TrapConfig>(&extra).is_err());
    let mut bad = cfg.clone();
    bad.nu_axial = -1.0;
    assert!(bad.couplings().is_err());
}

#[test]
fn fits_need_positive_couplings_and_enough_ions() {
    assert!(fit_power_law(&build_power_law(3, 1.0, 1.0).unwrap()).is_err());
    // the end-to-end pair is uncoupled
    let rows: Vec<Vec<f64>> = (0..5usize)
        .map(|i| {
            (0..5usize)
                .map(|k| if i.abs_diff(k) % 4 == 0 { 0.0 } else { 1.0 })
                .collect()
        })
        .collect();
    let j = ising_qaoa::model::CouplingMatrix::from_rows(&rows).unwrap();
    assert!(matches!(
        fit_compound(&j),
        Err(Error::NonPositiveCoupling { separation: 4, .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn power_law_fit_round_trips(n in 4usize..30, j0 in 0.1f64..5.0, alpha in 0.0f64..3.0) {
        let fit = fit_power_law(&build_power_law(n, j0, alpha).unwrap()).unwrap();
        prop_assert!((fit.j0 - j0).abs() < 1e-6 * j0);
        match fit.form {
            FitForm::PowerLaw { alpha: a } => prop_assert!((a - alpha).abs() < 1e-6),
            _ => prop_assert!(false),
        }
        prop_assert!(fit.residual < 1e-9);
    }

    #[test]
    fn compound_fit_round_trips(n in 4usize..30, j0 in 0.1f64..5.0, ap in 0.0f64..2.0, bp in 0.0f64..0.5) {
        let fit = fit_compound(&build_compound(n, j0, ap, bp).unwrap()).unwrap();
        prop_assert!((fit.j0 - j0).abs() < 1e-6 * j0);
        match fit.form {
            FitForm::Compound { alpha_prime, beta_prime } => {
                prop_assert!((alpha_prime - ap).abs() < 1e-6);
                prop_assert!((beta_prime - bp).abs() < 1e-6);
            }
            _ => prop_assert!(false),
        }
        prop_assert!((fit.evaluate(2.0) - j0 / 2f64.powf(ap) * (-bp).exp()).abs() < 1e-6 * j0);
    }
}
