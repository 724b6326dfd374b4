//! Closed-form depth-1 energy and the random-angle performance scale.
//!
//! For one QAOA layer the energy splits into three parts. Writing `θ` for the
//! per-qubit rotation angle of the mixing layer (see
//! [`MixerConvention::rotation_angle`]), `c_ik = cos(2γ J_ik)` and summing over
//! *ordered* pairs `i ≠ j`:
//!
//! ```text
//! E_I   = B Σ_i Π_{k≠i} c_ik
//! E_II  = (sin 4θ / 2) Σ_{i≠j} J_ij sin(2γ J_ij) Π_{k≠i,j} c_ik
//! E_III = (sin² 2θ / 4) Σ_{i≠j} J_ij [ Π_{k≠i,j} cos 2γ(J_ik − J_jk) − Π_{k≠i,j} cos 2γ(J_ik + J_jk) ]
//! ```
//!
//! With the unit mixer (`θ = −β`) the first two terms take the familiar
//! `−sin 4β / 2` form. The ordered-pair convention and the sign of the last
//! bracket are pinned down by the state-vector simulator in the tests.
//!
//! [`MixerConvention::rotation_angle`]: crate::model::MixerConvention::rotation_angle

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::metrics::{eta, mean_and_variance};
use crate::model::{CouplingMatrix, IsingModel, MixerConvention};
use crate::rng::{child_seed, rng_from_seed, stream};
use crate::simulator::SpectrumBounds;

/// Depth-1 energy in J₀ units, split into its three contributions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Qaoa1Energy {
    pub e_total: f64,
    pub e_i: f64,
    pub e_ii: f64,
    pub e_iii: f64,
}

/// Energy after one layer with mixing angle `beta` in the field-scaled
/// convention (rotation angle `β·B/J₀`).
pub fn qaoa1_energy(j: &CouplingMatrix, b_over_j0: f64, beta: f64, gamma: f64) -> Qaoa1Energy {
    let theta = MixerConvention::FieldScaled.rotation_angle(beta, b_over_j0);
    qaoa1_energy_rotation(j, b_over_j0, theta, gamma)
}

/// Same as [`qaoa1_energy`] but honouring the model's mixer convention.
pub fn qaoa1_model_energy(model: &IsingModel, beta: f64, gamma: f64) -> Qaoa1Energy {
    let b = model.b_over_j0();
    qaoa1_energy_rotation(
        model.couplings(),
        b,
        model.mixer().rotation_angle(beta, b),
        gamma,
    )
}

/// Energy after `exp(-iθσ^y)^{⊗N} exp(-iγH_A/J₀)` acting on `|↑⟩_y^{⊗N}`. O(N³).
pub fn qaoa1_energy_rotation(
    j: &CouplingMatrix,
    b_over_j0: f64,
    theta: f64,
    gamma: f64,
) -> Qaoa1Energy {
    let n = j.n();
    let g2 = 2.0 * gamma;
    let cos: Vec<f64> = (0..n * n)
        .map(|idx| {
            if idx / n == idx % n {
                1.0
            } else {
                (g2 * j.get(idx / n, idx % n)).cos()
            }
        })
        .collect();
    let c = |i: usize, k: usize| cos[i * n + k];

    let e_i = b_over_j0
        * (0..n)
            .map(|i| (0..n).map(|k| c(i, k)).product::<f64>())
            .sum::<f64>();

    let (s4, s2) = ((4.0 * theta).sin(), (2.0 * theta).sin());
    let mut sum_ii = 0.0;
    let mut sum_iii = 0.0;
    for i in 0..n {
        for jj in (i + 1)..n {
            let jij = j.get(i, jj);
            if jij == 0.0 {
                continue;
            }
            // ordered pairs (i, j) and (j, i) differ only in which row the first product uses
            let mut prod_i = 1.0;
            let mut prod_j = 1.0;
            let mut minus = 1.0;
            let mut plus = 1.0;
            for k in (0..n).filter(|&k| k != i && k != jj) {
                let (a, b) = (j.get(i, k), j.get(jj, k));
                prod_i *= c(i, k);
                prod_j *= c(jj, k);
                minus *= (g2 * (a - b)).cos();
                plus *= (g2 * (a + b)).cos();
            }
            sum_ii += jij * (g2 * jij).sin() * (prod_i + prod_j);
            sum_iii += 2.0 * jij * (minus - plus);
        }
    }
    let e_ii = 0.5 * s4 * sum_ii;
    let e_iii = 0.25 * s2 * s2 * sum_iii;
    Qaoa1Energy {
        e_total: e_i + e_ii + e_iii,
        e_i,
        e_ii,
        e_iii,
    }
}

/// Order-of-magnitude scale of the spread of η over random angles:
/// `√(8B² + J₀²)/Δ · N^{1/4} (3/8)^{N/4}`.
pub fn sigma_eta_estimate(j0: f64, b: f64, n: usize, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(invalid(format!("bandwidth {delta} must be positive")));
    }
    Ok((8.0 * b * b + j0 * j0).sqrt() / delta * size_factor(n))
}

/// `N^{1/4} (3/8)^{N/4}`.
pub fn size_factor(n: usize) -> f64 {
    let n = n as f64;
    n.powf(0.25) * 0.375f64.powf(n / 4.0)
}

/// Box from which random `(β, γ)` pairs are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleBox {
    pub beta: (f64, f64),
    pub gamma: (f64, f64),
}

impl Default for AngleBox {
    fn default() -> Self {
        let pi = std::f64::consts::PI;
        Self {
            beta: (0.0, pi),
            gamma: (0.0, pi),
        }
    }
}

impl AngleBox {
    fn validate(&self) -> Result<()> {
        for (lo, hi) in [self.beta, self.gamma] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(invalid(format!("bad angle interval [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    fn draw(&self, rng: &mut impl Rng) -> (f64, f64) {
        let pick = |(lo, hi): (f64, f64), rng: &mut _| {
            if lo == hi {
                lo
            } else {
                Rng::random_range(rng, lo..hi)
            }
        };
        let beta = pick(self.beta, rng);
        let gamma = pick(self.gamma, rng);
        (beta, gamma)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineStats {
    pub samples: usize,
    pub mean_eta: f64,
    pub std_eta: f64,
}

/// Monte Carlo mean and sample standard deviation of η for uniformly random
/// depth-1 angles. Sample `i` uses its own generator derived from `seed`.
pub fn random_angle_baseline(
    model: &IsingModel,
    bounds: &SpectrumBounds,
    samples: usize,
    angle_box: AngleBox,
    seed: u64,
) -> Result<BaselineStats> {
    if samples < 2 {
        return Err(invalid("random baseline needs at least two samples"));
    }
    angle_box.validate()?;
    let etas: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(child_seed(seed, stream::BASELINE, i as u64));
            let (beta, gamma) = angle_box.draw(&mut rng);
            eta(qaoa1_model_energy(model, beta, gamma).e_total, bounds)
        })
        .collect::<Result<_>>()?;
    let (mean, var) = mean_and_variance(&etas);
    Ok(BaselineStats {
        samples,
        mean_eta: mean,
        std_eta: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_power_law;
    use approx::assert_relative_eq;

    #[test]
    fn zero_gamma_gives_field_energy_only() {
        let j = build_power_law(7, 1.0, 1.1).unwrap();
        let e = qaoa1_energy(&j, -0.4, 0.9, 0.0);
        assert_relative_eq!(e.e_total, -0.4 * 7.0, epsilon = 1e-14);
        assert_eq!(e.e_ii, 0.0);
        assert_eq!(e.e_iii, 0.0);
    }

    #[test]
    fn zero_beta_leaves_only_the_first_term() {
        let j = build_power_law(6, 1.0, 0.8).unwrap();
        let e = qaoa1_energy(&j, -0.3, 0.0, 0.7);
        assert_eq!(e.e_ii, 0.0);
        assert_eq!(e.e_iii, 0.0);
        assert_eq!(e.e_total, e.e_i);
    }

    #[test]
    fn parts_sum_to_total() {
        let j = build_power_law(5, 1.0, 1.3).unwrap();
        let e = qaoa1_energy_rotation(&j, -0.2, 0.37, 1.1);
        assert!((e.e_i + e.e_ii + e.e_iii - e.e_total).abs() < 1e-12);
    }

    #[test]
    fn size_factor_at_twenty_sites() {
        assert_relative_eq!(
            size_factor(20),
            20f64.powf(0.25) * 0.375f64.powi(5),
            epsilon = 1e-15
        );
        assert!((size_factor(20) - 0.0157).abs() < 1e-3);
    }

    #[test]
    fn sigma_estimate_decreases_with_size() {
        let values: Vec<f64> = (4..30)
            .map(|n| sigma_eta_estimate(1.0, -0.3, n, 10.0).unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]));
        assert!(sigma_eta_estimate(1.0, 0.0, 4, 0.0).is_err());
    }
}
