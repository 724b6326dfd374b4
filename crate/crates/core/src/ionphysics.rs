//! Ion-chain normal modes and the couplings they mediate.
//!
//! Positions are in the natural length unit of a harmonic axial trap, where
//! force balance reads `u_i = Σ_{k<i} 1/(u_i − u_k)² − Σ_{k>i} 1/(u_k − u_i)²`.
//! All frequencies are plain Hz (cycles per second); a spin-spin coupling
//!
//! ```text
//! J_ij = Ω² ν_R Σ_m b_im b_jm / (μ² − ν_m²)
//! ```
//!
//! therefore also comes out in Hz. Callers holding angular frequencies must
//! divide by 2π first.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::CouplingMatrix;

/// Default minimum distance between the drive and any mode, in Hz.
pub const DEFAULT_GUARD_BAND: f64 = 1e3;

const FORCE_TOLERANCE: f64 = 1e-12;
const NEWTON_BUDGET: usize = 200;

/// Planck constant, J·s.
const PLANCK: f64 = 6.626_070_15e-34;
/// Atomic mass unit, kg.
const AMU: f64 = 1.660_539_066_60e-27;

/// `ν_R = h Δk² / (8π² M)` in Hz, for a wavevector difference in rad/m and a mass in kg.
pub fn recoil_frequency(delta_k: f64, mass_kg: f64) -> f64 {
    PLANCK * delta_k * delta_k / (8.0 * std::f64::consts::PI.powi(2) * mass_kg)
}

/// Recoil frequency of ¹⁷¹Yb⁺ driven by two 355 nm beams crossing at right angles.
pub fn yb171_recoil_355nm() -> f64 {
    let k = 2.0 * std::f64::consts::PI / 355e-9;
    recoil_frequency(std::f64::consts::SQRT_2 * k, 170.936_33 * AMU)
}

fn forces(u: &[f64]) -> Vec<f64> {
    (0..u.len())
        .map(|i| {
            let coulomb: f64 = (0..u.len())
                .filter(|&k| k != i)
                .map(|k| {
                    let d = u[i] - u[k];
                    d.signum() / (d * d)
                })
                .sum();
            u[i] - coulomb
        })
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Dimensionless equilibrium positions, ascending, by damped Newton iteration.
pub fn equilibrium_positions(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(invalid(format!("a chain needs at least two ions, got {n}")));
    }
    // smallest spacing of a harmonic chain scales roughly as 2 N^-0.56
    let spacing = 2.0 * (n as f64).powf(-0.56);
    let mut u: Vec<f64> = (0..n)
        .map(|i| spacing * (i as f64 - (n - 1) as f64 / 2.0))
        .collect();
    let mut f = forces(&u);
    let mut residual = max_abs(&f);
    for _ in 0..NEWTON_BUDGET {
        if residual < FORCE_TOLERANCE {
            return Ok(u);
        }
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            jac[(i, i)] = 1.0;
            for k in (0..n).filter(|&k| k != i) {
                let c = 2.0 / (u[i] - u[k]).abs().powi(3);
                jac[(i, i)] += c;
                jac[(i, k)] = -c;
            }
        }
        let step = jac
            .lu()
            .solve(&DVector::from_column_slice(&f))
            .ok_or_else(|| invalid("singular Jacobian in equilibrium solve"))?;
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(x, s)| x - t * s).collect();
            let ordered = trial.windows(2).all(|w| w[0] < w[1]);
            if ordered {
                let ft = forces(&trial);
                let rt = max_abs(&ft);
                if rt < residual || t < 1e-6 {
                    u = trial;
                    f = ft;
                    residual = rt;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-12 {
                break;
            }
        }
    }
    if residual < FORCE_TOLERANCE {
        Ok(u)
    } else {
        Err(Error::NonConvergence {
            what: "equilibrium positions",
            iterations: NEWTON_BUDGET,
            residual,
        })
    }
}

/// Transverse normal modes: frequencies in Hz, highest (COM) first, and the
/// orthonormal participation matrix `b_im`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectrum {
    nu: Vec<f64>,
    /// Row-major `b[i * n + m]`.
    b: Vec<f64>,
}

impl ModeSpectrum {
    pub fn n(&self) -> usize {
        self.nu.len()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.nu
    }

    /// Participation of ion `i` in mode `m`.
    #[inline]
    pub fn b(&self, i: usize, m: usize) -> f64 {
        self.b[i * self.nu.len() + m]
    }

    /// CSV with header `mode,frequency_hz,b_0,...,b_{n-1}`.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let n = self.n();
        let mut out = String::from("mode,frequency_hz");
        for i in 0..n {
            let _ = write!(out, ",b_{i}");
        }
        out.push('\n');
        for m in 0..n {
            let _ = write!(out, "{m},{}", self.nu[m]);
            for i in 0..n {
                let _ = write!(out, ",{}", self.b(i, m));
            }
            out.push('\n');
        }
        out
    }
}

/// Diagonalize the transverse Hessian of a chain at `positions`.
pub fn transverse_modes(positions: &[f64], nu_trans: f64, nu_axial: f64) -> Result<ModeSpectrum> {
    let n = positions.len();
    if n < 2 {
        return Err(invalid("need at least two ions"));
    }
    if !(nu_axial > 0.0 && nu_trans > nu_axial) {
        return Err(invalid(format!(
            "transverse frequency {nu_trans} must exceed axial frequency {nu_axial} > 0"
        )));
    }
    let ratio2 = (nu_trans / nu_axial).powi(2);
    let mut k = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = ratio2;
        for j in (0..n).filter(|&j| j != i) {
            let c = 1.0 / (positions[i] - positions[j]).abs().powi(3);
            k[(i, i)] -= c;
            k[(i, j)] = c;
        }
    }
    let eig = SymmetricEigen::new(k);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lowest = eig.eigenvalues[order[n - 1]];
    if !(lowest > 0.0) {
        return Err(Error::ZigZagInstability(lowest));
    }
    let mut nu = Vec::with_capacity(n);
    let mut b = vec![0.0; n * n];
    for (m, &col) in order.iter().enumerate() {
        nu.push(nu_axial * eig.eigenvalues[col].sqrt());
        let v = eig.eigenvectors.column(col);
        // fix the sign: first clearly non-zero component positive
        let pivot = v.iter().copied().find(|x| x.abs() > 1e-8).unwrap_or(1.0);
        let sign = pivot.signum();
        for i in 0..n {
            b[i * n + m] = sign * v[i];
        }
    }
    Ok(ModeSpectrum { nu, b })
}

/// Spin-spin couplings mediated by one family of modes.
pub fn coupling_single_family(
    modes: &ModeSpectrum,
    omega: f64,
    mu: f64,
    nu_recoil: f64,
    guard: f64,
) -> Result<CouplingMatrix> {
    let raw = family_terms(modes, omega, mu, nu_recoil, guard)?;
    CouplingMatrix::from_flat(modes.n(), raw)
}

fn family_terms(
    modes: &ModeSpectrum,
    omega: f64,
    mu: f64,
    nu_recoil: f64,
    guard: f64,
) -> Result<Vec<f64>> {
    if !(omega >= 0.0 && mu > 0.0 && nu_recoil >= 0.0 && guard >= 0.0) {
        return Err(invalid(
            "drive parameters must be non-negative (mu positive)",
        ));
    }
    let n = modes.n();
    for (m, &nu) in modes.frequencies().iter().enumerate() {
        if (mu - nu).abs() <= guard {
            return Err(Error::Resonance {
                mu,
                nu,
                mode: m,
                guard,
            });
        }
    }
    let weights: Vec<f64> = modes
        .frequencies()
        .iter()
        .map(|nu| omega * omega * nu_recoil / (mu * mu - nu * nu))
        .collect();
    let mut j = vec![0.0; n * n];
    for i in 0..n {
        for k in (i + 1)..n {
            let v: f64 = (0..n)
                .map(|m| modes.b(i, m) * modes.b(k, m) * weights[m])
                .sum();
            j[i * n + k] = v;
            j[k * n + i] = v;
        }
    }
    Ok(j)
}

/// Couplings from two transverse families driven at the same beatnote.
#[allow(clippy::too_many_arguments)]
pub fn coupling_two_families(
    modes_y: &ModeSpectrum,
    modes_z: &ModeSpectrum,
    omega_y: f64,
    omega_z: f64,
    mu: f64,
    nu_recoil_y: f64,
    nu_recoil_z: f64,
    guard: f64,
) -> Result<CouplingMatrix> {
    if modes_y.n() != modes_z.n() {
        return Err(Error::DimensionMismatch {
            expected: modes_y.n(),
            got: modes_z.n(),
        });
    }
    let mut j = family_terms(modes_y, omega_y, mu, nu_recoil_y, guard)?;
    // a family that is not driven does not constrain the beatnote
    if omega_z > 0.0 && nu_recoil_z > 0.0 {
        let jz = family_terms(modes_z, omega_z, mu, nu_recoil_z, guard)?;
        j.iter_mut().zip(jz).for_each(|(a, b)| *a += b);
    }
    CouplingMatrix::from_flat(modes_y.n(), j)
}

/// Trap and drive parameters of a chain, all in Hz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapConfig {
    pub n: usize,
    pub nu_axial: f64,
    pub nu_com_y: f64,
    pub nu_com_z: f64,
    pub omega_y: f64,
    pub omega_z: f64,
    pub mu: f64,
    pub nu_recoil_y: f64,
    pub nu_recoil_z: f64,
    /// Angle between the Raman wavevector difference and the z axis, radians.
    pub theta: f64,
    #[serde(default = "default_guard")]
    pub guard_band: f64,
}

fn default_guard() -> f64 {
    DEFAULT_GUARD_BAND
}

/// Names accepted by [`TrapConfig::reference`].
pub const REFERENCE_CONFIGS: &[&str] = &[
    "system1_n12",
    "system1_n20",
    "system2_n12",
    "system2_n20",
    "system2_n25",
    "system2_n30",
    "system2_n35",
    "system2_n40",
];

impl TrapConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("nu_axial", self.nu_axial),
            ("nu_com_y", self.nu_com_y),
            ("nu_com_z", self.nu_com_z),
            ("mu", self.mu),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} = {v} must be positive")));
            }
        }
        let non_negative = [
            ("omega_y", self.omega_y),
            ("omega_z", self.omega_z),
            ("nu_recoil_y", self.nu_recoil_y),
            ("nu_recoil_z", self.nu_recoil_z),
            ("guard_band", self.guard_band),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} = {v} must be non-negative")));
            }
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&self.theta) {
            return Err(invalid(format!(
                "theta = {} must lie in [0, pi/2]",
                self.theta
            )));
        }
        if self.n < 2 {
            return Err(invalid("n must be at least 2"));
        }
        Ok(())
    }

    /// Built-in parameter sets for the two apparatus (δ = 45 kHz, Ω = 440 kHz).
    ///
    /// `system1_*` drives a single transverse family at 4.7 MHz. `system2_*`
    /// drives both families (4.4 and 4.26 MHz) with the recoil frequency split
    /// by the projection of the wavevector at 40° from the z axis.
    pub fn reference(name: &str) -> Option<Self> {
        let nu_r = yb171_recoil_355nm();
        let (system, n): (u8, usize) = match name {
            "system1_n12" => (1, 12),
            "system1_n20" => (1, 20),
            "system2_n12" => (2, 12),
            "system2_n20" => (2, 20),
            "system2_n25" => (2, 25),
            "system2_n30" => (2, 30),
            "system2_n35" => (2, 35),
            "system2_n40" => (2, 40),
            _ => return None,
        };
        let delta = 45e3;
        let omega = 440e3;
        let cfg = if system == 1 {
            let nu_axial = if n <= 12 { 0.6e6 } else { 0.39e6 };
            TrapConfig {
                n,
                nu_axial,
                nu_com_y: 4.7e6,
                nu_com_z: 4.6e6,
                omega_y: omega,
                omega_z: 0.0,
                mu: 4.7e6 + delta,
                nu_recoil_y: nu_r,
                nu_recoil_z: 0.0,
                theta: std::f64::consts::FRAC_PI_2,
                guard_band: DEFAULT_GUARD_BAND,
            }
        } else {
            let nu_axial = match n {
                12 => 0.54e6,
                20 => 0.46e6,
                25 => 0.37e6,
                30 => 0.36e6,
                35 => 0.31e6,
                _ => 0.27e6,
            };
            let theta = 40f64.to_radians();
            TrapConfig {
                n,
                nu_axial,
                nu_com_y: 4.4e6,
                nu_com_z: 4.26e6,
                omega_y: omega,
                omega_z: omega,
                mu: 4.4e6 + delta,
                nu_recoil_y: nu_r * theta.sin().powi(2),
                nu_recoil_z: nu_r * theta.cos().powi(2),
                theta,
                guard_band: DEFAULT_GUARD_BAND,
            }
        };
        Some(cfg)
    }

    /// Detuning of the beatnote above the y COM mode.
    pub fn detuning(&self) -> f64 {
        self.mu - self.nu_com_y
    }

    pub fn modes(&self) -> Result<(ModeSpectrum, ModeSpectrum)> {
        self.validate()?;
        let u = equilibrium_positions(self.n)?;
        Ok((
            transverse_modes(&u, self.nu_com_y, self.nu_axial)?,
            transverse_modes(&u, self.nu_com_z, self.nu_axial)?,
        ))
    }

    /// Physical coupling matrix in Hz.
    pub fn couplings(&self) -> Result<CouplingMatrix> {
        let (my, mz) = self.modes()?;
        coupling_two_families(
            &my,
            &mz,
            self.omega_y,
            self.omega_z,
            self.mu,
            self.nu_recoil_y,
            self.nu_recoil_z,
            self.guard_band,
        )
    }
}

/// Functional form and parameters of a coupling fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum FitForm {
    PowerLaw { alpha: f64 },
    Compound { alpha_prime: f64, beta_prime: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingFit {
    pub j0: f64,
    pub form: FitForm,
    /// Root-mean-square residual of `ln J̄(r)`.
    pub residual: f64,
}

impl CouplingFit {
    /// Fitted coupling at separation `r`.
    pub fn evaluate(&self, r: f64) -> f64 {
        match self.form {
            FitForm::PowerLaw { alpha } => self.j0 / r.powf(alpha),
            FitForm::Compound {
                alpha_prime,
                beta_prime,
            } => self.j0 / r.powf(alpha_prime) * (-beta_prime * (r - 1.0)).exp(),
        }
    }
}

fn log_means(j: &CouplingMatrix) -> Result<Vec<f64>> {
    if j.n() < 4 {
        return Err(invalid(format!("fits need n >= 4, got {}", j.n())));
    }
    j.separation_means()
        .into_iter()
        .enumerate()
        .map(|(k, v)| {
            if v > 0.0 {
                Ok(v.ln())
            } else {
                Err(Error::NonPositiveCoupling {
                    separation: k + 1,
                    value: v,
                })
            }
        })
        .collect()
}

/// Least squares for `y ≈ X c`; returns `c` and the RMS residual.
fn least_squares(x: DMatrix<f64>, y: DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let svd = x.clone().svd(true, true);
    let c = svd
        .solve(&y, 1e-14)
        .map_err(|e| invalid(format!("least squares failed: {e}")))?;
    let r = &x * &c - &y;
    let rms = (r.norm_squared() / y.len() as f64).sqrt();
    Ok((c, rms))
}

/// Fit `ln J̄(r) = ln J₀ − α ln r` over separations, each weighted equally.
pub fn fit_power_law(j: &CouplingMatrix) -> Result<CouplingFit> {
    let y = log_means(j)?;
    let m = y.len();
    let x = DMatrix::from_fn(
        m,
        2,
        |r, c| if c == 0 { 1.0 } else { -((r + 1) as f64).ln() },
    );
    let (c, residual) = least_squares(x, DVector::from_vec(y))?;
    Ok(CouplingFit {
        j0: c[0].exp(),
        form: FitForm::PowerLaw { alpha: c[1] },
        residual,
    })
}

/// Fit `ln J̄(r) = ln J₀ − α' ln r − β' (r − 1)`.
pub fn fit_compound(j: &CouplingMatrix) -> Result<CouplingFit> {
    let y = log_means(j)?;
    let m = y.len();
    let x = DMatrix::from_fn(m, 3, |r, c| {
        let sep = (r + 1) as f64;
        match c {
            0 => 1.0,
            1 => -sep.ln(),
            _ => -(sep - 1.0),
        }
    });
    let (c, residual) = least_squares(x, DVector::from_vec(y))?;
    Ok(CouplingFit {
        j0: c[0].exp(),
        form: FitForm::Compound {
            alpha_prime: c[1],
            beta_prime: c[2],
        },
        residual,
    })
}
