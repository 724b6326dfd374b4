//! Error model of the ion-trap experiment and the finite-shot measurement
//! pipeline.
//!
//! Errors are classical: phonon-assisted and detection errors are summed
//! into one bit-flip probability per ion applied after each projective
//! measurement. Slow drifts are block-constant Gaussian draws of the
//! coupling scale and of a stray σ^z field that acts during the Ising
//! evolution only.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ionphysics::{ModeSpectrum, TrapConfig};
use crate::model::{energy_table, CouplingMatrix, IsingModel};
use crate::rng::{child_seed, rng_from_seed, stream};
use crate::simulator::krylov::{propagate, PropagatorOptions};
use crate::simulator::{
    apply_cost_layer, apply_mixer_layer, initial_state, output_distribution, y_basis_distribution,
    AngleSchedule, QaoaSimulator, StateVector,
};

/// Largest register accepted by the light-shift propagator by default.
pub const LIGHT_SHIFT_QUBIT_CAP: usize = 16;

const SHOT_BLOCK: usize = 1024;

/// Per-ion bit-flip probability, before detection errors are added.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FlipProbability {
    Uniform(f64),
    PerIon(Vec<f64>),
}

impl Default for FlipProbability {
    fn default() -> Self {
        FlipProbability::Uniform(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    pub p_flip: FlipProbability,
    pub detection_error: f64,
    /// Relative standard deviation of the coupling scale J₀.
    pub sigma_j0_rel: f64,
    /// Standard deviation of the stray σ^z field in units of J₀.
    pub sigma_bz_rel: f64,
    /// Shots sharing one drift realization.
    pub drift_block: usize,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            p_flip: FlipProbability::default(),
            detection_error: 0.0,
            sigma_j0_rel: 0.02,
            sigma_bz_rel: 0.3,
            drift_block: 500,
        }
    }
}

impl NoiseModel {
    /// No flips, no drift.
    pub fn ideal() -> Self {
        Self {
            sigma_j0_rel: 0.0,
            sigma_bz_rel: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs: Vec<f64> = match &self.p_flip {
            FlipProbability::Uniform(p) => vec![*p],
            FlipProbability::PerIon(v) => v.clone(),
        };
        for p in probs.into_iter().chain([self.detection_error]) {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(format!("probability {p} is outside [0, 1]")));
            }
        }
        if !(self.sigma_j0_rel >= 0.0 && self.sigma_bz_rel >= 0.0) {
            return Err(invalid("drift standard deviations must be non-negative"));
        }
        if self.drift_block == 0 {
            return Err(invalid("drift_block must be positive"));
        }
        Ok(())
    }

    /// Combined per-ion flip probability `p_i + detection`, clamped to `[0, 1]`.
    pub fn flip_probabilities(&self, n: usize) -> Result<Vec<f64>> {
        self.validate()?;
        let base = match &self.p_flip {
            FlipProbability::Uniform(p) => vec![*p; n],
            FlipProbability::PerIon(v) if v.len() == n => v.clone(),
            FlipProbability::PerIon(v) => {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                })
            }
        };
        Ok(base
            .into_iter()
            .map(|p| (p + self.detection_error).clamp(0.0, 1.0))
            .collect())
    }

    fn has_drift(&self) -> bool {
        self.sigma_j0_rel > 0.0 || self.sigma_bz_rel > 0.0
    }
}

/// Phonon-assisted flip estimate for one family of modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhononFlips {
    /// `p_i = Σ_m (η_im Ω/δ_m)²`.
    pub per_ion: Vec<f64>,
    /// Largest single-ion COM term `(η_i,COM Ω/δ_COM)²`, to compare with 1/10.
    pub com_term: f64,
}

impl PhononFlips {
    pub fn mean(&self) -> f64 {
        self.per_ion.iter().sum::<f64>() / self.per_ion.len() as f64
    }
}

/// `p_i = Σ_m (b_im √(ν_R/ν_COM) Ω/(μ − ν_m))²`, mode 0 being the COM mode.
pub fn phonon_flip_probability(
    modes: &ModeSpectrum,
    omega: f64,
    mu: f64,
    nu_recoil: f64,
    nu_com: f64,
    guard: f64,
) -> Result<PhononFlips> {
    if !(nu_com > 0.0 && omega >= 0.0 && nu_recoil >= 0.0) {
        return Err(invalid(
            "phonon flip estimate needs nu_com > 0 and non-negative drive",
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
    let lamb_dicke = (nu_recoil / nu_com).sqrt();
    let term = |i: usize, m: usize| {
        (modes.b(i, m) * lamb_dicke * omega / (mu - modes.frequencies()[m])).powi(2)
    };
    let per_ion = (0..n).map(|i| (0..n).map(|m| term(i, m)).sum()).collect();
    let com_term = (0..n).map(|i| term(i, 0)).fold(0.0, f64::max);
    Ok(PhononFlips { per_ion, com_term })
}

/// Phonon flips of every driven family of a trap, summed per ion.
pub fn trap_phonon_flips(trap: &TrapConfig) -> Result<PhononFlips> {
    let (my, mz) = trap.modes()?;
    let mut out = phonon_flip_probability(
        &my,
        trap.omega_y,
        trap.mu,
        trap.nu_recoil_y,
        trap.nu_com_y,
        trap.guard_band,
    )?;
    if trap.omega_z > 0.0 && trap.nu_recoil_z > 0.0 {
        let z = phonon_flip_probability(
            &mz,
            trap.omega_z,
            trap.mu,
            trap.nu_recoil_z,
            trap.nu_com_z,
            trap.guard_band,
        )?;
        out.per_ion
            .iter_mut()
            .zip(z.per_ion)
            .for_each(|(a, b)| *a += b);
        out.com_term = out.com_term.max(z.com_term);
    }
    Ok(out)
}

/// Relative fluctuations of the Rabi frequency and of the COM detuning.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveDrift {
    pub omega_rel: f64,
    pub detuning_rel: f64,
    pub samples: usize,
}

impl Default for DriveDrift {
    fn default() -> Self {
        Self {
            omega_rel: 0.02,
            detuning_rel: 0.09,
            samples: 200,
        }
    }
}

/// Phonon flips averaged over Gaussian draws of `Ω` and of the detuning
/// `μ − ν_COM`. Draws that land within the guard band of a mode are redrawn.
pub fn drift_averaged_phonon_flips(
    trap: &TrapConfig,
    drift: DriveDrift,
    seed: u64,
) -> Result<PhononFlips> {
    if drift.samples == 0 || !(drift.omega_rel >= 0.0 && drift.detuning_rel >= 0.0) {
        return Err(invalid(
            "drive drift needs samples > 0 and non-negative spreads",
        ));
    }
    let (my, mz) = trap.modes()?;
    let delta = trap.detuning();
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = rng_from_seed(child_seed(seed, stream::DRIFT, 0));
    let mut sum = vec![0.0; trap.n];
    let mut com_term: f64 = 0.0;
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < drift.samples {
        attempts += 1;
        if attempts > 100 * drift.samples {
            return Err(invalid("drive drift keeps hitting mode resonances"));
        }
        let omega_scale = 1.0 + drift.omega_rel * unit.sample(&mut rng);
        let mu = trap.nu_com_y + delta * (1.0 + drift.detuning_rel * unit.sample(&mut rng));
        let one = |modes: &ModeSpectrum, omega: f64, nu_r: f64, nu_com: f64| {
            phonon_flip_probability(
                modes,
                omega * omega_scale.abs(),
                mu,
                nu_r,
                nu_com,
                trap.guard_band,
            )
        };
        let y = one(&my, trap.omega_y, trap.nu_recoil_y, trap.nu_com_y);
        let z = if trap.omega_z > 0.0 && trap.nu_recoil_z > 0.0 {
            Some(one(&mz, trap.omega_z, trap.nu_recoil_z, trap.nu_com_z))
        } else {
            None
        };
        let (y, z) = match (y, z) {
            (Ok(y), None) => (y, None),
            (Ok(y), Some(Ok(z))) => (y, Some(z)),
            (Err(Error::Resonance { .. }), _) | (_, Some(Err(Error::Resonance { .. }))) => continue,
            (Err(e), _) | (_, Some(Err(e))) => return Err(e),
        };
        for (i, s) in sum.iter_mut().enumerate() {
            *s += y.per_ion[i] + z.as_ref().map_or(0.0, |z| z.per_ion[i]);
        }
        com_term = com_term.max(y.com_term).max(z.map_or(0.0, |z| z.com_term));
        accepted += 1;
    }
    Ok(PhononFlips {
        per_ion: sum.into_iter().map(|s| s / drift.samples as f64).collect(),
        com_term,
    })
}

/// One realization of the slow drifts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftSample {
    /// Multiplier on every coupling.
    pub j0_factor: f64,
    /// Stray σ^z field in units of the nominal J₀.
    pub bz_over_j0: f64,
}

/// Gaussian draw of the coupling scale and stray field.
pub fn sample_drifted_params(noise: &NoiseModel, seed: u64) -> DriftSample {
    let mut rng = rng_from_seed(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let a: f64 = unit.sample(&mut rng);
    let b: f64 = unit.sample(&mut rng);
    DriftSample {
        j0_factor: 1.0 + noise.sigma_j0_rel * a,
        bz_over_j0: noise.sigma_bz_rel * b,
    }
}

/// `exp(-i γ (H_A + B_z Σ σ^z)/J₀)` applied to `state`.
///
/// With `bz_over_j0 = 0` this is exactly the diagonal cost layer. Otherwise
/// the two terms do not commute and a Krylov propagator is used, limited to
/// `cap` qubits.
pub fn evolve_with_light_shift(
    state: &StateVector,
    j: &CouplingMatrix,
    bz_over_j0: f64,
    gamma: f64,
    cap: usize,
) -> Result<StateVector> {
    if j.n() != state.n() {
        return Err(Error::DimensionMismatch {
            expected: j.n(),
            got: state.n(),
        });
    }
    let diag = energy_table(j);
    let mut out = state.clone();
    if bz_over_j0 == 0.0 {
        apply_cost_layer(&mut out, &diag, gamma);
        return Ok(out);
    }
    light_shift_layer(&mut out, &diag, bz_over_j0, gamma, cap)?;
    Ok(out)
}

fn light_shift_layer(
    state: &mut StateVector,
    diag: &[f64],
    bz: f64,
    gamma: f64,
    cap: usize,
) -> Result<()> {
    let n = state.n();
    if n > cap {
        return Err(Error::QubitCap { n, cap });
    }
    // σ^z is [[0, -i], [i, 0]] in the working frame
    let apply = |v: &[Complex64], out: &mut [Complex64]| {
        for (x, o) in out.iter_mut().enumerate() {
            let mut acc = diag[x] * v[x];
            for q in 0..n {
                let bit = 1usize << q;
                let partner = v[x ^ bit];
                let y = if x & bit == 0 {
                    Complex64::new(partner.im, -partner.re)
                } else {
                    Complex64::new(-partner.im, partner.re)
                };
                acc += bz * y;
            }
            *o = acc;
        }
    };
    let bound = diag.iter().fold(0.0f64, |m, e| m.max(e.abs())) + bz.abs() * n as f64;
    let next = propagate(
        &apply,
        state.amplitudes(),
        gamma,
        bound,
        &PropagatorOptions::default(),
    )?;
    state.amplitudes_mut().copy_from_slice(&next);
    Ok(())
}

/// Run a schedule with the couplings scaled by `drift.j0_factor` and the stray
/// field switched on during every cost layer.
pub fn evolve_drifted(
    model: &IsingModel,
    schedule: &AngleSchedule,
    drift: DriftSample,
    cap: usize,
) -> Result<StateVector> {
    let diag: Vec<f64> = energy_table(model.couplings())
        .into_iter()
        .map(|e| e * drift.j0_factor)
        .collect();
    let b = model.b_over_j0();
    let mut psi = initial_state(model.n())?;
    for (gamma, beta) in schedule.layers() {
        if drift.bz_over_j0 == 0.0 {
            apply_cost_layer(&mut psi, &diag, gamma);
        } else {
            light_shift_layer(&mut psi, &diag, drift.bz_over_j0, gamma, cap)?;
        }
        apply_mixer_layer(&mut psi, model.mixer().rotation_angle(beta, b));
    }
    Ok(psi)
}

/// Measurement basis of a sample set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    X,
    Y,
}

/// Measured bit strings, bit `i` of each shot being ion `i` (1 = spin −1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    n: usize,
    basis: Basis,
    shots: Vec<u64>,
    seed: Option<u64>,
}

impl SampleSet {
    pub fn new(n: usize, basis: Basis, shots: Vec<u64>, seed: Option<u64>) -> Result<Self> {
        if n == 0 || n > 63 {
            return Err(invalid(format!("unsupported string length {n}")));
        }
        if shots.is_empty() {
            return Err(Error::EmptySamples);
        }
        if let Some(bad) = shots.iter().find(|&&s| s >> n != 0) {
            return Err(invalid(format!("shot {bad} has more than {n} bits")));
        }
        Ok(Self {
            n,
            basis,
            shots,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn shots(&self) -> &[u64] {
        &self.shots
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.shots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shots.is_empty()
    }

    pub fn counts(&self) -> BTreeMap<u64, usize> {
        let mut map = BTreeMap::new();
        for &s in &self.shots {
            *map.entry(s).or_insert(0) += 1;
        }
        map
    }

    /// Empirical probabilities over all `2^n` strings.
    pub fn empirical_distribution(&self) -> Result<Vec<f64>> {
        crate::simulator::check_qubits(self.n)?;
        let mut p = vec![0.0; 1 << self.n];
        let w = 1.0 / self.shots.len() as f64;
        for &s in &self.shots {
            p[s as usize] += w;
        }
        Ok(p)
    }

    /// Append the shots of `other`, which must share length and basis.
    pub fn extend(&mut self, other: &SampleSet) -> Result<()> {
        if other.n != self.n || other.basis != self.basis {
            return Err(invalid(
                "cannot merge sample sets of different shape or basis",
            ));
        }
        self.shots.extend_from_slice(&other.shots);
        Ok(())
    }

    /// One row per shot, one 0/1 column per ion, header `s0,s1,...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.shots.len() * (2 * self.n + 1) + 8 * self.n);
        for i in 0..self.n {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "s{i}");
        }
        out.push('\n');
        for &s in &self.shots {
            for i in 0..self.n {
                if i > 0 {
                    out.push(',');
                }
                out.push(if (s >> i) & 1 == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(reader: impl Read, basis: Basis) -> Result<Self> {
        let mut shots = Vec::new();
        let mut n = None;
        for (lineno, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('s') {
                continue;
            }
            let mut x = 0u64;
            let mut count = 0;
            for (i, field) in line.split(',').enumerate() {
                match field.trim() {
                    "0" => {}
                    "1" => x |= 1 << i,
                    other => {
                        return Err(Error::Parse(format!(
                            "line {}: bad bit `{other}`",
                            lineno + 1
                        )))
                    }
                }
                count += 1;
            }
            if *n.get_or_insert(count) != count {
                return Err(Error::Parse(format!(
                    "line {}: expected {} columns",
                    lineno + 1,
                    n.unwrap_or(0)
                )));
            }
            shots.push(x);
        }
        Self::new(n.ok_or(Error::EmptySamples)?, basis, shots, None)
    }
}

/// Draw `shots` strings from `dist` and flip bit `i` of each with probability
/// `flips[i]`. Shots are produced in fixed-size blocks with derived seeds.
pub fn sample_with_flips(
    dist: &[f64],
    n: usize,
    shots: usize,
    flips: &[f64],
    basis: Basis,
    seed: u64,
) -> Result<SampleSet> {
    if dist.len() != 1usize << n {
        return Err(Error::DimensionMismatch {
            expected: 1 << n,
            got: dist.len(),
        });
    }
    if flips.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: flips.len(),
        });
    }
    if shots == 0 {
        return Err(invalid("need at least one shot"));
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(total));
    }
    let index = WeightedIndex::new(dist).map_err(|e| invalid(format!("bad distribution: {e}")))?;
    let draw_stream = match basis {
        Basis::X => stream::SHOTS_X,
        Basis::Y => stream::SHOTS_Y,
    };
    let blocks = shots.div_ceil(SHOT_BLOCK);
    let out: Vec<Vec<u64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let len = SHOT_BLOCK.min(shots - b * SHOT_BLOCK);
            let mut draw = rng_from_seed(child_seed(seed, draw_stream, b as u64));
            let mut flip = rng_from_seed(child_seed(seed, stream::FLIPS, b as u64));
            (0..len)
                .map(|_| {
                    let mut x = index.sample(&mut draw) as u64;
                    for (i, &p) in flips.iter().enumerate() {
                        if p > 0.0 && flip.random::<f64>() < p {
                            x ^= 1 << i;
                        }
                    }
                    x
                })
                .collect()
        })
        .collect();
    SampleSet::new(n, basis, out.concat(), Some(seed))
}

/// Sample `dist` with the flip probabilities of `noise`.
pub fn noisy_measure(
    dist: &[f64],
    basis: Basis,
    shots: usize,
    noise: &NoiseModel,
    seed: u64,
) -> Result<SampleSet> {
    if dist.is_empty() || !dist.len().is_power_of_two() {
        return Err(invalid("distribution length must be a power of two"));
    }
    let n = dist.len().trailing_zeros() as usize;
    sample_with_flips(dist, n, shots, &noise.flip_probabilities(n)?, basis, seed)
}

/// Energy estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub energy: f64,
    pub stderr: f64,
}

fn shot_sign_sum(x: u64, n: usize) -> f64 {
    n as f64 - 2.0 * f64::from(x.count_ones())
}

fn shot_energy(j: &CouplingMatrix, x: u64) -> f64 {
    let n = j.n();
    let mut e = 0.0;
    for i in 0..n {
        let si = if (x >> i) & 1 == 0 { 1.0 } else { -1.0 };
        for k in (i + 1)..n {
            let sk = if (x >> k) & 1 == 0 { 1.0 } else { -1.0 };
            e += j.get(i, k) * si * sk;
        }
    }
    e
}

/// `Σ_{i<j} J_ij ⟨s_i s_j⟩_x + (B/J₀) Σ_i ⟨s_i⟩_y` from shots.
///
/// The y-basis set may be omitted when the field vanishes. The standard error
/// combines the shot-to-shot variances of both per-shot contributions.
pub fn estimate_energy_from_shots(
    x: &SampleSet,
    y: Option<&SampleSet>,
    model: &IsingModel,
) -> Result<EnergyEstimate> {
    let n = model.n();
    if x.is_empty() {
        return Err(Error::EmptySamples);
    }
    if x.n() != n || x.basis() != Basis::X {
        return Err(invalid("x-basis sample set does not match the model"));
    }
    let ex: Vec<f64> = x
        .shots()
        .par_iter()
        .map(|&s| shot_energy(model.couplings(), s))
        .collect();
    let (mx, vx) = crate::metrics::mean_and_variance(&ex);
    let b = model.b_over_j0();
    let (my, var_y) = match y {
        Some(y) => {
            if y.n() != n || y.basis() != Basis::Y {
                return Err(invalid("y-basis sample set does not match the model"));
            }
            let ey: Vec<f64> = y.shots().iter().map(|&s| b * shot_sign_sum(s, n)).collect();
            let (m, v) = crate::metrics::mean_and_variance(&ey);
            (m, v / ey.len() as f64)
        }
        None if b == 0.0 => (0.0, 0.0),
        None => return Err(Error::EmptySamples),
    };
    Ok(EnergyEstimate {
        energy: mx + my,
        stderr: (vx / ex.len() as f64 + var_y).sqrt(),
    })
}

/// Infinite-shot limit of [`estimate_energy_from_shots`].
pub fn energy_from_distributions(px: &[f64], py: &[f64], model: &IsingModel) -> Result<f64> {
    let dim = 1usize << model.n();
    if px.len() != dim || py.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: px.len().min(py.len()),
        });
    }
    let diag = energy_table(model.couplings());
    let n = model.n();
    let ea: f64 = px.iter().zip(&diag).map(|(p, e)| p * e).sum();
    let mag: f64 = py
        .iter()
        .enumerate()
        .map(|(x, p)| p * shot_sign_sum(x as u64, n))
        .sum();
    Ok(ea + model.b_over_j0() * mag)
}

/// Shot budget and propagator cap of a simulated experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotPlan {
    pub shots_x: usize,
    pub shots_y: usize,
    pub cap: usize,
}

impl Default for ShotPlan {
    fn default() -> Self {
        Self {
            shots_x: 1100,
            shots_y: 800,
            cap: LIGHT_SHIFT_QUBIT_CAP,
        }
    }
}

/// One point of a simulated experimental scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanPoint {
    pub schedule: AngleSchedule,
    pub ideal_energy: f64,
    pub estimate: EnergyEstimate,
    pub x_samples: SampleSet,
    pub y_samples: Option<SampleSet>,
}

/// Simulate measuring `schedule` as the experiment would: each block of
/// `drift_block` shots sees its own drifted couplings and stray field, and
/// every shot suffers the configured bit flips.
pub fn noisy_experiment(
    model: &IsingModel,
    schedule: &AngleSchedule,
    plan: ShotPlan,
    noise: &NoiseModel,
    seed: u64,
) -> Result<ScanPoint> {
    noise.validate()?;
    let n = model.n();
    let sim = QaoaSimulator::new(model)?;
    let ideal_state = sim.prepare(schedule)?;
    let ideal_energy = sim.expectation_h(&ideal_state)?;
    let flips = noise.flip_probabilities(n)?;
    let want_y = plan.shots_y > 0;
    if plan.shots_x == 0 || (!want_y && model.b_over_j0() != 0.0) {
        return Err(invalid(
            "scan needs x shots, and y shots whenever B is non-zero",
        ));
    }
    let block = noise.drift_block;
    let blocks = plan.shots_x.max(plan.shots_y).div_ceil(block);
    let mut xs: Vec<u64> = Vec::with_capacity(plan.shots_x);
    let mut ys: Vec<u64> = Vec::with_capacity(plan.shots_y);
    for k in 0..blocks {
        let nx = block.min(plan.shots_x.saturating_sub(k * block));
        let ny = block.min(plan.shots_y.saturating_sub(k * block));
        let state = if noise.has_drift() {
            let drift = sample_drifted_params(noise, child_seed(seed, stream::DRIFT, k as u64));
            evolve_drifted(model, schedule, drift, plan.cap)?
        } else {
            ideal_state.clone()
        };
        if nx > 0 {
            let x_seed = child_seed(seed, stream::SHOTS_X, k as u64);
            let s = sample_with_flips(
                &output_distribution(&state),
                n,
                nx,
                &flips,
                Basis::X,
                x_seed,
            )?;
            xs.extend_from_slice(s.shots());
        }
        if ny > 0 {
            let y_seed = child_seed(seed, stream::SHOTS_Y, k as u64);
            let s = sample_with_flips(
                &y_basis_distribution(&state),
                n,
                ny,
                &flips,
                Basis::Y,
                y_seed,
            )?;
            ys.extend_from_slice(s.shots());
        }
    }
    let x_samples = SampleSet::new(n, Basis::X, xs, Some(seed))?;
    let y_samples = if want_y {
        Some(SampleSet::new(n, Basis::Y, ys, Some(seed))?)
    } else {
        None
    };
    let estimate = estimate_energy_from_shots(&x_samples, y_samples.as_ref(), model)?;
    Ok(ScanPoint {
        schedule: schedule.clone(),
        ideal_energy,
        estimate,
        x_samples,
        y_samples,
    })
}

/// [`noisy_experiment`] at every schedule; point `i` uses a seed derived from `(seed, i)`.
pub fn noisy_experiment_scan(
    model: &IsingModel,
    schedules: &[AngleSchedule],
    plan: ShotPlan,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<ScanPoint>> {
    schedules
        .iter()
        .enumerate()
        .map(|(i, s)| {
            noisy_experiment(
                model,
                s,
                plan,
                noise,
                child_seed(seed, stream::SCAN_POINT, i as u64 + (1 << 32)),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_power_law;
    use approx::assert_relative_eq;

    #[test]
    fn zero_spreads_give_nominal_parameters() {
        let d = sample_drifted_params(&NoiseModel::ideal(), 3);
        assert_eq!(
            d,
            DriftSample {
                j0_factor: 1.0,
                bz_over_j0: 0.0
            }
        );
    }

    #[test]
    fn flip_probabilities_add_and_clamp() {
        let noise = NoiseModel {
            p_flip: FlipProbability::PerIon(vec![0.1, 0.98]),
            detection_error: 0.03,
            ..NoiseModel::ideal()
        };
        let p = noise.flip_probabilities(2).unwrap();
        assert_relative_eq!(p[0], 0.13, epsilon = 1e-15);
        assert_eq!(p[1], 1.0);
        assert!(noise.flip_probabilities(3).is_err());
    }

    #[test]
    fn hand_computed_two_site_estimate() {
        let j = build_power_law(2, 1.0, 1.0).unwrap();
        let model = IsingModel::new(j, -0.3).unwrap();
        let x = SampleSet::new(2, Basis::X, vec![0; 100], None).unwrap();
        let y = SampleSet::new(2, Basis::Y, vec![0; 100], None).unwrap();
        let e = estimate_energy_from_shots(&x, Some(&y), &model).unwrap();
        assert_relative_eq!(e.energy, 0.4, epsilon = 1e-15);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let s = SampleSet::new(3, Basis::Y, vec![0b101, 0b010, 0b000], Some(9)).unwrap();
        let back = SampleSet::from_csv(s.to_csv().as_bytes(), Basis::Y).unwrap();
        assert_eq!(back.shots(), s.shots());
        assert!(s.to_csv().starts_with("s0,s1,s2\n1,0,1\n"));
    }

    #[test]
    fn zero_field_light_shift_is_the_cost_layer() {
        let j = build_power_law(4, 1.0, 1.0).unwrap();
        let psi = initial_state(4).unwrap();
        let a = evolve_with_light_shift(&psi, &j, 0.0, 0.7, LIGHT_SHIFT_QUBIT_CAP).unwrap();
        let mut b = psi.clone();
        apply_cost_layer(&mut b, &energy_table(&j), 0.7);
        assert_eq!(a, b);
    }

    #[test]
    fn light_shift_cap() {
        let j = build_power_law(4, 1.0, 1.0).unwrap();
        let psi = initial_state(4).unwrap();
        assert!(matches!(
            evolve_with_light_shift(&psi, &j, 0.3, 0.7, 3),
            Err(Error::QubitCap { .. })
        ));
    }
}
