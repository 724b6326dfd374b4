use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evaluator::Evaluator;
use crate::error::{invalid, Result};
use crate::metrics::eta;
use crate::simulator::{AngleSchedule, SpectrumBounds};

/// Rectangular depth-1 grid; both ends of each range are included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub gamma: (f64, f64),
    pub beta: (f64, f64),
    pub gamma_points: usize,
    pub beta_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            gamma: (0.0, 1.5),
            beta: (0.0, 1.5),
            gamma_points: 76,
            beta_points: 76,
        }
    }
}

impl GridSpec {
    /// Grid over the given box with spacing no coarser than `step`.
    pub fn with_step(gamma: (f64, f64), beta: (f64, f64), step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(invalid(format!("grid step {step} must be positive")));
        }
        let count = |(lo, hi): (f64, f64)| ((hi - lo) / step - 1e-9).ceil().max(1.0) as usize + 1;
        let spec = Self {
            gamma,
            beta,
            gamma_points: count(gamma),
            beta_points: count(beta),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (lo, hi) in [self.gamma, self.beta] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(invalid(format!("bad grid range [{lo}, {hi}]")));
            }
        }
        if self.gamma_points < 2 || self.beta_points < 2 {
            return Err(invalid("a grid needs at least two points per axis"));
        }
        Ok(())
    }

    pub fn gammas(&self) -> Vec<f64> {
        axis(self.gamma, self.gamma_points)
    }

    pub fn betas(&self) -> Vec<f64> {
        axis(self.beta, self.beta_points)
    }

    /// Centre of the box.
    pub fn centroid(&self) -> (f64, f64) {
        (
            0.5 * (self.gamma.0 + self.gamma.1),
            0.5 * (self.beta.0 + self.beta.1),
        )
    }
}

fn axis((lo, hi): (f64, f64), points: usize) -> Vec<f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect()
}

/// Energies on a grid, stored γ-major: `energies[ig * betas.len() + ib]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Landscape {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    pub energies: Vec<f64>,
}

impl Landscape {
    pub fn energy(&self, ig: usize, ib: usize) -> f64 {
        self.energies[ig * self.betas.len() + ib]
    }

    /// Lowest energy; exact ties go to the smaller γ, then the smaller β.
    pub fn best(&self) -> (f64, f64, f64) {
        let mut best = 0;
        for (idx, &e) in self.energies.iter().enumerate() {
            // γ-major storage makes the first minimum the tie-break winner
            if e < self.energies[best] {
                best = idx;
            }
        }
        let nb = self.betas.len();
        (
            self.gammas[best / nb],
            self.betas[best % nb],
            self.energies[best],
        )
    }

    pub fn best_schedule(&self) -> AngleSchedule {
        let (g, b, _) = self.best();
        AngleSchedule::single(g, b).expect("grid points are finite")
    }

    pub fn etas(&self, bounds: &SpectrumBounds) -> Result<Vec<f64>> {
        self.energies.iter().map(|&e| eta(e, bounds)).collect()
    }

    /// `gamma,beta,energy[,eta]` rows in storage order.
    pub fn to_csv(&self, bounds: Option<&SpectrumBounds>) -> Result<String> {
        let etas = bounds.map(|b| self.etas(b)).transpose()?;
        let mut out = String::from(if etas.is_some() {
            "gamma,beta,energy,eta\n"
        } else {
            "gamma,beta,energy\n"
        });
        for (idx, &e) in self.energies.iter().enumerate() {
            let (g, b) = (
                self.gammas[idx / self.betas.len()],
                self.betas[idx % self.betas.len()],
            );
            match &etas {
                Some(etas) => out.push_str(&format!("{g},{b},{e},{}\n", etas[idx])),
                None => out.push_str(&format!("{g},{b},{e}\n")),
            }
        }
        Ok(out)
    }
}

/// Evaluates every grid point in parallel. Point `idx` (γ-major) is passed as
/// the call index, so stochastic evaluators give the same landscape for any
/// thread count.
pub fn grid_search(evaluator: &dyn Evaluator, spec: &GridSpec) -> Result<Landscape> {
    spec.validate()?;
    let (gammas, betas) = (spec.gammas(), spec.betas());
    let nb = betas.len();
    let energies = (0..gammas.len() * nb)
        .into_par_iter()
        .map(|idx| {
            let schedule = AngleSchedule::single(gammas[idx / nb], betas[idx % nb])?;
            Ok(evaluator.evaluate(&schedule, idx as u64)?.energy)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Landscape {
        gammas,
        betas,
        energies,
    })
}
