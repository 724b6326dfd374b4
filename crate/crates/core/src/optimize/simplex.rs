use std::cell::Cell;

use serde::{Deserialize, Serialize};

use super::evaluator::Evaluator;
use crate::error::{invalid, Result};
use crate::simulator::AngleSchedule;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalOptions {
    /// Stop when every vertex lies within this distance of the best one.
    pub tol: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    pub budget: usize,
}

impl Default for LocalOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            initial_step: 0.1,
            budget: 5000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalResult {
    pub schedule: AngleSchedule,
    pub energy: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder–Mead simplex search over the flat `[γ.., β..]` vector.
///
/// Standard coefficients (reflection 1, expansion 2, contraction and shrink
/// 1/2). Runs to `tol` or the budget, whichever comes first; running out of
/// budget is reported through `converged` rather than as an error.
pub fn local_optimize(
    evaluator: &dyn Evaluator,
    start: &AngleSchedule,
    opts: &LocalOptions,
) -> Result<LocalResult> {
    if !(opts.tol > 0.0 && opts.initial_step > 0.0) || opts.budget == 0 {
        return Err(invalid(
            "simplex tolerance, step and budget must be positive",
        ));
    }
    let calls = Cell::new(0u64);
    let f = |x: &[f64]| -> Result<f64> {
        let e = evaluator
            .evaluate(&AngleSchedule::from_params(x)?, calls.get())?
            .energy;
        calls.set(calls.get() + 1);
        Ok(e)
    };

    let x0 = start.to_params();
    let dim = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.clone(), f(&x0)?));
    for k in 0..dim {
        let mut v = x0.clone();
        v[k] += opts.initial_step;
        let e = f(&v)?;
        simplex.push((v, e));
    }

    let mut converged = false;
    while (calls.get() as usize) < opts.budget {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0].0;
        let spread = simplex[1..]
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .zip(best)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        if spread < opts.tol {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|(v, _)| v[k]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let (f_best, f_second, f_worst) = (simplex[0].1, simplex[dim - 1].1, simplex[dim].1);

        let xr = along(1.0);
        let fr = f(&xr)?;
        if fr < f_best {
            let xe = along(2.0);
            let fe = f(&xe)?;
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < f_second {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < f_worst {
            let xc = along(0.5);
            let fc = f(&xc)?;
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = f(&xc)?;
            (xc, fc)
        };
        if fc < fr.min(f_worst) {
            simplex[dim] = (xc, fc);
            continue;
        }
        // shrink towards the best vertex
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let v: Vec<f64> = vertex
                .0
                .iter()
                .zip(&best)
                .map(|(a, b)| b + 0.5 * (a - b))
                .collect();
            let e = f(&v)?;
            *vertex = (v, e);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, energy) = simplex.swap_remove(0);
    Ok(LocalResult {
        schedule: AngleSchedule::from_params(&x)?,
        energy,
        evaluations: calls.get() as usize,
        converged,
    })
}
