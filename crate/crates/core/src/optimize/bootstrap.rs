use serde::{Deserialize, Serialize};

use super::evaluator::{AnalyticEvaluator, Evaluator};
use super::grid::{grid_search, GridSpec};
use super::interp::interpolate_schedule;
use super::simplex::{local_optimize, LocalOptions};
use crate::error::{invalid, Result};
use crate::model::IsingModel;
use crate::simulator::AngleSchedule;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapOptions {
    /// Depth-1 grid searched with the closed form.
    pub grid: GridSpec,
    pub local: LocalOptions,
    /// Shift applied to the second layer when seeding depth 2.
    pub offset: f64,
    /// Re-optimize from the previous optimum padded with an idle layer when
    /// the interpolated seed ends up above the previous depth's energy.
    pub fallback: bool,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            local: LocalOptions::default(),
            offset: 0.2,
            fallback: true,
        }
    }
}

/// How the starting point of a depth was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedRule {
    Grid,
    /// Previous layer repeated with `γ + offset`, `β − offset`.
    Offset,
    Interpolated,
    /// Previous optimum followed by a layer with zero angles.
    Padded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapLevel {
    pub p: usize,
    pub seed: AngleSchedule,
    pub seed_rule: SeedRule,
    pub schedule: AngleSchedule,
    pub energy: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Optimized schedules for depths `1..=p_target`, each seeded from the one
/// below it.
///
/// Depth 1 starts from the best point of a closed-form grid. Depth 2 starts
/// from `(γ*, γ* + offset)`, `(β*, β* − offset)`. Deeper schedules start from
/// the previous optimum resampled along its interpolating curves.
pub fn bootstrap_schedule(
    model: &IsingModel,
    evaluator: &dyn Evaluator,
    p_target: usize,
    opts: &BootstrapOptions,
) -> Result<Vec<BootstrapLevel>> {
    if p_target == 0 {
        return Err(invalid("target depth must be at least one"));
    }
    let landscape = grid_search(&AnalyticEvaluator::new(model), &opts.grid)?;
    let seed = landscape.best_schedule();
    let mut levels = vec![refine(evaluator, seed, SeedRule::Grid, &opts.local)?];

    for q in 2..=p_target {
        let prev = levels.last().expect("depth 1 is always present").clone();
        let (seed, rule) = if q == 2 {
            let (g, b) = (prev.schedule.gammas()[0], prev.schedule.betas()[0]);
            (
                AngleSchedule::new(vec![g, g + opts.offset], vec![b, b - opts.offset])?,
                SeedRule::Offset,
            )
        } else {
            (
                interpolate_schedule(&prev.schedule, q)?,
                SeedRule::Interpolated,
            )
        };
        let mut level = refine(evaluator, seed, rule, &opts.local)?;
        if opts.fallback && level.energy > prev.energy {
            let mut gammas = prev.schedule.gammas().to_vec();
            let mut betas = prev.schedule.betas().to_vec();
            gammas.push(0.0);
            betas.push(0.0);
            let padded = refine(
                evaluator,
                AngleSchedule::new(gammas, betas)?,
                SeedRule::Padded,
                &opts.local,
            )?;
            let spent = level.evaluations;
            if padded.energy < level.energy {
                level = padded;
            }
            level.evaluations += spent;
        }
        levels.push(level);
    }
    Ok(levels)
}

fn refine(
    evaluator: &dyn Evaluator,
    seed: AngleSchedule,
    rule: SeedRule,
    local: &LocalOptions,
) -> Result<BootstrapLevel> {
    let result = local_optimize(evaluator, &seed, local)?;
    Ok(BootstrapLevel {
        p: seed.p(),
        seed,
        seed_rule: rule,
        schedule: result.schedule,
        energy: result.energy,
        evaluations: result.evaluations,
        converged: result.converged,
    })
}
