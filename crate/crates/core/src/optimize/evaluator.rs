use std::sync::atomic::{AtomicU64, Ordering};

use crate::analytic::qaoa1_model_energy;
use crate::error::{invalid, Result};
use crate::model::IsingModel;
use crate::noise::{noisy_experiment, NoiseModel, ShotPlan};
use crate::rng::{child_seed, stream};
use crate::simulator::{AngleSchedule, QaoaSimulator};

/// Result of one energy query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    /// Energy estimate in J₀ units.
    pub energy: f64,
    /// Shots for sampled evaluators, an operation count otherwise.
    pub cost: u64,
}

/// Anything that maps an angle schedule to an energy estimate.
///
/// `call` is the caller's running index of the query. Stochastic evaluators
/// derive their seed from it, so a fixed sequence of calls is reproducible
/// even when repeated queries of one schedule differ.
pub trait Evaluator: Sync {
    fn evaluate(&self, schedule: &AngleSchedule, call: u64) -> Result<Evaluation>;

    /// Whether repeated queries of one schedule return identical estimates.
    fn is_deterministic(&self) -> bool {
        true
    }
}

/// Closed-form depth-1 energy; rejects deeper schedules.
#[derive(Clone, Debug)]
pub struct AnalyticEvaluator {
    model: IsingModel,
}

impl AnalyticEvaluator {
    pub fn new(model: &IsingModel) -> Self {
        Self {
            model: model.clone(),
        }
    }
}

impl Evaluator for AnalyticEvaluator {
    fn evaluate(&self, schedule: &AngleSchedule, _call: u64) -> Result<Evaluation> {
        if schedule.p() != 1 {
            return Err(invalid(format!(
                "the closed form covers p = 1 only, got p = {}",
                schedule.p()
            )));
        }
        let n = self.model.n() as u64;
        Ok(Evaluation {
            energy: qaoa1_model_energy(&self.model, schedule.betas()[0], schedule.gammas()[0])
                .e_total,
            cost: n * n * n,
        })
    }
}

/// Exact expectation from the state-vector simulator.
#[derive(Clone, Debug)]
pub struct StateVectorEvaluator {
    sim: QaoaSimulator,
}

impl StateVectorEvaluator {
    pub fn new(model: &IsingModel) -> Result<Self> {
        Ok(Self {
            sim: QaoaSimulator::new(model)?,
        })
    }

    pub fn with_cap(model: &IsingModel, cap: usize) -> Result<Self> {
        Ok(Self {
            sim: QaoaSimulator::with_cap(model, cap)?,
        })
    }
}

impl Evaluator for StateVectorEvaluator {
    fn evaluate(&self, schedule: &AngleSchedule, _call: u64) -> Result<Evaluation> {
        let n = self.sim.model().n() as u64;
        Ok(Evaluation {
            energy: self.sim.energy(schedule)?,
            cost: (schedule.p() as u64 * (n + 1)) << n,
        })
    }
}

/// Finite-shot estimate from the simulated noisy experiment.
#[derive(Clone, Debug)]
pub struct NoisyShotEvaluator {
    model: IsingModel,
    noise: NoiseModel,
    plan: ShotPlan,
    seed: u64,
}

impl NoisyShotEvaluator {
    pub fn new(model: &IsingModel, noise: NoiseModel, plan: ShotPlan, seed: u64) -> Result<Self> {
        noise.validate()?;
        Ok(Self {
            model: model.clone(),
            noise,
            plan,
            seed,
        })
    }
}

impl Evaluator for NoisyShotEvaluator {
    fn evaluate(&self, schedule: &AngleSchedule, call: u64) -> Result<Evaluation> {
        let seed = child_seed(self.seed, stream::EVALUATOR, call);
        let point = noisy_experiment(&self.model, schedule, self.plan, &self.noise, seed)?;
        Ok(Evaluation {
            energy: point.estimate.energy,
            cost: (self.plan.shots_x + self.plan.shots_y) as u64,
        })
    }

    fn is_deterministic(&self) -> bool {
        false
    }
}

/// Wraps a plain function of the flat parameter vector `[γ.., β..]`.
pub struct FnEvaluator<F> {
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnEvaluator<F> {
    pub fn new(f: F) -> Self {
        Self { f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Evaluator for FnEvaluator<F> {
    fn evaluate(&self, schedule: &AngleSchedule, _call: u64) -> Result<Evaluation> {
        Ok(Evaluation {
            energy: (self.f)(&schedule.to_params()),
            cost: 1,
        })
    }
}

/// Counts the queries passed through to an inner evaluator.
pub struct CountingEvaluator<'a> {
    inner: &'a dyn Evaluator,
    calls: AtomicU64,
}

impl<'a> CountingEvaluator<'a> {
    pub fn new(inner: &'a dyn Evaluator) -> Self {
        Self {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl Evaluator for CountingEvaluator<'_> {
    fn evaluate(&self, schedule: &AngleSchedule, call: u64) -> Result<Evaluation> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.evaluate(schedule, call)
    }

    fn is_deterministic(&self) -> bool {
        self.inner.is_deterministic()
    }
}
