//! Angle optimization: exhaustive depth-1 grids, the finite-difference
//! descent used on hardware, a Nelder–Mead local search and the layer-by-layer
//! bootstrap of deeper schedules.
//!
//! Every optimizer talks to an [`Evaluator`], so the same code runs against
//! the closed form, the exact simulator or the shot-noise model.

mod bootstrap;
mod descent;
mod evaluator;
mod grid;
mod interp;
mod simplex;

use serde::{Deserialize, Serialize};

pub use bootstrap::{bootstrap_schedule, BootstrapLevel, BootstrapOptions, SeedRule};
pub use descent::{gradient_descent, DescentOptions};
pub use evaluator::{
    AnalyticEvaluator, CountingEvaluator, Evaluation, Evaluator, FnEvaluator, NoisyShotEvaluator,
    StateVectorEvaluator,
};
pub use grid::{grid_search, GridSpec, Landscape};
pub use interp::{interpolate_schedule, natural_cubic_spline, schedule_deviation};
pub use simplex::{local_optimize, LocalOptions, LocalResult};

use crate::error::Result;
use crate::metrics::eta;
use crate::simulator::{AngleSchedule, SpectrumBounds};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Start,
    /// Finite-difference probe.
    Probe,
    /// Accepted move.
    Iterate,
    /// Candidate move that did not lower the energy.
    Rejected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// Index of the evaluation, counting from zero.
    pub evaluation: u64,
    pub kind: StepKind,
    pub schedule: AngleSchedule,
    pub energy: f64,
    pub eta: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Gradient estimate below tolerance.
    Converged,
    /// Too many rejected moves in a row.
    Patience,
    /// Evaluation budget used up.
    Budget,
    /// The evaluator returned an error.
    Failed,
}

/// Every evaluation an optimizer made, in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub entries: Vec<TraceEntry>,
    /// Number of gradient estimates; retries after a rejected move reuse the
    /// current one.
    pub iterations: usize,
    pub stop: StopReason,
}

impl OptimizationTrace {
    /// Lowest-energy entry over all evaluations (first one on ties).
    pub fn best(&self) -> &TraceEntry {
        let mut best = &self.entries[0];
        for e in &self.entries[1..] {
            if e.energy < best.energy {
                best = e;
            }
        }
        best
    }

    /// Last accepted point, or the start.
    pub fn last_iterate(&self) -> &TraceEntry {
        self.entries
            .iter()
            .rev()
            .find(|e| matches!(e.kind, StepKind::Iterate | StepKind::Start))
            .expect("a trace always holds its start")
    }

    pub fn evaluations(&self) -> usize {
        self.entries.len()
    }

    pub fn with_eta(mut self, bounds: &SpectrumBounds) -> Result<Self> {
        for e in &mut self.entries {
            e.eta = Some(eta(e.energy, bounds)?);
        }
        Ok(self)
    }

    /// `evaluation,kind,energy,eta,gamma_1..,beta_1..` rows.
    pub fn to_csv(&self) -> String {
        let p = self.entries.first().map_or(0, |e| e.schedule.p());
        let mut out = String::from("evaluation,kind,energy,eta");
        for k in 1..=p {
            out.push_str(&format!(",gamma_{k}"));
        }
        for k in 1..=p {
            out.push_str(&format!(",beta_{k}"));
        }
        out.push('\n');
        for e in &self.entries {
            let kind = match e.kind {
                StepKind::Start => "start",
                StepKind::Probe => "probe",
                StepKind::Iterate => "iterate",
                StepKind::Rejected => "rejected",
            };
            let eta = e.eta.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{kind},{},{eta}", e.evaluation, e.energy));
            for a in e.schedule.to_params() {
                out.push_str(&format!(",{a}"));
            }
            out.push('\n');
        }
        out
    }
}
