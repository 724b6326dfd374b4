use serde::{Deserialize, Serialize};

use super::evaluator::Evaluator;
use super::{OptimizationTrace, StepKind, StopReason, TraceEntry};
use crate::error::{invalid, Error, Result};
use crate::simulator::AngleSchedule;

/// Forward-difference gradient descent with greedy step halving.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DescentOptions {
    /// Finite-difference step.
    pub delta: f64,
    /// Initial learning rate.
    pub rate: f64,
    /// Rejected moves in a row before giving up.
    pub patience: usize,
    /// Maximum number of evaluations, the start included.
    pub budget: usize,
    /// Stop once the gradient estimate is shorter than this.
    pub gradient_tol: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            delta: 0.05,
            rate: 0.3,
            patience: 5,
            budget: 60,
            gradient_tol: 1e-6,
        }
    }
}

impl DescentOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.rate > 0.0 && self.gradient_tol >= 0.0) {
            return Err(invalid("descent step, rate and tolerance must be positive"));
        }
        if self.budget < 2 || self.patience == 0 {
            return Err(invalid(
                "descent needs a budget of at least two and a positive patience",
            ));
        }
        Ok(())
    }
}

/// Minimizes from `start`. A rejected move halves the rate and retries along
/// the same gradient; an accepted one re-estimates the gradient there.
///
/// A failing evaluation ends the run with [`Error::EvaluationFailed`], which
/// carries the trace up to that point.
pub fn gradient_descent(
    evaluator: &dyn Evaluator,
    start: &AngleSchedule,
    opts: &DescentOptions,
) -> Result<OptimizationTrace> {
    opts.validate()?;
    let mut entries = Vec::new();
    match descend(evaluator, start, opts, &mut entries) {
        Ok((iterations, stop)) => Ok(OptimizationTrace {
            entries,
            iterations,
            stop,
        }),
        Err(source) => Err(Error::EvaluationFailed {
            evaluation: entries.len() as u64,
            source: Box::new(source),
            partial: Box::new(OptimizationTrace {
                iterations: entries.iter().filter(|e| e.kind == StepKind::Probe).count()
                    / start.p().max(1)
                    / 2,
                entries,
                stop: StopReason::Failed,
            }),
        }),
    }
}

fn descend(
    evaluator: &dyn Evaluator,
    start: &AngleSchedule,
    opts: &DescentOptions,
    entries: &mut Vec<TraceEntry>,
) -> Result<(usize, StopReason)> {
    let eval = |params: &[f64], kind: StepKind, entries: &mut Vec<TraceEntry>| -> Result<f64> {
        let schedule = AngleSchedule::from_params(params)?;
        let call = entries.len() as u64;
        let energy = evaluator.evaluate(&schedule, call)?.energy;
        entries.push(TraceEntry {
            evaluation: call,
            kind,
            schedule,
            energy,
            eta: None,
        });
        Ok(energy)
    };

    let mut x = start.to_params();
    let mut e = eval(&x, StepKind::Start, entries)?;
    let mut rate = opts.rate;
    let mut rejected = 0;
    let mut iterations = 0;
    let mut grad: Option<Vec<f64>> = None;

    let stop = loop {
        let g = match grad.take() {
            Some(g) => g,
            None => {
                if entries.len() + x.len() >= opts.budget {
                    break StopReason::Budget;
                }
                let mut g = vec![0.0; x.len()];
                for k in 0..x.len() {
                    let mut probe = x.clone();
                    probe[k] += opts.delta;
                    g[k] = (eval(&probe, StepKind::Probe, entries)? - e) / opts.delta;
                }
                iterations += 1;
                g
            }
        };
        if g.iter().map(|v| v * v).sum::<f64>().sqrt() < opts.gradient_tol {
            break StopReason::Converged;
        }
        if entries.len() >= opts.budget {
            break StopReason::Budget;
        }
        let candidate: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - rate * gi).collect();
        let len = entries.len();
        let ec = eval(&candidate, StepKind::Iterate, entries)?;
        if ec < e {
            x = candidate;
            e = ec;
            rejected = 0;
        } else {
            entries[len].kind = StepKind::Rejected;
            rate *= 0.5;
            rejected += 1;
            if rejected >= opts.patience {
                break StopReason::Patience;
            }
            grad = Some(g);
        }
    };
    Ok((iterations, stop))
}
