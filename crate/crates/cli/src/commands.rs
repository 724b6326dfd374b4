//! One function per subcommand. Each reads the resolved config, writes its
//! files through [`OutputDir`] and leaves the manifest to the caller.

use std::fmt::Write as _;

use ising_qaoa::ionphysics::{fit_compound, fit_power_law};
use ising_qaoa::metrics::{coarse_compare, coarse_grain, eta};
use ising_qaoa::model::{build_power_law, IsingModel};
use ising_qaoa::noise::{
    drift_averaged_phonon_flips, noisy_experiment, noisy_experiment_scan, trap_phonon_flips,
    FlipProbability, NoiseModel, ShotPlan, LIGHT_SHIFT_QUBIT_CAP,
};
use ising_qaoa::optimize::{
    bootstrap_schedule, gradient_descent, grid_search, interpolate_schedule, AnalyticEvaluator,
    BootstrapLevel, BootstrapOptions, Evaluator, NoisyShotEvaluator, StateVectorEvaluator,
};
use ising_qaoa::rng::child_seed;
use ising_qaoa::simulator::{
    extremal_energies_with, half_chain_entropy, output_distribution, AngleSchedule, LanczosOptions,
    QaoaSimulator, SpectrumBounds, DEFAULT_QUBIT_CAP,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{EvaluatorSpec, ExperimentConfig};
use crate::error::{schema, CliError, Result};
use crate::manifest::OutputDir;

/// Child-seed streams owned by the CLI, above the library's labels.
mod stream {
    pub const PHONON_DRIFT: u64 = 101;
    pub const EVALUATOR: u64 = 102;
    pub const SAMPLE: u64 = 103;
    pub const SCAN: u64 = 104;
}

pub struct Context<'a> {
    pub config: &'a ExperimentConfig,
    pub seed: u64,
    pub cap: Option<usize>,
}

impl Context<'_> {
    fn sv_cap(&self) -> usize {
        self.cap.unwrap_or(DEFAULT_QUBIT_CAP)
    }

    fn check_cap(&self, n: usize, cap: usize) -> Result<()> {
        if n > cap {
            return Err(CliError::Cap { n, cap });
        }
        Ok(())
    }

    /// Build the model after checking the register against the cap.
    fn model(&self) -> Result<IsingModel> {
        self.check_cap(self.config.sites()?, self.sv_cap())?;
        self.config.model()
    }

    fn bounds(&self, model: &IsingModel, want_vector: bool) -> Result<SpectrumBounds> {
        let opts = LanczosOptions {
            max_qubits: self.sv_cap(),
            ..LanczosOptions::default()
        };
        Ok(extremal_energies_with(model, want_vector, &opts)?)
    }

    /// Noise model with phonon-assisted flips substituted when requested.
    fn noise(&self, n: usize) -> Result<NoiseModel> {
        let spec = &self.config.noise;
        let mut noise = spec.model.clone();
        if let Some(trap) = &spec.phonon_trap {
            let trap = trap.resolve()?;
            if trap.n != n {
                return Err(schema(format!(
                    "noise.phonon_trap has {} ions but the model has {n}",
                    trap.n
                )));
            }
            let flips = match spec.drive_drift {
                Some(drift) => drift_averaged_phonon_flips(
                    &trap,
                    drift,
                    child_seed(self.seed, stream::PHONON_DRIFT, 0),
                )?,
                None => trap_phonon_flips(&trap)?,
            };
            noise.p_flip = FlipProbability::PerIon(flips.per_ion);
        }
        noise.flip_probabilities(n)?;
        Ok(noise)
    }

    fn plan(&self, shots_x: usize, shots_y: usize) -> ShotPlan {
        ShotPlan {
            shots_x,
            shots_y,
            cap: self.cap.unwrap_or(LIGHT_SHIFT_QUBIT_CAP),
        }
    }

    fn evaluator(&self, spec: EvaluatorSpec, model: &IsingModel) -> Result<Box<dyn Evaluator>> {
        Ok(match spec {
            EvaluatorSpec::Analytic => Box::new(AnalyticEvaluator::new(model)),
            EvaluatorSpec::StateVector => {
                Box::new(StateVectorEvaluator::with_cap(model, self.sv_cap())?)
            }
            EvaluatorSpec::Noisy { shots_x, shots_y } => {
                let noise = self.noise(model.n())?;
                let plan = self.plan(shots_x, shots_y);
                let seed = child_seed(self.seed, stream::EVALUATOR, 0);
                Box::new(NoisyShotEvaluator::new(model, noise, plan, seed)?)
            }
        })
    }

    /// Depth-1 optimum of the closed form on `landscape.grid`.
    fn grid_optimum(&self, model: &IsingModel) -> Result<(f64, f64)> {
        let (g, b, _) =
            grid_search(&AnalyticEvaluator::new(model), &self.config.landscape.grid)?.best();
        Ok((g, b))
    }
}

fn csv_row(out: &mut String, fields: &[String]) {
    out.push_str(&fields.join(","));
    out.push('\n');
}

#[derive(Serialize)]
struct ScheduleResult {
    gammas: Vec<f64>,
    betas: Vec<f64>,
    energy: f64,
    eta: f64,
}

fn schedule_result(
    s: &AngleSchedule,
    energy: f64,
    bounds: &SpectrumBounds,
) -> Result<ScheduleResult> {
    Ok(ScheduleResult {
        gammas: s.gammas().to_vec(),
        betas: s.betas().to_vec(),
        energy,
        eta: eta(energy, bounds)?,
    })
}

pub fn couplings(ctx: &Context, out: &mut OutputDir) -> Result<()> {
    let j = ctx.config.couplings()?;
    let model = IsingModel::from_physical(&j, ctx.config.model.b_over_j0)?;
    out.write("couplings.csv", j.to_csv().as_bytes())?;
    out.write("normalized.csv", model.couplings().to_csv().as_bytes())?;
    let fit = |r: ising_qaoa::Result<_>| match r {
        Ok(f) => json!(f),
        Err(e) => json!({ "error": e.to_string() }),
    };
    out.write_json(
        "fit.json",
        &json!({
            "n": j.n(),
            "j0_nearest_neighbour": model.j0(),
            "separation_means": j.separation_means(),
            "power_law": fit(fit_power_law(&j)),
            "compound": fit(fit_compound(&j)),
        }),
    )?;
    if let crate::config::CouplingSource::Modes { trap } = &ctx.config.model.couplings {
        let (y, z) = trap.resolve()?.modes()?;
        out.write("modes_y.csv", y.to_csv().as_bytes())?;
        out.write("modes_z.csv", z.to_csv().as_bytes())?;
    }
    Ok(())
}

/// Ground-state energy, top energy and half-chain entropy at one field.
fn spectrum_point(ctx: &Context, model: &IsingModel) -> Result<(SpectrumBounds, f64)> {
    let bounds = ctx.bounds(model, true)?;
    let s = half_chain_entropy(bounds.gs_vector.as_ref().expect("vector was requested"));
    Ok((bounds, s))
}

type SpectrumRow = (f64, SpectrumBounds, f64);

/// Field of largest entropy; ties go to the first.
fn entropy_peak(
    ctx: &Context,
    model: &IsingModel,
    fields: &[f64],
) -> Result<(f64, Vec<SpectrumRow>)> {
    let mut rows = Vec::with_capacity(fields.len());
    for &b in fields {
        let (bounds, s) = spectrum_point(ctx, &model.with_b(b))?;
        rows.push((b, bounds, s));
    }
    let peak = rows
        .iter()
        .fold(None::<(f64, f64)>, |best, (b, _, s)| match best {
            Some((_, sb)) if sb >= *s => best,
            _ => Some((*b, *s)),
        })
        .map(|(b, _)| b)
        .expect("ranges hold at least one point");
    Ok((peak, rows))
}

pub fn spectrum(ctx: &Context, out: &mut OutputDir) -> Result<()> {
    let model = ctx.model()?;
    let fields = ctx.config.spectrum.fields.values();
    let (peak, rows) = entropy_peak(ctx, &model, &fields)?;
    let mut csv = String::from("b_over_j0,e_gs,e_max,entropy\n");
    for (b, bounds, s) in &rows {
        csv_row(
            &mut csv,
            &[
                b.to_string(),
                bounds.e_gs.to_string(),
                bounds.e_max.to_string(),
                s.to_string(),
            ],
        );
    }
    out.write("spectrum.csv", csv.as_bytes())?;
    let k = rows
        .iter()
        .position(|r| r.0 == peak)
        .expect("peak is one of the rows");
    out.write_json(
        "peak.json",
        &json!({
            "b_over_j0": peak,
            "entropy": rows[k].2,
            "interior": k > 0 && k + 1 < rows.len(),
        }),
    )?;
    Ok(())
}

pub fn landscape(ctx: &Context, out: &mut OutputDir) -> Result<()> {
    let model = ctx.model()?;
    let spec = &ctx.config.landscape;
    let evaluator = ctx.evaluator(spec.evaluator, &model)?;
    let bounds = ctx.bounds(&model, false)?;
    let land = grid_search(evaluator.as_ref(), &spec.grid)?;
    out.write("landscape.csv", land.to_csv(Some(&bounds))?.as_bytes())?;
    let (g, b, e) = land.best();
    out.write_json(
        "best.json",
        &json!({
            "gamma": g,
            "beta": b,
            "energy": e,
            "eta": eta(e, &bounds)?,
            "e_gs": bounds.e_gs,
            "e_max": bounds.e_max,
        }),
    )?;
    Ok(())
}

pub fn descend(ctx: &Context, out: &mut OutputDir) -> Result<()> {
    let model = ctx.model()?;
    let spec = &ctx.config.descend;
    let start = match &spec.start {
        Some(params) => AngleSchedule::from_params(params)?,
        None => {
            let (g, b) = ctx.config.landscape.grid.centroid();
            AngleSchedule::single(g, b)?
        }
    };
    let evaluator = ctx.evaluator(spec.evaluator, &model)?;
    let bounds = ctx.bounds(&model, false)?;
    let trace = match gradient_descent(evaluator.as_ref(), &start, &spec.options) {
        Ok(t) => t,
        Err(ising_qaoa::Error::EvaluationFailed {
            evaluation,
            source,
            partial,
        }) => {
            // keep what was evaluated before reporting the failure
            out.write("trace.csv", partial.to_csv().as_bytes())?;
            return Err(ising_qaoa::Error::EvaluationFailed {
                evaluation,
                source,
                partial,
            }
            .into());
        }
        Err(e) => return Err(e.into()),
    };
    let trace = trace.with_eta(&bounds)?;
    out.write("trace.csv", trace.to_csv().as_bytes())?;
    let best = trace.best();
    out.write_json(
        "result.json",
        &json!({
            "iterations": trace.iterations,
            "evaluations": trace.evaluations(),
            "stop": trace.stop,
            "best": schedule_result(&best.schedule, best.energy, &bounds)?,
        }),
    )?;
    Ok(())
}

fn run_bootstrap(
    ctx: &Context,
    model: &IsingModel,
    p: usize,
    opts: &BootstrapOptions,
) -> Result<(Vec<BootstrapLevel>, SpectrumBounds)> {
    let bounds = ctx.bounds(model, true)?;
    let evaluator = StateVectorEvaluator::with_cap(model, ctx.sv_cap())?;
    let levels = bootstrap_schedule(model, &evaluator, p, opts)?;
    Ok((levels, bounds))
}

pub fn bootstrap(ctx: &Context, out: &mut OutputDir) -> Result<()> {
    let model = ctx.model()?;
    let spec = &ctx.config.bootstrap;
    let (levels, bounds) = run_bootstrap(ctx, &model, spec.p, &spec.options)?;

    let mut schedules = String::from("p,layer,gamma,beta\n");
    let mut curves = String::from("p,s,gamma,beta\n");
    let mut summary = Vec::new();
    for level in &levels {
        for (k, (g, b)) in level.schedule.layers().enumerate() {
            csv_row(
                &mut schedules,
                &[
                    level.p.to_string(),
                    (k + 1).to_string(),
                    g.to_string(),
                    b.to_string(),
                ],
            );
        }
        let curve = interpolate_schedule(&level.schedule, spec.curve_points)?;
        for (k, (g, b)) in curve.layers().enumerate() {
            let s = k as f64 / (spec.curve_points - 1) as f64;
            csv_row(
                &mut curves,
                &[
                    level.p.to_string(),
                    s.to_string(),
                    g.to_string(),
                    b.to_string(),
                ],
            );
        }
        summary.push(json!({
            "p": level.p,
            "seed_rule": level.seed_rule,
            "seed": level.seed,
            "result": schedule_result(&level.schedule, level.energy, &bounds)?,
            "evaluations": level.evaluations,
            "converged": level.converged,
        }));
    }
    out.write("schedules.csv", schedules.as_bytes())?;
    out.write("curves.csv", curves.as_bytes())?;
    out.write_json(
        "levels.json",
        &json!({ "e_gs": bounds.e_gs, "e_max": bounds.e_max, "levels": summary }),
    )?;
    Ok(())
}

/// Least-squares line `y = slope·x + intercept` and its R².
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, my - slope * mx, r2)
}

pub fn scaling(ctx: &Context, out: &mut OutputDir) -> Result<()> {
    let spec = &ctx.config.scaling;
    let fields = spec.fields.values();
    let mut csv = String::from("n,p,b_over_j0,energy,eta,inv_one_minus_eta,overlap\n");
    let mut per_p: Vec<Vec<(f64, f64)>> = vec![Vec::new(); spec.p_max];
    for &n in &spec.sizes {
        ctx.check_cap(n, ctx.sv_cap())?;
        let base = IsingModel::from_physical(&build_power_law(n, 1.0, spec.alpha)?, 0.0)?;
        let b = match spec.b_over_j0 {
            Some(b) => b,
            None => entropy_peak(ctx, &base, &fields)?.0,
        };
        let model = base.with_b(b);
        let (levels, bounds) = run_bootstrap(ctx, &model, spec.p_max, &spec.options)?;
        let gs = bounds.gs_vector.as_ref().expect("vector was requested");
        let sim = QaoaSimulator::with_cap(&model, ctx.sv_cap())?;
        for level in &levels {
            let e = eta(level.energy, &bounds)?;
            let overlap = gs.inner(&sim.prepare(&level.schedule)?)?.norm_sqr();
            let inv = 1.0 / (1.0 - e);
            per_p[level.p - 1].push((n as f64, inv));
            csv_row(
                &mut csv,
                &[
                    n.to_string(),
                    level.p.to_string(),
                    b.to_string(),
                    level.energy.to_string(),
                    e.to_string(),
                    inv.to_string(),
                    overlap.to_string(),
                ],
            );
        }
    }
    out.write("scaling.csv", csv.as_bytes())?;
    let fits: Vec<_> = per_p
        .iter()
        .enumerate()
        .filter(|(_, pts)| pts.len() >= 2)
        .map(|(k, pts)| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().cloned().unzip();
            let (slope, intercept, r2) = linear_fit(&xs, &ys);
            json!({ "p": k + 1, "slope": slope, "intercept": intercept, "r2": r2 })
        })
        .collect();
    out.write_json("fits.json", &json!({ "fits": fits }))?;
    Ok(())
}

fn bit_string(x: u64, n: usize) -> String {
    (0..n)
        .map(|i| if (x >> i) & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn sample(ctx: &Context, out: &mut OutputDir) -> Result<()> {
    let model = ctx.model()?;
    let n = model.n();
    let spec = &ctx.config.sample;
    let noise = ctx.noise(n)?;
    let (g_opt, b_opt) = ctx.grid_optimum(&model)?;
    let gamma = spec.gamma.unwrap_or(g_opt);
    let beta = spec.beta.unwrap_or(b_opt);
    let shots_y = if model.b_over_j0() == 0.0 {
        0
    } else {
        spec.shots
    };
    let plan = ctx.plan(spec.shots, shots_y);

    let at = AngleSchedule::single(gamma, beta)?;
    let ideal = output_distribution(&QaoaSimulator::with_cap(&model, ctx.sv_cap())?.prepare(&at)?);
    let point = noisy_experiment(
        &model,
        &at,
        plan,
        &noise,
        child_seed(ctx.seed, stream::SAMPLE, 0),
    )?;
    out.write("samples.csv", point.x_samples.to_csv().as_bytes())?;
    let empirical = point.x_samples.empirical_distribution()?;
    let mut dist = String::from("index,bits,ideal,empirical\n");
    for (x, (p, q)) in ideal.iter().zip(&empirical).enumerate() {
        let _ = writeln!(dist, "{x},{},{p},{q}", bit_string(x as u64, n));
    }
    out.write("distribution.csv", dist.as_bytes())?;
    out.write(
        "bubbles.json",
        coarse_grain(&point.x_samples, spec.target_per_bubble)?
            .to_json()?
            .as_bytes(),
    )?;

    let schedules: Vec<AngleSchedule> = spec
        .gammas
        .values()
        .into_iter()
        .map(|g| AngleSchedule::single(g, beta))
        .collect::<ising_qaoa::Result<_>>()?;
    let points = noisy_experiment_scan(
        &model,
        &schedules,
        plan,
        &noise,
        child_seed(ctx.seed, stream::SCAN, 0),
    )?;
    let mut scan = String::from("gamma,beta,tvd,kl,bubbles,mean_radius\n");
    for p in &points {
        let c = coarse_compare(&p.x_samples, &ideal, spec.target_per_bubble)?;
        csv_row(
            &mut scan,
            &[
                p.schedule.gammas()[0].to_string(),
                beta.to_string(),
                c.tvd.to_string(),
                c.kl.to_string(),
                c.bubbles.to_string(),
                c.mean_radius.to_string(),
            ],
        );
    }
    out.write("scan.csv", scan.as_bytes())?;
    out.write_json(
        "optimum.json",
        &json!({ "gamma": gamma, "beta": beta, "grid_gamma": g_opt, "grid_beta": b_opt }),
    )?;
    Ok(())
}

pub fn noisy_scan(ctx: &Context, out: &mut OutputDir) -> Result<()> {
    let model = ctx.model()?;
    let n = model.n();
    let spec = &ctx.config.noisy_scan;
    let noise = ctx.noise(n)?;
    let beta = match spec.beta {
        Some(b) => b,
        None => ctx.grid_optimum(&model)?.1,
    };
    let bounds = ctx.bounds(&model, false)?;
    let schedules: Vec<AngleSchedule> = spec
        .gammas
        .values()
        .into_iter()
        .map(|g| AngleSchedule::single(g, beta))
        .collect::<ising_qaoa::Result<_>>()?;
    let plan = ctx.plan(spec.shots_x, spec.shots_y);
    let points = noisy_experiment_scan(
        &model,
        &schedules,
        plan,
        &noise,
        child_seed(ctx.seed, stream::SCAN, 0),
    )?;

    let mut csv = String::from("gamma,beta,ideal_energy,noisy_energy,stderr,ideal_eta,noisy_eta\n");
    for p in &points {
        csv_row(
            &mut csv,
            &[
                p.schedule.gammas()[0].to_string(),
                beta.to_string(),
                p.ideal_energy.to_string(),
                p.estimate.energy.to_string(),
                p.estimate.stderr.to_string(),
                eta(p.ideal_energy, &bounds)?.to_string(),
                // shot noise can leave the spectrum, so this one is not clamped
                ((bounds.e_max - p.estimate.energy) / bounds.bandwidth()).to_string(),
            ],
        );
    }
    out.write("scan.csv", csv.as_bytes())?;
    let argmin = |f: &dyn Fn(&ising_qaoa::noise::ScanPoint) -> f64| {
        points
            .iter()
            .min_by(|a, b| f(a).total_cmp(&f(b)))
            .expect("scans hold at least one point")
    };
    let ideal = argmin(&|p| p.ideal_energy);
    let noisy = argmin(&|p| p.estimate.energy);
    let flips = noise.flip_probabilities(n)?;
    out.write_json(
        "summary.json",
        &json!({
            "beta": beta,
            "ideal_min": { "gamma": ideal.schedule.gammas()[0], "energy": ideal.ideal_energy },
            "noisy_min": { "gamma": noisy.schedule.gammas()[0], "energy": noisy.estimate.energy, "stderr": noisy.estimate.stderr },
            "mean_flip_probability": flips.iter().sum::<f64>() / n as f64,
        }),
    )?;
    Ok(())
}
