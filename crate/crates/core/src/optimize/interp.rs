use crate::error::{invalid, Error, Result};
use crate::simulator::AngleSchedule;

/// Natural cubic spline through `(xs, ys)` evaluated at `at`. `xs` must be
/// strictly increasing; points outside the knot range are extrapolated with
/// the end cubic.
pub fn natural_cubic_spline(xs: &[f64], ys: &[f64], at: &[f64]) -> Result<Vec<f64>> {
    let n = xs.len();
    if ys.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: ys.len(),
        });
    }
    if n < 2 {
        return Err(invalid("a spline needs at least two knots"));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("spline knots must be strictly increasing"));
    }
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    // second derivatives, zero at both ends; Thomas algorithm on the interior
    let mut m = vec![0.0; n];
    if n > 2 {
        let k = n - 2;
        let mut diag = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for i in 0..k {
            diag[i] = 2.0 * (h[i] + h[i + 1]);
            rhs[i] = 6.0 * ((ys[i + 2] - ys[i + 1]) / h[i + 1] - (ys[i + 1] - ys[i]) / h[i]);
        }
        for i in 1..k {
            let w = h[i] / diag[i - 1];
            diag[i] -= w * h[i];
            rhs[i] -= w * rhs[i - 1];
        }
        m[k] = rhs[k - 1] / diag[k - 1];
        for i in (0..k - 1).rev() {
            m[i + 1] = (rhs[i] - h[i + 1] * m[i + 2]) / diag[i];
        }
    }
    Ok(at
        .iter()
        .map(|&x| {
            let seg = xs[1..n - 1].iter().take_while(|&&k| k <= x).count();
            let (x0, x1, hh) = (xs[seg], xs[seg + 1], h[seg]);
            let (a, b) = ((x1 - x) / hh, (x - x0) / hh);
            a * ys[seg]
                + b * ys[seg + 1]
                + ((a * a * a - a) * m[seg] + (b * b * b - b) * m[seg + 1]) * hh * hh / 6.0
        })
        .collect())
}

/// Values of a per-layer angle curve at normalized depths `s ∈ [0, 1]`: the
/// `p` angles sit at `s = k/(p−1)` and are joined by a constant (p = 1), a
/// straight line (p = 2) or a natural cubic spline.
fn curve(values: &[f64], s: &[f64]) -> Result<Vec<f64>> {
    let p = values.len();
    if p == 1 {
        return Ok(vec![values[0]; s.len()]);
    }
    let knots: Vec<f64> = (0..p).map(|k| k as f64 / (p - 1) as f64).collect();
    // a two-knot natural spline is the straight line
    natural_cubic_spline(&knots, values, s)
}

fn depths(q: usize) -> Vec<f64> {
    if q == 1 {
        vec![0.0]
    } else {
        (0..q).map(|k| k as f64 / (q - 1) as f64).collect()
    }
}

/// Resamples a schedule onto `q` layers along its interpolating curves.
pub fn interpolate_schedule(schedule: &AngleSchedule, q: usize) -> Result<AngleSchedule> {
    if q == 0 {
        return Err(invalid("cannot interpolate onto zero layers"));
    }
    let s = depths(q);
    AngleSchedule::new(curve(schedule.gammas(), &s)?, curve(schedule.betas(), &s)?)
}

/// Largest pointwise gap between the interpolating curves of two schedules,
/// over both angles and 101 evenly spaced normalized depths. The schedules
/// may have different depths.
pub fn schedule_deviation(a: &AngleSchedule, b: &AngleSchedule) -> Result<f64> {
    let s = depths(101);
    let mut worst: f64 = 0.0;
    for (x, y) in [(a.gammas(), b.gammas()), (a.betas(), b.betas())] {
        for (u, v) in curve(x, &s)?.into_iter().zip(curve(y, &s)?) {
            worst = worst.max((u - v).abs());
        }
    }
    Ok(worst)
}
