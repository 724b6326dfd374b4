//! Performance and distribution-comparison metrics.
//!
//! `η = (E − E_max)/(E_gs − E_max)` maps the spectrum onto `[0, 1]`. Measured
//! bit-string histograms are compared with theory through the total variation
//! distance and the Kullback–Leibler divergence, either directly or after
//! grouping strings into Hamming "bubbles" around the most frequent outcomes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::noise::SampleSet;
use crate::simulator::SpectrumBounds;

/// Slack accepted on η before an energy is treated as inconsistent.
pub const ETA_SLACK: f64 = 1e-8;

const NORMALIZATION_SLACK: f64 = 1e-8;

/// `(E − E_max)/(E_gs − E_max)`, clamped to `[0, 1]` within [`ETA_SLACK`].
pub fn eta(e: f64, bounds: &SpectrumBounds) -> Result<f64> {
    if !(bounds.e_gs < bounds.e_max) {
        return Err(invalid(format!(
            "degenerate spectrum bounds [{}, {}]",
            bounds.e_gs, bounds.e_max
        )));
    }
    let value = (e - bounds.e_max) / (bounds.e_gs - bounds.e_max);
    if !(-ETA_SLACK..=1.0 + ETA_SLACK).contains(&value) {
        return Err(Error::InconsistentEnergy {
            energy: e,
            e_gs: bounds.e_gs,
            e_max: bounds.e_max,
        });
    }
    Ok(value.clamp(0.0, 1.0))
}

fn check_pair(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    for v in [p, q] {
        if v.iter().any(|x| !(*x >= 0.0)) {
            return Err(invalid("probabilities must be non-negative"));
        }
        let s: f64 = v.iter().sum();
        if (s - 1.0).abs() > NORMALIZATION_SLACK {
            return Err(Error::NotNormalized(s));
        }
    }
    Ok(())
}

/// Mean and unbiased sample variance. Constant data gives exactly zero variance.
pub(crate) fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let len = values.len() as f64;
    let m = values.iter().sum::<f64>() / len;
    if values.len() < 2 {
        return (m, 0.0);
    }
    let x0 = values[0];
    let (s1, s2) = values
        .iter()
        .fold((0.0, 0.0), |(a, b), x| (a + (x - x0), b + (x - x0).powi(2)));
    let v = (s2 - s1 * s1 / len) / (len - 1.0);
    (m, v.max(0.0))
}

/// `½ Σ |p_i − q_i|`.
pub fn tvd(p: &[f64], q: &[f64]) -> Result<f64> {
    check_pair(p, q)?;
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Floor used for empty theory bins when comparing against `shots` samples.
pub fn shot_floor(shots: usize) -> f64 {
    1.0 / (10.0 * shots.max(1) as f64)
}

/// `D_KL(p‖q) = Σ p_i ln(p_i/q_i)` in nats.
///
/// Bins with `q_i = 0` but `p_i > 0` are raised to `floor` and `q` is then
/// renormalized. With `floor = 0` such bins make the divergence infinite.
pub fn kl_divergence(p: &[f64], q: &[f64], floor: f64) -> Result<f64> {
    check_pair(p, q)?;
    if !(0.0..1.0).contains(&floor) {
        return Err(invalid(format!("KL floor {floor} must lie in [0, 1)")));
    }
    let mut q = q.to_vec();
    let mut patched = false;
    for (qi, &pi) in q.iter_mut().zip(p) {
        if *qi == 0.0 && pi > 0.0 {
            if floor == 0.0 {
                return Ok(f64::INFINITY);
            }
            *qi = floor;
            patched = true;
        }
    }
    if patched {
        let s: f64 = q.iter().sum();
        q.iter_mut().for_each(|v| *v /= s);
    }
    let d: f64 = p
        .iter()
        .zip(&q)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| pi * (pi / qi).ln())
        .sum();
    Ok(d.max(0.0))
}

/// One Hamming ball of the coarse-graining.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    pub center: u64,
    pub radius: u32,
    /// Strings of the full space assigned to this bubble.
    pub members: usize,
    /// Observed shots that landed in this bubble.
    pub shots: usize,
}

/// Disjoint Hamming bubbles over the `2^n` strings. Strings in no bubble
/// fall into a residual bin.
#[derive(Clone, Debug, PartialEq)]
pub struct BubbleSet {
    n: usize,
    bubbles: Vec<Bubble>,
    assignment: Vec<u32>,
}

const UNASSIGNED: u32 = u32::MAX;

#[derive(Serialize)]
struct BubbleDoc<'a> {
    n: usize,
    mean_radius: f64,
    bubbles: &'a [Bubble],
}

impl BubbleSet {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bubbles(&self) -> &[Bubble] {
        &self.bubbles
    }

    pub fn len(&self) -> usize {
        self.bubbles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bubbles.is_empty()
    }

    /// Index of the bubble holding `x`, if any.
    pub fn bubble_of(&self, x: u64) -> Option<usize> {
        match self.assignment.get(x as usize) {
            Some(&b) if b != UNASSIGNED => Some(b as usize),
            _ => None,
        }
    }

    /// Shot-weighted mean radius `L̄`.
    pub fn mean_radius(&self) -> f64 {
        let shots: usize = self.bubbles.iter().map(|b| b.shots).sum();
        if shots == 0 {
            return 0.0;
        }
        self.bubbles
            .iter()
            .map(|b| b.radius as f64 * b.shots as f64)
            .sum::<f64>()
            / shots as f64
    }

    /// Coarse empirical distribution of the shots used to build the bubbles,
    /// with a trailing residual bin (always zero).
    pub fn shot_distribution(&self) -> Vec<f64> {
        let shots: usize = self.bubbles.iter().map(|b| b.shots).sum();
        let mut out: Vec<f64> = self
            .bubbles
            .iter()
            .map(|b| b.shots as f64 / shots as f64)
            .collect();
        out.push(0.0);
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&BubbleDoc {
            n: self.n,
            mean_radius: self.mean_radius(),
            bubbles: &self.bubbles,
        })?)
    }
}

/// Key giving lexicographic order of the strings written site 0 first.
fn lexicographic_key(x: u64, n: usize) -> u64 {
    x.reverse_bits() >> (64 - n)
}

/// Calls `f` for every string at Hamming distance exactly `d` from `center`.
fn for_each_at_distance(n: usize, center: u64, d: usize, mut f: impl FnMut(u64)) {
    if d == 0 {
        f(center);
        return;
    }
    if d > n {
        return;
    }
    let limit = 1u64 << n;
    let mut mask = (1u64 << d) - 1;
    while mask < limit {
        f(center ^ mask);
        // next mask with the same popcount
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
}

/// Group shots into Hamming bubbles.
///
/// Observed strings are visited by decreasing count (ties in lexicographic
/// order). Each unassigned string opens a bubble whose radius grows from 0
/// until it holds at least `target_per_bubble` shots or has absorbed every
/// remaining observed string. A bubble claims every not-yet-assigned string
/// of the full space within its radius.
pub fn coarse_grain(samples: &SampleSet, target_per_bubble: usize) -> Result<BubbleSet> {
    let n = samples.n();
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    crate::simulator::check_qubits(n)?;
    let target = target_per_bubble.max(1);
    let counts: BTreeMap<u64, usize> = samples.counts();
    let mut order: Vec<(u64, usize)> = counts.iter().map(|(&x, &c)| (x, c)).collect();
    order.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then(lexicographic_key(a.0, n).cmp(&lexicographic_key(b.0, n)))
    });

    let mut assignment = vec![UNASSIGNED; 1usize << n];
    let mut bubbles: Vec<Bubble> = Vec::new();
    let mut remaining_shots: usize = samples.len();

    for &(center, _) in &order {
        if assignment[center as usize] != UNASSIGNED {
            continue;
        }
        let id = bubbles.len() as u32;
        // shots still unassigned, bucketed by distance from the center
        let mut by_distance = vec![0usize; n + 1];
        for &(x, c) in &order {
            if assignment[x as usize] == UNASSIGNED {
                by_distance[(x ^ center).count_ones() as usize] += c;
            }
        }
        let mut shots = 0usize;
        let mut radius = 0usize;
        loop {
            shots += by_distance[radius];
            if shots >= target || shots == remaining_shots || radius == n {
                break;
            }
            radius += 1;
        }
        let mut members = 0usize;
        for d in 0..=radius {
            for_each_at_distance(n, center, d, |x| {
                let slot = &mut assignment[x as usize];
                if *slot == UNASSIGNED {
                    *slot = id;
                    members += 1;
                }
            });
        }
        remaining_shots -= shots;
        bubbles.push(Bubble {
            center,
            radius: radius as u32,
            members,
            shots,
        });
    }
    Ok(BubbleSet {
        n,
        bubbles,
        assignment,
    })
}

/// Coarse probabilities `q_b = Σ_{x ∈ b} dist[x]` followed by the residual bin.
pub fn apply_bubbles(bubbles: &BubbleSet, dist: &[f64]) -> Result<Vec<f64>> {
    if dist.len() != bubbles.assignment.len() {
        return Err(Error::DimensionMismatch {
            expected: bubbles.assignment.len(),
            got: dist.len(),
        });
    }
    let mut out = vec![0.0; bubbles.len() + 1];
    let residual = bubbles.len();
    for (&b, &p) in bubbles.assignment.iter().zip(dist) {
        out[if b == UNASSIGNED {
            residual
        } else {
            b as usize
        }] += p;
    }
    Ok(out)
}

/// Coarse TVD and KL divergence between measured shots and a theory
/// distribution, using bubbles built from the shots themselves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoarseComparison {
    pub bubbles: usize,
    pub mean_radius: f64,
    pub tvd: f64,
    pub kl: f64,
}

pub fn coarse_compare(
    samples: &SampleSet,
    theory: &[f64],
    target_per_bubble: usize,
) -> Result<CoarseComparison> {
    let set = coarse_grain(samples, target_per_bubble)?;
    let p = set.shot_distribution();
    let q = apply_bubbles(&set, theory)?;
    Ok(CoarseComparison {
        bubbles: set.len(),
        mean_radius: set.mean_radius(),
        tvd: tvd(&p, &q)?,
        kl: kl_divergence(&p, &q, shot_floor(samples.len()))?,
    })
}
