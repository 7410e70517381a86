//! Fits of `P(m) = A + B·p^m` with bootstrap-over-circuits intervals, and
//! conversion of decay constants to error rates.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocols::{DecaySample, Protocol};
use crate::qcore::PauliString;
use crate::seeds::mix;

pub const MAX_ITERATIONS: usize = 200;
const STEP_TOL: f64 = 1e-12;
const CONSTANT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Theoretical asymptote used to initialise `A`.
    pub floor: f64,
    pub width: usize,
    /// Benchmark layers per unit of depth; `r` is reported per layer.
    pub layers_per_depth: usize,
    pub bootstrap_resamples: usize,
    pub seed: u64,
}

impl FitOptions {
    pub fn for_protocol(protocol: Protocol, width: usize) -> Self {
        Self {
            floor: protocol.floor(width),
            width,
            layers_per_depth: protocol.layers_per_depth(),
            bootstrap_resamples: 1000,
            seed: 0,
        }
    }

    pub fn with_resamples(mut self, n: usize) -> Self {
        self.bootstrap_resamples = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliDecay {
    pub pauli: PauliString,
    pub a: f64,
    pub b: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFitResult {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub p_ci_low: f64,
    pub p_ci_high: f64,
    /// Per-layer error rate.
    pub r: f64,
    pub r_ci_low: f64,
    pub r_ci_high: f64,
    pub residual_rms: f64,
    pub n_samples: usize,
    pub iterations: usize,
    /// The asymptote was held at the floor because the data could not
    /// identify it.
    #[serde(default)]
    pub floor_pinned: bool,
    pub bootstrap_failures: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_pauli: Vec<PauliDecay>,
}

/// `r = (4^w − 1)/4^w · (1 − p)`
pub fn error_rate_from_p(p: f64, w: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            range: "[0, 1]",
        });
    }
    let d2 = (1u64 << (2 * w)) as f64;
    Ok((d2 - 1.0) / d2 * (1.0 - p))
}

/// Per-layer error rate for a decay constant covering `layers` layers.
pub fn per_layer_error_rate(p: f64, w: usize, layers: usize) -> Result<f64> {
    error_rate_from_p(p.clamp(0.0, 1.0).powf(1.0 / layers.max(1) as f64), w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct CurveFit {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub iterations: usize,
    pub floor_pinned: bool,
}

/// Widest asymptote any survival probability, polarization or Pauli
/// expectation can reach.
const PLAUSIBLE_ASYMPTOTE: f64 = 1.0;

/// The asymptote is only fitted when the curve above the floor shrinks to
/// at least this fraction of its initial height over the sampled depths;
/// shallower curves are fitted with the asymptote held at the floor.
const MIN_DECAY_FOR_FREE_ASYMPTOTE: f64 = 1.0 / std::f64::consts::E;

fn decays_enough(data: &[(f64, f64, f64)], floor: f64) -> bool {
    let first = data[0].1 - floor;
    let last = data[data.len() - 1].1 - floor;
    first.abs() > CONSTANT_TOL && last / first <= MIN_DECAY_FOR_FREE_ASYMPTOTE
}

/// `(depth, mean, count)` per distinct depth.
fn depth_means(points: &[(usize, f64)]) -> Vec<(f64, f64, f64)> {
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for &(m, v) in points {
        let e = acc.entry(m).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(m, (s, n))| (m as f64, s / n as f64, n as f64))
        .collect()
}

fn cost(data: &[(f64, f64, f64)], a: f64, b: f64, p: f64) -> f64 {
    data.iter().map(|&(m, y, w)| w * (y - a - b * p.powf(m)).powi(2)).sum()
}

fn initial_guess(data: &[(f64, f64, f64)], floor: f64) -> (f64, f64, f64) {
    let pts: Vec<(f64, f64, f64)> = data
        .iter()
        .filter(|&&(_, y, _)| y - floor > 1e-15)
        .map(|&(m, y, w)| (m, (y - floor).ln(), w))
        .collect();
    if pts.len() < 2 {
        return (floor, data[0].1 - floor, 0.9);
    }
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let p0 = slope.exp().clamp(1e-6, 1.0);
    let b0 = (my - slope * mx).exp();
    (floor, b0, p0)
}

/// Levenberg-damped Gauss-Newton from the log-linear starting point. With
/// `free_asymptote` false, `A` stays at `floor`.
fn damped_gauss_newton(data: &[(f64, f64, f64)], floor: f64, free_asymptote: bool) -> Result<CurveFit> {
    let (mut a, mut b, mut p) = initial_guess(data, floor);
    let mut current = cost(data, a, b, p);
    let mut lambda = 1e-3;
    let mut last_step = f64::INFINITY;
    for iter in 1..=MAX_ITERATIONS {
        let mut jtj = Matrix3::<f64>::zeros();
        let mut jtr = Vector3::<f64>::zeros();
        for &(m, y, w) in data {
            let pm = p.powf(m);
            let dp = if m == 0.0 { 0.0 } else { b * m * p.powf(m - 1.0) };
            let j = Vector3::new(if free_asymptote { 1.0 } else { 0.0 }, pm, dp);
            let res = y - a - b * pm;
            jtj += w * j * j.transpose();
            jtr += w * res * j;
        }
        if !free_asymptote {
            jtj[(0, 0)] = 1.0;
        }
        let mut accepted = false;
        while lambda < 1e12 {
            let mut lhs = jtj;
            for i in 0..3 {
                lhs[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = lhs.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let (na, nb) = (a + step[0], b + step[1]);
            let np = (p + step[2]).clamp(0.0, 1.0);
            let trial = cost(data, na, nb, np);
            if trial <= current {
                last_step = Vector3::new(na - a, nb - b, np - p).norm();
                a = na;
                b = nb;
                p = np;
                current = trial;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 3.0;
        }
        if !accepted || last_step < STEP_TOL {
            return Ok(CurveFit {
                a,
                b,
                p,
                iterations: iter,
                floor_pinned: !free_asymptote,
            });
        }
    }
    Err(Error::FitFailed {
        iterations: MAX_ITERATIONS,
        last_step,
        a,
        b,
        p,
    })
}

/// Least-squares fit of `A + B·p^m` to per-depth means weighted by counts,
/// with `p` kept in [0, 1].
///
/// `A` is held at `floor` when the decay is too shallow to identify it:
/// the curve barely drops over the sampled depths, the free fit does not
/// converge, or it lands on an asymptote no bounded observable can have.
pub(crate) fn fit_curve(points: &[(usize, f64)], floor: f64) -> Result<CurveFit> {
    if points.iter().any(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidInput("decay values must be finite".into()));
    }
    let data = depth_means(points);
    if data.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least two distinct depths, got {}",
            data.len()
        )));
    }
    let lo = data.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
    let hi = data.iter().map(|d| d.1).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= CONSTANT_TOL {
        let level = (hi + lo) / 2.0;
        if (level - floor).abs() <= CONSTANT_TOL {
            return Err(Error::DegenerateFit(format!(
                "all values sit at the floor {floor}; the decay constant is unidentifiable"
            )));
        }
        return Ok(CurveFit {
            a: floor,
            b: level - floor,
            p: 1.0,
            iterations: 0,
            floor_pinned: false,
        });
    }

    if !decays_enough(&data, floor) {
        return damped_gauss_newton(&data, floor, false);
    }
    match damped_gauss_newton(&data, floor, true) {
        Ok(fit) if fit.a.abs() <= PLAUSIBLE_ASYMPTOTE => Ok(fit),
        free => damped_gauss_newton(&data, floor, false).or(free),
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Samples grouped as depth → circuit seed → samples of that circuit.
type Groups<'a> = BTreeMap<usize, Vec<Vec<&'a DecaySample>>>;

fn group_by_circuit(samples: &[DecaySample]) -> Groups<'_> {
    let mut by_depth: BTreeMap<usize, BTreeMap<u64, Vec<&DecaySample>>> = BTreeMap::new();
    for s in samples {
        by_depth.entry(s.depth).or_default().entry(s.circuit_seed).or_default().push(s);
    }
    by_depth
        .into_iter()
        .map(|(m, circuits)| (m, circuits.into_values().collect()))
        .collect()
}

fn resample<'a, R: Rng>(groups: &Groups<'a>, rng: &mut R) -> Vec<&'a DecaySample> {
    let mut out = Vec::new();
    for circuits in groups.values() {
        for _ in 0..circuits.len() {
            out.extend(circuits[rng.random_range(0..circuits.len())].iter().copied());
        }
    }
    out
}

fn points(samples: &[&DecaySample]) -> Vec<(usize, f64)> {
    samples.iter().map(|s| (s.depth, s.value)).collect()
}

/// Decay constant of a sample set: a single curve, or for tagged samples
/// the mean of per-Pauli constants.
fn point_estimate(samples: &[&DecaySample], floor: f64) -> Result<(f64, CurveFit, Vec<PauliDecay>)> {
    if samples.iter().all(|s| s.pauli_label.is_none()) {
        let fit = fit_curve(&points(samples), floor)?;
        return Ok((fit.p, fit, Vec::new()));
    }
    let mut by_pauli: BTreeMap<&PauliString, Vec<&DecaySample>> = BTreeMap::new();
    for s in samples {
        let label = s
            .pauli_label
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("mixed tagged and untagged samples".into()))?;
        by_pauli.entry(label).or_default().push(s);
    }
    let mut per = Vec::with_capacity(by_pauli.len());
    let mut iterations = 0;
    let mut floor_pinned = false;
    for (pauli, group) in by_pauli {
        let fit = fit_curve(&points(&group), floor)?;
        iterations = iterations.max(fit.iterations);
        floor_pinned |= fit.floor_pinned;
        per.push(PauliDecay {
            pauli: pauli.clone(),
            a: fit.a,
            b: fit.b,
            p: fit.p,
        });
    }
    let n = per.len() as f64;
    let mean = CurveFit {
        a: per.iter().map(|d| d.a).sum::<f64>() / n,
        b: per.iter().map(|d| d.b).sum::<f64>() / n,
        p: per.iter().map(|d| d.p).sum::<f64>() / n,
        iterations,
        floor_pinned,
    };
    Ok((mean.p, mean, per))
}

/// Fit a decay curve with a bootstrap interval over circuits.
///
/// Samples tagged with a Pauli label are fitted per label and the decay
/// constants averaged; resampling then draws whole circuits so every label
/// is resampled together.
pub fn fit_decay(samples: &[DecaySample], opts: &FitOptions) -> Result<DecayFitResult> {
    let all: Vec<&DecaySample> = samples.iter().collect();
    let (p, fit, per_pauli) = point_estimate(&all, opts.floor)?;

    let residual_rms = if per_pauli.is_empty() {
        (samples
            .iter()
            .map(|s| (s.value - fit.a - fit.b * fit.p.powf(s.depth as f64)).powi(2))
            .sum::<f64>()
            / samples.len() as f64)
            .sqrt()
    } else {
        let lookup: BTreeMap<&PauliString, &PauliDecay> = per_pauli.iter().map(|d| (&d.pauli, d)).collect();
        (samples
            .iter()
            .map(|s| {
                let d = lookup[s.pauli_label.as_ref().expect("tagged")];
                (s.value - d.a - d.b * d.p.powf(s.depth as f64)).powi(2)
            })
            .sum::<f64>()
            / samples.len() as f64)
            .sqrt()
    };

    let groups = group_by_circuit(samples);
    let boot: Vec<Option<f64>> = (0..opts.bootstrap_resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(opts.seed, i as u64));
            let draw = resample(&groups, &mut rng);
            point_estimate(&draw, opts.floor).ok().map(|r| r.0)
        })
        .collect();
    let failures = boot.iter().filter(|b| b.is_none()).count();
    let mut ps: Vec<f64> = boot.into_iter().flatten().collect();
    ps.sort_by(f64::total_cmp);
    let (p_lo, p_hi) = if ps.is_empty() {
        (p, p)
    } else {
        (percentile(&ps, 0.025).min(p), percentile(&ps, 0.975).max(p))
    };

    let w = opts.width;
    let layers = opts.layers_per_depth;
    Ok(DecayFitResult {
        a: fit.a,
        b: fit.b,
        p,
        p_ci_low: p_lo,
        p_ci_high: p_hi,
        r: per_layer_error_rate(p, w, layers)?,
        r_ci_low: per_layer_error_rate(p_hi, w, layers)?,
        r_ci_high: per_layer_error_rate(p_lo, w, layers)?,
        residual_rms,
        n_samples: samples.len(),
        iterations: fit.iterations,
        floor_pinned: fit.floor_pinned,
        bootstrap_failures: failures,
        per_pauli,
    })
}
