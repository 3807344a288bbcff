//! Comparison of trajectories and evaluation of the D-QSSA error bound.

mod bound;

use std::collections::BTreeSet;

use crate::error::AnalysisError;
use crate::expr::{Bindings, Expr};
use crate::solver::Trajectory;

pub use bound::{
    corollary_bound, dqssa_error_bound, empirical_bound_inputs, one_node_quadrature_error, BoundValue,
    ErrorBoundInputs,
};

fn overlap(reference: &Trajectory, approx: &Trajectory, window: Option<(f64, f64)>) -> Result<(f64, f64), AnalysisError> {
    let lo = reference.t0.max(approx.t0);
    let hi = reference.t_end().min(approx.t_end());
    let (a, b) = window.unwrap_or((lo, hi));
    let slack = 1e-9 * (1.0 + hi.abs());
    if !(a < b) || a < lo - slack || b > hi + slack {
        return Err(AnalysisError::BadWindow(a, b));
    }
    Ok((a.max(lo), b.min(hi)))
}

/// `||ref - approx|| / ||ref||` in L2 over `window` (the common time span by
/// default). Both trajectories are interpolated linearly onto the finer of
/// the two grids and integrated with the trapezoidal rule.
pub fn l2_relative_error(
    reference: &Trajectory,
    approx: &Trajectory,
    var: &str,
    window: Option<(f64, f64)>,
) -> Result<f64, AnalysisError> {
    for tr in [reference, approx] {
        if tr.column(var).is_none() {
            return Err(AnalysisError::UnknownVariable(var.to_string()));
        }
    }
    let (a, b) = overlap(reference, approx, window)?;
    let dt = reference.dt.min(approx.dt);
    let n = (((b - a) / dt) - 1e-9).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..=n {
        let t = a + k as f64 * h;
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        let r = reference.value_at(var, t).unwrap();
        let x = approx.value_at(var, t).unwrap();
        num += w * (r - x) * (r - x);
        den += w * r * r;
    }
    if den == 0.0 {
        return Err(AnalysisError::ZeroReference);
    }
    Ok((num / den).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OscillationStatus {
    Oscillatory,
    NonOscillatory,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationSummary {
    pub status: OscillationStatus,
    pub period: f64,
    pub amplitude: f64,
    /// Number of maxima the estimates are based on.
    pub cycles_used: usize,
}

impl OscillationSummary {
    pub fn is_oscillatory(&self) -> bool {
        self.status == OscillationStatus::Oscillatory
    }

    fn none(cycles_used: usize) -> Self {
        Self {
            status: OscillationStatus::NonOscillatory,
            period: f64::NAN,
            amplitude: f64::NAN,
            cycles_used,
        }
    }
}

/// Fraction of the run (at the end) used for peak detection.
pub const DEFAULT_TAIL: f64 = 0.6;

/// Period and amplitude of `var` from the local maxima in the last
/// `tail` fraction of the run. Maxima must rise above the tail's minimum by
/// more than `1e-3` of the range of the whole signal; with fewer than three of them the signal
/// counts as non-oscillatory. Period is the mean spacing of maxima, amplitude
/// the mean of `max - min` between consecutive maxima.
pub fn period_amplitude(traj: &Trajectory, var: &str, tail: f64) -> Result<OscillationSummary, AnalysisError> {
    let col = traj
        .column(var)
        .ok_or_else(|| AnalysisError::UnknownVariable(var.to_string()))?;
    if col.len() < 10 {
        return Err(AnalysisError::TooFewPoints {
            needed: 10,
            got: col.len(),
        });
    }
    let start = ((1.0 - tail.clamp(0.0, 1.0)) * col.len() as f64) as usize;
    let y = &col[start.min(col.len() - 3)..];
    let bounds = |s: &[f64]| {
        s.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
    };
    let (lo, hi) = bounds(y);
    let (all_lo, all_hi) = bounds(col);
    let range = all_hi - all_lo;
    if !(hi - lo > 0.0) {
        return Ok(OscillationSummary::none(0));
    }
    let peaks: Vec<usize> = (1..y.len() - 1)
        .filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] - lo > 1e-3 * range)
        .collect();
    if peaks.len() < 3 {
        return Ok(OscillationSummary::none(peaks.len()));
    }
    let spacing = (peaks[peaks.len() - 1] - peaks[0]) as f64 / (peaks.len() - 1) as f64;
    let amplitude = peaks
        .windows(2)
        .map(|w| {
            let (a, b) = bounds(&y[w[0]..=w[1]]);
            b - a
        })
        .sum::<f64>()
        / (peaks.len() - 1) as f64;
    Ok(OscillationSummary {
        status: OscillationStatus::Oscillatory,
        period: spacing * traj.dt,
        amplitude,
        cycles_used: peaks.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl DelayStats {
    /// Extremes and arithmetic mean of the samples whose time lies in
    /// `window` (all samples when `None`); `None` if no sample qualifies.
    pub fn from_samples(times: &[f64], values: &[f64], window: Option<(f64, f64)>) -> Option<Self> {
        let (a, b) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
        let slack = 1e-9 * (1.0 + a.abs().max(b.abs()).min(1e300));
        let mut n = 0usize;
        let mut sum = 0.0;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for (&t, &v) in times.iter().zip(values) {
            if t < a - slack || t > b + slack {
                continue;
            }
            n += 1;
            sum += v;
            min = min.min(v);
            max = max.max(v);
        }
        (n > 0).then(|| DelayStats {
            min,
            mean: sum / n as f64,
            max,
        })
    }
}

/// Statistics of `tau = 1 / g` along `traj`. Every variable of `g` must be a
/// column of the trajectory; parameters must already be bound.
pub fn delay_statistics(traj: &Trajectory, g: &Expr, window: Option<(f64, f64)>) -> Result<DelayStats, AnalysisError> {
    let names: BTreeSet<String> = g.variables();
    let cols: Vec<(&String, &[f64])> = names
        .iter()
        .map(|v| {
            traj.column(v)
                .map(|c| (v, c))
                .ok_or_else(|| AnalysisError::UnknownVariable(v.clone()))
        })
        .collect::<Result<_, _>>()?;
    let mut taus = Vec::with_capacity(traj.len());
    let mut env = Bindings::new();
    for (k, &t) in traj.times.iter().enumerate() {
        for (v, c) in &cols {
            env.set(v, c[k]);
        }
        let value = g.eval(&env)?;
        if !(value > 0.0) {
            return Err(AnalysisError::NonpositiveG { time: t, value });
        }
        taus.push(1.0 / value);
    }
    DelayStats::from_samples(&traj.times, &taus, window).ok_or_else(|| {
        let (a, b) = window.unwrap_or((traj.t0, traj.t_end()));
        AnalysisError::BadWindow(a, b)
    })
}

/// Least-squares slope of `ln err` against `ln tau`.
pub fn convergence_order(pairs: &[(f64, f64)]) -> Result<f64, AnalysisError> {
    if pairs.len() < 3 {
        return Err(AnalysisError::TooFewPoints {
            needed: 3,
            got: pairs.len(),
        });
    }
    if pairs.iter().any(|&(t, e)| !(t > 0.0) || !(e > 0.0)) {
        return Err(AnalysisError::NonpositiveData);
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 1e-300 {
        return Err(AnalysisError::Degenerate);
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Pointwise `|ref - approx|` of the named variables on the reference grid.
pub fn pointwise_difference(
    reference: &Trajectory,
    approx: &Trajectory,
    vars: &[&str],
) -> Result<Vec<Vec<f64>>, AnalysisError> {
    vars.iter()
        .map(|&v| {
            let r = reference
                .column(v)
                .ok_or_else(|| AnalysisError::UnknownVariable(v.to_string()))?;
            if approx.column(v).is_none() {
                return Err(AnalysisError::UnknownVariable(v.to_string()));
            }
            Ok(reference
                .times
                .iter()
                .zip(r)
                .map(|(&t, &x)| (x - approx.value_at(v, t).unwrap()).abs())
                .collect())
        })
        .collect()
}
