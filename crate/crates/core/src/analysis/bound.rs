use std::collections::BTreeSet;

use crate::error::AnalysisError;
use crate::expr::{Bindings, Expr};
use crate::solver::Trajectory;

/// Inputs of the a priori D-QSSA error bound: `eps <= g <= m` on the window
/// and suprema of `|f|`, `|f'|`, `|f''|` there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBoundInputs {
    pub eps: f64,
    pub m: f64,
    pub sup_f: f64,
    pub sup_f1: f64,
    pub sup_f2: f64,
    pub x0: f64,
}

impl ErrorBoundInputs {
    fn validate(&self) -> Result<(), AnalysisError> {
        let bad = |msg: &str| Err(AnalysisError::BoundInputs(msg.to_string()));
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad("eps must be positive");
        }
        if !(self.m >= self.eps && self.m.is_finite()) {
            return bad("M must be finite and at least eps");
        }
        if [self.sup_f, self.sup_f1, self.sup_f2]
            .iter()
            .any(|s| !(*s >= 0.0 && s.is_finite()))
        {
            return bad("suprema must be finite and nonnegative");
        }
        if !self.x0.is_finite() {
            return bad("x0 must be finite");
        }
        Ok(())
    }
}

/// The bound at one time. `certified` uses the coefficient `1/eps^3` on
/// `sup|f''|`; `proof_variant` uses `1/(2 eps^3)`. They coincide when
/// `sup|f''| = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundValue {
    pub certified: f64,
    pub proof_variant: f64,
}

/// `2 (1/eps - 1/M) sup|f| + C sup|f''| + Q(t)` with
/// `Q(t) = [|x0| + sup|f|/eps + t sup|f'|/eps + (1/eps^2 + t^2) sup|f''| / (2 eps)] exp(-eps t)`.
pub fn dqssa_error_bound(inputs: &ErrorBoundInputs, t: f64) -> Result<BoundValue, AnalysisError> {
    inputs.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(AnalysisError::BoundInputs(format!("time {t} must be nonnegative")));
    }
    let ErrorBoundInputs {
        eps,
        m,
        sup_f,
        sup_f1,
        sup_f2,
        x0,
    } = *inputs;
    let q = (x0.abs() + sup_f / eps + t * sup_f1 / eps + (1.0 / (eps * eps) + t * t) * sup_f2 / (2.0 * eps))
        * (-eps * t).exp();
    let base = 2.0 * (1.0 / eps - 1.0 / m) * sup_f + q;
    let c = sup_f2 / (eps * eps * eps);
    Ok(BoundValue {
        certified: base + c,
        proof_variant: base + 0.5 * c,
    })
}

/// Bound for constant `g = gc` and linear `f`:
/// `[|x0| + sup|f|/gc + |f'| t / gc] exp(-gc t)`.
pub fn corollary_bound(x0: f64, sup_f: f64, slope: f64, gc: f64, t: f64) -> Result<f64, AnalysisError> {
    if !(gc > 0.0) {
        return Err(AnalysisError::BoundInputs("g must be positive".into()));
    }
    Ok((x0.abs() + sup_f / gc + slope.abs() * t / gc) * (-gc * t).exp())
}

fn sample(traj: &Trajectory, e: &Expr) -> Result<Vec<f64>, AnalysisError> {
    let names: BTreeSet<String> = e.variables();
    let cols: Vec<(&String, &[f64])> = names
        .iter()
        .map(|v| {
            traj.column(v)
                .map(|c| (v, c))
                .ok_or_else(|| AnalysisError::UnknownVariable(v.clone()))
        })
        .collect::<Result<_, _>>()?;
    let mut env = Bindings::new();
    (0..traj.len())
        .map(|k| {
            for (v, c) in &cols {
                env.set(v, c[k]);
            }
            Ok(e.eval(&env)?)
        })
        .collect()
}

fn derivative(y: &[f64], dt: f64) -> Vec<f64> {
    let n = y.len();
    (0..n)
        .map(|k| match k {
            0 => (y[1] - y[0]) / dt,
            _ if k == n - 1 => (y[n - 1] - y[n - 2]) / dt,
            _ => (y[k + 1] - y[k - 1]) / (2.0 * dt),
        })
        .collect()
}

fn sup(y: &[f64]) -> f64 {
    y.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Estimates the bound inputs from `f(t)` and `g(t)` sampled along `traj`,
/// with time derivatives of `f` by finite differences. Parameters in `f`
/// and `g` must already be bound.
pub fn empirical_bound_inputs(traj: &Trajectory, f: &Expr, g: &Expr, x0: f64) -> Result<ErrorBoundInputs, AnalysisError> {
    if traj.len() < 3 {
        return Err(AnalysisError::TooFewPoints {
            needed: 3,
            got: traj.len(),
        });
    }
    let fv = sample(traj, f)?;
    let gv = sample(traj, g)?;
    let f1 = derivative(&fv, traj.dt);
    let f2 = derivative(&f1, traj.dt);
    let (eps, m) = gv
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(eps > 0.0) {
        let k = gv.iter().position(|v| !(*v > 0.0)).unwrap_or(0);
        return Err(AnalysisError::NonpositiveG {
            time: traj.times[k],
            value: gv[k],
        });
    }
    Ok(ErrorBoundInputs {
        eps,
        m,
        sup_f: sup(&fv),
        sup_f1: sup(&f1),
        sup_f2: sup(&f2),
        x0,
    })
}

/// `|int_0^t f(s) exp((s - t) gc) ds - f(t - 1/gc) / gc|`, the integral by
/// the composite Simpson rule on `n` (rounded up to even) intervals.
pub fn one_node_quadrature_error(f: impl Fn(f64) -> f64, gc: f64, t: f64, n: usize) -> f64 {
    let n = n.max(2).next_multiple_of(2);
    let h = t / n as f64;
    let integrand = |s: f64| f(s) * ((s - t) * gc).exp();
    let inner: f64 = (1..n)
        .map(|k| if k % 2 == 1 { 4.0 } else { 2.0 } * integrand(k as f64 * h))
        .sum();
    let integral = h / 3.0 * (inner + integrand(0.0) + integrand(t));
    (integral - f(t - 1.0 / gc) / gc).abs()
}
