//! QSSA, D-QSSA and first-order-correction reductions of fast variables,
//! assumption checks on mass-action networks, and replacement of
//! state-dependent delays by constants.

mod assumptions;

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::DelayStats;
use crate::error::ReductionError;
use crate::expr::poly::Polynomial;
use crate::expr::{extract_linear, Bindings, Expr, LinearForm};
use crate::solver::{replay, Trajectory};
use crate::system::{Delay, DelaySpec, DynamicalSystem};

pub use assumptions::{
    check_a2_sufficient, check_assumption_a1, check_assumption_a3, A2Check, FastSlowSplit,
};

/// How the slow equations see the reduced fast variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DqssaMode {
    /// Every occurrence of the fast variable becomes its delayed
    /// quasi-steady state.
    #[default]
    Full,
    /// Slow terms `b x` whose coefficient is a constant multiple `c g` of the
    /// fast coefficient are first replaced by their quasi-steady value `c f`
    /// (undelayed), so only the remaining occurrences carry the delay.
    ReduceThenDelay,
}

/// Splits the right-hand side of `var` into `f - g var`.
pub fn decompose_fast(sys: &DynamicalSystem, var: &str) -> Result<LinearForm, ReductionError> {
    let rhs = sys
        .equation(var)
        .ok_or_else(|| ReductionError::NotAState(var.to_string()))?;
    extract_linear(rhs, var).map_err(|source| ReductionError::Decompose {
        var: var.to_string(),
        source,
    })
}

fn check_fast_set(sys: &DynamicalSystem, fast: &[&str]) -> Result<Vec<String>, ReductionError> {
    let mut out: Vec<String> = Vec::new();
    for &v in fast {
        if !sys.is_state(v) {
            return Err(ReductionError::NotAState(v.to_string()));
        }
        if !out.iter().any(|o| o == v) {
            out.push(v.to_string());
        }
    }
    if out.is_empty() || out.len() >= sys.equations.len() {
        return Err(ReductionError::InvalidFastSet);
    }
    Ok(out)
}

fn is_identically_zero(sys: &DynamicalSystem, e: &Expr) -> bool {
    let bound = sys.bind_parameters(e);
    bound.is_zero() || Polynomial::from_expr(&bound).is_some_and(|p| p.terms().next().is_none())
}

/// Decomposes every fast equation and checks that no `f` or `g` mentions a
/// fast variable.
fn fast_forms(sys: &DynamicalSystem, fast: &[String]) -> Result<Vec<LinearForm>, ReductionError> {
    let mut forms = Vec::new();
    for v in fast {
        let lf = decompose_fast(sys, v)?;
        for part in [&lf.f, &lf.g] {
            let delayed: BTreeSet<String> = part.delayed_refs().into_iter().map(|(x, _)| x).collect();
            if let Some(other) = fast.iter().find(|w| part.references(w) || delayed.contains(*w)) {
                return Err(ReductionError::FastCoupling {
                    var: v.clone(),
                    other: other.clone(),
                });
            }
        }
        if is_identically_zero(sys, &lf.g) {
            return Err(ReductionError::ZeroG(v.clone()));
        }
        forms.push(lf);
    }
    Ok(forms)
}

fn without_fast(sys: &DynamicalSystem, fast: &[String], tag: &str) -> DynamicalSystem {
    let mut out = sys.clone();
    out.equations.retain(|(v, _)| !fast.contains(v));
    for v in fast {
        out.initial.shift_remove(v);
    }
    out.name = format!("{}/{}({})", sys.name, tag, fast.join(","));
    out
}

/// Replaces each fast variable by its quasi-steady state `f / g`.
pub fn qssa_reduce(sys: &DynamicalSystem, fast: &[&str]) -> Result<DynamicalSystem, ReductionError> {
    let fast = check_fast_set(sys, fast)?;
    let forms = fast_forms(sys, &fast)?;
    let mut out = without_fast(sys, &fast, "qssa");
    for lf in forms {
        out.algebraic.push((lf.var.clone(), lf.f.div(lf.g)));
    }
    Ok(out)
}

pub fn dqssa_reduce(sys: &DynamicalSystem, fast: &[&str]) -> Result<DynamicalSystem, ReductionError> {
    dqssa_reduce_with(sys, fast, DqssaMode::Full)
}

/// Replaces each fast variable `x` by `f(t - tau) / g(t - tau)` with a new
/// state-dependent delay `tau = 1 / g(t)`. Existing delayed references in
/// `f` or `g` are first bound to auxiliary algebraic variables so that they
/// can themselves be delayed.
pub fn dqssa_reduce_with(
    sys: &DynamicalSystem,
    fast: &[&str],
    mode: DqssaMode,
) -> Result<DynamicalSystem, ReductionError> {
    let fast = check_fast_set(sys, fast)?;
    let forms = fast_forms(sys, &fast)?;
    let mut out = without_fast(sys, &fast, "dqssa");

    let mut aux: BTreeMap<(String, String), String> = BTreeMap::new();
    let mut aux_defs: Vec<(String, Expr)> = Vec::new();
    let mut hoisted = Vec::new();
    for lf in &forms {
        let mut hoist = |e: &Expr| {
            e.map_leaves(&mut |leaf| match leaf {
                Expr::Delayed { var, delay } => {
                    let key = (var.clone(), delay.clone());
                    let name = aux.entry(key).or_insert_with(|| {
                        let base = format!("{var}_{delay}");
                        let taken = |n: &str| {
                            out.is_dynamic(n) || out.parameters.contains_key(n) || aux_defs.iter().any(|(a, _)| a == n)
                        };
                        let mut name = base.clone();
                        let mut k = 2;
                        while taken(&name) {
                            name = format!("{base}_{k}");
                            k += 1;
                        }
                        aux_defs.push((name.clone(), leaf.clone()));
                        name
                    });
                    Some(Expr::var(name.clone()))
                }
                _ => None,
            })
        };
        let f = hoist(&lf.f);
        let g = hoist(&lf.g);
        hoisted.push((lf.var.clone(), f, g));
    }
    out.algebraic.extend(aux_defs);

    let dynamic: BTreeSet<String> = out
        .state_names()
        .chain(out.algebraic_names())
        .map(str::to_string)
        .collect();
    let is_dyn = |v: &str| dynamic.contains(v);
    for (var, f, g) in &hoisted {
        let id = out.fresh_delay_id();
        let def = f.delay_variables(&id, &is_dyn).div(g.delay_variables(&id, &is_dyn));
        out.delays.insert(
            id,
            Delay {
                spec: DelaySpec::StateDependent { g: g.clone() },
                origin: var.clone(),
            },
        );
        out.algebraic.push((var.clone(), def));
    }

    if mode == DqssaMode::ReduceThenDelay {
        for lf in &forms {
            for (_, rhs) in out.equations.iter_mut() {
                if let Some(new) = quasi_steady_term(sys, rhs, lf) {
                    *rhs = new;
                }
            }
        }
    }
    Ok(out)
}

/// If `rhs = a - b x` with `b = c g` for a constant `c`, returns `a - c f`.
fn quasi_steady_term(sys: &DynamicalSystem, rhs: &Expr, fast: &LinearForm) -> Option<Expr> {
    let slow = extract_linear(rhs, &fast.var).ok()?;
    if is_identically_zero(sys, &slow.g) {
        return None;
    }
    let b = sys.bind_parameters(&slow.g);
    let g = sys.bind_parameters(&fast.g);
    let mut symbols: BTreeSet<String> = b.variables();
    symbols.extend(g.variables());
    let delayed: BTreeSet<(String, String)> = b.delayed_refs().union(&g.delayed_refs()).cloned().collect();

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut ratio = None;
    for _ in 0..32 {
        let mut env = Bindings::new();
        for s in &symbols {
            env.set(s, rng.gen_range(0.05..3.0));
        }
        for (v, d) in &delayed {
            env.set_delayed(v, d, rng.gen_range(0.05..3.0));
        }
        let c = b.eval(&env).ok()? / g.eval(&env).ok()?;
        if !c.is_finite() {
            return None;
        }
        match ratio {
            None => ratio = Some(c),
            Some(r) if (c - r).abs() <= 1e-12 * r.abs().max(1e-300) => {}
            Some(_) => return None,
        }
    }
    let c = ratio?;
    Some(slow.f - Expr::Const(c) * fast.f.clone())
}

/// Applies [`dqssa_reduce`] once per stage; later stages may reduce
/// variables whose equations already contain delays from earlier ones.
pub fn recurrent_reduce(
    sys: &DynamicalSystem,
    stages: &[Vec<String>],
    mode: DqssaMode,
) -> Result<DynamicalSystem, ReductionError> {
    let mut current = sys.clone();
    for (k, stage) in stages.iter().enumerate() {
        let names: Vec<&str> = stage.iter().map(String::as_str).collect();
        current = dqssa_reduce_with(&current, &names, mode).map_err(|e| ReductionError::Stage {
            stage: k + 1,
            source: Box::new(e),
        })?;
    }
    Ok(current)
}

/// For `dx/dt = f(y) - x / tau` with constant `tau` and slow equations
/// `dy_k/dt = h_k(x, y)`, replaces `x` by
/// `tau f(y) - tau^2 sum_k df/dy_k h_k(tau f(y), y)`.
///
/// Derivatives are symbolic and taken with respect to state variables.
pub fn first_order_correction(sys: &DynamicalSystem, fast_var: &str) -> Result<DynamicalSystem, ReductionError> {
    let fast = check_fast_set(sys, &[fast_var])?;
    let lf = fast_forms(sys, &fast)?.remove(0);
    let g = sys.bind_parameters(&lf.g);
    let Some(gc) = g.as_const() else {
        return Err(ReductionError::NonConstantG {
            var: fast_var.to_string(),
            g: lf.g.to_string(),
        });
    };
    let tau = 1.0 / gc;
    let x0 = Expr::Const(tau) * lf.f.clone();
    let correction = Expr::sum(sys.equations.iter().filter(|(v, _)| v != fast_var).map(|(y, h)| {
        let h0 = h.substitute(fast_var, &x0, None);
        lf.f.derivative(y) * h0
    }));
    let def = x0.clone() - Expr::Const(tau * tau) * correction;
    let mut out = without_fast(sys, &fast, "foc");
    out.algebraic.push((fast_var.to_string(), def));
    Ok(out)
}

/// What to do with the state-dependent delays of a reduced system.
#[derive(Debug, Clone, PartialEq)]
pub enum DelayPolicy {
    Keep,
    /// Fixed values per delay id; unlisted delays are kept.
    Constant(IndexMap<String, f64>),
    Min,
    Mean,
    Max,
}

/// Replaces delays according to `policy`. The statistic policies evaluate
/// every delay along `reference` (which must contain the slow states of
/// `sys`), restricted to `window` when given.
pub fn apply_delay_policy(
    sys: &DynamicalSystem,
    policy: &DelayPolicy,
    reference: Option<&Trajectory>,
    window: Option<(f64, f64)>,
) -> Result<DynamicalSystem, ReductionError> {
    let mut out = sys.clone();
    match policy {
        DelayPolicy::Keep => {}
        DelayPolicy::Constant(values) => {
            for (id, &value) in values {
                let delay = out
                    .delays
                    .get_mut(id)
                    .ok_or_else(|| ReductionError::UnknownDelay(id.clone()))?;
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(ReductionError::NonpositiveDelay {
                        delay: id.clone(),
                        value,
                    });
                }
                delay.spec = DelaySpec::Constant(value);
            }
        }
        DelayPolicy::Min | DelayPolicy::Mean | DelayPolicy::Max => {
            let name = match policy {
                DelayPolicy::Min => "min",
                DelayPolicy::Mean => "mean",
                _ => "max",
            };
            let reference = reference.ok_or_else(|| ReductionError::MissingReference(name.into()))?;
            let stats = delay_statistics_along(sys, reference, window)?;
            for (id, s) in stats {
                let value = match policy {
                    DelayPolicy::Min => s.min,
                    DelayPolicy::Mean => s.mean,
                    _ => s.max,
                };
                if !(value > 0.0) {
                    return Err(ReductionError::NonpositiveDelay { delay: id, value });
                }
                out.delays[&id].spec = DelaySpec::Constant(value);
            }
        }
    }
    Ok(out)
}

/// Statistics of each delay of `sys` when its states follow `reference`.
/// Delays whose coefficient reads reduced variables are evaluated through
/// the reduced definitions, so a delay built on another delayed quantity
/// sees the composed history.
pub fn delay_statistics_along(
    sys: &DynamicalSystem,
    reference: &Trajectory,
    window: Option<(f64, f64)>,
) -> Result<IndexMap<String, DelayStats>, ReductionError> {
    let replayed = replay(sys, reference)?;
    let mut out = IndexMap::new();
    for (id, values) in replayed.delay_names.iter().zip(&replayed.delays) {
        let stats = DelayStats::from_samples(&replayed.times, values, window).ok_or_else(|| {
            let (a, b) = window.unwrap_or((replayed.t0, replayed.t_end()));
            ReductionError::EmptyWindow(a, b)
        })?;
        out.insert(id.clone(), stats);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::solver::{integrate_ode, simulate, Method};

    fn e(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    fn hes1() -> DynamicalSystem {
        DynamicalSystem::new("hes1")
            .with_equation("D", e("gm - (gm + g * p^5) * D"), 1.0)
            .with_equation("m", e("D - 0.03 * m"), 0.0)
            .with_equation("p", e("m - 0.03 * p + 5 / 500 * (gm - (gm + g * p^5) * D)"), 0.0)
            .with_parameter("gm", 0.02)
            .with_parameter("g", 2e-12)
    }

    #[test]
    fn qssa_of_hes1() {
        let red = qssa_reduce(&hes1(), &["D"]).unwrap();
        assert_eq!(red.state_names().collect::<Vec<_>>(), ["m", "p"]);
        let def = red.bind_parameters(red.definition("D").unwrap());
        let v = def.eval(&Bindings::new().with("p", 100.0)).unwrap();
        assert!((v - 0.5).abs() < 1e-14);
        assert!(!red.has_delays());
    }

    #[test]
    fn dqssa_of_hes1_has_one_state_dependent_delay() {
        let red = dqssa_reduce(&hes1(), &["D"]).unwrap();
        assert_eq!(red.delays.len(), 1);
        let (id, d) = red.delays.first().unwrap();
        assert_eq!(id, "tau1");
        assert_eq!(d.origin, "D");
        let def = red.definition("D").unwrap();
        assert_eq!(def.delayed_refs().into_iter().collect::<Vec<_>>(), [("p".into(), "tau1".into())]);
        assert!(def.variables().iter().all(|v| red.parameters.contains_key(v)));
        let DelaySpec::StateDependent { g } = &d.spec else { panic!() };
        assert!(g.references("p"));
    }

    #[test]
    fn zero_delay_collapses_to_qssa() {
        let q = qssa_reduce(&hes1(), &["D"]).unwrap();
        let d = dqssa_reduce(&hes1(), &["D"]).unwrap();
        let zero = apply_delay_policy(
            &d,
            &DelayPolicy::Constant(IndexMap::from([("tau1".to_string(), 0.0)])),
            None,
            None,
        )
        .unwrap();
        let a = simulate(&q, 0.0, 100.0, 0.05, Method::Euler).unwrap();
        let b = simulate(&zero, 0.0, 100.0, 0.05, Method::Euler).unwrap();
        for name in ["m", "p", "D"] {
            let (x, y) = (a.column(name).unwrap(), b.column(name).unwrap());
            assert!(x.iter().zip(y).all(|(u, v)| (u - v).abs() <= 1e-10 * (1.0 + u.abs())));
        }
    }

    #[test]
    fn errors_are_specific() {
        let sys = DynamicalSystem::new("t")
            .with_equation("x", e("5"), 0.0)
            .with_equation("y", e("x - y"), 0.0);
        assert!(matches!(dqssa_reduce(&sys, &["x"]), Err(ReductionError::ZeroG(_))));
        let sys = DynamicalSystem::new("t")
            .with_equation("x", e("1 - x^2"), 0.0)
            .with_equation("y", e("x - y"), 0.0);
        assert!(matches!(qssa_reduce(&sys, &["x"]), Err(ReductionError::Decompose { .. })));
        let sys = DynamicalSystem::new("t")
            .with_equation("x", e("z - x"), 0.0)
            .with_equation("z", e("x - 2 * z"), 0.0)
            .with_equation("y", e("x - y"), 0.0);
        assert!(matches!(
            qssa_reduce(&sys, &["x", "z"]),
            Err(ReductionError::FastCoupling { .. })
        ));
        assert!(matches!(qssa_reduce(&sys, &["x", "y", "z"]), Err(ReductionError::InvalidFastSet)));
        assert!(matches!(qssa_reduce(&sys, &["q"]), Err(ReductionError::NotAState(_))));
    }

    #[test]
    fn constant_coefficients_give_constant_state() {
        let sys = DynamicalSystem::new("t")
            .with_equation("x", e("3 - 2 * x"), 0.0)
            .with_equation("y", e("x - y"), 0.0);
        let red = dqssa_reduce(&sys, &["x"]).unwrap();
        let tr = simulate(&red, 0.0, 1.0, 0.1, Method::Euler).unwrap();
        assert!(tr.column("x").unwrap().iter().all(|&v| v == 1.5));
        assert!(tr.delay("tau1").unwrap().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn ablation_drops_the_matched_term() {
        let red = dqssa_reduce_with(&hes1(), &["D"], DqssaMode::ReduceThenDelay).unwrap();
        let rhs = red.bind_parameters(red.equation("p").unwrap());
        let env = Bindings::new()
            .with("m", 0.7)
            .with("p", 120.0)
            .with("D", 0.4)
            .with_delayed("p", "tau1", 80.0);
        let v = rhs.eval(&env).unwrap();
        assert!((v - (0.7 - 0.03 * 120.0)).abs() < 1e-12, "{v}");
        // The m equation has no matching term and is left alone.
        assert_eq!(red.equation("m"), hes1().equation("m"));
    }

    #[test]
    fn recurrent_reduction_composes_delays() {
        let sys = DynamicalSystem::new("cc")
            .with_equation("C", e("0.1 - 3 * C * A^8 / (0.5^8 + A^8)"), 0.0)
            .with_equation("P", e("3 * (1 - P) * C^8 / (0.5^8 + C^8) - P"), 0.0)
            .with_equation("A", e("3 * (1 - A) * P^8 / (0.5^8 + P^8) - A"), 0.0);
        let red = recurrent_reduce(&sys, &[vec!["P".into()], vec!["A".into()]], DqssaMode::Full).unwrap();
        assert_eq!(red.state_names().collect::<Vec<_>>(), ["C"]);
        assert_eq!(red.delays.keys().collect::<Vec<_>>(), ["tau1", "tau2"]);
        let a = red.definition("A").unwrap();
        assert!(a.delayed_refs().contains(&("P".to_string(), "tau2".to_string())));
        let direct = dqssa_reduce(&sys, &["P"]).unwrap();
        let staged = recurrent_reduce(&sys, &[vec!["P".into()]], DqssaMode::Full).unwrap();
        assert_eq!(direct, staged);
        assert_eq!(recurrent_reduce(&sys, &[], DqssaMode::Full).unwrap(), sys);
        let err = recurrent_reduce(&sys, &[vec!["P".into()], vec!["P".into()]], DqssaMode::Full).unwrap_err();
        assert!(matches!(err, ReductionError::Stage { stage: 2, .. }));
    }

    #[test]
    fn hoisting_keeps_existing_delays_evaluable() {
        let mut sys = DynamicalSystem::new("t")
            .with_equation("x", e("y@d - x"), 0.0)
            .with_equation("y", e("1 - x - y"), 0.5);
        sys.delays.insert(
            "d".into(),
            Delay {
                spec: DelaySpec::Constant(0.3),
                origin: "w".into(),
            },
        );
        let red = dqssa_reduce(&sys, &["x"]).unwrap();
        assert!(red.is_algebraic("y_d"));
        assert!(simulate(&red, 0.0, 2.0, 0.01, Method::Euler).is_ok());
    }

    #[test]
    fn first_order_correction_examples() {
        let sys = DynamicalSystem::new("t")
            .with_equation("x", e("y - 10 * x"), 0.0)
            .with_equation("y", e("1"), 0.0);
        let red = first_order_correction(&sys, "x").unwrap();
        let v = red.definition("x").unwrap().eval(&Bindings::new().with("y", 2.0)).unwrap();
        assert!((v - (0.1 * 2.0 - 0.01)).abs() < 1e-15);

        let sys = DynamicalSystem::new("t")
            .with_equation("x", e("y^2 - 10 * x"), 0.0)
            .with_equation("y", e("-1 * y"), 1.0);
        let red = first_order_correction(&sys, "x").unwrap();
        let v = red.definition("x").unwrap().eval(&Bindings::new().with("y", 1.0)).unwrap();
        assert!((v - 0.12).abs() < 1e-15);

        let sys = DynamicalSystem::new("t")
            .with_equation("x", e("y - x * y"), 0.0)
            .with_equation("y", e("1"), 0.0);
        assert!(matches!(
            first_order_correction(&sys, "x"),
            Err(ReductionError::NonConstantG { .. })
        ));
    }

    #[test]
    fn statistic_policies_need_a_reference() {
        let d = dqssa_reduce(&hes1(), &["D"]).unwrap();
        assert!(matches!(
            apply_delay_policy(&d, &DelayPolicy::Mean, None, None),
            Err(ReductionError::MissingReference(_))
        ));
        let full = integrate_ode(&hes1(), 0.0, 50.0, 0.05, Method::Rk4).unwrap();
        let c = apply_delay_policy(&d, &DelayPolicy::Max, Some(&full), None).unwrap();
        let DelaySpec::Constant(v) = c.delays["tau1"].spec else { panic!() };
        assert!((v - 50.0).abs() < 1e-9);
        assert!(matches!(
            apply_delay_policy(&d, &DelayPolicy::Min, Some(&full), Some((80.0, 90.0))),
            Err(ReductionError::EmptyWindow(..))
        ));
    }
}
