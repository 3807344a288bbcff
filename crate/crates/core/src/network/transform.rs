use indexmap::IndexMap;

use super::ConservationLaw;
use crate::error::NetworkError;
use crate::expr::Expr;
use crate::system::DynamicalSystem;

/// Removes `target` using `law`: every occurrence becomes
/// `(value - sum_{l != target} v_l x_l) / v_target`.
pub fn eliminate_species(
    sys: &DynamicalSystem,
    law: &ConservationLaw,
    target: &str,
) -> Result<DynamicalSystem, NetworkError> {
    if !sys.is_state(target) {
        return Err(NetworkError::NotAState(target.to_string()));
    }
    let vt = law.coefficient(target);
    if vt == 0 {
        return Err(NetworkError::ZeroCoefficient(target.to_string()));
    }
    let others = law
        .coefficients
        .iter()
        .filter(|(s, &c)| c != 0 && s.as_str() != target)
        .map(|(s, &c)| Expr::product([Expr::Const(-(c as f64)), Expr::var(s.clone())]));
    let replacement = Expr::sum(std::iter::once(Expr::Const(law.value)).chain(others))
        .div(Expr::Const(vt as f64));

    let mut out = sys.try_map_exprs(&mut |e| e.substitute_all_times(target, &replacement))?;
    out.equations.retain(|(v, _)| v != target);
    out.initial.shift_remove(target);
    Ok(out)
}

/// Changes variables `x = s * y`, keeping the names: `dy/dt = rhs(x := s y) / s`
/// and `y(0) = x(0) / s`.
pub fn rescale(
    sys: &DynamicalSystem,
    scalings: &IndexMap<String, f64>,
) -> Result<DynamicalSystem, NetworkError> {
    for (var, &s) in scalings {
        if !sys.is_state(var) {
            return Err(NetworkError::NotAState(var.clone()));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(NetworkError::NonpositiveScaling {
                var: var.clone(),
                value: s,
            });
        }
    }
    let mut out = sys.clone();
    for (var, &s) in scalings {
        if s == 1.0 {
            continue;
        }
        let replacement = Expr::Const(s) * Expr::var(var.clone());
        out = out.try_map_exprs(&mut |e| e.substitute_all_times(var, &replacement))?;
        for (v, rhs) in &mut out.equations {
            if v == var {
                *rhs = rhs.clone().div(Expr::Const(s));
            }
        }
        if let Some(x0) = out.initial.get_mut(var) {
            *x0 /= s;
        }
    }
    Ok(out)
}

/// Renames a state or algebraic variable everywhere it appears.
pub fn rename(sys: &DynamicalSystem, from: &str, to: &str) -> Result<DynamicalSystem, NetworkError> {
    if !sys.is_dynamic(from) {
        return Err(NetworkError::NotAState(from.to_string()));
    }
    let mut out = sys.map_exprs(&mut |e| e.rename_variable(from, to));
    for (v, _) in out.equations.iter_mut().chain(out.algebraic.iter_mut()) {
        if v == from {
            *v = to.to_string();
        }
    }
    out.initial = out
        .initial
        .into_iter()
        .map(|(k, v)| (if k == from { to.to_string() } else { k }, v))
        .collect();
    for delay in out.delays.values_mut() {
        if delay.origin == from {
            delay.origin = to.to_string();
        }
    }
    Ok(out)
}
