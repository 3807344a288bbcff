use std::collections::HashMap;

use thiserror::Error;

use super::Expr;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero in `{0}`")]
    DivisionByZero(String),
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("no history value for `{var}@{delay}`")]
    UnboundDelayed { var: String, delay: String },
}

/// Source of variable values for [`Expr::eval`].
pub trait Env {
    fn value(&self, var: &str) -> Option<f64>;
    fn delayed(&self, var: &str, delay: &str) -> Option<f64>;
}

/// Plain lookup tables: current values and pre-resolved delayed values.
#[derive(Debug, Clone, Default)]
pub struct Bindings {
    values: HashMap<String, f64>,
    delayed: HashMap<(String, String), f64>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: &str, value: f64) -> Self {
        self.set(var, value);
        self
    }

    pub fn with_delayed(mut self, var: &str, delay: &str, value: f64) -> Self {
        self.set_delayed(var, delay, value);
        self
    }

    pub fn set(&mut self, var: &str, value: f64) {
        self.values.insert(var.to_string(), value);
    }

    pub fn set_delayed(&mut self, var: &str, delay: &str, value: f64) {
        self.delayed
            .insert((var.to_string(), delay.to_string()), value);
    }
}

impl Env for Bindings {
    fn value(&self, var: &str) -> Option<f64> {
        self.values.get(var).copied()
    }

    fn delayed(&self, var: &str, delay: &str) -> Option<f64> {
        self.delayed
            .get(&(var.to_string(), delay.to_string()))
            .copied()
    }
}

impl Env for HashMap<String, f64> {
    fn value(&self, var: &str) -> Option<f64> {
        self.get(var).copied()
    }

    fn delayed(&self, _var: &str, _delay: &str) -> Option<f64> {
        None
    }
}

/// Evaluation at time `now` against a history function: `var@d` resolves to
/// `history(var, now - delays[d])`.
pub struct TimedEnv<'a, H> {
    pub values: &'a dyn Env,
    pub delays: &'a HashMap<String, f64>,
    pub history: H,
    pub now: f64,
}

impl<H: Fn(&str, f64) -> Option<f64>> Env for TimedEnv<'_, H> {
    fn value(&self, var: &str) -> Option<f64> {
        self.values.value(var)
    }

    fn delayed(&self, var: &str, delay: &str) -> Option<f64> {
        let tau = *self.delays.get(delay)?;
        (self.history)(var, self.now - tau)
    }
}

pub(super) fn eval(expr: &Expr, env: &dyn Env) -> Result<f64, EvalError> {
    Ok(match expr {
        Expr::Const(c) => *c,
        Expr::Var(v) => env.value(v).ok_or_else(|| EvalError::Unbound(v.clone()))?,
        Expr::Delayed { var, delay } => {
            env.delayed(var, delay)
                .ok_or_else(|| EvalError::UnboundDelayed {
                    var: var.clone(),
                    delay: delay.clone(),
                })?
        }
        Expr::Sum(items) => {
            let mut acc = 0.0;
            for item in items {
                acc += eval(item, env)?;
            }
            acc
        }
        Expr::Product(items) => {
            let mut acc = 1.0;
            for item in items {
                acc *= eval(item, env)?;
            }
            acc
        }
        Expr::Diff(a, b) => eval(a, env)? - eval(b, env)?,
        Expr::Quotient(a, b) => {
            let num = eval(a, env)?;
            let den = eval(b, env)?;
            if den == 0.0 {
                return Err(EvalError::DivisionByZero(b.to_string()));
            }
            num / den
        }
        Expr::Pow(base, k) => eval(base, env)?.powi(*k as i32),
    })
}
