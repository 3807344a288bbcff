//! Expression trees for system right-hand sides.
//!
//! An [`Expr`] is built from constants, current-time variables, delayed
//! variables (`x@tau1`), n-ary sums and products, binary differences and
//! quotients, and nonnegative integer powers. The smart constructors on
//! [`Expr`] fold literal arithmetic only; no other simplification is done, so
//! two expressions are compared by evaluating them, not by shape.

mod compile;
mod diff;
mod eval;
mod linear;
mod parse;
pub mod poly;

use std::collections::BTreeSet;
use std::fmt;
use std::ops;

pub use compile::{CompiledExpr, Operand};
pub use eval::{Bindings, Env, EvalError, TimedEnv};
pub use linear::{extract_linear, LinearForm};
pub use parse::parse_expr;

use crate::error::ExprError;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    /// `var` evaluated at `t - tau(t)`, where `tau` comes from the owning
    /// system's delay table entry `delay`.
    Delayed {
        var: String,
        delay: String,
    },
    Sum(Vec<Expr>),
    Diff(Box<Expr>, Box<Expr>),
    Product(Vec<Expr>),
    Quotient(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    pub fn constant(value: f64) -> Self {
        Expr::Const(value)
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var(name.into())
    }

    pub fn delayed(name: impl Into<String>, delay: impl Into<String>) -> Self {
        Expr::Delayed {
            var: name.into(),
            delay: delay.into(),
        }
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 1.0)
    }

    /// N-ary sum. Nested sums are flattened, literal constants merged into
    /// one and zeros dropped.
    pub fn sum(items: impl IntoIterator<Item = Expr>) -> Self {
        let mut terms = Vec::new();
        let mut constant: Option<f64> = None;
        let mut constant_at = 0;
        let mut push = |e: Expr, terms: &mut Vec<Expr>| match e {
            Expr::Const(c) => {
                if constant.is_none() {
                    constant_at = terms.len();
                }
                *constant.get_or_insert(0.0) += c;
            }
            other => terms.push(other),
        };
        for item in items {
            match item {
                Expr::Sum(inner) => {
                    for e in inner {
                        push(e, &mut terms);
                    }
                }
                other => push(other, &mut terms),
            }
        }
        if let Some(c) = constant {
            if c != 0.0 || terms.is_empty() {
                terms.insert(constant_at, Expr::Const(c));
            }
        }
        match terms.len() {
            0 => Expr::Const(0.0),
            1 => terms.pop().unwrap(),
            _ => Expr::Sum(terms),
        }
    }

    /// N-ary product with the same flattening and folding rules as [`Expr::sum`];
    /// a literal zero factor collapses the product.
    pub fn product(items: impl IntoIterator<Item = Expr>) -> Self {
        let mut factors = Vec::new();
        let mut constant = 1.0;
        let mut zero = false;
        let mut absorb = |e: Expr, factors: &mut Vec<Expr>| match e {
            Expr::Const(c) => {
                if c == 0.0 {
                    zero = true;
                }
                constant *= c;
            }
            other => factors.push(other),
        };
        for item in items {
            match item {
                Expr::Product(inner) => {
                    for e in inner {
                        absorb(e, &mut factors);
                    }
                }
                other => absorb(other, &mut factors),
            }
        }
        if zero {
            return Expr::Const(0.0);
        }
        if constant != 1.0 || factors.is_empty() {
            factors.insert(0, Expr::Const(constant));
        }
        match factors.len() {
            1 => factors.pop().unwrap(),
            _ => Expr::Product(factors),
        }
    }

    pub fn sub(self, rhs: Expr) -> Self {
        match (&self, &rhs) {
            (Expr::Const(a), Expr::Const(b)) => Expr::Const(a - b),
            (_, r) if r.is_zero() => self,
            (l, _) if l.is_zero() => rhs.neg(),
            _ => Expr::Diff(Box::new(self), Box::new(rhs)),
        }
    }

    pub fn div(self, rhs: Expr) -> Self {
        match (&self, &rhs) {
            (Expr::Const(a), Expr::Const(b)) if *b != 0.0 => Expr::Const(a / b),
            (_, r) if r.is_one() => self,
            (l, _) if l.is_zero() => Expr::Const(0.0),
            _ => Expr::Quotient(Box::new(self), Box::new(rhs)),
        }
    }

    pub fn powi(self, exponent: u32) -> Self {
        match (&self, exponent) {
            (_, 0) => Expr::Const(1.0),
            (_, 1) => self,
            (Expr::Const(c), k) => Expr::Const(c.powi(k as i32)),
            _ => Expr::Pow(Box::new(self), exponent),
        }
    }

    pub fn neg(self) -> Self {
        match self {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Product(mut factors) => {
                if let Some(Expr::Const(c)) = factors.first_mut() {
                    *c = -*c;
                    if *c == 1.0 {
                        factors.remove(0);
                        if factors.len() == 1 {
                            return factors.pop().unwrap();
                        }
                    }
                    Expr::Product(factors)
                } else {
                    factors.insert(0, Expr::Const(-1.0));
                    Expr::Product(factors)
                }
            }
            Expr::Diff(a, b) => Expr::Diff(b, a),
            Expr::Sum(items) => Expr::sum(items.into_iter().map(Expr::neg)),
            other => Expr::Product(vec![Expr::Const(-1.0), other]),
        }
    }

    /// Names referenced at the current time (delayed occurrences excluded).
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Var(v) = e {
                out.insert(v.clone());
            }
        });
        out
    }

    /// `(var, delay)` pairs of every delayed occurrence.
    pub fn delayed_refs(&self) -> BTreeSet<(String, String)> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Delayed { var, delay } = e {
                out.insert((var.clone(), delay.clone()));
            }
        });
        out
    }

    /// True when `var` occurs at the current time.
    pub fn references(&self, var: &str) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if matches!(e, Expr::Var(v) if v == var) {
                found = true;
            }
        });
        found
    }

    pub fn has_delays(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if matches!(e, Expr::Delayed { .. }) {
                found = true;
            }
        });
        found
    }

    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Delayed { .. } => {}
            Expr::Sum(items) | Expr::Product(items) => {
                for item in items {
                    item.visit(f);
                }
            }
            Expr::Diff(a, b) | Expr::Quotient(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Pow(base, _) => base.visit(f),
        }
    }

    /// Rebuilds the tree bottom-up through the folding constructors, replacing
    /// each leaf for which `leaf` returns `Some`.
    pub fn map_leaves(&self, leaf: &mut impl FnMut(&Expr) -> Option<Expr>) -> Expr {
        self.try_map_leaves(&mut |e| Ok::<_, std::convert::Infallible>(leaf(e)))
            .unwrap_or_else(|never| match never {})
    }

    pub fn try_map_leaves<E>(
        &self,
        leaf: &mut impl FnMut(&Expr) -> Result<Option<Expr>, E>,
    ) -> Result<Expr, E> {
        Ok(match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Delayed { .. } => {
                leaf(self)?.unwrap_or_else(|| self.clone())
            }
            Expr::Sum(items) => Expr::sum(
                items
                    .iter()
                    .map(|e| e.try_map_leaves(leaf))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            Expr::Product(items) => Expr::product(
                items
                    .iter()
                    .map(|e| e.try_map_leaves(leaf))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            Expr::Diff(a, b) => a.try_map_leaves(leaf)?.sub(b.try_map_leaves(leaf)?),
            Expr::Quotient(a, b) => a.try_map_leaves(leaf)?.div(b.try_map_leaves(leaf)?),
            Expr::Pow(base, k) => base.try_map_leaves(leaf)?.powi(*k),
        })
    }

    /// Replaces current-time occurrences of `var` with `replacement`. When
    /// `delay` is given, every variable inside `replacement` is first turned
    /// into a delayed variable with that delay id. Delayed occurrences of
    /// `var` are left alone: they belong to the history.
    pub fn substitute(&self, var: &str, replacement: &Expr, delay: Option<&str>) -> Expr {
        let replacement = match delay {
            Some(d) => replacement.delay_variables(d, &|_| true),
            None => replacement.clone(),
        };
        self.map_leaves(&mut |e| match e {
            Expr::Var(v) if v == var => Some(replacement.clone()),
            _ => None,
        })
    }

    /// Replaces `var` at every time: current-time occurrences by
    /// `replacement`, and `var@d` by `replacement` with its variables delayed
    /// by `d`. Fails if `replacement` itself already contains delays, since a
    /// delay of a delay has no single-delay representation.
    pub fn substitute_all_times(&self, var: &str, replacement: &Expr) -> Result<Expr, ExprError> {
        self.try_map_leaves(&mut |e| match e {
            Expr::Var(v) if v == var => Ok(Some(replacement.clone())),
            Expr::Delayed { var: v, delay } if v == var => {
                if replacement.has_delays() {
                    Err(ExprError::NestedDelay {
                        var: var.to_string(),
                        delay: delay.clone(),
                    })
                } else {
                    Ok(Some(replacement.delay_variables(delay, &|_| true)))
                }
            }
            _ => Ok(None),
        })
    }

    /// Rewrites every current-time variable accepted by `dynamic` as a
    /// delayed variable with id `delay`.
    pub fn delay_variables(&self, delay: &str, dynamic: &dyn Fn(&str) -> bool) -> Expr {
        self.map_leaves(&mut |e| match e {
            Expr::Var(v) if dynamic(v) => Some(Expr::delayed(v.clone(), delay)),
            _ => None,
        })
    }

    pub fn rename_variable(&self, from: &str, to: &str) -> Expr {
        self.map_leaves(&mut |e| match e {
            Expr::Var(v) if v == from => Some(Expr::var(to)),
            Expr::Delayed { var, delay } if var == from => Some(Expr::delayed(to, delay.clone())),
            _ => None,
        })
    }

    pub fn rename_delay(&self, from: &str, to: &str) -> Expr {
        self.map_leaves(&mut |e| match e {
            Expr::Delayed { var, delay } if delay == from => Some(Expr::delayed(var.clone(), to)),
            _ => None,
        })
    }

    /// Symbolic partial derivative with respect to the current-time `var`.
    pub fn derivative(&self, var: &str) -> Expr {
        diff::derivative(self, var)
    }

    pub fn eval(&self, env: &dyn Env) -> Result<f64, EvalError> {
        eval::eval(self, env)
    }
}

pub fn format_number(c: f64) -> String {
    let a = c.abs();
    if c == 0.0 || (1e-4..1e15).contains(&a) || !c.is_finite() {
        format!("{c}")
    } else {
        format!("{c:e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join(f: &mut fmt::Formatter<'_>, items: &[Expr], op: &str) -> fmt::Result {
            write!(f, "(")?;
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{item}")?;
            }
            write!(f, ")")
        }
        match self {
            Expr::Const(c) => write!(f, "{}", format_number(*c)),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Delayed { var, delay } => write!(f, "{var}@{delay}"),
            Expr::Sum(items) => join(f, items, "+"),
            Expr::Product(items) => join(f, items, "*"),
            Expr::Diff(a, b) => write!(f, "({a} - {b})"),
            Expr::Quotient(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(base, k) => match base.as_ref() {
                Expr::Const(c) if c.is_sign_negative() => write!(f, "({base})^{k}"),
                Expr::Pow(..) => write!(f, "({base})^{k}"),
                _ => write!(f, "{base}^{k}"),
            },
        }
    }
}

impl From<f64> for Expr {
    fn from(value: f64) -> Self {
        Expr::Const(value)
    }
}

impl From<&str> for Expr {
    fn from(name: &str) -> Self {
        Expr::var(name)
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::sum([self, rhs])
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sub(self, rhs)
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::product([self, rhs])
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::div(self, rhs)
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}
