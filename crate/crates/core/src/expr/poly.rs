//! Multivariate polynomials with real coefficients, used to inspect the sign
//! structure of expressions such as the `g` coefficient of a fast variable.

use std::collections::BTreeMap;

use super::Expr;

/// Sorted `(symbol, exponent)` pairs; the empty monomial is the constant term.
pub type Monomial = Vec<(String, u32)>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    fn constant(c: f64) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert(Vec::new(), c);
        }
        Self { terms }
    }

    fn symbol(name: String) -> Self {
        Self {
            terms: BTreeMap::from([(vec![(name, 1)], 1.0)]),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, c)| (m, *c))
    }

    pub fn constant_term(&self) -> f64 {
        self.terms.get(&Vec::new()).copied().unwrap_or(0.0)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Vec::is_empty)
    }

    fn add(mut self, other: &Polynomial, sign: f64) -> Self {
        for (m, c) in &other.terms {
            let entry = self.terms.entry(m.clone()).or_insert(0.0);
            *entry += sign * c;
            if *entry == 0.0 {
                self.terms.remove(m);
            }
        }
        self
    }

    fn mul(&self, other: &Polynomial) -> Self {
        let mut out = Polynomial::default();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut merged: BTreeMap<String, u32> = ma.iter().cloned().collect();
                for (s, k) in mb {
                    *merged.entry(s.clone()).or_insert(0) += k;
                }
                let m: Monomial = merged.into_iter().collect();
                out = out.add(
                    &Polynomial {
                        terms: BTreeMap::from([(m, ca * cb)]),
                    },
                    1.0,
                );
            }
        }
        out
    }

    /// Expands `e` into a polynomial over its variables; delayed variables
    /// become symbols `x@d`. Returns `None` for genuine rational functions.
    pub fn from_expr(e: &Expr) -> Option<Self> {
        Some(match e {
            Expr::Const(c) => Self::constant(*c),
            Expr::Var(v) => Self::symbol(v.clone()),
            Expr::Delayed { var, delay } => Self::symbol(format!("{var}@{delay}")),
            Expr::Sum(items) => {
                let mut acc = Self::default();
                for item in items {
                    acc = acc.add(&Self::from_expr(item)?, 1.0);
                }
                acc
            }
            Expr::Diff(a, b) => Self::from_expr(a)?.add(&Self::from_expr(b)?, -1.0),
            Expr::Product(items) => {
                let mut acc = Self::constant(1.0);
                for item in items {
                    acc = acc.mul(&Self::from_expr(item)?);
                }
                acc
            }
            Expr::Quotient(a, b) => {
                let den = Self::from_expr(b)?;
                if !den.is_constant() || den.constant_term() == 0.0 {
                    return None;
                }
                let scale = 1.0 / den.constant_term();
                let mut num = Self::from_expr(a)?;
                for c in num.terms.values_mut() {
                    *c *= scale;
                }
                num
            }
            Expr::Pow(base, k) => {
                let b = Self::from_expr(base)?;
                let mut acc = Self::constant(1.0);
                for _ in 0..*k {
                    acc = acc.mul(&b);
                }
                acc
            }
        })
    }
}
