use super::Expr;
use crate::error::ExprError;

/// `expr == f - g * x` for the extracted variable `x`; neither `f` nor `g`
/// mentions `x` at the current time.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearForm {
    pub var: String,
    pub f: Expr,
    pub g: Expr,
}

impl LinearForm {
    /// Rebuilds `f - g * x`.
    pub fn to_expr(&self) -> Expr {
        self.f.clone() - self.g.clone() * Expr::var(self.var.clone())
    }
}

/// Splits `expr` into `f - g * var`.
///
/// Products are distributed over sums and terms collected by the power of
/// `var`; quotients are accepted only when the denominator does not involve
/// `var`. Delayed occurrences of `var` are ordinary symbols here.
pub fn extract_linear(expr: &Expr, var: &str) -> Result<LinearForm, ExprError> {
    let mut coeffs = collect(expr, var)?;
    trim(&mut coeffs);
    if let Some((power, coeff)) = coeffs.iter().enumerate().skip(2).last() {
        return Err(ExprError::Nonlinear {
            var: var.to_string(),
            monomial: format!("{coeff} * {var}^{power}"),
        });
    }
    let mut it = coeffs.into_iter();
    let f = it.next().unwrap_or(Expr::Const(0.0));
    let g = it.next().unwrap_or(Expr::Const(0.0)).neg();
    Ok(LinearForm {
        var: var.to_string(),
        f,
        g,
    })
}

type Poly = Vec<Expr>;

fn trim(p: &mut Poly) {
    while p.last().is_some_and(Expr::is_zero) {
        p.pop();
    }
}

fn add(a: Poly, b: Poly) -> Poly {
    let n = a.len().max(b.len());
    let mut a = a.into_iter();
    let mut b = b.into_iter();
    (0..n)
        .map(|_| match (a.next(), b.next()) {
            (Some(x), Some(y)) => x + y,
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => unreachable!(),
        })
        .collect()
}

fn mul(a: &Poly, b: &Poly) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out: Vec<Vec<Expr>> = vec![Vec::new(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            if x.is_zero() || y.is_zero() {
                continue;
            }
            out[i + j].push(x.clone() * y.clone());
        }
    }
    let mut p: Poly = out.into_iter().map(Expr::sum).collect();
    trim(&mut p);
    p
}

fn collect(expr: &Expr, var: &str) -> Result<Poly, ExprError> {
    Ok(match expr {
        Expr::Var(v) if v == var => vec![Expr::Const(0.0), Expr::Const(1.0)],
        Expr::Const(_) | Expr::Var(_) | Expr::Delayed { .. } => vec![expr.clone()],
        Expr::Sum(items) => {
            let mut acc = Vec::new();
            for item in items {
                acc = add(acc, collect(item, var)?);
            }
            acc
        }
        Expr::Diff(a, b) => {
            let neg: Poly = collect(b, var)?.into_iter().map(Expr::neg).collect();
            add(collect(a, var)?, neg)
        }
        Expr::Product(items) => {
            let mut acc = vec![Expr::Const(1.0)];
            for item in items {
                acc = mul(&acc, &collect(item, var)?);
            }
            acc
        }
        Expr::Quotient(a, b) => {
            if b.references(var) {
                return Err(ExprError::VariableInDenominator {
                    var: var.to_string(),
                    denominator: b.to_string(),
                });
            }
            collect(a, var)?
                .into_iter()
                .map(|c| c.div((**b).clone()))
                .collect()
        }
        Expr::Pow(base, k) => {
            let b = collect(base, var)?;
            let mut acc = vec![Expr::Const(1.0)];
            for _ in 0..*k {
                acc = mul(&acc, &b);
            }
            acc
        }
    })
}
