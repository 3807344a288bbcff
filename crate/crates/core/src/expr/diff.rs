use super::Expr;

pub(super) fn derivative(expr: &Expr, var: &str) -> Expr {
    match expr {
        Expr::Const(_) | Expr::Delayed { .. } => Expr::Const(0.0),
        Expr::Var(v) => Expr::Const(if v == var { 1.0 } else { 0.0 }),
        Expr::Sum(items) => Expr::sum(items.iter().map(|e| derivative(e, var))),
        Expr::Diff(a, b) => derivative(a, var).sub(derivative(b, var)),
        Expr::Product(items) => Expr::sum((0..items.len()).map(|i| {
            Expr::product(items.iter().enumerate().map(|(j, e)| {
                if i == j {
                    derivative(e, var)
                } else {
                    e.clone()
                }
            }))
        })),
        Expr::Quotient(a, b) => {
            let da = derivative(a, var);
            let db = derivative(b, var);
            if db.is_zero() {
                return da.div((**b).clone());
            }
            (da * (**b).clone() - (**a).clone() * db).div((**b).clone().powi(2))
        }
        Expr::Pow(base, k) => {
            if *k == 0 {
                return Expr::Const(0.0);
            }
            Expr::product([
                Expr::Const(*k as f64),
                (**base).clone().powi(k - 1),
                derivative(base, var),
            ])
        }
    }
}
