use super::{EvalError, Expr};
use crate::error::ExprError;

/// What a leaf resolves to when an expression is compiled against a system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Operand {
    Const(f64),
    /// Index into the current-time value slots.
    Slot(usize),
    /// Index into the per-step table of resolved delayed values.
    Delayed(usize),
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Push(f64),
    Load(usize),
    LoadDelayed(usize),
    Add(usize),
    Mul(usize),
    Sub,
    Div(usize),
    Pow(i32),
}

/// Postfix form of an [`Expr`] with leaves bound to slots.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    ops: Vec<Op>,
    denominators: Vec<String>,
    delayed: Vec<usize>,
}

impl CompiledExpr {
    pub fn compile(
        expr: &Expr,
        resolve: &mut dyn FnMut(&Expr) -> Result<Operand, ExprError>,
    ) -> Result<Self, ExprError> {
        let mut out = CompiledExpr {
            ops: Vec::new(),
            denominators: Vec::new(),
            delayed: Vec::new(),
        };
        out.emit(expr, resolve)?;
        out.delayed.sort_unstable();
        out.delayed.dedup();
        Ok(out)
    }

    fn emit(
        &mut self,
        expr: &Expr,
        resolve: &mut dyn FnMut(&Expr) -> Result<Operand, ExprError>,
    ) -> Result<(), ExprError> {
        match expr {
            Expr::Const(c) => self.ops.push(Op::Push(*c)),
            Expr::Var(_) | Expr::Delayed { .. } => match resolve(expr)? {
                Operand::Const(c) => self.ops.push(Op::Push(c)),
                Operand::Slot(i) => self.ops.push(Op::Load(i)),
                Operand::Delayed(i) => {
                    self.delayed.push(i);
                    self.ops.push(Op::LoadDelayed(i));
                }
            },
            Expr::Sum(items) | Expr::Product(items) => {
                for item in items {
                    self.emit(item, resolve)?;
                }
                self.ops.push(if matches!(expr, Expr::Sum(_)) {
                    Op::Add(items.len())
                } else {
                    Op::Mul(items.len())
                });
            }
            Expr::Diff(a, b) => {
                self.emit(a, resolve)?;
                self.emit(b, resolve)?;
                self.ops.push(Op::Sub);
            }
            Expr::Quotient(a, b) => {
                self.emit(a, resolve)?;
                self.emit(b, resolve)?;
                self.ops.push(Op::Div(self.denominators.len()));
                self.denominators.push(b.to_string());
            }
            Expr::Pow(base, k) => {
                self.emit(base, resolve)?;
                self.ops.push(Op::Pow(*k as i32));
            }
        }
        Ok(())
    }

    /// Delayed-table indices this expression reads.
    pub fn delayed_inputs(&self) -> &[usize] {
        &self.delayed
    }

    pub fn eval(&self, slots: &[f64], delayed: &[f64], stack: &mut Vec<f64>) -> Result<f64, EvalError> {
        stack.clear();
        for op in &self.ops {
            match *op {
                Op::Push(c) => stack.push(c),
                Op::Load(i) => stack.push(slots[i]),
                Op::LoadDelayed(i) => stack.push(delayed[i]),
                Op::Add(n) => {
                    let start = stack.len() - n;
                    let mut acc = 0.0;
                    for v in &stack[start..] {
                        acc += v;
                    }
                    stack.truncate(start);
                    stack.push(acc);
                }
                Op::Mul(n) => {
                    let start = stack.len() - n;
                    let mut acc = 1.0;
                    for v in &stack[start..] {
                        acc *= v;
                    }
                    stack.truncate(start);
                    stack.push(acc);
                }
                Op::Sub => {
                    let b = stack.pop().unwrap();
                    let a = stack.pop().unwrap();
                    stack.push(a - b);
                }
                Op::Div(site) => {
                    let b = stack.pop().unwrap();
                    let a = stack.pop().unwrap();
                    if b == 0.0 {
                        return Err(EvalError::DivisionByZero(self.denominators[site].clone()));
                    }
                    stack.push(a / b);
                }
                Op::Pow(k) => {
                    let a = stack.pop().unwrap();
                    stack.push(a.powi(k));
                }
            }
        }
        Ok(stack.pop().unwrap_or(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, Bindings};

    #[test]
    fn agrees_with_tree_evaluation() {
        let e = parse_expr("((a + 2 * b - c@d) / (1 + b^3)) * a").unwrap();
        let compiled = CompiledExpr::compile(&e, &mut |leaf| {
            Ok(match leaf {
                Expr::Var(v) if v == "a" => Operand::Slot(0),
                Expr::Var(v) if v == "b" => Operand::Slot(1),
                Expr::Delayed { .. } => Operand::Delayed(0),
                _ => unreachable!(),
            })
        })
        .unwrap();
        assert_eq!(compiled.delayed_inputs(), &[0]);
        let mut stack = Vec::new();
        let got = compiled.eval(&[1.5, -0.3], &[0.7], &mut stack).unwrap();
        let env = Bindings::new()
            .with("a", 1.5)
            .with("b", -0.3)
            .with_delayed("c", "d", 0.7);
        assert_eq!(got, e.eval(&env).unwrap());
    }

    #[test]
    fn reports_zero_denominator() {
        let e = parse_expr("1 / (x - 1)").unwrap();
        let compiled = CompiledExpr::compile(&e, &mut |_| Ok(Operand::Slot(0))).unwrap();
        let err = compiled.eval(&[1.0], &[], &mut Vec::new()).unwrap_err();
        assert_eq!(err, EvalError::DivisionByZero("(x - 1)".into()));
    }
}
