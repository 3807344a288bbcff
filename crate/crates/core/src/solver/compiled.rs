//! A [`DynamicalSystem`] lowered to slot-indexed stack programs.

use std::collections::HashMap;

use crate::error::{SolverError, SystemError};
use crate::expr::{CompiledExpr, Expr, Operand};
use crate::system::{DelaySpec, DynamicalSystem, Node};

use super::history::HistoryBuffer;

pub(crate) enum DelayKind {
    Constant(f64),
    StateDependent(CompiledExpr),
}

pub(crate) struct CompiledDelay {
    pub id: String,
    pub origin: String,
    pub kind: DelayKind,
}

pub(crate) struct Compiled {
    pub name: String,
    pub n_states: usize,
    pub names: Vec<String>,
    pub rhs: Vec<CompiledExpr>,
    pub alg: Vec<CompiledExpr>,
    pub delays: Vec<CompiledDelay>,
    /// `(column, delay index)` of each distinct delayed reference.
    pub refs: Vec<(usize, usize)>,
    pub schedule: Vec<Node>,
    pub initial: Vec<f64>,
}

/// Per-time-point working memory.
pub(crate) struct Scratch {
    pub slots: Vec<f64>,
    pub taus: Vec<f64>,
    pub delayed: Vec<f64>,
    pub stack: Vec<f64>,
    pub deriv: Vec<f64>,
}

impl Compiled {
    pub fn new(sys: &DynamicalSystem) -> Result<Self, SystemError> {
        let schedule = sys.schedule()?;
        let names: Vec<String> = sys
            .state_names()
            .chain(sys.algebraic_names())
            .map(str::to_string)
            .collect();
        let column: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut refs: Vec<(usize, usize)> = Vec::new();

        let mut compile = |e: &Expr| -> CompiledExpr {
            CompiledExpr::compile(e, &mut |leaf| {
                Ok(match leaf {
                    Expr::Var(v) => match column.get(v.as_str()) {
                        Some(&i) => Operand::Slot(i),
                        None => Operand::Const(sys.parameters[v.as_str()]),
                    },
                    Expr::Delayed { var, delay } => {
                        let key = (column[var.as_str()], sys.delays.get_index_of(delay).unwrap());
                        let idx = match refs.iter().position(|r| *r == key) {
                            Some(i) => i,
                            None => {
                                refs.push(key);
                                refs.len() - 1
                            }
                        };
                        Operand::Delayed(idx)
                    }
                    _ => unreachable!(),
                })
            })
            .expect("references were validated by the schedule")
        };

        let rhs = sys.equations.iter().map(|(_, e)| compile(e)).collect();
        let alg = sys.algebraic.iter().map(|(_, e)| compile(e)).collect();
        let delays = sys
            .delays
            .iter()
            .map(|(id, d)| CompiledDelay {
                id: id.clone(),
                origin: d.origin.clone(),
                kind: match &d.spec {
                    DelaySpec::Constant(v) => DelayKind::Constant(*v),
                    DelaySpec::StateDependent { g } => DelayKind::StateDependent(compile(g)),
                },
            })
            .collect();
        let initial = sys.state_names().map(|v| sys.initial[v]).collect();
        Ok(Compiled {
            name: sys.name.clone(),
            n_states: sys.equations.len(),
            names,
            rhs,
            alg,
            delays,
            refs,
            schedule,
            initial,
        })
    }

    pub fn width(&self) -> usize {
        self.names.len()
    }

    pub fn scratch(&self) -> Scratch {
        Scratch {
            slots: vec![0.0; self.width()],
            taus: vec![0.0; self.delays.len()],
            delayed: vec![0.0; self.refs.len()],
            stack: Vec::with_capacity(32),
            deriv: vec![0.0; self.n_states],
        }
    }

    fn resolve(
        &self,
        expr: &CompiledExpr,
        s: &mut Scratch,
        history: Option<(&HistoryBuffer, usize)>,
    ) {
        for &r in expr.delayed_inputs() {
            let (col, d) = self.refs[r];
            s.delayed[r] = match history {
                Some((h, k)) => h.lookup(col, k, s.taus[d], &s.slots),
                None => s.slots[col],
            };
        }
    }

    /// Fills algebraic slots and delays for the states already in
    /// `s.slots[..n_states]`, then the derivative. Without history every
    /// delayed reference reads the current value.
    pub fn evaluate(
        &self,
        t: f64,
        s: &mut Scratch,
        history: Option<(&HistoryBuffer, usize)>,
        with_rhs: bool,
    ) -> Result<(), SolverError> {
        let wrap = |source| SolverError::Eval { time: t, source };
        for &node in &self.schedule {
            match node {
                Node::Delay(d) => {
                    s.taus[d] = match &self.delays[d].kind {
                        DelayKind::Constant(v) => *v,
                        DelayKind::StateDependent(g) => {
                            self.resolve(g, s, history);
                            let value = g.eval(&s.slots, &s.delayed, &mut s.stack).map_err(wrap)?;
                            if !(value > 0.0) {
                                return Err(SolverError::A2Violation {
                                    delay: self.delays[d].id.clone(),
                                    var: self.delays[d].origin.clone(),
                                    time: t,
                                    value,
                                });
                            }
                            1.0 / value
                        }
                    };
                }
                Node::Algebraic(j) => {
                    let def = &self.alg[j];
                    self.resolve(def, s, history);
                    s.slots[self.n_states + j] = def.eval(&s.slots, &s.delayed, &mut s.stack).map_err(wrap)?;
                }
            }
        }
        if with_rhs {
            for (i, rhs) in self.rhs.iter().enumerate() {
                self.resolve(rhs, s, history);
                s.deriv[i] = rhs.eval(&s.slots, &s.delayed, &mut s.stack).map_err(wrap)?;
            }
        }
        Ok(())
    }

    pub fn check_finite(&self, s: &Scratch, step: usize, time: f64) -> Result<(), SolverError> {
        match s.slots.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(SolverError::NonFinite {
                var: self.names[i].clone(),
                step,
                time,
            }),
        }
    }
}
