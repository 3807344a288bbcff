//! One representation for original and reduced systems: differential
//! equations, algebraic definitions, a delay table and named parameters.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use indexmap::IndexMap;

use crate::error::SystemError;
use crate::expr::{format_number, Expr};

#[derive(Debug, Clone, PartialEq)]
pub enum DelaySpec {
    /// `tau(t) = 1 / g(x(t))`, with `g` evaluated at the current time.
    StateDependent { g: Expr },
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Delay {
    pub spec: DelaySpec,
    /// Fast variable whose reduction introduced the delay.
    pub origin: String,
}

/// Differential equations `d x/dt = rhs` plus algebraic definitions.
///
/// History before `t0` is the constant prolongation of the value at `t0`,
/// for states (the initial condition) and algebraic variables alike.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DynamicalSystem {
    pub name: String,
    pub equations: Vec<(String, Expr)>,
    pub algebraic: Vec<(String, Expr)>,
    pub delays: IndexMap<String, Delay>,
    pub initial: IndexMap<String, f64>,
    pub parameters: IndexMap<String, f64>,
}

/// Evaluation step inside one time point: a delay or an algebraic definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Algebraic(usize),
    Delay(usize),
}

impl DynamicalSystem {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn with_equation(mut self, var: &str, rhs: Expr, initial: f64) -> Self {
        self.equations.push((var.to_string(), rhs));
        self.initial.insert(var.to_string(), initial);
        self
    }

    pub fn with_algebraic(mut self, var: &str, def: Expr) -> Self {
        self.algebraic.push((var.to_string(), def));
        self
    }

    pub fn with_parameter(mut self, name: &str, value: f64) -> Self {
        self.parameters.insert(name.to_string(), value);
        self
    }

    pub fn state_names(&self) -> impl Iterator<Item = &str> {
        self.equations.iter().map(|(v, _)| v.as_str())
    }

    pub fn algebraic_names(&self) -> impl Iterator<Item = &str> {
        self.algebraic.iter().map(|(v, _)| v.as_str())
    }

    pub fn is_state(&self, var: &str) -> bool {
        self.equations.iter().any(|(v, _)| v == var)
    }

    pub fn is_algebraic(&self, var: &str) -> bool {
        self.algebraic.iter().any(|(v, _)| v == var)
    }

    /// States and algebraic variables: everything that has a history.
    pub fn is_dynamic(&self, var: &str) -> bool {
        self.is_state(var) || self.is_algebraic(var)
    }

    pub fn equation(&self, var: &str) -> Option<&Expr> {
        self.equations.iter().find(|(v, _)| v == var).map(|(_, e)| e)
    }

    pub fn definition(&self, var: &str) -> Option<&Expr> {
        self.algebraic.iter().find(|(v, _)| v == var).map(|(_, e)| e)
    }

    pub fn has_delays(&self) -> bool {
        !self.delays.is_empty()
    }

    /// Smallest `tauK` not already used.
    pub fn fresh_delay_id(&self) -> String {
        (1..)
            .map(|k| format!("tau{k}"))
            .find(|id| !self.delays.contains_key(id))
            .unwrap()
    }

    /// `e` with every parameter replaced by its value.
    pub fn bind_parameters(&self, e: &Expr) -> Expr {
        e.map_leaves(&mut |leaf| match leaf {
            Expr::Var(v) => self.parameters.get(v).map(|&c| Expr::Const(c)),
            _ => None,
        })
    }

    /// Applies `f` to every expression: right-hand sides, definitions and
    /// state-dependent delay coefficients.
    pub fn map_exprs(&self, f: &mut impl FnMut(&Expr) -> Expr) -> DynamicalSystem {
        self.try_map_exprs(&mut |e| Ok::<_, std::convert::Infallible>(f(e)))
            .unwrap_or_else(|never| match never {})
    }

    pub fn try_map_exprs<E>(
        &self,
        f: &mut impl FnMut(&Expr) -> Result<Expr, E>,
    ) -> Result<DynamicalSystem, E> {
        let mut out = self.clone();
        for (_, rhs) in &mut out.equations {
            *rhs = f(rhs)?;
        }
        for (_, def) in &mut out.algebraic {
            *def = f(def)?;
        }
        for delay in out.delays.values_mut() {
            if let DelaySpec::StateDependent { g } = &mut delay.spec {
                *g = f(g)?;
            }
        }
        Ok(out)
    }

    /// Checks references and returns the per-time-point evaluation order of
    /// delays and algebraic definitions.
    pub fn schedule(&self) -> Result<Vec<Node>, SystemError> {
        let mut seen = BTreeSet::new();
        for name in self
            .state_names()
            .chain(self.algebraic_names())
            .chain(self.parameters.keys().map(String::as_str))
        {
            if !seen.insert(name) {
                return Err(SystemError::Duplicate(name.to_string()));
            }
        }
        for var in self.state_names() {
            if !self.initial.contains_key(var) {
                return Err(SystemError::MissingInitial(var.to_string()));
            }
        }
        for (id, delay) in &self.delays {
            if let DelaySpec::Constant(v) = delay.spec {
                if !(v >= 0.0) {
                    return Err(SystemError::NegativeDelay {
                        delay: id.clone(),
                        value: v,
                    });
                }
            }
        }

        let alg_index: HashMap<&str, usize> = self
            .algebraic
            .iter()
            .enumerate()
            .map(|(i, (v, _))| (v.as_str(), i))
            .collect();

        // Dependencies of one expression on schedule nodes.
        let deps = |e: &Expr, context: &str| -> Result<Vec<Node>, SystemError> {
            let mut out = Vec::new();
            for v in e.variables() {
                if let Some(&i) = alg_index.get(v.as_str()) {
                    out.push(Node::Algebraic(i));
                } else if !self.is_state(&v) && !self.parameters.contains_key(&v) {
                    return Err(SystemError::UnknownVariable {
                        name: v,
                        context: context.to_string(),
                    });
                }
            }
            for (v, d) in e.delayed_refs() {
                let k = self.delays.get_index_of(&d).ok_or_else(|| SystemError::UnknownDelay {
                    delay: d.clone(),
                    context: context.to_string(),
                })?;
                out.push(Node::Delay(k));
                if let Some(&i) = alg_index.get(v.as_str()) {
                    out.push(Node::Algebraic(i));
                } else if !self.is_state(&v) {
                    return Err(SystemError::UnknownVariable {
                        name: format!("{v}@{d}"),
                        context: context.to_string(),
                    });
                }
            }
            Ok(out)
        };

        for (v, rhs) in &self.equations {
            deps(rhs, &format!("the equation for `{v}`"))?;
        }
        let mut nodes = Vec::new();
        let mut edges: Vec<Vec<Node>> = Vec::new();
        for (i, (v, def)) in self.algebraic.iter().enumerate() {
            nodes.push(Node::Algebraic(i));
            edges.push(deps(def, &format!("the definition of `{v}`"))?);
        }
        for (k, (id, delay)) in self.delays.iter().enumerate() {
            nodes.push(Node::Delay(k));
            edges.push(match &delay.spec {
                DelaySpec::StateDependent { g } => deps(g, &format!("delay `{id}`"))?,
                DelaySpec::Constant(_) => Vec::new(),
            });
        }

        // Depth-first topological sort in declaration order.
        let position = |n: Node| match n {
            Node::Algebraic(i) => i,
            Node::Delay(k) => self.algebraic.len() + k,
        };
        let mut state = vec![0u8; nodes.len()];
        let mut order = Vec::with_capacity(nodes.len());
        fn visit(
            at: usize,
            nodes: &[Node],
            edges: &[Vec<Node>],
            state: &mut [u8],
            order: &mut Vec<Node>,
            position: &dyn Fn(Node) -> usize,
            sys: &DynamicalSystem,
        ) -> Result<(), SystemError> {
            match state[at] {
                2 => return Ok(()),
                1 => return Err(SystemError::Cycle(sys.node_name(nodes[at]))),
                _ => {}
            }
            state[at] = 1;
            for &dep in &edges[at] {
                visit(position(dep), nodes, edges, state, order, position, sys)?;
            }
            state[at] = 2;
            order.push(nodes[at]);
            Ok(())
        }
        for at in 0..nodes.len() {
            visit(at, &nodes, &edges, &mut state, &mut order, &position, self)?;
        }
        Ok(order)
    }

    fn node_name(&self, n: Node) -> String {
        match n {
            Node::Algebraic(i) => self.algebraic[i].0.clone(),
            Node::Delay(k) => self.delays.get_index(k).unwrap().0.clone(),
        }
    }

    /// Plain-text listing: equations, definitions, delay table, initial
    /// values and parameters.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "system {}", self.name);
        for (v, rhs) in &self.equations {
            let _ = writeln!(out, "d{v}/dt = {rhs}");
        }
        for (v, def) in &self.algebraic {
            let _ = writeln!(out, "{v} = {def}");
        }
        for (id, delay) in &self.delays {
            match &delay.spec {
                DelaySpec::StateDependent { g } => {
                    let _ = writeln!(out, "delay {id} = 1 / {g}  [state-dependent, from {}]", delay.origin);
                }
                DelaySpec::Constant(v) => {
                    let _ = writeln!(out, "delay {id} = {}  [constant, from {}]", format_number(*v), delay.origin);
                }
            }
        }
        if !self.initial.is_empty() {
            let init: Vec<String> = self
                .initial
                .iter()
                .map(|(v, x)| format!("{v}={}", format_number(*x)))
                .collect();
            let _ = writeln!(out, "init: {}", init.join(", "));
        }
        if !self.parameters.is_empty() {
            let params: Vec<String> = self
                .parameters
                .iter()
                .map(|(v, x)| format!("{v}={}", format_number(*x)))
                .collect();
            let _ = writeln!(out, "parameters: {}", params.join(", "));
        }
        out
    }
}

impl fmt::Display for DynamicalSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}
