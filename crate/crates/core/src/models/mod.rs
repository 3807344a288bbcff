//! Built-in models: the Hes1 gene-expression network and a three-variable
//! cell-cycle oscillator, each with its reduced variants.

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::expr::{parse_expr, Bindings, Expr};
use crate::network::{conservation_laws, eliminate_species, mass_action_odes, parse_network, rename, rescale, ReactionNetwork};
use crate::reduction::{apply_delay_policy, dqssa_reduce, dqssa_reduce_with, qssa_reduce, recurrent_reduce, DelayPolicy, DqssaMode};
use crate::solver::Method;
use crate::system::{Delay, DelaySpec, DynamicalSystem};

#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub system: DynamicalSystem,
    /// Integrator suited to this variant.
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub name: String,
    pub variants: IndexMap<String, Variant>,
    pub parameters: IndexMap<String, f64>,
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Variant the others are compared against.
    pub reference: String,
    /// Source network, when the model is built from reactions.
    pub network: Option<ReactionNetwork>,
}

impl ModelBundle {
    pub fn variant(&self, name: &str) -> Result<&Variant, Error> {
        self.variants.get(name).ok_or_else(|| {
            Error::Invalid(format!(
                "model `{}` has no variant `{name}` (available: {})",
                self.name,
                self.variants.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })
    }
}

pub const MODEL_NAMES: [&str; 3] = ["hes1", "hes1-set2", "cellcycle"];

pub fn bundle_by_name(name: &str) -> Result<ModelBundle, Error> {
    match name {
        "hes1" => hes1_bundle(&Hes1Params::default()),
        "hes1-set2" => hes1_bundle(&Hes1Params::set2()).map(|b| ModelBundle {
            name: name.into(),
            ..b
        }),
        "cellcycle" => cellcycle_bundle(),
        other => Err(Error::Invalid(format!(
            "unknown model `{other}` (available: {})",
            MODEL_NAMES.join(", ")
        ))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hes1Params {
    pub n: u32,
    pub mu_m: f64,
    pub mu_p: f64,
    pub gamma: f64,
    pub gamma_m1: f64,
    pub alpha: f64,
    /// Hill midpoint of the `monk` variant; `(gamma_m1 / gamma)^(1/n)` when unset.
    pub monk_p0: Option<f64>,
    /// Constant delay of the `monk` variant.
    pub monk_tau: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Integrator for the unreduced system.
    pub full_method: Method,
}

impl Default for Hes1Params {
    fn default() -> Self {
        Self {
            n: 5,
            mu_m: 0.03,
            mu_p: 0.03,
            gamma: 2e-12,
            gamma_m1: 0.02,
            alpha: 500.0,
            monk_p0: None,
            monk_tau: 18.5,
            t_end: 500.0,
            dt: 0.05,
            full_method: Method::Rk4,
        }
    }
}

impl Hes1Params {
    /// Fast binding (`gamma = 10`, `gamma_m1 = 1e-4`). The unreduced system
    /// is stiff and uses the implicit integrator.
    pub fn set2() -> Self {
        Self {
            gamma: 10.0,
            gamma_m1: 1e-4,
            dt: 0.01,
            full_method: Method::Sdirk2,
            ..Self::default()
        }
    }

    pub fn p0(&self) -> f64 {
        self.monk_p0
            .unwrap_or_else(|| (self.gamma_m1 / self.gamma).powf(1.0 / self.n as f64))
    }

    fn validate(&self) -> Result<(), Error> {
        let positive = [
            ("mu_m", self.mu_m),
            ("mu_p", self.mu_p),
            ("gamma", self.gamma),
            ("gamma_m1", self.gamma_m1),
            ("alpha", self.alpha),
            ("dt", self.dt),
            ("t_end", self.t_end),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Invalid(format!("hes1 parameter {name} must be positive, got {v}")));
            }
        }
        if self.n == 0 {
            return Err(Error::Invalid("hes1 parameter n must be a positive integer".into()));
        }
        if !(self.monk_tau >= 0.0) {
            return Err(Error::Invalid("monk delay must be nonnegative".into()));
        }
        Ok(())
    }

    /// Reaction scheme with `alpha_m = alpha_p = sqrt(alpha)` and
    /// `gamma_1 = gamma / alpha^n`.
    pub fn network_text(&self) -> String {
        let a = self.alpha.sqrt();
        let gamma1 = self.gamma / self.alpha.powi(self.n as i32);
        format!(
            "# Hes1 autorepression\n\
             species: D, Dp, M, P\n\
             fast: D\n\
             reaction: D -> D + M @ {a:e}\n\
             reaction: M -> M + P @ {a:e}\n\
             reaction: D + {n} P <-> Dp @ {gamma1:e}, {gm:e}\n\
             reaction: M -> 0 @ {mm:e}\n\
             reaction: P -> 0 @ {mp:e}\n\
             init: D=1, Dp=0, M=0, P=0\n",
            n = self.n,
            gm = self.gamma_m1,
            mm = self.mu_m,
            mp = self.mu_p,
        )
    }
}

/// Hes1: mass-action system, `Dp` eliminated through `D + Dp = 1`, mRNA and
/// protein rescaled to `m = M / alpha_m`, `p = P / (alpha_m alpha_p)`.
pub fn hes1_bundle(params: &Hes1Params) -> Result<ModelBundle, Error> {
    params.validate()?;
    let net = parse_network(&params.network_text())?;
    let mut sys = mass_action_odes(&net);
    let law = conservation_laws(&net)
        .into_iter()
        .find(|l| l.coefficient("Dp") != 0)
        .ok_or_else(|| Error::Invalid("no conservation law involves Dp".into()))?;
    sys = eliminate_species(&sys, &law, "Dp")?;
    let a = params.alpha.sqrt();
    sys = rescale(&sys, &IndexMap::from([("M".to_string(), a), ("P".to_string(), a * a)]))?;
    sys = rename(&sys, "M", "m")?;
    sys = rename(&sys, "P", "p")?;
    sys.name = "hes1".into();

    let ode = if params.full_method == Method::Sdirk2 { Method::Rk4 } else { params.full_method };
    let mut variants = IndexMap::new();
    let mut add = |name: &str, mut system: DynamicalSystem, method: Method| {
        system.name = format!("hes1/{name}");
        variants.insert(name.to_string(), Variant { system, method });
    };
    add("qssa", qssa_reduce(&sys, &["D"])?, ode);
    add("dqssa", dqssa_reduce(&sys, &["D"])?, Method::Euler);
    add(
        "dqssa-ablated",
        dqssa_reduce_with(&sys, &["D"], DqssaMode::ReduceThenDelay)?,
        Method::Euler,
    );
    add("monk", monk_system(params, params.p0(), params.monk_tau), Method::Euler);
    variants.shift_insert(
        0,
        "full".into(),
        Variant {
            system: sys,
            method: params.full_method,
        },
    );

    let parameters = IndexMap::from([
        ("n".to_string(), params.n as f64),
        ("mu_m".to_string(), params.mu_m),
        ("mu_p".to_string(), params.mu_p),
        ("gamma".to_string(), params.gamma),
        ("gamma_m1".to_string(), params.gamma_m1),
        ("alpha".to_string(), params.alpha),
        ("p0".to_string(), params.p0()),
        ("monk_tau".to_string(), params.monk_tau),
    ]);
    Ok(ModelBundle {
        name: "hes1".into(),
        variants,
        parameters,
        t0: 0.0,
        t_end: params.t_end,
        dt: params.dt,
        reference: "full".into(),
        network: Some(net),
    })
}

/// `dm/dt = 1 / (1 + (p(t - tau) / p0)^n) - mu_m m`, `dp/dt = m - mu_p p`.
fn monk_system(params: &Hes1Params, p0: f64, tau: f64) -> DynamicalSystem {
    let n = params.n;
    let mut sys = DynamicalSystem::new("hes1/monk")
        .with_equation(
            "m",
            parse_expr(&format!("1 / (1 + (p@tau_tr / p0)^{n}) - mu_m * m")).unwrap(),
            0.0,
        )
        .with_equation("p", parse_expr("m - mu_p * p").unwrap(), 0.0)
        .with_parameter("p0", p0)
        .with_parameter("mu_m", params.mu_m)
        .with_parameter("mu_p", params.mu_p);
    sys.delays.insert(
        "tau_tr".into(),
        Delay {
            spec: DelaySpec::Constant(tau),
            origin: "D".into(),
        },
    );
    sys
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonkCheck {
    pub pass: bool,
    pub max_relative_deviation: f64,
    pub samples: usize,
}

/// Compares the mRNA right-hand side of the D-QSSA reduction (with its delay
/// fixed to `tau`) and of the Hill-type delay model with midpoint `p0` and
/// delay `tau`, at 200 random states and delayed protein values.
pub fn monk_equivalence_check(params: &Hes1Params, p0: f64, tau: f64, seed: u64) -> Result<MonkCheck, Error> {
    let bundle = hes1_bundle(params)?;
    let dq = &bundle.variant("dqssa")?.system;
    let id = dq.delays.keys().next().cloned().unwrap();
    let dq = apply_delay_policy(dq, &DelayPolicy::Constant(IndexMap::from([(id.clone(), tau)])), None, None)?;
    let monk = monk_system(params, p0, tau);

    let d_def = dq.bind_parameters(dq.definition("D").unwrap());
    let dq_rhs = dq.bind_parameters(dq.equation("m").unwrap());
    let monk_rhs = monk.bind_parameters(monk.equation("m").unwrap());
    let same_delay = matches!(
        (&dq.delays[&id].spec, &monk.delays["tau_tr"].spec),
        (DelaySpec::Constant(a), DelaySpec::Constant(b)) if a == b
    );

    let scale = params.p0();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let samples = 200;
    for _ in 0..samples {
        let m: f64 = rng.gen_range(0.0..10.0);
        let p: f64 = rng.gen_range(0.0..4.0 * scale);
        let lagged: f64 = rng.gen_range(0.0..4.0 * scale);
        let d = d_def.eval(&Bindings::new().with_delayed("p", &id, lagged))?;
        let a = dq_rhs.eval(&Bindings::new().with("m", m).with("p", p).with("D", d))?;
        let b = monk_rhs.eval(&Bindings::new().with("m", m).with("p", p).with_delayed("p", "tau_tr", lagged))?;
        let rel = (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
    }
    Ok(MonkCheck {
        pass: same_delay && worst < 1e-12,
        max_relative_deviation: worst,
        samples,
    })
}

/// Three-variable cell-cycle oscillator (CDK1 `C`, Plk1 `P`, APC `A`) with
/// zero initial condition.
pub fn cellcycle_system() -> DynamicalSystem {
    let e = |s: &str| parse_expr(s).unwrap();
    let mut sys = DynamicalSystem::new("cellcycle")
        .with_equation("C", e("a1 - b1 * C * A^8 / (K1^8 + A^8)"), 0.0)
        .with_equation("P", e("a2 * (1 - P) * C^8 / (K2^8 + C^8) - b2 * P"), 0.0)
        .with_equation("A", e("a3 * (1 - A) * P^8 / (K3^8 + P^8) - b3 * A"), 0.0);
    for (name, value) in [
        ("a1", 0.1),
        ("a2", 3.0),
        ("a3", 3.0),
        ("b1", 3.0),
        ("b2", 1.0),
        ("b3", 1.0),
        ("K1", 0.5),
        ("K2", 0.5),
        ("K3", 0.5),
    ] {
        sys = sys.with_parameter(name, value);
    }
    sys
}

pub fn cellcycle_bundle() -> Result<ModelBundle, Error> {
    let full = cellcycle_system();
    let mut variants = IndexMap::new();
    let mut add = |name: &str, mut system: DynamicalSystem, method: Method| {
        system.name = format!("cellcycle/{name}");
        variants.insert(name.to_string(), Variant { system, method });
    };
    add("full", full.clone(), Method::Rk4);
    add("qssa-P", qssa_reduce(&full, &["P"])?, Method::Rk4);
    add("dqssa-P", dqssa_reduce(&full, &["P"])?, Method::Euler);
    add(
        "dqssa-PA",
        recurrent_reduce(&full, &[vec!["P".into()], vec!["A".into()]], DqssaMode::Full)?,
        Method::Euler,
    );
    Ok(ModelBundle {
        name: "cellcycle".into(),
        variants,
        parameters: full.parameters.clone(),
        t0: 0.0,
        t_end: 60.0,
        dt: 0.001,
        reference: "full".into(),
        network: None,
    })
}

/// Expression helper for tests and callers that hand-write the Hes1 system.
pub fn hes1_reference_equations(params: &Hes1Params) -> Vec<(String, Expr)> {
    let n = params.n;
    let r = format!("(gm - (gm + g * p^{n}) * D)");
    [
        ("D", r.clone()),
        ("m", "D - mu_m * m".to_string()),
        ("p", format!("m - mu_p * p + n / alpha * {r}")),
    ]
    .into_iter()
    .map(|(v, s)| {
        let e = parse_expr(&s).unwrap();
        let bound = e.map_leaves(&mut |leaf| match leaf {
            Expr::Var(name) => match name.as_str() {
                "gm" => Some(Expr::Const(params.gamma_m1)),
                "g" => Some(Expr::Const(params.gamma)),
                "mu_m" => Some(Expr::Const(params.mu_m)),
                "mu_p" => Some(Expr::Const(params.mu_p)),
                "n" => Some(Expr::Const(n as f64)),
                "alpha" => Some(Expr::Const(params.alpha)),
                _ => None,
            },
            _ => None,
        });
        (v.to_string(), bound)
    })
    .collect()
}
