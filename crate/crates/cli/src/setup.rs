use std::path::Path;

use anyhow::{bail, Context};
use indexmap::IndexMap;

use dqssa::models::{bundle_by_name, ModelBundle, Variant};
use dqssa::network::{mass_action_odes, parse_network};
use dqssa::reduction::{
    apply_delay_policy, check_assumption_a1, check_assumption_a3, dqssa_reduce_with, first_order_correction,
    qssa_reduce, recurrent_reduce, DelayPolicy, DqssaMode,
};
use dqssa::solver::{simulate, Method, Trajectory};
use dqssa::{DynamicalSystem, Error};

use crate::Common;

/// Built-in bundle, or a `.crn` network file whose `fast:` line (or
/// `--fast`) drives the reduced variants.
pub fn load_model(spec: &str) -> anyhow::Result<ModelBundle> {
    let path = Path::new(spec);
    if !(spec.ends_with(".crn") || path.is_file()) {
        return Ok(bundle_by_name(spec)?);
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {spec}"))?;
    let net = parse_network(&text)?;
    let mut full = mass_action_odes(&net);
    full.name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("model").to_string();
    let mut bundle = ModelBundle {
        name: full.name.clone(),
        variants: IndexMap::new(),
        parameters: IndexMap::new(),
        t0: 0.0,
        t_end: 100.0,
        dt: 0.01,
        reference: "full".into(),
        network: Some(net.clone()),
    };
    bundle.variants.insert(
        "full".into(),
        Variant {
            system: full.clone(),
            method: Method::Rk4,
        },
    );
    if !net.fast.is_empty() {
        let fast: Vec<&str> = net.fast.iter().map(String::as_str).collect();
        for name in ["qssa", "dqssa", "dqssa-ablated"] {
            let v = build_variant(&bundle, name, &fast)?;
            bundle.variants.insert(name.into(), v);
        }
    }
    Ok(bundle)
}

pub fn parse_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect()
}

/// Runs the network-level assumption checks when every fast name is a
/// species of the source network.
pub fn check_network(bundle: &ModelBundle, fast: &[&str]) -> Result<(), Error> {
    let Some(net) = &bundle.network else { return Ok(()) };
    if fast.is_empty() || !fast.iter().all(|f| net.index_of(f).is_some()) {
        return Ok(());
    }
    let v = check_assumption_a1(net, fast)?;
    if !v.is_empty() {
        return Err(dqssa::error::ReductionError::A1(v).into());
    }
    let v = check_assumption_a3(net, fast)?;
    if !v.is_empty() {
        return Err(dqssa::error::ReductionError::A3(v).into());
    }
    Ok(())
}

fn reference(bundle: &ModelBundle) -> Result<&DynamicalSystem, Error> {
    Ok(&bundle.variant(&bundle.reference)?.system)
}

/// Reduces the reference system of `bundle` with the given fast set.
pub fn build_variant(bundle: &ModelBundle, kind: &str, fast: &[&str]) -> Result<Variant, Error> {
    check_network(bundle, fast)?;
    let sys = reference(bundle)?;
    let (system, method) = match kind {
        "full" => (sys.clone(), bundle.variant(&bundle.reference)?.method),
        "qssa" => (qssa_reduce(sys, fast)?, Method::Rk4),
        "dqssa" => (dqssa_reduce_with(sys, fast, DqssaMode::Full)?, Method::Euler),
        "dqssa-ablated" => (dqssa_reduce_with(sys, fast, DqssaMode::ReduceThenDelay)?, Method::Euler),
        "foc" => match fast {
            [one] => (first_order_correction(sys, one)?, Method::Rk4),
            _ => return Err(Error::Invalid("first-order correction takes exactly one fast variable".into())),
        },
        other => {
            return Err(Error::Invalid(format!(
                "with --fast the variant must be full, qssa, dqssa, dqssa-ablated or foc, not `{other}`"
            )))
        }
    };
    Ok(Variant { system, method })
}

/// Picks the variant named on the command line, honouring `--fast` and
/// `--ablate-last-term`.
pub fn resolve_variant(bundle: &ModelBundle, name: &str, common: &Common) -> Result<Variant, Error> {
    let fast = common.fast.as_deref().map(parse_list).unwrap_or_default();
    let fast: Vec<&str> = fast.iter().map(String::as_str).collect();
    if !fast.is_empty() {
        let kind = if common.ablate_last_term && name == "dqssa" { "dqssa-ablated" } else { name };
        return build_variant(bundle, kind, &fast);
    }
    let v = bundle.variant(name)?.clone();
    if !common.ablate_last_term || !v.system.has_delays() {
        return Ok(v);
    }
    if !name.starts_with("dqssa") {
        return Err(Error::Invalid(format!(
            "--ablate-last-term applies to D-QSSA variants, not `{name}`"
        )));
    }
    let stages: Vec<Vec<String>> = v.system.delays.values().map(|d| vec![d.origin.clone()]).collect();
    let system = recurrent_reduce(reference(bundle)?, &stages, DqssaMode::ReduceThenDelay)?;
    Ok(Variant { system, ..v })
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    State,
    Qssa0,
    Min,
    Mean,
    Max,
    Const(IndexMap<String, f64>),
}

impl PolicySpec {
    pub fn parse(s: &str) -> anyhow::Result<Self> {
        Ok(match s {
            "state" => PolicySpec::State,
            "qssa0" => PolicySpec::Qssa0,
            "min" => PolicySpec::Min,
            "mean" => PolicySpec::Mean,
            "max" => PolicySpec::Max,
            _ => {
                let Some(rest) = s.strip_prefix("const:") else {
                    bail!("unknown delay policy `{s}` (expected state, qssa0, min, mean, max or const:<id>=<value>,...)");
                };
                let mut map = IndexMap::new();
                for item in parse_list(rest) {
                    let (id, v) = item
                        .split_once('=')
                        .with_context(|| format!("expected <id>=<value> in `{item}`"))?;
                    let v: f64 = v.trim().parse().with_context(|| format!("bad delay value in `{item}`"))?;
                    map.insert(id.trim().to_string(), v);
                }
                if map.is_empty() {
                    bail!("const policy lists no delays");
                }
                PolicySpec::Const(map)
            }
        })
    }

    pub fn label(&self) -> String {
        match self {
            PolicySpec::State => "state".into(),
            PolicySpec::Qssa0 => "qssa0".into(),
            PolicySpec::Min => "min".into(),
            PolicySpec::Mean => "mean".into(),
            PolicySpec::Max => "max".into(),
            PolicySpec::Const(m) => {
                let items: Vec<String> = m.iter().map(|(k, v)| format!("{k}={v}")).collect();
                format!("const:{}", items.join(","))
            }
        }
    }

    pub fn needs_reference(&self) -> bool {
        matches!(self, PolicySpec::Min | PolicySpec::Mean | PolicySpec::Max)
    }

    /// With `lenient`, constant values for delays the system lacks are skipped.
    pub fn apply(
        &self,
        sys: &DynamicalSystem,
        reference: Option<&Trajectory>,
        window: Option<(f64, f64)>,
        lenient: bool,
    ) -> Result<DynamicalSystem, Error> {
        let policy = match self {
            PolicySpec::State => DelayPolicy::Keep,
            PolicySpec::Qssa0 => DelayPolicy::Constant(sys.delays.keys().map(|k| (k.clone(), 0.0)).collect()),
            PolicySpec::Min => DelayPolicy::Min,
            PolicySpec::Mean => DelayPolicy::Mean,
            PolicySpec::Max => DelayPolicy::Max,
            PolicySpec::Const(m) => DelayPolicy::Constant(
                m.iter()
                    .filter(|(k, _)| !lenient || sys.delays.contains_key(*k))
                    .map(|(k, v)| (k.clone(), *v))
                    .collect(),
            ),
        };
        if !sys.has_delays() {
            return Ok(sys.clone());
        }
        Ok(apply_delay_policy(sys, &policy, reference, window)?)
    }
}

pub fn parse_window(s: &str) -> anyhow::Result<(f64, f64)> {
    let (a, b) = s.split_once(':').context("stats window must look like a:b")?;
    let a: f64 = a.trim().parse().context("bad window start")?;
    let b: f64 = b.trim().parse().context("bad window end")?;
    if !(a < b) {
        bail!("stats window start must be below its end");
    }
    Ok((a, b))
}

/// Time grid and integrator for one run.
#[derive(Debug, Clone, Copy)]
pub struct Span {
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
}

impl Span {
    pub fn from(bundle: &ModelBundle, common: &Common) -> Self {
        Span {
            t0: common.t0.unwrap_or(bundle.t0),
            t_end: common.t_end.unwrap_or(bundle.t_end),
            dt: common.dt.unwrap_or(bundle.dt),
        }
    }

    pub fn run(&self, v: &Variant, method: Option<Method>) -> Result<Trajectory, Error> {
        Ok(simulate(&v.system, self.t0, self.t_end, self.dt, method.unwrap_or(v.method))?)
    }
}
