use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use indexmap::IndexMap;
use rayon::prelude::*;
use serde::Serialize;

use dqssa::analysis::{
    dqssa_error_bound, empirical_bound_inputs, l2_relative_error, period_amplitude, ErrorBoundInputs, DEFAULT_TAIL,
};
use dqssa::models::{bundle_by_name, ModelBundle, Variant, MODEL_NAMES};
use dqssa::network::render_network;
use dqssa::reduction::{check_a2_sufficient, decompose_fast, A2Check};
use dqssa::solver::Trajectory;
use dqssa::{DelaySpec, Error};

use crate::setup::{build_variant, load_model, parse_list, parse_window, resolve_variant, PolicySpec, Span};
use crate::{usage, Common};

struct Run<'a> {
    common: &'a Common,
    bundle: ModelBundle,
    span: Span,
    window: Option<(f64, f64)>,
}

impl<'a> Run<'a> {
    fn new(common: &'a Common) -> anyhow::Result<Self> {
        let bundle = match load_model(&common.model) {
            Ok(b) => b,
            Err(e) if e.downcast_ref::<Error>().is_none() => return Err(usage(e)),
            Err(e) => return Err(e),
        };
        let span = Span::from(&bundle, common);
        let window = common.stats_window.as_deref().map(parse_window).transpose().map_err(usage)?;
        Ok(Run {
            common,
            bundle,
            span,
            window,
        })
    }

    fn policy(&self) -> anyhow::Result<PolicySpec> {
        PolicySpec::parse(&self.common.delay_policy).map_err(usage)
    }

    fn reference(&self) -> anyhow::Result<Trajectory> {
        let v = self.bundle.variant(&self.bundle.reference)?;
        Ok(self.span.run(v, None)?)
    }

    fn variant(&self, name: &str) -> anyhow::Result<Variant> {
        Ok(resolve_variant(&self.bundle, name, self.common)?)
    }

    fn out_dir(&self) -> anyhow::Result<Option<&Path>> {
        let Some(dir) = self.common.out.as_deref() else { return Ok(None) };
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Some(dir))
    }
}

fn write_file(dir: &Path, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> anyhow::Result<PathBuf> {
    let path = dir.join(name);
    let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    body(&mut w).and_then(|_| w.flush()).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn write_json(dir: &Path, value: &impl Serialize) -> anyhow::Result<PathBuf> {
    write_file(dir, "summary.json", |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

fn print_json(value: &impl Serialize) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct RunInfo {
    model: String,
    t0: f64,
    t_end: f64,
    dt: f64,
    delay_policy: String,
    stats_window: Option<(f64, f64)>,
}

impl RunInfo {
    fn new(ctx: &Run, policy: &PolicySpec) -> Self {
        RunInfo {
            model: ctx.bundle.name.clone(),
            t0: ctx.span.t0,
            t_end: ctx.span.t_end,
            dt: ctx.span.dt,
            delay_policy: policy.label(),
            stats_window: ctx.window,
        }
    }
}

/// Applies the delay policy, simulating the reference first when the policy
/// needs one.
fn with_policy(
    ctx: &Run,
    v: &Variant,
    policy: &PolicySpec,
    reference: Option<&Trajectory>,
    lenient: bool,
) -> anyhow::Result<Variant> {
    let owned;
    let reference = match reference {
        Some(r) => Some(r),
        None if policy.needs_reference() && v.system.has_delays() => {
            owned = ctx.reference()?;
            Some(&owned)
        }
        None => None,
    };
    let system = policy.apply(&v.system, reference, ctx.window, lenient)?;
    Ok(Variant { system, method: v.method })
}

pub fn simulate(common: &Common) -> anyhow::Result<()> {
    let ctx = Run::new(common)?;
    let name = common.variant.clone().unwrap_or_else(|| ctx.bundle.reference.clone());
    let v = with_policy(&ctx, &ctx.variant(&name)?, &ctx.policy()?, None, false)?;
    let traj = ctx.span.run(&v, common.method)?;
    match ctx.out_dir()? {
        None => traj.write_csv(&mut io::stdout().lock())?,
        Some(dir) => {
            let mut written = vec![write_file(dir, "trajectory.csv", |w| traj.write_csv(w))?];
            if !traj.delay_names.is_empty() {
                written.push(write_file(dir, "delays.csv", |w| traj.write_delays_csv(w))?);
            }
            for p in written {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

pub fn reduce(common: &Common, kind: &str) -> anyhow::Result<()> {
    let ctx = Run::new(common)?;
    let fast = match (&common.fast, &ctx.bundle.network) {
        (Some(f), _) => parse_list(f),
        (None, Some(net)) if !net.fast.is_empty() => net.fast.clone(),
        _ => return Err(usage("reduce needs --fast")),
    };
    let fast: Vec<&str> = fast.iter().map(String::as_str).collect();
    let kind = if kind == "dqssa" && common.ablate_last_term { "dqssa-ablated" } else { kind };
    let v = build_variant(&ctx.bundle, kind, &fast)?;
    let v = with_policy(&ctx, &v, &ctx.policy()?, None, false)?;

    let mut text = v.system.render();
    for (id, d) in &v.system.delays {
        if let DelaySpec::StateDependent { g } = &d.spec {
            let verdict = match check_a2_sufficient(&v.system.bind_parameters(g)) {
                A2Check::Satisfied => "g > 0 guaranteed (nonnegative polynomial)",
                A2Check::Inconclusive => "g > 0 not provable statically; checked during simulation",
            };
            text.push_str(&format!("A2 {id}: {verdict}\n"));
        }
    }
    print!("{text}");
    if let Some(dir) = ctx.out_dir()? {
        let p = write_file(dir, "reduced.txt", |w| w.write_all(text.as_bytes()))?;
        eprintln!("{}", p.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct CompareSummary {
    schema: u32,
    command: &'static str,
    #[serde(flatten)]
    run: RunInfo,
    reference: String,
    errors: IndexMap<String, IndexMap<String, f64>>,
}

pub fn compare(common: &Common, against: Option<&str>) -> anyhow::Result<()> {
    let ctx = Run::new(common)?;
    let policy = ctx.policy()?;
    let names: Vec<String> = match against {
        Some(list) => parse_list(list),
        None => ctx
            .bundle
            .variants
            .keys()
            .filter(|k| **k != ctx.bundle.reference)
            .cloned()
            .collect(),
    };
    let reference = ctx.reference()?;
    let ref_system = &ctx.bundle.variant(&ctx.bundle.reference)?.system;
    let vars: Vec<String> = ref_system.state_names().map(String::from).collect();
    let variants = names
        .iter()
        .map(|n| with_policy(&ctx, &ctx.variant(n)?, &policy, Some(&reference), true))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let errors = names
        .par_iter()
        .zip(&variants)
        .map(|(name, v)| -> anyhow::Result<_> {
            let tr = ctx.span.run(v, common.method)?;
            let mut errs = IndexMap::new();
            for var in vars.iter().filter(|x| tr.column(x).is_some()) {
                errs.insert(var.clone(), l2_relative_error(&reference, &tr, var, ctx.window)?);
            }
            Ok((name.clone(), errs))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let summary = CompareSummary {
        schema: 1,
        command: "compare",
        run: RunInfo::new(&ctx, &policy),
        reference: ctx.bundle.reference.clone(),
        errors: errors.into_iter().collect(),
    };
    print_json(&summary)?;
    if let Some(dir) = ctx.out_dir()? {
        write_json(dir, &summary)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    common: Common,
    /// Times at which to evaluate the bound.
    #[arg(long, default_value = "0,50,200")]
    at: String,
    /// Lower bound of g; with this flag the bound is evaluated from the
    /// given inputs instead of a simulation.
    #[arg(long)]
    eps: Option<f64>,
    /// Upper bound of g.
    #[arg(long)]
    m_max: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    sup_f: f64,
    #[arg(long, default_value_t = 0.0)]
    sup_f1: f64,
    #[arg(long, default_value_t = 0.0)]
    sup_f2: f64,
    #[arg(long, default_value_t = 0.0)]
    x0: f64,
}

#[derive(Serialize)]
struct BoundPoint {
    t: f64,
    certified: f64,
    proof_variant: f64,
}

#[derive(Serialize)]
struct Inputs {
    eps: f64,
    m: f64,
    sup_f: f64,
    sup_f1: f64,
    sup_f2: f64,
    x0: f64,
}

impl From<ErrorBoundInputs> for Inputs {
    fn from(i: ErrorBoundInputs) -> Self {
        Inputs {
            eps: i.eps,
            m: i.m,
            sup_f: i.sup_f,
            sup_f1: i.sup_f1,
            sup_f2: i.sup_f2,
            x0: i.x0,
        }
    }
}

#[derive(Serialize)]
struct FastBound {
    var: String,
    delay: String,
    inputs: Inputs,
    bound: Vec<BoundPoint>,
    measured_max: Option<f64>,
    points_above_bound: Option<usize>,
}

#[derive(Serialize)]
struct BoundSummary {
    schema: u32,
    command: &'static str,
    source: &'static str,
    model: Option<String>,
    variant: Option<String>,
    results: Vec<FastBound>,
}

fn bound_points(inputs: &ErrorBoundInputs, at: &[f64]) -> anyhow::Result<Vec<BoundPoint>> {
    at.iter()
        .map(|&t| {
            let b = dqssa_error_bound(inputs, t).map_err(Error::from)?;
            Ok(BoundPoint {
                t,
                certified: b.certified,
                proof_variant: b.proof_variant,
            })
        })
        .collect()
}

pub fn bound(args: &BoundArgs) -> anyhow::Result<()> {
    let at = parse_list(&args.at)
        .iter()
        .map(|s| s.parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| usage(format!("bad --at list: {e}")))?;
    let summary = if let Some(eps) = args.eps {
        let inputs = ErrorBoundInputs {
            eps,
            m: args.m_max.unwrap_or(eps),
            sup_f: args.sup_f,
            sup_f1: args.sup_f1,
            sup_f2: args.sup_f2,
            x0: args.x0,
        };
        BoundSummary {
            schema: 1,
            command: "bound",
            source: "explicit",
            model: None,
            variant: None,
            results: vec![FastBound {
                var: String::new(),
                delay: String::new(),
                inputs: inputs.into(),
                bound: bound_points(&inputs, &at)?,
                measured_max: None,
                points_above_bound: None,
            }],
        }
    } else {
        empirical_bound(&args.common, &at)?
    };
    print_json(&summary)?;
    if args.common.out.is_some() {
        let ctx_dir = args.common.out.as_deref().unwrap();
        fs::create_dir_all(ctx_dir)?;
        write_json(ctx_dir, &summary)?;
    }
    Ok(())
}

/// Bound inputs estimated along the reference trajectory for every
/// state-dependent delay of the chosen variant, and the observed error of
/// the reduced fast variable.
fn empirical_bound(common: &Common, at: &[f64]) -> anyhow::Result<BoundSummary> {
    let ctx = Run::new(common)?;
    let name = common.variant.clone().unwrap_or_else(|| "dqssa".into());
    let v = ctx.variant(&name)?;
    let reference = ctx.reference()?;
    let ref_system = &ctx.bundle.variant(&ctx.bundle.reference)?.system;
    let reduced = ctx.span.run(&v, common.method)?;
    let mut results = Vec::new();
    for (id, d) in &v.system.delays {
        if !matches!(d.spec, DelaySpec::StateDependent { .. }) || !ref_system.is_state(&d.origin) {
            continue;
        }
        let lf = decompose_fast(ref_system, &d.origin)?;
        let (f, g) = (ref_system.bind_parameters(&lf.f), ref_system.bind_parameters(&lf.g));
        let x0 = ref_system.initial.get(&d.origin).copied().unwrap_or(0.0);
        let inputs = empirical_bound_inputs(&reference, &f, &g, x0).map_err(Error::from)?;
        let mut measured = None;
        let mut above = None;
        if let (Some(x), Some(_)) = (reference.column(&d.origin), reduced.column(&d.origin)) {
            let mut worst: f64 = 0.0;
            let mut count = 0;
            for (k, &t) in reference.times.iter().enumerate() {
                let e = (x[k] - reduced.value_at(&d.origin, t).unwrap()).abs();
                worst = worst.max(e);
                if e > dqssa_error_bound(&inputs, t - reference.t0).map_err(Error::from)?.certified {
                    count += 1;
                }
            }
            measured = Some(worst);
            above = Some(count);
        }
        results.push(FastBound {
            var: d.origin.clone(),
            delay: id.clone(),
            inputs: inputs.into(),
            bound: bound_points(&inputs, at)?,
            measured_max: measured,
            points_above_bound: above,
        });
    }
    if results.is_empty() {
        return Err(Error::Invalid(format!("variant `{name}` has no state-dependent delay of a reference state")).into());
    }
    Ok(BoundSummary {
        schema: 1,
        command: "bound",
        source: "simulation",
        model: Some(ctx.bundle.name.clone()),
        variant: Some(name),
        results,
    })
}

#[derive(Serialize)]
struct ScanCell {
    policy: String,
    delays: IndexMap<String, f64>,
    oscillatory: bool,
    period: Option<f64>,
    amplitude: Option<f64>,
    period_error: Option<f64>,
    amplitude_error: Option<f64>,
}

#[derive(Serialize)]
struct ScanSummary {
    schema: u32,
    command: &'static str,
    #[serde(flatten)]
    run: RunInfo,
    var: String,
    reference_period: Option<f64>,
    reference_amplitude: Option<f64>,
    grid: IndexMap<String, Vec<ScanCell>>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn scan(common: &Common, policies: &[String], var: Option<&str>) -> anyhow::Result<()> {
    let ctx = Run::new(common)?;
    let policies: Vec<PolicySpec> = if policies.is_empty() {
        ["state", "min", "mean", "max"].iter().map(|p| PolicySpec::parse(p)).collect::<Result<_, _>>()
    } else {
        policies.iter().map(|p| PolicySpec::parse(p)).collect::<Result<_, _>>()
    }
    .map_err(usage)?;
    let names: Vec<String> = match &common.variant {
        Some(list) => parse_list(list),
        None => ctx
            .bundle
            .variants
            .iter()
            .filter(|(_, v)| v.system.has_delays() && v.system.delays.values().any(|d| matches!(d.spec, DelaySpec::StateDependent { .. })))
            .map(|(k, _)| k.clone())
            .collect(),
    };
    let ref_system = &ctx.bundle.variant(&ctx.bundle.reference)?.system;
    let var = var
        .map(String::from)
        .or_else(|| ref_system.state_names().next().map(String::from))
        .ok_or_else(|| usage("reference system has no states"))?;
    let reference = ctx.reference()?;
    let base = period_amplitude(&reference, &var, DEFAULT_TAIL).map_err(Error::from)?;

    let mut jobs = Vec::new();
    for name in &names {
        let v = ctx.variant(name)?;
        for p in &policies {
            jobs.push((name.clone(), p.label(), with_policy(&ctx, &v, p, Some(&reference), true)?));
        }
    }
    let cells = jobs
        .par_iter()
        .map(|(name, label, v)| -> anyhow::Result<_> {
            let tr = ctx.span.run(v, common.method)?;
            let s = period_amplitude(&tr, &var, DEFAULT_TAIL).map_err(Error::from)?;
            let rel = |a: f64, b: f64| finite(100.0 * (a / b - 1.0).abs());
            let delays = v
                .system
                .delays
                .iter()
                .filter_map(|(id, d)| match d.spec {
                    DelaySpec::Constant(c) => Some((id.clone(), c)),
                    _ => None,
                })
                .collect();
            Ok((
                name.clone(),
                ScanCell {
                    policy: label.clone(),
                    delays,
                    oscillatory: s.is_oscillatory(),
                    period: finite(s.period),
                    amplitude: finite(s.amplitude),
                    period_error: rel(s.period, base.period),
                    amplitude_error: rel(s.amplitude, base.amplitude),
                },
            ))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut grid: IndexMap<String, Vec<ScanCell>> = names.iter().map(|n| (n.clone(), Vec::new())).collect();
    for (name, cell) in cells {
        grid[&name].push(cell);
    }
    let summary = ScanSummary {
        schema: 1,
        command: "scan",
        run: RunInfo::new(&ctx, &PolicySpec::State),
        var,
        reference_period: finite(base.period),
        reference_amplitude: finite(base.amplitude),
        grid,
    };
    print_json(&summary)?;
    if let Some(dir) = ctx.out_dir()? {
        write_json(dir, &summary)?;
    }
    Ok(())
}

pub fn models_list() -> anyhow::Result<()> {
    for name in MODEL_NAMES {
        let b = bundle_by_name(name)?;
        let variants: Vec<&str> = b.variants.keys().map(String::as_str).collect();
        println!(
            "{name}: T={} dt={} reference={} variants={}",
            b.t_end,
            b.dt,
            b.reference,
            variants.join(",")
        );
    }
    Ok(())
}

pub fn models_export(model: &str, variant: &str) -> anyhow::Result<()> {
    let b = load_model(model)?;
    let v = b.variant(variant)?;
    if variant == b.reference {
        if let Some(net) = &b.network {
            println!("# network");
            print!("{}", render_network(net));
            println!("# {variant} ({})", v.method);
        }
    }
    print!("{}", v.system.render());
    Ok(())
}
