//! Acceptance checks A1-A11. Prints one line per criterion.
//!
//! Failing criteria are reported but do not fail the process unless
//! `ACCEPTANCE_STRICT=1` is set.

use std::process::ExitCode;
use std::time::Instant;

use indexmap::IndexMap;

use dqssa::analysis::{
    convergence_order, dqssa_error_bound, l2_relative_error, one_node_quadrature_error, period_amplitude,
    ErrorBoundInputs, DEFAULT_TAIL,
};
use dqssa::expr::parse_expr;
use dqssa::models::{bundle_by_name, Hes1Params, ModelBundle};
use dqssa::network::{conservation_laws, mass_action_odes, parse_network};
use dqssa::reduction::{
    apply_delay_policy, delay_statistics_along, dqssa_reduce, first_order_correction, DelayPolicy,
};
use dqssa::solver::{simulate, Method, Trajectory};
use dqssa::{Delay, DelaySpec, DynamicalSystem};

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

fn run(bundle: &ModelBundle, variant: &str, t_end: f64) -> Result<Trajectory, Box<dyn std::error::Error>> {
    let v = bundle.variant(variant)?;
    Ok(simulate(&v.system, bundle.t0, t_end, bundle.dt, v.method)?)
}

fn run_system(bundle: &ModelBundle, sys: &DynamicalSystem) -> Result<Trajectory, Box<dyn std::error::Error>> {
    Ok(simulate(sys, bundle.t0, bundle.t_end, bundle.dt, Method::Euler)?)
}

fn with_delays(sys: &DynamicalSystem, values: &[(&str, f64)]) -> Result<DynamicalSystem, Box<dyn std::error::Error>> {
    let map: IndexMap<String, f64> = values.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    Ok(apply_delay_policy(sys, &DelayPolicy::Constant(map), None, None)?)
}

const VARS: [&str; 3] = ["D", "m", "p"];

/// QSSA and D-QSSA relative errors for D, m, p.
fn table1_errors(bundle: &ModelBundle, t_end: f64) -> Result<[[f64; 3]; 2], Box<dyn std::error::Error>> {
    let full = run(bundle, "full", t_end)?;
    let mut out = [[0.0; 3]; 2];
    for (row, variant) in ["qssa", "dqssa"].iter().enumerate() {
        let tr = run(bundle, variant, t_end)?;
        for (col, var) in VARS.iter().enumerate() {
            out[row][col] = l2_relative_error(&full, &tr, var, None)?;
        }
    }
    Ok(out)
}

fn table1_check(errs: [[f64; 3]; 2], target: [[f64; 3]; 2]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (col, var) in VARS.iter().enumerate() {
        let (q, d) = (errs[0][col], errs[1][col]);
        let within = (0..2).all(|r| (errs[r][col] / target[r][col] - 1.0).abs() <= 0.4);
        let ratio = d < q / 3.0;
        ok &= within && ratio;
        parts.push(format!(
            "{var}: qssa {:.3} (target {}) dqssa {:.3} (target {}){}{}",
            q,
            target[0][col],
            d,
            target[1][col],
            if within { "" } else { " [outside 40%]" },
            if ratio { "" } else { " [ratio rule fails]" },
        ));
    }
    (ok, parts.join("; "))
}

fn a1() -> Outcome {
    let bundle = bundle_by_name("hes1")?;
    let errs = table1_errors(&bundle, bundle.t_end)?;
    Ok(table1_check(errs, [[0.32, 0.18, 0.13], [0.12, 0.036, 0.024]]))
}

fn a2() -> Outcome {
    let bundle = bundle_by_name("hes1-set2")?;
    let errs = table1_errors(&bundle, bundle.t_end)?;
    Ok(table1_check(errs, [[0.77, 0.65, 0.65], [0.28, 0.12, 0.12]]))
}

fn a3() -> Outcome {
    let bundle = bundle_by_name("hes1")?;
    let base = table1_errors(&bundle, bundle.t_end)?;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for t in [400.0, 600.0] {
        let e = table1_errors(&bundle, t)?;
        let w = (0..2)
            .flat_map(|r| (0..3).map(move |c| (r, c)))
            .map(|(r, c)| (e[r][c] / base[r][c] - 1.0).abs())
            .fold(0.0, f64::max);
        worst = worst.max(w);
        parts.push(format!("T={t}: max change {:.1}%", 100.0 * w));
    }
    Ok((worst < 0.15, parts.join(", ")))
}

fn round_sig(x: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

fn a4() -> Outcome {
    let params = Hes1Params::default();
    let inputs = ErrorBoundInputs {
        eps: params.gamma_m1,
        m: params.gamma_m1 + params.gamma * 300f64.powi(5),
        sup_f: params.gamma_m1,
        sup_f1: 0.0,
        sup_f2: 0.0,
        x0: 1.0,
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for t in [0.0f64, 50.0, 200.0] {
        let b = dqssa_error_bound(&inputs, t)?.certified;
        let expected = 1.99 + 2.0 * (-0.02 * t).exp();
        let same = round_sig(b, 3) == round_sig(expected, 3);
        ok &= same;
        parts.push(format!("bound({t}) = {b:.4} vs {expected:.4}"));
    }

    let bundle = bundle_by_name("hes1")?;
    let full = run(&bundle, "full", bundle.t_end)?;
    let dq = run(&bundle, "dqssa", bundle.t_end)?;
    let (d, dt) = (full.column("D").unwrap(), dq.column("D").unwrap());
    let mut max_all: f64 = 0.0;
    let mut max_late: f64 = 0.0;
    let mut exceeds = 0;
    for (k, &t) in full.times.iter().enumerate() {
        let e = (d[k] - dt[k]).abs();
        max_all = max_all.max(e);
        if t > 50.0 {
            max_late = max_late.max(e);
        }
        if e > dqssa_error_bound(&inputs, t)?.certified {
            exceeds += 1;
        }
    }
    ok &= exceeds == 0 && max_all <= 0.32 * 1.1 && max_late < 0.05 * 1.5;
    parts.push(format!(
        "max|D-D~| = {max_all:.3} (limit 0.352), t>50: {max_late:.3} (limit 0.075), points above bound: {exceeds}"
    ));
    Ok((ok, parts.join("; ")))
}

fn a5() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, tau) in [("hes1", 6.0), ("hes1-set2", 0.89)] {
        let bundle = bundle_by_name(name)?;
        let full = run(&bundle, "full", bundle.t_end)?;
        let sys = with_delays(&bundle.variant("dqssa")?.system, &[("tau1", tau)])?;
        let tr = run_system(&bundle, &sys)?;
        let e = l2_relative_error(&full, &tr, "p", None)?;
        ok &= e <= 0.03;
        parts.push(format!("{name} tau={tau}: p error {e:.4}"));
    }
    Ok((ok, parts.join(", ")))
}

fn a6() -> Outcome {
    let bundle = bundle_by_name("hes1")?;
    let dq = run(&bundle, "dqssa", bundle.t_end)?;
    let ab = run(&bundle, "dqssa-ablated", bundle.t_end)?;
    let e = l2_relative_error(&dq, &ab, "p", None)?;
    Ok((e < 0.01, format!("p change {:.2e}", e)))
}

fn a7() -> Outcome {
    let bundle = bundle_by_name("cellcycle")?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (variant, want) in [("full", true), ("qssa-P", false), ("dqssa-P", true), ("dqssa-PA", true)] {
        let s = period_amplitude(&run(&bundle, variant, bundle.t_end)?, "C", DEFAULT_TAIL)?;
        ok &= s.is_oscillatory() == want;
        parts.push(format!(
            "{variant}: {}",
            if s.is_oscillatory() { "oscillatory" } else { "non-oscillatory" }
        ));
    }
    Ok((ok, parts.join(", ")))
}

fn a8() -> Outcome {
    let bundle = bundle_by_name("cellcycle")?;
    let full = run(&bundle, "full", bundle.t_end)?;
    let one = delay_statistics_along(&bundle.variant("dqssa-P")?.system, &full, None)?;
    let two = delay_statistics_along(&bundle.variant("dqssa-PA")?.system, &full, None)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, s, target) in [
        ("tau1", &one["tau1"], [0.37, 0.73, 1.00]),
        ("tau2", &two["tau2"], [0.32, 0.72, 1.00]),
    ] {
        let got = [s.min, s.mean, s.max];
        let good = got.iter().zip(target).all(|(g, p)| (g - p).abs() <= 0.05);
        ok &= good;
        parts.push(format!(
            "{label} = ({:.3}, {:.3}, {:.3}) vs ({}, {}, {}){}",
            got[0],
            got[1],
            got[2],
            target[0],
            target[1],
            target[2],
            if good { "" } else { " [outside 0.05]" }
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn a9() -> Outcome {
    let bundle = bundle_by_name("cellcycle")?;
    let full = run(&bundle, "full", bundle.t_end)?;
    let reference = period_amplitude(&full, "C", DEFAULT_TAIL)?;
    let rows: [(&str, &[(&str, f64)], [[f64; 2]; 5]); 2] = [
        (
            "dqssa-P",
            &[("tau1", 0.3)],
            [[42.0, 37.0], [10.0, 11.0], [42.0, 43.0], [59.0, 57.0], [0.5, 0.3]],
        ),
        (
            "dqssa-PA",
            &[("tau1", 0.3), ("tau2", 0.28)],
            [[57.0, 43.0], [10.0, 20.0], [60.0, 62.0], [88.0, 81.0], [0.3, 10.0]],
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (variant, ad_hoc, target) in rows {
        let base = &bundle.variant(variant)?.system;
        let systems = [
            base.clone(),
            apply_delay_policy(base, &DelayPolicy::Min, Some(&full), None)?,
            apply_delay_policy(base, &DelayPolicy::Mean, Some(&full), None)?,
            apply_delay_policy(base, &DelayPolicy::Max, Some(&full), None)?,
            with_delays(base, ad_hoc)?,
        ];
        let mut errs = [[f64::NAN; 2]; 5];
        for (i, sys) in systems.iter().enumerate() {
            let s = period_amplitude(&run_system(&bundle, sys)?, "C", DEFAULT_TAIL)?;
            if s.is_oscillatory() {
                errs[i] = [
                    100.0 * (s.period / reference.period - 1.0).abs(),
                    100.0 * (s.amplitude / reference.amplitude - 1.0).abs(),
                ];
            }
        }
        let close = (0..5).all(|i| (0..2).all(|j| (errs[i][j] - target[i][j]).abs() <= 15.0));
        let ordered = (0..2).all(|j| errs[4][j] < errs[1][j] && errs[1][j] < errs[2][j] && errs[2][j] < errs[3][j]);
        ok &= close && ordered;
        let cells: Vec<String> = errs.iter().map(|e| format!("{:.1}/{:.1}", e[0], e[1])).collect();
        parts.push(format!(
            "{variant} [state, min, mean, max, ad hoc] = [{}]{}{}",
            cells.join(", "),
            if close { "" } else { " [outside 15 points]" },
            if ordered { "" } else { " [ordering fails]" },
        ));
    }
    Ok((ok, parts.join("; ")))
}

/// `dx/dt = y^2 - x / tau`, `dy/dt = 1 - x - y`.
fn benchmark(tau: f64) -> DynamicalSystem {
    DynamicalSystem::new("benchmark")
        .with_equation("x", parse_expr("y^2 - x / tau").unwrap(), 0.0)
        .with_equation("y", parse_expr("1 - x - y").unwrap(), 0.5)
        .with_parameter("tau", tau)
}

fn a10() -> Outcome {
    let (t_end, dt) = (2.0, 1e-4);
    let mut deviation = Vec::new();
    let mut residual = Vec::new();
    for tau in [0.2, 0.1, 0.05, 0.025] {
        let sys = benchmark(tau);
        let dq = simulate(&dqssa_reduce(&sys, &["x"])?, 0.0, t_end, dt, Method::Euler)?;
        let foc = simulate(&first_order_correction(&sys, "x")?, 0.0, t_end, dt, Method::Euler)?;
        let (y1, y2) = (dq.column("y").unwrap(), foc.column("y").unwrap());
        let dev = y1.iter().zip(y2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let (x, y) = (foc.column("x").unwrap(), foc.column("y").unwrap());
        let res = (1..x.len() - 1)
            .map(|k| ((x[k + 1] - x[k - 1]) / (2.0 * dt) - (y[k] * y[k] - x[k] / tau)).abs())
            .fold(0.0, f64::max);
        deviation.push((tau, dev));
        residual.push((tau, res));
    }
    let s_dev = convergence_order(&deviation)?;
    let s_res = convergence_order(&residual)?;
    let ok = (s_dev - 3.0).abs() <= 0.3 && (s_res - 2.0).abs() <= 0.3;
    Ok((ok, format!("deviation slope {s_dev:.2} (3 +- 0.3), residual slope {s_res:.2} (2 +- 0.3)")))
}

fn a11() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();

    let bundle = bundle_by_name("hes1")?;
    let zero = with_delays(&bundle.variant("dqssa")?.system, &[("tau1", 0.0)])?;
    let a = simulate(&zero, 0.0, 100.0, bundle.dt, Method::Euler)?;
    let b = simulate(&bundle.variant("qssa")?.system, 0.0, 100.0, bundle.dt, Method::Euler)?;
    let diff = ["m", "p"]
        .iter()
        .flat_map(|v| a.column(v).unwrap().iter().zip(b.column(v).unwrap()).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    ok &= diff <= 1e-10;
    parts.push(format!("tau=0 vs qssa {diff:.1e}"));

    let mut worst_cons: f64 = 0.0;
    let mut most_negative: f64 = 0.0;
    let nets = [
        bundle.network.clone().unwrap(),
        parse_network("species: A, B, C\nreaction: A + B <-> C @ 2, 0.5\nreaction: C -> A + B @ 0.1\ninit: A=1, B=0.6, C=0")?,
    ];
    for net in &nets {
        let sys = mass_action_odes(net);
        let tr = simulate(&sys, 0.0, 200.0, 0.01, Method::Rk4)?;
        let cols: Vec<&[f64]> = net.species.iter().map(|s| tr.column(s).unwrap()).collect();
        for law in conservation_laws(net) {
            let row = |k: usize| law.evaluate(&cols.iter().map(|c| c[k]).collect::<Vec<_>>());
            let v0 = row(0);
            for k in 0..tr.len() {
                worst_cons = worst_cons.max((row(k) - v0).abs());
            }
        }
        for c in &cols {
            most_negative = c.iter().fold(most_negative, |m, &v| m.min(v));
        }
    }
    ok &= worst_cons <= 1e-8 && most_negative >= -1e-8;
    parts.push(format!("conservation drift {worst_cons:.1e}, min value {most_negative:.1e}"));

    // Q1: fit C on points where the decaying term is above round-off.
    let mut c_fit: f64 = 0.0;
    let mut q1 = true;
    for gc in [0.5f64, 1.0, 2.0] {
        for t in [5.0, 10.0, 20.0] {
            let err = one_node_quadrature_error(|s| 1.0 + 0.5 * s, gc, t, 20_000);
            let envelope = (1.0 + t) * (-gc * t).exp();
            if envelope > 1e-9 {
                c_fit = c_fit.max(err / envelope);
            }
            q1 &= err <= c_fit.max(1.0) * envelope + 1e-12 * (1.0 + t);
        }
    }
    ok &= q1 && c_fit.is_finite();
    parts.push(format!("Q1 C = {c_fit:.3}{}", if q1 { "" } else { " [violated]" }));

    let mut dde = DynamicalSystem::new("dde").with_equation("x", parse_expr("-x@d")?, 1.0);
    dde.delays.insert(
        "d".into(),
        Delay {
            spec: DelaySpec::Constant(1.0),
            origin: "x".into(),
        },
    );
    let mut pairs = Vec::new();
    for dt in [0.01, 0.005, 0.0025] {
        let tr = simulate(&dde, 0.0, 2.0, dt, Method::Euler)?;
        pairs.push((dt, (tr.last("x").unwrap() + 0.5).abs()));
    }
    let order = convergence_order(&pairs)?;
    ok &= (order - 1.0).abs() <= 0.2 && pairs[2].1 < 1e-2;
    parts.push(format!("DDE x(2) error {:.1e}, order {order:.2}", pairs[2].1));
    Ok((ok, parts.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("A1", a1),
        ("A2", a2),
        ("A3", a3),
        ("A4", a4),
        ("A5", a5),
        ("A6", a6),
        ("A7", a7),
        ("A8", a8),
        ("A9", a9),
        ("A10", a10),
        ("A11", a11),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let start = Instant::now();
        let (pass, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        println!(
            "{name:<4} {} ({:.1}s) {detail}",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        if !pass {
            failed.push(name);
        }
    }
    println!("acceptance: {}/11 passed", 11 - failed.len());
    if !failed.is_empty() {
        println!("failing: {}", failed.join(", "));
        if std::env::var("ACCEPTANCE_STRICT").as_deref() == Ok("1") {
            return ExitCode::FAILURE;
        }
    }
    ExitCode::SUCCESS
}
