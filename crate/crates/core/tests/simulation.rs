use dqssa::analysis::{convergence_order, period_amplitude, DEFAULT_TAIL};
use dqssa::expr::parse_expr;
use dqssa::models::{bundle_by_name, MODEL_NAMES};
use dqssa::network::{build_matrices, conservation_laws, mass_action_odes, parse_network};
use dqssa::reduction::{apply_delay_policy, dqssa_reduce, DelayPolicy};
use dqssa::solver::{simulate, Method};
use dqssa::{Delay, DelaySpec, DynamicalSystem, Error};
use indexmap::IndexMap;
use proptest::prelude::*;

fn reaction() -> impl Strategy<Value = String> {
    let side = prop::collection::vec((0usize..3, 1u32..3), 0..3).prop_map(|terms| {
        let names = ["A", "B", "C"];
        let mut seen = [0u32; 3];
        for (s, c) in terms {
            seen[s] = seen[s].max(c);
        }
        let parts: Vec<String> = (0..3)
            .filter(|&i| seen[i] > 0)
            .map(|i| if seen[i] == 1 { names[i].to_string() } else { format!("{} {}", seen[i], names[i]) })
            .collect();
        if parts.is_empty() { "0".to_string() } else { parts.join(" + ") }
    });
    (side.clone(), side, 0.05f64..2.0).prop_map(|(l, r, k)| format!("reaction: {l} -> {r} @ {k:.3}"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mass_action_stays_nonnegative_and_conserves(rs in prop::collection::vec(reaction(), 1..4),
                                                    init in prop::array::uniform3(0.0f64..2.0)) {
        let text = format!(
            "species: A, B, C\n{}\ninit: A={:.3}, B={:.3}, C={:.3}",
            rs.join("\n"), init[0], init[1], init[2]
        );
        let net = parse_network(&text).unwrap();
        let sys = mass_action_odes(&net);
        let tr = simulate(&sys, 0.0, 5.0, 1e-3, Method::Rk4);
        // Autocatalytic draws may blow up; those are skipped.
        prop_assume!(tr.is_ok());
        let tr = tr.unwrap();
        prop_assume!(["A", "B", "C"].iter().all(|s| tr.column(s).unwrap().iter().all(|v| v.abs() < 1e3)));
        for s in ["A", "B", "C"] {
            let min = tr.column(s).unwrap().iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert!(min >= -1e-8, "{s} went to {min}\n{text}");
        }
        let data = build_matrices(&net);
        for law in conservation_laws(&net) {
            let row = |k: usize| law.evaluate(&["A", "B", "C"].map(|s| tr.column(s).unwrap()[k]));
            let scale = 1.0 + row(0).abs();
            for k in (0..tr.len()).step_by(50) {
                prop_assert!((row(k) - row(0)).abs() <= 1e-8 * scale, "{law} drifts\n{text}");
            }
            for r in 0..data.m.ncols() {
                let dot: i64 = (0..3).map(|i| law.coefficient(["A", "B", "C"][i]) * data.m[(i, r)]).sum();
                prop_assert_eq!(dot, 0);
            }
        }
    }
}

fn lag_system(rhs: &str, lag: f64) -> DynamicalSystem {
    let mut sys = DynamicalSystem::new("lag").with_equation("x", parse_expr(rhs).unwrap(), 1.0);
    sys.delays.insert(
        "d".into(),
        Delay {
            spec: DelaySpec::Constant(lag),
            origin: "x".into(),
        },
    );
    sys
}

#[test]
fn dde_method_of_steps_converges_first_order() {
    // x(t) = 1 - t + (t - 1)^2 / 2 on [1, 2] and
    // 1 - t + (t - 1)^2 / 2 - (t - 2)^3 / 6 on [2, 3].
    let exact = |t: f64| {
        let mut v = 1.0 - t;
        if t > 1.0 {
            v += (t - 1.0).powi(2) / 2.0;
        }
        if t > 2.0 {
            v -= (t - 2.0).powi(3) / 6.0;
        }
        v
    };
    let sys = lag_system("-x@d", 1.0);
    let mut pairs = Vec::new();
    for dt in [0.02, 0.01, 0.005, 0.0025] {
        let tr = simulate(&sys, 0.0, 3.0, dt, Method::Euler).unwrap();
        let err = tr
            .times
            .iter()
            .zip(tr.column("x").unwrap())
            .map(|(&t, &x)| (x - exact(t)).abs())
            .fold(0.0, f64::max);
        pairs.push((dt, err));
    }
    let order = convergence_order(&pairs).unwrap();
    assert!((order - 1.0).abs() < 0.1, "{order} {pairs:?}");
}

#[test]
fn dde_requires_euler() {
    let sys = lag_system("-x@d", 1.0);
    let err = simulate(&sys, 0.0, 1.0, 0.01, Method::Rk4).unwrap_err();
    assert!(err.to_string().contains("rk4"));
}

#[test]
fn every_model_variant_runs_briefly() {
    for name in MODEL_NAMES {
        let bundle = bundle_by_name(name).unwrap();
        for (vname, v) in &bundle.variants {
            let tr = simulate(&v.system, bundle.t0, bundle.t0 + 2.0, bundle.dt, v.method)
                .unwrap_or_else(|e| panic!("{name}/{vname}: {e}"));
            assert!(tr.columns.iter().flatten().all(|x| x.is_finite()), "{name}/{vname}");
        }
    }
}

#[test]
fn unknown_model_and_variant_are_validation_errors() {
    let e = bundle_by_name("nope").unwrap_err();
    assert!(e.is_validation());
    let b = bundle_by_name("hes1").unwrap();
    let e = b.variant("nope").unwrap_err();
    assert!(matches!(e, Error::Invalid(_)));
    assert!(e.to_string().contains("dqssa"));
}

#[test]
fn hes1_dqssa_oscillates_like_the_full_model() {
    let b = bundle_by_name("hes1").unwrap();
    let full = simulate(&b.variant("full").unwrap().system, 0.0, b.t_end, b.dt, Method::Rk4).unwrap();
    let dq = simulate(&b.variant("dqssa").unwrap().system, 0.0, b.t_end, b.dt, Method::Euler).unwrap();
    let (a, c) = (
        period_amplitude(&full, "p", DEFAULT_TAIL).unwrap(),
        period_amplitude(&dq, "p", DEFAULT_TAIL).unwrap(),
    );
    assert!(a.is_oscillatory() && c.is_oscillatory());
    assert!((a.period / c.period - 1.0).abs() < 0.05, "{} {}", a.period, c.period);
}

#[test]
fn constant_delay_policy_matches_hand_built_dde() {
    let sys = DynamicalSystem::new("lin")
        .with_equation("x", parse_expr("y - 2 * x").unwrap(), 0.0)
        .with_equation("y", parse_expr("1 - x").unwrap(), 0.0);
    let red = dqssa_reduce(&sys, &["x"]).unwrap();
    let id = red.delays.keys().next().unwrap().clone();
    let fixed = apply_delay_policy(&red, &DelayPolicy::Constant(IndexMap::from([(id, 0.5)])), None, None).unwrap();
    let mut hand = DynamicalSystem::new("hand").with_equation("y", parse_expr("1 - y@d / 2").unwrap(), 0.0);
    hand.delays.insert(
        "d".into(),
        Delay {
            spec: DelaySpec::Constant(0.5),
            origin: "x".into(),
        },
    );
    let a = simulate(&fixed, 0.0, 5.0, 0.01, Method::Euler).unwrap();
    let b = simulate(&hand, 0.0, 5.0, 0.01, Method::Euler).unwrap();
    let diff = a
        .column("y")
        .unwrap()
        .iter()
        .zip(b.column("y").unwrap())
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);
    assert!(diff < 1e-12, "{diff}");
}
