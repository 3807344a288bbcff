#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dqssa::error::ReductionError;
use dqssa::Error;

mod commands;
mod setup;

/// Quasi-steady-state and delayed quasi-steady-state reduction of
/// reaction networks.
#[derive(Debug, Parser)]
#[command(name = "dqssa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one variant and write its trajectory.
    Simulate(Common),
    /// Print the reduced system for a fast set.
    Reduce {
        #[command(flatten)]
        common: Common,
        /// Reduction to perform.
        #[arg(long, default_value = "dqssa", value_parser = ["qssa", "dqssa", "foc"])]
        kind: String,
    },
    /// L2 relative errors of variants against the reference variant.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Variants to compare (default: all but the reference).
        #[arg(long)]
        against: Option<String>,
    },
    /// Evaluate the a priori D-QSSA error bound.
    Bound(commands::BoundArgs),
    /// Period and amplitude errors over a sweep of delay policies.
    Scan {
        #[command(flatten)]
        common: Common,
        /// Delay policy to include; repeatable (default: state, min, mean, max).
        #[arg(long = "policy")]
        policies: Vec<String>,
        /// Variable whose oscillation is measured (default: first state).
        #[arg(long)]
        var: Option<String>,
    },
    /// List built-in models or export one variant.
    #[command(subcommand)]
    Models(ModelsCommand),
}

#[derive(Debug, Subcommand)]
enum ModelsCommand {
    /// Built-in models and their variants.
    List,
    /// Print a variant in the text rendering (and the network, if any).
    Export { model: String, variant: String },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Built-in model name or path to a `.crn` network file.
    #[arg(long)]
    pub model: String,
    /// Variant of the model (default: the reference variant).
    #[arg(long)]
    pub variant: Option<String>,
    /// Comma-separated fast variables; variants are rebuilt from the reference.
    #[arg(long)]
    pub fast: Option<String>,
    #[arg(short = 'T', long = "t-end", allow_negative_numbers = true)]
    pub t_end: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub t0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    /// Integrator: euler, rk4 or sdirk2 (default: the variant's own).
    #[arg(long)]
    pub method: Option<dqssa::solver::Method>,
    /// state, qssa0, min, mean, max or const:<id>=<value>,...
    #[arg(long, default_value = "state")]
    pub delay_policy: String,
    /// Substitute the quasi-steady state before delaying.
    #[arg(long)]
    pub ablate_last_term: bool,
    /// Time window a:b for delay statistics.
    #[arg(long)]
    pub stats_window: Option<String>,
    /// Output directory.
    #[arg(short = 'o', long = "out")]
    pub out: Option<std::path::PathBuf>,
}

/// Bad command-line input that clap cannot catch.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(e: impl fmt::Display) -> anyhow::Error {
    Usage(format!("{e:#}")).into()
}

fn kind(e: &Error) -> &'static str {
    match e {
        Error::Expr(_) => "expr",
        Error::Network(_) => "network",
        Error::System(_) => "system",
        Error::Reduction(_) => "reduction",
        Error::Solver(_) => "solver",
        Error::Analysis(_) => "analysis",
        Error::Eval(_) => "eval",
        Error::Invalid(_) => "invalid",
    }
}

fn violations(e: &Error) -> Option<serde_json::Value> {
    let (label, v) = match e {
        Error::Reduction(ReductionError::A1(v)) => ("A1", v),
        Error::Reduction(ReductionError::A3(v)) => ("A3", v),
        _ => return None,
    };
    let items: Vec<_> = v
        .iter()
        .map(|x| {
            serde_json::json!({
                "assumption": label,
                "reaction": x.reaction + 1,
                "species": x.species,
                "detail": x.detail,
            })
        })
        .collect();
    Some(items.into())
}

fn report(err: &anyhow::Error) -> u8 {
    let (code, kind, extra) = match err.downcast_ref::<Error>() {
        Some(e) => (if e.is_validation() { 2 } else { 1 }, kind(e), violations(e)),
        None if err.downcast_ref::<Usage>().is_some() => (2, "usage", None),
        None => (1, "internal", None),
    };
    let mut diag = serde_json::json!({
        "schema": 1,
        "status": "error",
        "exit_code": code,
        "kind": kind,
        "message": format!("{err:#}"),
    });
    if let Some(v) = extra {
        diag["violations"] = v;
    }
    eprintln!("{diag}");
    code
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => return ExitCode::from(report(&usage(e.render().to_string().trim()))),
    };
    let result = match cli.command {
        Command::Simulate(c) => commands::simulate(&c),
        Command::Reduce { common, kind } => commands::reduce(&common, &kind),
        Command::Compare { common, against } => commands::compare(&common, against.as_deref()),
        Command::Bound(args) => commands::bound(&args),
        Command::Scan { common, policies, var } => commands::scan(&common, &policies, var.as_deref()),
        Command::Models(ModelsCommand::List) => commands::models_list(),
        Command::Models(ModelsCommand::Export { model, variant }) => commands::models_export(&model, &variant),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => ExitCode::from(report(&e)),
    }
}
