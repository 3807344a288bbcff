use thiserror::Error;

use crate::expr::EvalError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("right-hand side is not affine in `{var}`: offending monomial `{monomial}`")]
    Nonlinear { var: String, monomial: String },
    #[error("`{var}` occurs in the denominator `{denominator}`")]
    VariableInDenominator { var: String, denominator: String },
    #[error("substitution into `{var}@{delay}` would nest delays")]
    NestedDelay { var: String, delay: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("line {line}, column {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("line {line}: species `{name}` declared twice")]
    DuplicateSpecies { line: usize, name: String },
    #[error("line {line}: unknown species `{name}`")]
    UnknownSpecies { line: usize, name: String },
    #[error("line {line}: rate must be positive, got {value}")]
    NonpositiveRate { line: usize, value: f64 },
    #[error("line {line}: initial value of `{name}` must be nonnegative, got {value}")]
    NegativeInitial { line: usize, name: String, value: f64 },
    #[error("conservation law has zero coefficient for `{0}`")]
    ZeroCoefficient(String),
    #[error("scaling for `{var}` must be positive, got {value}")]
    NonpositiveScaling { var: String, value: f64 },
    #[error("`{0}` is not a state variable")]
    NotAState(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("`{name}` referenced in {context} is not a state, algebraic variable or parameter")]
    UnknownVariable { name: String, context: String },
    #[error("delay `{delay}` referenced in {context} is not declared")]
    UnknownDelay { delay: String, context: String },
    #[error("`{0}` is defined more than once")]
    Duplicate(String),
    #[error("cyclic dependency among algebraic definitions and delays: {0}")]
    Cycle(String),
    #[error("constant delay `{delay}` must be nonnegative, got {value}")]
    NegativeDelay { delay: String, value: f64 },
    #[error("missing initial value for `{0}`")]
    MissingInitial(String),
}

/// One `(reaction, species)` entry that breaks an assumption.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub reaction: usize,
    pub species: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReductionError {
    #[error("assumption A1 violated: {}", describe(.0))]
    A1(Vec<Violation>),
    #[error("assumption A3 violated: {}", describe(.0))]
    A3(Vec<Violation>),
    #[error("fast equation for `{var}` depends on fast variable `{other}` (assumption A3)")]
    FastCoupling { var: String, other: String },
    #[error("coefficient g of `{0}` is identically zero (assumption A2)")]
    ZeroG(String),
    #[error("`{0}` is not a state variable of the system")]
    NotAState(String),
    #[error("fast set must be a nonempty proper subset of the state variables")]
    InvalidFastSet,
    #[error("first-order correction needs a constant g for `{var}`, got `{g}`")]
    NonConstantG { var: String, g: String },
    #[error("delay policy `{0}` needs a reference trajectory")]
    MissingReference(String),
    #[error("delay `{delay}` would be {value}; delays must be positive")]
    NonpositiveDelay { delay: String, value: f64 },
    #[error("unknown delay id `{0}`")]
    UnknownDelay(String),
    #[error("statistics window ({0}, {1}) contains no grid points")]
    EmptyWindow(f64, f64),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<ReductionError>,
    },
    #[error("decomposition of `{var}` failed: {source}")]
    Decompose {
        var: String,
        #[source]
        source: ExprError,
    },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Solver(#[from] Box<SolverError>),
}

fn describe(v: &[Violation]) -> String {
    v.iter()
        .map(|x| format!("reaction {} / {}: {}", x.reaction + 1, x.species, x.detail))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("assumption A2 violated: g of delay `{delay}` (fast variable `{var}`) is {value} at t = {time}")]
    A2Violation {
        delay: String,
        var: String,
        time: f64,
        value: f64,
    },
    #[error("non-finite value of `{var}` at step {step} (t = {time})")]
    NonFinite { var: String, step: usize, time: f64 },
    #[error("evaluation failed at t = {time}: {source}")]
    Eval {
        time: f64,
        #[source]
        source: EvalError,
    },
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("time span must satisfy t_end > t0, got ({0}, {1})")]
    InvalidSpan(f64, f64),
    #[error("method {0} cannot integrate systems with delays; use the delay integrator")]
    DelaysNotSupported(&'static str),
    #[error("Newton iteration did not converge at t = {0}")]
    Newton(f64),
    #[error("variable `{0}` missing from reference trajectory")]
    MissingColumn(String),
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("variable `{0}` not found in trajectory")]
    UnknownVariable(String),
    #[error("reference has zero norm on the window")]
    ZeroReference,
    #[error("window ({0}, {1}) is empty or outside the trajectories")]
    BadWindow(f64, f64),
    #[error("invalid bound inputs: {0}")]
    BoundInputs(String),
    #[error("g = {value} at t = {time}; delay statistics need g > 0")]
    NonpositiveG { time: f64, value: f64 },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("all abscissae are identical")]
    Degenerate,
    #[error("nonpositive value in log-log fit")]
    NonpositiveData,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Any error raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    /// True for bad input and assumption failures, as opposed to numerical breakdown.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Solver(e) => matches!(
                e,
                SolverError::A2Violation { .. }
                    | SolverError::InvalidStep(_)
                    | SolverError::InvalidSpan(..)
                    | SolverError::DelaysNotSupported(_)
                    | SolverError::MissingColumn(_)
                    | SolverError::System(_)
            ),
            Error::Reduction(ReductionError::Solver(e)) => {
                matches!(**e, SolverError::A2Violation { .. })
            }
            Error::Analysis(e) => !matches!(e, AnalysisError::Eval(_)),
            Error::Eval(_) => false,
            _ => true,
        }
    }
}

impl From<SolverError> for ReductionError {
    fn from(e: SolverError) -> Self {
        ReductionError::Solver(Box::new(e))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
