use thiserror::Error;

/// Errors surfaced by model construction, operators and solvers.
///
/// The expression language has its own diagnostics in [`crate::dsl`]; parse
/// and evaluation failures are wrapped here when they cross module borders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("operands live on different models")]
    ModelMismatch,

    #[error("operation requires a model of dimension {expected}, got {got}")]
    DimensionUnsupported { expected: usize, got: usize },

    #[error("symbol carries no declared class (mu, rho, delta)")]
    MissingClassDeclaration,

    #[error("asymptotic sum requires strictly decreasing orders, got {0:?}")]
    NonDecreasingOrders(Vec<f64>),

    #[error("unknown builtin symbol `{0}`")]
    UnknownBuiltin(String),

    #[error("bad builtin parameter: {0}")]
    BadParameter(String),

    #[error("symbol is not elliptic on the model (certificate C = {certificate})")]
    NotElliptic { certificate: f64 },

    #[error("symbol vanishes on the grid at box index {box_idx}, grid index {grid_idx} (|value| = {magnitude:.3e})")]
    SymbolVanishesOnGrid {
        box_idx: usize,
        grid_idx: usize,
        magnitude: f64,
    },

    #[error("amplitude storage would need {needed} entries, budget is {budget}")]
    MemoryBudgetExceeded { needed: usize, budget: usize },

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("implicit step matrix I - dt*K is singular")]
    SingularStepMatrix,

    #[error("no Garding pair (C0 > 0, finite C1) certifies the form")]
    FormUnboundedBelow,

    #[error("symbol is not pointwise nonnegative: value {value} at box index {box_idx}, grid index {grid_idx}")]
    NotPointwiseNonnegative {
        box_idx: usize,
        grid_idx: usize,
        value: f64,
    },

    #[error("energy certificate failed at step {step}: |w|^2 = {energy} exceeds bound {bound}")]
    EnergyCertificateFailed { step: usize, energy: f64, bound: f64 },

    #[error("parse error: {0}")]
    Parse(#[from] crate::dsl::ParseError),

    #[error("evaluation error: {0}")]
    Eval(#[from] crate::dsl::EvalError),
}

pub type Result<T> = std::result::Result<T, Error>;
