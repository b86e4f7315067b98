//! Crate-wide error types.

use thiserror::Error;

/// Errors produced by solvers, operators, and the CLI layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument error: {0}")]
    Argument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported grid: {0}")]
    Grid(String),

    #[error("Newton failed at step {step}: residual {residual:.3e} after {iters} iterations")]
    NewtonFailure {
        step: usize,
        residual: f64,
        iters: usize,
    },

    #[error("NaN detected at step {step} ({context})")]
    Nan { step: usize, context: String },

    #[error("active-set cycling at step {step}: no fixed point after {iters} iterations")]
    ActiveSetCycle { step: usize, iters: usize },

    #[error("infeasible pin at step {step}, node {node}")]
    InfeasiblePin { step: usize, node: usize },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("optimization failed at iteration {iter}: {source}")]
    Optimization {
        iter: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration invalid:\n{}", format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("parse error at line {line}: {what}")]
    Parse { line: usize, what: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A named violation of one of the data assumptions checked by
/// `validate_config`. Each carries enough context to locate the offender.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Control bounds out of order (lower > upper) at the given node.
    A1Violation { where_: String },
    /// Potential polynomial malformed (non-finite coefficient).
    A2Violation { where_: String },
    /// Initial data outside [-1, 1] or trace-inconsistent.
    A3Violation { where_: String },
    /// Control bound sup-norms exceed the ambient radius R.
    A4Violation { where_: String },
    /// Terminal targets incompatible: surface target differs from the trace
    /// of the bulk target at the given node.
    A5Violation { where_: String },
    /// All cost weights vanish.
    WeightsAllZero,
    /// Structural problem (grid/time/schedule/mode) described in the message.
    Structural { what: String },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::A1Violation { where_ } => write!(f, "A1_violation: {where_}"),
            Violation::A2Violation { where_ } => write!(f, "A2_violation: {where_}"),
            Violation::A3Violation { where_ } => write!(f, "A3_violation: {where_}"),
            Violation::A4Violation { where_ } => write!(f, "A4_violation: {where_}"),
            Violation::A5Violation { where_ } => write!(f, "A5_violation: {where_}"),
            Violation::WeightsAllZero => write!(f, "weights all vanish"),
            Violation::Structural { what } => write!(f, "invalid: {what}"),
        }
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| format!("  - {x}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub type Result<T> = std::result::Result<T, Error>;
