use std::fmt;

use thiserror::Error;

/// A single broken invariant found while validating a scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// A variance that must be strictly positive is not.
    NonpositiveVariance { field: String, value: f64 },
    /// A length that must match the sensor count does not.
    DimensionMismatch {
        field: String,
        expected: usize,
        got: usize,
    },
    /// NaN or infinite input.
    NonFinite { field: String },
    /// A channel magnitude below zero.
    NegativeMagnitude { index: usize, value: f64 },
    /// The sensor list is empty.
    NoSensors,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonpositiveVariance { field, value } => {
                write!(f, "nonpositive variance: {field} = {value}")
            }
            Violation::DimensionMismatch {
                field,
                expected,
                got,
            } => write!(
                f,
                "dimension mismatch: {field} has {got} entries, expected {expected}"
            ),
            Violation::NonFinite { field } => write!(f, "non-finite value in {field}"),
            Violation::NegativeMagnitude { index, value } => {
                write!(f, "negative channel magnitude at index {index}: {value}")
            }
            Violation::NoSensors => write!(f, "sensor set is empty"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unstable system: |a| = {0} must be < 1")]
    Unstable(f64),

    #[error("degenerate SNR: effective noise variance is zero")]
    DegenerateSnr,

    #[error("invalid scenario: {}", join(.0))]
    InvalidScenario(Vec<Violation>),

    #[error("domain error: {0}")]
    Domain(String),

    /// `margin` is `sum(rho^2/tau) - x/y` (or the per-step analogue); it is `<= 0`.
    #[error("infeasible problem: SNR margin {margin:.6e} (required {required:.6e}, available {available:.6e})")]
    Infeasible {
        margin: f64,
        required: f64,
        available: f64,
    },

    #[error("circularly symmetric fading unusable: sensor {0} has zero channel mean")]
    ZeroMeanChannel(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("oracle did not converge: {0}")]
    Oracle(String),
}

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
