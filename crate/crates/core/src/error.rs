//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, CoreError>;

/// Errors surfaced by the core computations.
///
/// Every variant carries enough context to identify the failing operation
/// without a backtrace; callers at the CLI boundary print these verbatim.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// Two operands have incompatible shapes for the named operation.
    ShapeMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    /// An operation produced a NaN or infinite entry.
    NonFinite { op: &'static str },
    /// A scalar (1x1) value was required.
    NotScalar {
        op: &'static str,
        shape: (usize, usize),
    },
    /// Parameter registered twice under the same name.
    DuplicateParam { name: String },
    /// Parameter name not present in the store.
    UnknownParam { name: String },
    /// The gradient map does not cover a trainable parameter.
    MissingGradient { name: String },
    /// A rate/fraction argument is outside its documented range.
    InvalidRate {
        what: &'static str,
        value: f64,
    },
    /// The requested number of masked view cells cannot be placed while
    /// keeping at least one view per sample.
    MaskQuotaUnreachable {
        requested: usize,
        max: usize,
        max_rate: f64,
    },
    /// A matrix that must contain only 0/1 entries does not.
    NonBinary { what: &'static str },
    /// A sample row of the view indicator has no available view.
    UncoveredSample { row: usize },
    /// An input collection that must be non-empty is empty.
    EmptyInput { what: &'static str },
    /// A configuration value violates its precondition.
    InvalidConfig { what: String },
    /// Synthetic label balancing failed after the retry budget.
    LabelBalanceExhausted { label: usize, retries: usize },
    /// Every sample/label was skipped as degenerate; no metric value exists.
    AllSkipped { what: &'static str },
    /// The loss became non-finite at a perturbed point during a finite
    /// difference probe.
    NonFiniteProbe {
        name: String,
        row: usize,
        col: usize,
    },
    /// An epoch observer requested that training abort.
    Aborted { reason: String },
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::ShapeMismatch { op, lhs, rhs } => write!(
                f,
                "{op}: shape mismatch between {}x{} and {}x{}",
                lhs.0, lhs.1, rhs.0, rhs.1
            ),
            CoreError::NonFinite { op } => {
                write!(f, "{op}: produced a non-finite value")
            }
            CoreError::NotScalar { op, shape } => write!(
                f,
                "{op}: expected a 1x1 scalar, got {}x{}",
                shape.0, shape.1
            ),
            CoreError::DuplicateParam { name } => {
                write!(f, "parameter '{name}' already registered")
            }
            CoreError::UnknownParam { name } => {
                write!(f, "unknown parameter '{name}'")
            }
            CoreError::MissingGradient { name } => {
                write!(f, "no gradient supplied for parameter '{name}'")
            }
            CoreError::InvalidRate { what, value } => {
                write!(f, "invalid {what}: {value}")
            }
            CoreError::MaskQuotaUnreachable {
                requested,
                max,
                max_rate,
            } => write!(
                f,
                "cannot disable {requested} view cells while keeping one view \
                 per sample (at most {max} cells, rate {max_rate})"
            ),
            CoreError::NonBinary { what } => {
                write!(f, "{what} must contain only 0/1 entries")
            }
            CoreError::UncoveredSample { row } => {
                write!(f, "sample {row} has no available view")
            }
            CoreError::EmptyInput { what } => write!(f, "{what} is empty"),
            CoreError::InvalidConfig { what } => write!(f, "{what}"),
            CoreError::LabelBalanceExhausted { label, retries } => write!(
                f,
                "label {label}: positive rate stayed outside [0.1, 0.9] after \
                 {retries} redraws"
            ),
            CoreError::AllSkipped { what } => {
                write!(f, "{what}: every sample/label was degenerate and skipped")
            }
            CoreError::NonFiniteProbe { name, row, col } => write!(
                f,
                "loss non-finite while perturbing '{name}' at ({row}, {col})"
            ),
            CoreError::Aborted { reason } => write!(f, "aborted: {reason}"),
        }
    }
}

impl core::error::Error for CoreError {}
