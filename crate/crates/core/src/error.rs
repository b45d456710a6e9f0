//! Error type shared by the core modules.

use std::fmt;

/// Errors reported by the core simulation layers.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// Two time series do not share start/step/length.
    Alignment(String),
    /// A series does not span the calendar range an operation requires.
    Coverage(String),
    /// Non-finite sample where finite values are required.
    NonFinite(String),
    /// Negative sample where non-negative values are required.
    Negative(String),
    /// Classifier training failed (e.g. empty training set).
    Training(String),
    /// Flat calibration target cannot be met.
    InfeasibleCalibration(String),
    /// Invalid configuration value (bad probability vector, missing key, ...).
    Config(String),
    /// PV profile lookup for an orientation that is not in the library.
    UnknownOrientation(String),
    /// A metric is undefined for the given inputs (e.g. SSR with zero demand).
    UndefinedMetric(String),
    /// An internal invariant was violated.
    Invariant(String),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::Alignment(msg) => write!(f, "series alignment error: {msg}"),
            CoreError::Coverage(msg) => write!(f, "series coverage error: {msg}"),
            CoreError::NonFinite(msg) => write!(f, "non-finite value: {msg}"),
            CoreError::Negative(msg) => write!(f, "negative value: {msg}"),
            CoreError::Training(msg) => write!(f, "training error: {msg}"),
            CoreError::InfeasibleCalibration(msg) => write!(f, "infeasible calibration: {msg}"),
            CoreError::Config(msg) => write!(f, "config error: {msg}"),
            CoreError::UnknownOrientation(msg) => write!(f, "unknown orientation: {msg}"),
            CoreError::UndefinedMetric(msg) => write!(f, "undefined metric: {msg}"),
            CoreError::Invariant(msg) => write!(f, "invariant violation: {msg}"),
        }
    }
}

impl std::error::Error for CoreError {}

pub type Result<T> = std::result::Result<T, CoreError>;
