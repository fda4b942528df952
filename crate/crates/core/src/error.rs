//! Validation errors for model and run configuration.

use thiserror::Error;

/// Rejected configuration input. The `field` names the offending parameter so
/// callers can surface actionable diagnostics.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("config error: {field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, ConfigError>;
