//! Preprocessing diagnostics, emitted as JSON lines on a diagnostics stream.

use serde::Serialize;

/// A non-fatal preprocessing note: something was skipped, clamped, or looks
/// suspicious but did not stop the run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Warning {
    pub code: &'static str,
    pub message: String,
}

impl Warning {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Warning {
            code,
            message: message.into(),
        }
    }

    /// One warning as a JSON line.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("warning serialization cannot fail")
    }
}
