use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Schema(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numerical(#[from] wavelab_core::Error),
}

impl CliError {
    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        use wavelab_core::Error as E;
        match self {
            Self::Read { .. } | Self::Write { .. } => "io",
            Self::Schema(_) | Self::UnknownPreset(_) => "schema",
            Self::Usage(_) => "usage",
            Self::Numerical(e) => match e {
                E::DetectionFailure(_) => "detection-failure",
                E::CflViolation { .. }
                | E::NodeNotDiagonalizable { .. }
                | E::PositivityLoss { .. }
                | E::NonFinite { .. }
                | E::GradientBlowUp { .. } => "solver-halt",
                E::InvalidParameter(_) | E::NonPositiveState { .. } => "invalid-parameter",
                _ => "numerical",
            },
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            message: String,
        }
        serde_json::json!({ "error": Body { kind: self.kind(), message: self.to_string() } })
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Schema(e.to_string())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
