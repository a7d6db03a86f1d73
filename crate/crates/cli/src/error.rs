use std::path::PathBuf;

use sbm_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),

    #[error("invalid parameter `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config { field: field.into(), reason: reason.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// One-line machine-readable form written to stderr on failure.
    pub fn structured(&self) -> String {
        let (kind, field) = match self {
            CliError::Parse(_) => ("parse", None),
            CliError::Config { field, .. } => ("config", Some(field.clone())),
            CliError::Io { .. } => ("io", None),
            CliError::Core(e) => match e {
                CoreError::InvalidParameter { field, .. } => ("config", Some(field.to_string())),
                CoreError::Domain { .. } => ("domain", None),
                CoreError::InfraredDivergence { .. } => ("config", Some("dephasing.temperature".into())),
                CoreError::Unstable { .. } | CoreError::TooManyFailures { .. } => ("numerical", None),
                CoreError::GridTooCoarse { .. } => ("numerical", None),
                CoreError::Quadrature { .. } | CoreError::QuadratureAtTime { .. } => ("numerical", None),
                CoreError::RootFinding(_) => ("numerical", None),
                CoreError::InsufficientData(_) => ("data", None),
                CoreError::Table(_) => ("parse", None),
            },
        };
        let message = self.to_string().replace('\\', "\\\\").replace('"', "\\\"");
        match field {
            Some(f) => format!("error kind={kind} field={f} message=\"{message}\""),
            None => format!("error kind={kind} message=\"{message}\""),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structured_line_names_the_field() {
        let e =
            CliError::from(CoreError::InvalidParameter { field: "quality_factor", reason: "must be positive".into() });
        let line = e.structured();
        assert!(line.starts_with("error kind=config field=quality_factor "), "{line}");
        assert!(!line.contains('\n'));
    }
}
