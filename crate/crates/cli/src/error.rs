use ppl_core::{ErrorKind, PplError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("stage `{stage}`: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: PplError,
    },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn stage(stage: &'static str) -> impl FnOnce(PplError) -> CliError {
        move |source| CliError::Stage { stage, source }
    }

    /// Process exit code: 2 configuration, 3 data, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Stage { source, .. } => match source.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numerical => 4,
            },
            CliError::Io(_) | CliError::Json(_) => 3,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        let s = |e| CliError::stage("fit")(e).exit_code();
        assert_eq!(s(PplError::EmptySample("none".into())), 3);
        assert_eq!(s(PplError::NonFiniteObjective("inf".into())), 4);
        assert_eq!(s(PplError::TuningFailure("all inf".into())), 4);
        assert_eq!(s(PplError::InvalidArgument("bad".into())), 2);
    }
}
