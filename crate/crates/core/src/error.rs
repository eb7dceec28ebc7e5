use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{line}:{column}: undeclared object `{object}`")]
    UndeclaredObject {
        object: String,
        line: usize,
        column: usize,
    },

    #[error("undeclared predicate `{0}`")]
    UndeclaredPredicate(String),

    #[error("action {action}: add and delete lists both contain {atom}")]
    InconsistentAction { action: String, atom: String },

    #[error("atom {0} does not occur in the instance")]
    UnknownAtom(String),

    #[error("action {0} is not applicable")]
    Inapplicable(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("goal does not match pattern {0}")]
    NoMatch(String),

    #[error("goal matches pattern {pattern} in {count} ways")]
    AmbiguousMatch { pattern: String, count: usize },

    #[error("parameter ${0} is not bound")]
    UnboundParameter(String),

    #[error("feature {feature}: {message}")]
    FeatureDomain { feature: String, message: String },

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("feature `{0}` is used with the wrong kind")]
    KindMismatch(String),

    #[error("{0}")]
    Invalid(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    /// True for errors caused by malformed input text.
    pub fn is_parse_error(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. }
                | Error::UndeclaredObject { .. }
                | Error::UndeclaredPredicate(_)
                | Error::InconsistentAction { .. }
                | Error::UnknownFeature(_)
                | Error::KindMismatch(_)
                | Error::Io { .. }
        )
    }
}
