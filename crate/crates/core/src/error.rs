use std::fmt;

/// One failed validation rule, tied to the config field that broke it.
#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub field: String,
    pub reason: String,
}

impl Issue {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Issue {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{func}: argument {arg} outside the domain ({expected})")]
    Domain {
        func: &'static str,
        arg: f64,
        expected: &'static str,
    },

    #[error("{func}: result overflows f64 at x = {x}")]
    Overflow { func: &'static str, x: f64 },

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (estimate {estimate:e}, error bound {error_bound:e})"
    )]
    NonConvergence {
        estimate: f64,
        error_bound: f64,
        subdivisions: usize,
    },

    #[error("invalid configuration: {}", format_issues(.0))]
    Invalid(Vec<Issue>),

    #[error("{quantity} = {value:e} left [0, 1] beyond the 1e-9 rounding allowance")]
    NumericInconsistency { quantity: &'static str, value: f64 },

    #[error("unknown figure preset `{0}` (expected fig1, fig2, fig3 or fig4)")]
    UnknownPreset(String),

    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_issues(issues: &[Issue]) -> String {
    issues
        .iter()
        .map(Issue::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid(vec![Issue::new(field, reason)])
    }
}

pub type Result<T> = std::result::Result<T, Error>;
