use thiserror::Error;

/// Maintained assumption that the observed data (or the supplied reference
/// characteristics) can contradict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assumption {
    /// The reference test carries diagnostic value: s1 > 1 - s0.
    ReferencePerformance,
    /// Study prevalence is strictly inside (0, 1).
    BoundedPrevalence,
    /// The chosen dependence restriction leaves no feasible joint distribution.
    DependenceRestriction,
}

impl std::fmt::Display for Assumption {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Assumption::ReferencePerformance => write!(f, "reference performance (s1 > 1 - s0)"),
            Assumption::BoundedPrevalence => write!(f, "bounded prevalence (0 < P(y=1) < 1)"),
            Assumption::DependenceRestriction => {
                write!(f, "dependence restriction (tendency to wrongly agree)")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("refuted assumption(s): {}; {detail}", join(.assumptions))]
    Refuted {
        assumptions: Vec<Assumption>,
        detail: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn is_refutation(&self) -> bool {
        matches!(self, Error::Refuted { .. })
    }
}

fn join(a: &[Assumption]) -> String {
    a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

pub type Result<T> = std::result::Result<T, Error>;
