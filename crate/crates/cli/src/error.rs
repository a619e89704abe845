use std::fmt;

use mpap_core::cohort::CohortError;
use mpap_core::hemo::HemoError;
use mpap_core::tune::TuneError;

/// Error category, mapped to the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Data,
    Fit,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Usage => 1,
            Kind::Data => 2,
            Kind::Fit => 3,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn usage(msg: impl fmt::Display) -> Self {
        CliError {
            kind: Kind::Usage,
            error: anyhow::anyhow!("{msg}"),
        }
    }

    pub fn data(error: impl Into<anyhow::Error>) -> Self {
        CliError {
            kind: Kind::Data,
            error: error.into(),
        }
    }

    pub fn fit(error: impl Into<anyhow::Error>) -> Self {
        CliError {
            kind: Kind::Fit,
            error: error.into(),
        }
    }

    pub fn context(self, ctx: impl fmt::Display + Send + Sync + 'static) -> Self {
        CliError {
            kind: self.kind,
            error: self.error.context(ctx),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl std::error::Error for CliError {}

fn hemo_kind(e: &HemoError) -> Kind {
    match e {
        HemoError::Convergence { .. } | HemoError::FitFailure { .. } => Kind::Fit,
        HemoError::Stage { source, .. } => hemo_kind(source),
        _ => Kind::Data,
    }
}

impl From<HemoError> for CliError {
    fn from(e: HemoError) -> Self {
        CliError {
            kind: hemo_kind(&e),
            error: e.into(),
        }
    }
}

impl From<CohortError> for CliError {
    fn from(e: CohortError) -> Self {
        let kind = match &e {
            CohortError::Hemo(h) | CohortError::Patient { source: h, .. } => hemo_kind(h),
            CohortError::Config(_) => Kind::Usage,
            _ => Kind::Data,
        };
        CliError {
            kind,
            error: e.into(),
        }
    }
}

impl From<TuneError> for CliError {
    fn from(e: TuneError) -> Self {
        let kind = match &e {
            TuneError::Config(_) => Kind::Usage,
            TuneError::AllFailed | TuneError::Fold { .. } => Kind::Fit,
            TuneError::Metrics(_) => Kind::Data,
        };
        CliError {
            kind,
            error: e.into(),
        }
    }
}

impl From<mpap_core::metrics::MetricsError> for CliError {
    fn from(e: mpap_core::metrics::MetricsError) -> Self {
        CliError::data(e)
    }
}

impl From<mpap_core::boost::BoostError> for CliError {
    fn from(e: mpap_core::boost::BoostError) -> Self {
        match e {
            mpap_core::boost::BoostError::Config(_) => CliError {
                kind: Kind::Usage,
                error: e.into(),
            },
            _ => CliError::data(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::data(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::data(e)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
