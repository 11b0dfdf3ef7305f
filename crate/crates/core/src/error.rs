use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} is outside {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("distribution not normalised: |sum - 1| = {deviation:.3e} exceeds tolerance {tolerance:.0e}")]
    Normalization { deviation: f64, tolerance: f64 },

    #[error("truncation tail mass {tail:.3e} exceeds limit {limit:.0e}")]
    Truncation { tail: f64, limit: f64 },

    #[error("total gain is zero")]
    ZeroGain,

    #[error("interval coverage too short: need indices 0..={needed}, have {available}")]
    Coverage { needed: usize, available: usize },

    #[error("bound inapplicable: {0}")]
    Inapplicable(&'static str),

    #[error("decoy-1 photoelectron histogram is empty")]
    EmptyHistogram,

    #[error("sample size for {0} is zero")]
    DegenerateSample(&'static str),

    #[error("inconsistent scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),

    #[error("at {distance_km} km: {source}")]
    SweepPoint {
        distance_km: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid result table: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, domain: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            domain,
        }
    }

    /// True when the failure originates in configuration rather than computation.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) => true,
            Error::SweepPoint { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
