use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("wiring contains a cycle")]
    CycleDetected,
    #[error("dangling port: {0}")]
    DanglingPort(String),
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("carrier mismatch: {0}")]
    CarrierMismatch(String),
    #[error("invalid weights: {0}")]
    WeightError(String),
    #[error("enumeration cap exceeded: {what} needs {needed} > {cap}")]
    CapExceeded {
        what: String,
        needed: String,
        cap: usize,
    },
    #[error("diagram is not causally closed: {0}")]
    NotCausallyClosed(String),
    #[error("representation has no entry for procedure signature {0}")]
    MissingXi(String),
    #[error("witness pair is not operationally equivalent: {0}")]
    PairNotEquivalent(String),
    #[error("procedure `{0}` is not resolved by the prediction map")]
    UnresolvedProcedure(String),
    #[error("proposition attached to non-classical system {0}")]
    PropositionOnNonclassical(String),
    #[error("operator is not positive / trace-nonincreasing: {0}")]
    NotPositive(String),
    #[error("wrong scenario: {0}")]
    WrongScenario(String),
    #[error("LP degenerate cycling guard tripped after {0} pivots")]
    Degenerate(usize),
    #[error("configuration error: {0}")]
    ConfigError(String),
    #[error("invalid value: {0}")]
    Invalid(String),
    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    /// Stable short code used by the command line reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::TypeMismatch(_) => "E-DIAG-TYPE",
            Error::CycleDetected => "E-DIAG-CYCLE",
            Error::DanglingPort(_) => "E-DIAG-DANGLING",
            Error::SignatureMismatch(_) => "E-DIAG-SIGNATURE",
            Error::DimensionMismatch(_) => "E-DIM",
            Error::CarrierMismatch(_) => "E-CARRIER",
            Error::WeightError(_) => "E-WEIGHT",
            Error::CapExceeded { .. } => "E-CAP",
            Error::NotCausallyClosed(_) => "E-NOT-CLOSED",
            Error::MissingXi(_) => "E-REP-MISSING-XI",
            Error::PairNotEquivalent(_) => "E-REP-PAIR",
            Error::UnresolvedProcedure(_) => "E-OP-UNRESOLVED",
            Error::PropositionOnNonclassical(_) => "E-OP-NONCLASSICAL",
            Error::NotPositive(_) => "E-QUANTUM-POSITIVE",
            Error::WrongScenario(_) => "E-NOGO-SCENARIO",
            Error::Degenerate(_) => "E-LP-DEGENERATE",
            Error::ConfigError(_) => "E-CONFIG",
            Error::Invalid(_) => "E-INVALID",
            Error::Parse { .. } => "E-PARSE",
        }
    }

    pub(crate) fn cap(what: impl Into<String>, needed: impl ToString, cap: usize) -> Self {
        Error::CapExceeded {
            what: what.into(),
            needed: needed.to_string(),
            cap,
        }
    }
}
