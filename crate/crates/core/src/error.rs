use thiserror::Error;

use crate::operators::Qubit;

/// Errors raised by the simulator.
///
/// Numerical payloads are carried as `f64` regardless of the scalar type so
/// diagnostics stay printable.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid refrigerator spec: {0}")]
    InvalidRefrigerator(String),

    #[error("invalid bath spec: {0}")]
    InvalidBath(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not Hermitian (defect {defect:e}, tolerance {tolerance:e})")]
    NonHermitian { defect: f64, tolerance: f64 },

    #[error(
        "occupation series did not converge after {terms} terms \
         (omega={omega}, T={temperature}, zeta={zeta}, last term {last_term:e}, partial sum {partial:e})"
    )]
    OccupationNotConverged {
        terms: usize,
        omega: f64,
        temperature: f64,
        zeta: f64,
        last_term: f64,
        partial: f64,
    },

    #[error(
        "zero Bohr frequency with nonzero coupling on the {qubit} qubit (|block| = {element:e}); \
         transitions between degenerate eigenstates are outside the supported working range"
    )]
    ZeroBohrFrequency { qubit: Qubit, element: f64 },

    #[error(
        "step size underflow at t={t:e} (h={step:e}, {accepted} accepted / {rejected} rejected steps)"
    )]
    StepSizeUnderflow {
        t: f64,
        step: f64,
        accepted: usize,
        rejected: usize,
    },

    #[error("state drift before correction too large at t={t:e}: trace {trace:e}, hermiticity {hermiticity:e}")]
    DriftExceeded { t: f64, trace: f64, hermiticity: f64 },

    #[error("steady state is not unique: {dimension} near-zero singular values (smallest: {singular_values:?})")]
    DegenerateNullSpace {
        dimension: usize,
        singular_values: Vec<f64>,
    },

    #[error("steady-state residual {residual:e} exceeds bound {bound:e}")]
    SteadyStateResidual { residual: f64, bound: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error under any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
