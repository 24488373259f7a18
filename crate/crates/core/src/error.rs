use thiserror::Error;

/// Unified error type for the solver pipeline.
///
/// Variants map one-to-one onto the pipeline stages that can fail, so callers
/// (and the CLI exit-code table) can partition failures by stage.
#[derive(Debug, Error)]
pub enum Error {
    /// A trapping-margin hypothesis does not hold on the given data; carries
    /// the offending boundary piece, the worst nodes, and their margin values.
    #[error("trapping hypothesis violated: {0}")]
    HypothesisViolated(String),

    /// A candidate barrier failed its sub/super-solution verification at the
    /// current regularization parameter. Callers typically retry at smaller t.
    #[error("barrier verification failed: {0}")]
    BarrierVerificationFailed(String),

    /// Damped Newton iteration failed to reach tolerance.
    #[error("Newton iteration diverged: {0}")]
    NewtonDiverged(String),

    /// The monotone lift iteration stopped making progress above tolerance.
    #[error("lift sweeps stalled below tolerance: {0}")]
    StalledBelowTolerance(String),

    /// A linear sub-problem could not be solved (singular or ill-conditioned).
    #[error("linear solve failed: {0}")]
    LinearSolveFailed(String),

    /// An operation that requires a converged solution state was handed a
    /// field whose equation residual is too large.
    #[error("input is not a solution state: {0}")]
    NotASolution(String),

    /// Zero-level extraction produced no usable interface.
    #[error("interface extraction failed: {0}")]
    InterfaceExtractionFailed(String),

    /// A spanning interface did not terminate at the prescribed seam curve.
    #[error("interface not anchored at the seam: {0}")]
    InterfaceNotAnchored(String),

    /// The extracted interface fails its equation-residual acceptance test.
    #[error("interface verification failed: {0}")]
    InterfaceVerificationFailed(String),

    /// A combinatorial enumeration exceeded its hard candidate budget.
    #[error("candidate enumeration budget exceeded: {0}")]
    CandidateBudgetExceeded(String),

    /// Malformed or out-of-range input (grid, configuration, field shapes).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Same variant with a context prefix on the message (e.g. the
    /// continuation parameter at which a stage failed).
    pub fn context(self, ctx: &str) -> Error {
        use Error::*;
        match self {
            HypothesisViolated(m) => HypothesisViolated(format!("{ctx}: {m}")),
            BarrierVerificationFailed(m) => BarrierVerificationFailed(format!("{ctx}: {m}")),
            NewtonDiverged(m) => NewtonDiverged(format!("{ctx}: {m}")),
            StalledBelowTolerance(m) => StalledBelowTolerance(format!("{ctx}: {m}")),
            LinearSolveFailed(m) => LinearSolveFailed(format!("{ctx}: {m}")),
            NotASolution(m) => NotASolution(format!("{ctx}: {m}")),
            InterfaceExtractionFailed(m) => InterfaceExtractionFailed(format!("{ctx}: {m}")),
            InterfaceNotAnchored(m) => InterfaceNotAnchored(format!("{ctx}: {m}")),
            InterfaceVerificationFailed(m) => InterfaceVerificationFailed(format!("{ctx}: {m}")),
            CandidateBudgetExceeded(m) => CandidateBudgetExceeded(format!("{ctx}: {m}")),
            InvalidInput(m) => InvalidInput(format!("{ctx}: {m}")),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
