use thiserror::Error;

/// Errors produced by the solvers and diagnostics in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates one of the admissibility inequalities. The
    /// message names the inequality that failed.
    #[error("parameter out of range: {0}")]
    Range(String),

    /// The Picard iteration for the local profile solution failed to
    /// contract even after shrinking the matching radius. Usually means
    /// the exponents sit too close to the boundary of the admissible set.
    #[error("fixed-point iteration did not contract: {0}")]
    NoContraction(String),

    /// The continued profile left (0, inf) from above. The profile is
    /// globally bounded, so this signals a numerical fault.
    #[error("profile blow-up during continuation: {0}")]
    BlowUp(String),

    /// The continued profile left (0, inf) from below.
    #[error("profile vanished during continuation: {0}")]
    Vanish(String),

    /// Adaptive step size underflowed.
    #[error("step size underflow at {0}")]
    StepFailure(String),

    /// The far-field plateau could not be identified at the requested
    /// tolerance; extend the integration range and retry.
    #[error("no far-field plateau: {0}")]
    NoPlateau(String),

    /// Input outside the domain of the evaluated field.
    #[error("domain error: {0}")]
    Domain(String),

    /// A time step drove the solution non-positive and the step could not
    /// be shrunk any further.
    #[error("positivity lost at t={t}, r={r}")]
    PositivityLoss { t: f64, r: f64 },

    /// The implicit solve produced non-finite values at the smallest
    /// admissible step.
    #[error("stiffness failure: {0}")]
    StiffnessFailure(String),

    /// Rescaling moved the domain completely outside the requested window.
    #[error("empty overlap: {0}")]
    EmptyOverlap(String),

    /// Two inputs that must share a grid or time stamps do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Malformed profile or snapshot file.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
