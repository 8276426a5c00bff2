use thiserror::Error;

/// Errors raised by the kinematics, representation and operator routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CtError {
    /// Input outside the physical domain (superluminal velocity, non-finite
    /// component, off-shell boost parameter, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A covariant vector was supplied where a contravariant one is expected,
    /// or vice versa.
    #[error("variance mismatch: expected {expected}, got {found}")]
    Variance {
        expected: &'static str,
        found: &'static str,
    },

    /// Objects living in different frames were combined.
    #[error("frame mismatch: {0}")]
    Frame(String),

    /// `u^mu k_mu` vanished at the evaluation point of a Poisson bracket.
    #[error("singular bracket: u.k = {0}")]
    SingularBracket(f64),

    /// Standard/invariant normalization (or measure) tags disagree.
    #[error("normalization mismatch: {0}")]
    Normalization(String),

    /// A derivative was requested along an axis without enough points for
    /// the finite-difference stencil.
    #[error("grid too small: {0}")]
    GridTooSmall(String),

    /// Matrix expected to be in SO(3) is not.
    #[error("not a rotation: {0}")]
    NotRotation(String),

    #[error("invalid spin: {0}")]
    InvalidSpin(String),

    /// A product that must factor into the little group of the preferred
    /// frame did not.
    #[error("internal consistency violated: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, CtError>;
