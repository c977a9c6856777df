//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("structural mismatch: {0}")]
    Structural(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("not divisible by z{var}^{power}: offending monomial {monomial:?}")]
    Divisibility { var: usize, power: u32, monomial: Vec<u32> },

    #[error("curve is not invariant: first inconsistency at order {order} in component {component}")]
    NotInvariant { order: u32, component: usize },

    #[error("truncation budget exhausted ({context}): have order {have}, need at least {needed}")]
    Budget { context: String, have: u32, needed: u32 },

    #[error("insufficient precision: {0}")]
    Precision(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("not in Ramis-Sibuya form: {0}")]
    NotInForm(String),

    #[error("unsupported reduction step: {0}")]
    Unsupported(String),

    #[error("orbit ordering violated: exponent real part {0} exceeds the overflow guard")]
    OrbitOrdering(f64),

    #[error("orbit left the sector at step {step} (|x| = {radius:.3e})")]
    SectorExit { step: usize, radius: f64 },

    #[error("orbit sum did not decay within {steps} steps")]
    Tail { steps: usize },

    #[error("construction failed: {0}")]
    ConstructionFailed(String),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Precondition,
    Budget,
    Construction,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Budget { .. } | Error::Precision(_) => ErrorClass::Budget,
            Error::OrbitOrdering(_)
            | Error::SectorExit { .. }
            | Error::Tail { .. }
            | Error::ConstructionFailed(_) => ErrorClass::Construction,
            _ => ErrorClass::Precondition,
        }
    }

    /// Short module-qualified code for reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Structural(_) => "jet.structural",
            Error::Precondition(_) => "precondition",
            Error::Divisibility { .. } => "jet.divisibility",
            Error::NotInvariant { .. } => "curves.not_invariant",
            Error::Budget { .. } => "budget",
            Error::Precision(_) => "turrittin.precision",
            Error::Degenerate(_) => "degenerate",
            Error::NotInForm(_) => "reduction.not_in_form",
            Error::Unsupported(_) => "turrittin.unsupported",
            Error::OrbitOrdering(_) => "parabolic.orbit_ordering",
            Error::SectorExit { .. } => "parabolic.sector_exit",
            Error::Tail { .. } => "parabolic.tail",
            Error::ConstructionFailed(_) => "parabolic.construction_failed",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
