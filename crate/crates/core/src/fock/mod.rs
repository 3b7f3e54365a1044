//! Sparse multi-mode bosonic Fock-space algebra with a hard cap on the total
//! photon number.
//!
//! States are kept as sorted maps from [`Occupation`] vectors to complex
//! amplitudes. Every operation returns a new value; nothing is mutated in
//! place once a state has been handed out.

mod density;
mod local;
mod register;
mod serial;
mod state;

pub use density::{DensityOperator, TraceMeaning};
pub use local::{expectation_of_product, occupations_up_to, LocalOperator};
pub use register::{ModeLabel, Occupation, Register};
pub use serial::{format_canonical, parse_canonical};
pub(crate) use state::passive_image;
pub use state::{PureState, Truncation};

use thiserror::Error;

/// Default cap on the total photon number (three photon pairs).
pub const DEFAULT_MAX_PHOTONS: u32 = 6;
/// Amplitudes at or below this magnitude are dropped from sparse maps.
pub const AMPLITUDE_TOLERANCE: f64 = 1e-14;
/// Tolerance for norm, trace and Hermiticity checks.
pub const NORM_TOLERANCE: f64 = 1e-10;
/// Smallest eigenvalue accepted by the on-demand PSD check.
pub const PSD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("unknown mode label `{0}`")]
    UnknownMode(String),
    #[error("mode label `{0}` appears twice in a register")]
    DuplicateMode(String),
    #[error("registers collide on mode `{0}`")]
    RegisterCollision(String),
    #[error("register mismatch: {0}")]
    RegisterMismatch(String),
    #[error("two-mode operation needs two distinct modes, got `{0}` twice")]
    SameMode(String),
    #[error("occupation vector has {got} entries, register has {expected}")]
    OccupationLength { expected: usize, got: usize },
    #[error("occupation total {total} exceeds the photon cap {cap}")]
    ExceedsCap { total: u32, cap: u32 },
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("mode `{0}` is not in the vacuum state")]
    NotVacuum(String),
    #[error("operator is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("operator is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("malformed canonical text on line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, FockError>;

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
