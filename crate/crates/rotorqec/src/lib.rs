//! Bosonic rotation codes in truncated Fock space.
//!
//! This crate implements order-N rotation codes (cat, binomial, finite ideal
//! phase codes), the number-shift/rotation error basis `E_k(theta)`, the full
//! gate zoo with machine-verified error-propagation identities, an explicit
//! syndrome-extraction/recovery scheme (direct and teleportation based), and
//! the Knill-Laflamme number-phase code distance.
//!
//! Everything is dense linear algebra over a truncated Fock space: states are
//! complex `d`-vectors, operators are dense `d x d` matrices, and operator
//! identities are checked on a "safe subspace" that stays away from the
//! truncation edge.

pub mod codes;
pub mod distance;
pub mod error_basis;
pub mod fock;
pub mod gates;
pub mod propagation;
pub mod qec;
pub mod ratio;

pub use codes::{AmplitudeProfile, Codewords, RotationCode};
pub use error_basis::ErrorLabel;
pub use fock::{Dim, Ket, MultiKet, Operator};
pub use gates::{GateKind, GateSpec, PolynomialSpec};
pub use propagation::PropagationPrediction;
pub use qec::{ChannelPrior, PriorKind, RecoveryPlan, Syndrome};

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum RotorError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("invalid gate spec: {0}")]
    InvalidGateSpec(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("profile support exceeds dimension: {0}")]
    ProfileExceedsDim(String),
    #[error("information destroyed: {0}")]
    InformationDestroyed(String),
    #[error("memory guard: {0}")]
    MemoryGuard(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, RotorError>;

impl From<std::io::Error> for RotorError {
    fn from(e: std::io::Error) -> Self {
        RotorError::Io(e.to_string())
    }
}

/// Default absolute tolerance for complex comparisons.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Heaviside step with the convention Theta(0) = 1, matching the k >= 0
/// branch of the error basis definition.
pub fn heaviside(k: i64) -> f64 {
    if k >= 0 {
        1.0
    } else {
        0.0
    }
}

/// Wrap an angle into [-pi, pi).
pub fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::PI;
    let two_pi = 2.0 * PI;
    let mut t = (theta + PI).rem_euclid(two_pi);
    if t < 0.0 {
        t += two_pi;
    }
    t - PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn heaviside_zero_is_one() {
        assert_eq!(heaviside(0), 1.0);
        assert_eq!(heaviside(3), 1.0);
        assert_eq!(heaviside(-1), 0.0);
    }

    #[test]
    fn wrap_angle_branch() {
        assert!((wrap_angle(PI) - (-PI)).abs() < 1e-15);
        assert!((wrap_angle(-PI) - (-PI)).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI) - (-PI)).abs() < 1e-12);
        assert!((wrap_angle(0.3) - 0.3).abs() < 1e-15);
        assert!((wrap_angle(2.0 * PI + 0.3) - 0.3).abs() < 1e-12);
    }
}
