//! Scalar convex-analysis toolkit: the dissipation graph `β`, the potential
//! `ψ` with its monotone part `γ`, and the regularization operators used by
//! the time stepper.
//!
//! Everything here is a pure function of immutable specs.

mod graph;
mod potential;

pub use graph::{GraphSpec, PiecewiseLinear, ScalarGraph};
pub use potential::{GammaParts, PotentialKind, PotentialSpec};

use crate::roots::RootError;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MonotoneError {
    #[error("{value} lies outside the potential's domain ({a}, {b})")]
    Domain { value: f64, a: f64, b: f64 },
    #[error("resolvent bracket failure: {0}")]
    Bracket(#[from] RootError),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
}

/// Truncation at level `1/λ`: `max(min(r, 1/λ), −1/λ)`.
#[inline]
pub fn truncation<T: Real>(lambda: T, r: T) -> T {
    let level = lambda.recip();
    r.min(level).max(-level)
}

/// Right derivative of [`truncation`].
#[inline]
pub fn truncation_derivative<T: Real>(lambda: T, r: T) -> T {
    let level = lambda.recip();
    if r >= -level && r < level {
        T::one()
    } else {
        T::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_examples() {
        assert_eq!(truncation(0.1, 5.0), 5.0);
        assert_eq!(truncation(0.1, 20.0), 10.0);
        assert_eq!(truncation(0.1, -20.0), -10.0);
        assert_eq!(truncation_derivative(0.1, 10.0), 0.0);
        assert_eq!(truncation_derivative(0.1, -10.0), 1.0);
    }
}
