//! Numerical laboratory for the doubly nonlinear viscous Cahn–Hilliard system
//!
//! ```text
//! ∂ₜu − Δμ = 0,   μ ∈ ε∂ₜu + β(∂ₜu) − δΔu + ψ′(u) + g   in (0, L) × (0, T),
//! ∂ₙu = 0, μ = 0 on the boundary,  u(0) = u₀,
//! ```
//!
//! discretized with cell-centered finite differences in space and implicit
//! Euler (Rothe) steps in time on the Yosida-regularized problem.
//!
//! Everything numeric is generic over [`Real`]; the `*64` aliases below fix
//! the scalar to `f64`, which is what the CLI and the test-suite use.

pub mod asymptotics;
pub mod banded;
pub mod diagnostics;
pub mod grid;
pub mod monotone;
pub mod presets;
pub mod roots;
pub mod scalar;
pub mod stepper;

pub use asymptotics::{RateReport, SweepConfig, SweepParameter};
pub use diagnostics::{BoundReport, EnergyLedger};
pub use grid::{Bc, Field, Grid1D, Series, SpacetimeNorm};
pub use monotone::{GraphSpec, MonotoneError, PotentialSpec};
pub use scalar::Real;
pub use stepper::{Forcing, ProblemSpec, StepState, Trajectory};

pub type Field64 = Field<f64>;
pub type Grid64 = Grid1D<f64>;
pub type GraphSpec64 = GraphSpec<f64>;
pub type PotentialSpec64 = PotentialSpec<f64>;
pub type Forcing64 = Forcing<f64>;
pub type ProblemSpec64 = ProblemSpec<f64>;
pub type StepState64 = StepState<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type EnergyLedger64 = EnergyLedger<f64>;
pub type BoundReport64 = BoundReport<f64>;
pub type SweepConfig64 = SweepConfig<f64>;
pub type RateReport64 = RateReport<f64>;
