//! Named scenarios. All share `L = 1`, `N = 64`, `τ = 1e-3`, `T = 0.1`,
//! `ε = δ = 1` and `λ = 1e-5` unless overridden by the caller.

use crate::grid::Grid1D;
use crate::monotone::{GraphSpec, MonotoneError, PotentialSpec};
use crate::scalar::{lit, Real};
use crate::stepper::{Forcing, ProblemSpec, SpecError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PresetInfo {
    pub name: &'static str,
    pub summary: &'static str,
    /// Which well-posedness / limit regime the data fall into.
    pub regime: &'static str,
}

pub const CATALOGUE: &[PresetInfo] = &[
    PresetInfo {
        name: "logwell-sign",
        summary: "logarithmic potential (c = 1, c0 = 2), sign graph, u0 = 0.9 cos(pi x/L), g = 0",
        regime:
            "singular potential with bounded graph; eps > 0 and delta > 0, so both limits apply",
    },
    PresetInfo {
        name: "quartic-zero",
        summary:
            "double-well potential, no rate-dependent dissipation, u0 = 0.9 cos(pi x/L), g = 0",
        regime: "viscous Cahn-Hilliard; eps > 0 and delta > 0",
    },
    PresetInfo {
        name: "quartic-power",
        summary: "double-well potential, linear graph beta(r) = r, u0 = 0.9 cos(pi x/L), g = 0",
        regime: "graph with linear growth, so the eps -> 0 limit applies with delta > 0",
    },
    PresetInfo {
        name: "stationary",
        summary:
            "double-well potential, no graph, u0 identically equal to the root of gamma, g = 0",
        regime: "exact fixed point of the discrete flow",
    },
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PresetError {
    #[error("unknown preset {0:?}; known presets: logwell-sign, quartic-zero, quartic-power, stationary")]
    Unknown(String),
    #[error(transparent)]
    Monotone(#[from] MonotoneError),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

pub fn info(name: &str) -> Option<&'static PresetInfo> {
    CATALOGUE.iter().find(|p| p.name == name)
}

pub fn preset<T: Real>(name: &str) -> Result<ProblemSpec<T>, PresetError> {
    preset_on(name, Grid1D::new(T::one(), 64).expect("valid default grid"))
}

/// The named preset on a caller-chosen grid, with `u0` sampled on it.
pub fn preset_on<T: Real>(name: &str, grid: Grid1D<T>) -> Result<ProblemSpec<T>, PresetError> {
    let one = T::one();
    let cosine = |grid: &Grid1D<T>| {
        let k = T::PI() / grid.length();
        grid.sample(|x| lit::<T>(0.9) * (k * x).cos())
    };
    let quartic = || PotentialSpec::double_well(one, one, one);
    let (graph, potential, u0) = match name {
        "logwell-sign" => (
            GraphSpec::Sign,
            PotentialSpec::logarithmic(one, lit(2.0), lit(2.0))?,
            cosine(&grid),
        ),
        "quartic-zero" => (GraphSpec::Zero, quartic()?, cosine(&grid)),
        "quartic-power" => (GraphSpec::power(one, one)?, quartic()?, cosine(&grid)),
        "stationary" => {
            let potential = quartic()?;
            let u0 = grid.constant(potential.r0());
            (GraphSpec::Zero, potential, u0)
        }
        other => return Err(PresetError::Unknown(other.to_string())),
    };
    Ok(ProblemSpec::new(
        one,
        one,
        lit(1e-5),
        lit(1e-3),
        lit(0.1),
        grid,
        graph,
        potential,
        Forcing::Zero,
        u0,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_catalogue_entry_builds_and_validates() {
        for p in CATALOGUE {
            let spec = preset::<f64>(p.name).unwrap();
            spec.validate().unwrap();
            assert_eq!(spec.steps(), 100);
        }
        assert!(matches!(
            preset::<f64>("nope"),
            Err(PresetError::Unknown(_))
        ));
    }

    #[test]
    fn presets_resample_on_other_grids() {
        let grid = Grid1D::new(2.0, 128).unwrap();
        let spec = preset_on::<f64>("quartic-zero", grid).unwrap();
        assert_eq!(spec.u0.len(), 128);
        let x = spec.grid.center(0);
        assert!((spec.u0[0] - 0.9 * (std::f64::consts::PI * x / 2.0).cos()).abs() < 1e-15);
    }

    #[test]
    fn logwell_initial_range() {
        let spec = preset::<f64>("logwell-sign").unwrap();
        assert!(spec.initial_bounds.0 >= -0.9 && spec.initial_bounds.1 <= 0.9);
        assert_eq!(spec.potential.a(), -1.0);
    }
}
