//! A-posteriori checks on solved trajectories: the energy ledger, the
//! maximum-principle report and the discrete flux identity.

use crate::grid::{Bc, Field, Grid1D};
use crate::monotone::{MonotoneError, PotentialSpec};
use crate::roots::bisect;
use crate::scalar::{count, lit, to_f64, Real};
use crate::stepper::{ProblemSpec, StepState, Trajectory};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiagnosticsError {
    #[error("psi' never reaches {level} on the {side} side of the initial range")]
    ThresholdNotFound { side: &'static str, level: f64 },
}

/// Per-step ledger row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerEntry<T> {
    pub k: usize,
    pub t: T,
    /// Free energy with the unregularized `ψ`.
    pub free_energy: T,
    /// Free energy with the regularized bulk density the scheme actually
    /// dissipates; this is what [`energy_inequality_check`] balances.
    pub free_energy_reg: T,
    pub d_grad: T,
    pub d_visc: T,
    pub d_beta: T,
    pub source: T,
    pub correction: T,
    pub mass: T,
    pub flux_left: T,
    pub flux_right: T,
    pub newton_iters: usize,
    pub residual: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger<T> {
    pub initial_free_energy: T,
    pub initial_free_energy_reg: T,
    pub initial_mass: T,
    pub entries: Vec<LedgerEntry<T>>,
}

impl<T: Real> EnergyLedger<T> {
    pub fn build(spec: &ProblemSpec<T>, u0: &Field<T>, states: &[StepState<T>]) -> Self {
        let grid = &spec.grid;
        let (tau, eps, half_k) = (spec.tau, spec.epsilon, lit::<T>(0.5) * spec.potential.k());
        let mut prev = u0;
        let mut entries = Vec::with_capacity(states.len());
        for s in states {
            let du = s.u.sub(prev);
            let (flux_left, flux_right) = grid.boundary_flux(&s.mu);
            let seminorm = grid.h1_seminorm(&s.mu, Bc::Dirichlet);
            let l2w = grid.norm_l2(&s.w);
            let l2du = grid.norm_l2(&du);
            entries.push(LedgerEntry {
                k: s.k,
                t: s.t,
                free_energy: free_energy(spec, &s.u).unwrap_or_else(|_| T::nan()),
                free_energy_reg: regularized_free_energy(spec, &s.u).unwrap_or_else(|_| T::nan()),
                d_grad: tau * seminorm * seminorm,
                d_visc: tau * eps * l2w * l2w,
                d_beta: tau * grid.inner(&s.xi, &s.w),
                source: -tau * grid.inner(&s.g, &s.w),
                correction: half_k * l2du * l2du,
                mass: grid.mass(&s.u),
                flux_left,
                flux_right,
                newton_iters: s.newton_iters,
                residual: s.residual,
            });
            prev = &s.u;
        }
        Self {
            initial_free_energy: free_energy(spec, u0).unwrap_or_else(|_| T::nan()),
            initial_free_energy_reg: regularized_free_energy(spec, u0).unwrap_or_else(|_| T::nan()),
            initial_mass: grid.mass(u0),
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn energy_with<T: Real>(
    spec: &ProblemSpec<T>,
    u: &Field<T>,
    bulk: impl Fn(T) -> Result<T, MonotoneError>,
) -> Result<T, MonotoneError> {
    let grid = &spec.grid;
    let mut sum = T::zero();
    for v in u.iter() {
        sum += bulk(*v)?;
    }
    let half = lit::<T>(0.5);
    let semi = grid.h1_seminorm(u, Bc::Neumann);
    let l2 = grid.norm_l2(u);
    Ok(grid.h() * sum + half * spec.delta * semi * semi + half * spec.lambda * l2 * l2)
}

/// `h·Σψ(uᵢ) + (δ/2)|u|²_N + (λ/2)‖u‖²`.
pub fn free_energy<T: Real>(spec: &ProblemSpec<T>, u: &Field<T>) -> Result<T, MonotoneError> {
    energy_with(spec, u, |r| spec.potential.psi(r))
}

/// As [`free_energy`] with `ψ` replaced by its λ-regularization.
pub fn regularized_free_energy<T: Real>(
    spec: &ProblemSpec<T>,
    u: &Field<T>,
) -> Result<T, MonotoneError> {
    energy_with(spec, u, |r| spec.potential.regularized_psi(spec.lambda, r))
}

/// Per-step ledger residual `F_k − F_{k−1} + D_grad + D_visc + D_beta − S − C`
/// (regularized free energy).
pub fn ledger_increments<T: Real>(ledger: &EnergyLedger<T>) -> Vec<T> {
    let mut prev = ledger.initial_free_energy_reg;
    ledger
        .entries
        .iter()
        .map(|e| {
            let v =
                e.free_energy_reg - prev + e.d_grad + e.d_visc + e.d_beta - e.source - e.correction;
            prev = e.free_energy_reg;
            v
        })
        .collect()
}

/// Largest positive part of the per-step ledger residual.
pub fn energy_inequality_check<T: Real>(traj: &Trajectory<T>) -> T {
    ledger_increments(&traj.ledger)
        .into_iter()
        .fold(
            T::zero(),
            |m, v| if v.is_nan() { T::nan() } else { m.max(v) },
        )
}

/// Largest normalized mismatch between the mass change and the boundary flux.
pub fn flux_identity_check<T: Real>(traj: &Trajectory<T>) -> T {
    let grid = &traj.spec.grid;
    let tau = traj.spec.tau;
    let mut prev = &traj.initial;
    let mut worst = T::zero();
    for s in &traj.states {
        let rate = grid.mass(&s.u.sub(prev)) / tau;
        let (left, right) = grid.boundary_flux(&s.mu);
        let v = (rate - (right - left)).abs() / grid.norm_sup(&s.mu).max(T::one());
        worst = if v.is_nan() { T::nan() } else { worst.max(v) };
        prev = &s.u;
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport<T> {
    pub m: T,
    pub a_bar: T,
    pub b_bar: T,
    pub a0_prime: T,
    pub b0_prime: T,
    pub min_u: T,
    pub max_u: T,
    pub pass: bool,
}

/// Least `r ≥ start` with `f ≥ 0` on all of `[r, end)`, for `f` continuous.
/// `None` when `f` is still negative next to `end`.
fn last_crossing<T: Real>(f: impl Fn(T) -> T, start: T, end: T) -> Option<T> {
    let mut pts = vec![start];
    if end.is_finite() {
        let dense = 4000;
        let span = end - start;
        pts.extend((1..dense).map(|i| start + span * count::<T>(i) / count::<T>(dense)));
        // geometric approach to a singular endpoint
        let mut gap = span / count::<T>(dense);
        for _ in 0..60 {
            gap *= lit(0.5);
            let p = end - gap;
            if p >= end || p <= *pts.last().unwrap() {
                break;
            }
            pts.push(p);
        }
    } else {
        let mut step = lit::<T>(1e-3);
        while step <= lit(1e12) {
            let last = *pts.last().unwrap();
            pts.extend((1..=20).map(|i| last + step * count::<T>(i)));
            step *= lit(2.0);
        }
    }
    if f(*pts.last().unwrap()) < T::zero() {
        return None;
    }
    let Some(idx) = pts.iter().rposition(|p| f(*p) < T::zero()) else {
        return Some(start);
    };
    let (lo, hi) = (pts[idx], pts[idx + 1]);
    Some(bisect(f, lo, hi, lit(1e-14)).unwrap_or(hi))
}

/// Least `r ≥ start` such that `ψ′ ≥ level` on all of `[r, b)`.
pub fn upper_threshold<T: Real>(
    potential: &PotentialSpec<T>,
    start: T,
    level: T,
) -> Result<T, DiagnosticsError> {
    last_crossing(
        |r| potential.psi_prime_unchecked(r) - level,
        start,
        potential.b(),
    )
    .ok_or(DiagnosticsError::ThresholdNotFound {
        side: "upper",
        level: to_f64(level),
    })
}

/// Greatest `r ≤ start` such that `ψ′ ≤ −level` on all of `(a, r]`.
pub fn lower_threshold<T: Real>(
    potential: &PotentialSpec<T>,
    start: T,
    level: T,
) -> Result<T, DiagnosticsError> {
    last_crossing(
        |r| -potential.psi_prime_unchecked(-r) - level,
        -start,
        -potential.a(),
    )
    .map(|r| -r)
    .ok_or(DiagnosticsError::ThresholdNotFound {
        side: "lower",
        level: to_f64(level),
    })
}

/// Thresholds and enlarged bounds for a given `M`, with `[a₀, b₀]` the
/// initial range.
pub fn bounds_for<T: Real>(
    potential: &PotentialSpec<T>,
    initial: (T, T),
    m: T,
) -> Result<(T, T, T, T), DiagnosticsError> {
    let level = m + T::one();
    let b_bar = upper_threshold(potential, initial.1, level)?;
    let a_bar = lower_threshold(potential, initial.0, level)?;
    let half = lit::<T>(0.5);
    let (a, b) = (potential.a(), potential.b());
    let a0p = if a.is_finite() {
        a_bar - (a_bar - a) * half
    } else {
        a_bar - T::one()
    };
    let b0p = if b.is_finite() {
        b_bar + (b - b_bar) * half
    } else {
        b_bar + T::one()
    };
    Ok((a_bar, b_bar, a0p, b0p))
}

/// `M = max_k ‖μᵏ − gᵏ‖∞`, thresholds and the range check.
pub fn max_principle_report<T: Real>(
    spec: &ProblemSpec<T>,
    traj: &Trajectory<T>,
) -> Result<BoundReport<T>, DiagnosticsError> {
    let grid: &Grid1D<T> = &spec.grid;
    let m = traj
        .states
        .iter()
        .map(|s| grid.norm_sup(&s.mu.sub(&s.g)))
        .fold(T::zero(), T::max);
    let (a_bar, b_bar, a0p, b0p) = bounds_for(&spec.potential, spec.initial_bounds, m)?;
    let mut min_u = traj.initial.min();
    let mut max_u = traj.initial.max();
    for s in &traj.states {
        min_u = min_u.min(s.u.min());
        max_u = max_u.max(s.u.max());
    }
    let pass = a0p <= min_u && max_u <= b0p;
    Ok(BoundReport {
        m,
        a_bar,
        b_bar,
        a0_prime: a0p,
        b0_prime: b0p,
        min_u,
        max_u,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monotone::GraphSpec;
    use crate::stepper::{solve, Forcing};

    fn spec(potential: PotentialSpec<f64>, u0: impl Fn(f64) -> f64) -> ProblemSpec<f64> {
        let grid = Grid1D::<f64>::new(1.0, 32).unwrap();
        let u0 = grid.sample(u0);
        ProblemSpec::new(
            1.0,
            1.0,
            1e-5,
            1e-3,
            0.02,
            grid,
            GraphSpec::Zero,
            potential,
            Forcing::Zero,
            u0,
        )
        .unwrap()
    }

    #[test]
    fn free_energy_examples() {
        let dw = PotentialSpec::<f64>::double_well(1.0, 1.0, 1.0).unwrap();
        let mut s = spec(dw, |_| 0.0);
        assert!((free_energy(&s, &s.u0).unwrap() - 0.25).abs() < 1e-15);
        s.lambda = 1e-300;
        let ones = s.grid.constant(1.0);
        assert!(free_energy(&s, &ones).unwrap().abs() < 1e-15);
        // ramp: bulk part plus δ/2·slope²·(L − h), the N − 1 interior faces
        s.delta = 10.0;
        let ramp = s.grid.sample(|x| 0.5 * (x - 0.5));
        let bulk: f64 = ramp
            .iter()
            .map(|v| s.potential.psi(*v).unwrap())
            .sum::<f64>()
            * s.grid.h();
        let f = free_energy(&s, &ramp).unwrap();
        assert!((f - bulk - 5.0 * 0.25 * (1.0 - s.grid.h())).abs() < 1e-12);
        let log = PotentialSpec::<f64>::logarithmic(1.0, 2.0, 2.0).unwrap();
        let s = spec(log, |_| 0.0);
        assert!(free_energy(&s, &s.grid.constant(1.0)).is_err());
    }

    #[test]
    fn regularized_energy_approaches_plain() {
        let dw = PotentialSpec::<f64>::double_well(1.0, 1.0, 1.0).unwrap();
        let mut s = spec(dw, |x| 0.9 * (std::f64::consts::PI * x).cos());
        s.lambda = 1e-9;
        let a = free_energy(&s, &s.u0).unwrap();
        let b = regularized_free_energy(&s, &s.u0).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn log_threshold_matches_bisection() {
        let log = PotentialSpec::<f64>::logarithmic(1.0, 2.0, 2.0).unwrap();
        let b_bar = upper_threshold(&log, 0.9, 3.0).unwrap();
        let f = |r: f64| 0.5 * ((1.0 + r) / (1.0 - r)).ln() - 2.0 * r - 3.0;
        let (mut lo, mut hi) = (0.99, 1.0 - 1e-15);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!(b_bar > 0.99 && b_bar < 1.0);
        assert!((b_bar - lo).abs() < 1e-12);
        let a_bar = lower_threshold(&log, -0.9, 3.0).unwrap();
        assert!((a_bar + b_bar).abs() < 1e-12);
    }

    #[test]
    fn double_well_threshold_is_cubic_root() {
        let dw = PotentialSpec::<f64>::double_well(1.0, 1.0, 1.0).unwrap();
        for m in [0.0, 0.5, 2.0, 17.0] {
            let b_bar = upper_threshold(&dw, 0.9, m + 1.0).unwrap();
            assert!(b_bar > 1.0);
            assert!((b_bar.powi(3) - b_bar - (m + 1.0)).abs() < 1e-10);
            let (a_bar, _, a0p, b0p) = bounds_for(&dw, (-0.9, 0.9), m).unwrap();
            assert!((a_bar + b_bar).abs() < 1e-10);
            assert_eq!(a0p, a_bar - 1.0);
            assert_eq!(b0p, b_bar + 1.0);
        }
    }

    #[test]
    fn threshold_skips_interior_crossings() {
        // ψ′ = r³ − r is ≥ 1 at r = 1.4 but the check must hold on all of [r, ∞)
        let dw = PotentialSpec::<f64>::double_well(1.0, 1.0, 1.0).unwrap();
        let b_bar = upper_threshold(&dw, -2.0, 0.1).unwrap();
        assert!(b_bar > 1.0);
    }

    #[test]
    fn missing_threshold_is_reported() {
        // quadratic ψ: ψ′ = r grows too slowly to reach 1e20 within the scan
        let p = PotentialSpec::<f64>::polynomial(vec![0.0, 0.0, 0.5], 1.0).unwrap();
        assert!(upper_threshold(&p, 0.0, 1e3).is_ok());
        assert!(matches!(
            upper_threshold(&p, 0.0, 1e20),
            Err(DiagnosticsError::ThresholdNotFound { .. })
        ));
    }

    #[test]
    fn ledger_and_flux_on_short_run() {
        let dw = PotentialSpec::<f64>::double_well(1.0, 1.0, 1.0).unwrap();
        let s = spec(dw, |x| 0.9 * (std::f64::consts::PI * x).cos());
        let traj = solve(&s).unwrap();
        assert_eq!(traj.ledger.len(), 20);
        for e in &traj.ledger.entries {
            assert!(
                e.d_grad >= 0.0 && e.d_visc >= 0.0 && e.d_beta >= -1e-14 && e.correction >= 0.0
            );
        }
        let v = energy_inequality_check(&traj);
        assert!(v <= 1e-8 * traj.ledger.initial_free_energy.max(1.0), "{v}");
        assert!(flux_identity_check(&traj) <= 1e-12);
    }

    #[test]
    fn flux_violation_is_linear_in_mu_perturbation() {
        let dw = PotentialSpec::<f64>::double_well(1.0, 1.0, 1.0).unwrap();
        let s = spec(dw, |x| 0.5 * (std::f64::consts::PI * x).cos());
        let traj = solve(&s).unwrap();
        let perturbed = |eta: f64| {
            let mut t = traj.clone();
            for st in &mut t.states {
                st.mu[0] += eta;
            }
            flux_identity_check(&t)
        };
        let (a, b) = (perturbed(1e-6), perturbed(2e-6));
        // boundary flux picks up 2η/h
        assert!((a - 2e-6 * 32.0).abs() < 1e-9);
        assert!((b / a - 2.0).abs() < 1e-3);
    }

    #[test]
    fn stationary_state_has_zero_violations() {
        let dw = PotentialSpec::<f64>::double_well(1.0, 1.0, 1.0).unwrap();
        let s = spec(dw, |_| 0.0);
        let traj = solve(&s).unwrap();
        assert_eq!(energy_inequality_check(&traj), 0.0);
        assert_eq!(flux_identity_check(&traj), 0.0);
        let report = max_principle_report(&s, &traj).unwrap();
        assert_eq!(report.m, 0.0);
        assert!(report.pass);
    }
}
