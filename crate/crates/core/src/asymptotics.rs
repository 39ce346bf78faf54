//! Parameter sweeps in ε and δ, data preparation for them, and log-log rate
//! fitting.

use rayon::prelude::*;

use crate::banded::{solve_tridiagonal, BandError};
use crate::grid::{Field, Grid1D, Series, SpacetimeNorm};
use crate::scalar::{lit, to_f64, Real};
use crate::stepper::{solve, Forcing, ProblemSpec, RunError, Trajectory};

#[derive(Debug, Clone, thiserror::Error)]
pub enum AsymptoticsError {
    #[error("all errors are below 1e-13; the data are fitted exactly and no slope is defined")]
    DegenerateFit,
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("solve failed at {parameter} = {value}: {message}")]
    Solve {
        parameter: &'static str,
        value: f64,
        message: String,
        /// Whether the failure was a nonconvergent step rather than a bad spec.
        nonconvergence: bool,
    },
    #[error(transparent)]
    Linear(#[from] BandError),
}

/// `v − αΔ_N v = f`.
pub fn smooth_data<T: Real>(grid: &Grid1D<T>, f: &[T], alpha: T) -> Result<Field<T>, BandError> {
    let n = grid.cells();
    if f.len() != n {
        return Err(BandError::Dimension {
            expected: n,
            got: f.len(),
        });
    }
    let c = alpha / (grid.h() * grid.h());
    let off = vec![-c; n];
    let diag: Vec<T> = (0..n)
        .map(|i| {
            if i == 0 || i + 1 == n {
                T::one() + c
            } else {
                T::one() + c + c
            }
        })
        .collect();
    solve_tridiagonal(&off, &diag, &off, f).map(Field)
}

/// Smoothed initial datum and forcing for a given δ, with the discrepancies
/// that enter the error bound.
#[derive(Debug, Clone)]
pub struct DeltaData<T: Real> {
    pub u0: Field<T>,
    pub forcing: Forcing<T>,
    pub u0_discrepancy: T,
    pub g_discrepancy: T,
}

/// `u₀δ = S(u₀)` and `gδ(t) = S(g(t))` with `S` the smoothing at `α = δ^{1/2}`.
pub fn prepare_delta_data<T: Real>(
    spec: &ProblemSpec<T>,
    delta: T,
) -> Result<DeltaData<T>, AsymptoticsError> {
    if delta == T::zero() {
        return Ok(DeltaData {
            u0: spec.u0.clone(),
            forcing: spec.forcing.clone(),
            u0_discrepancy: T::zero(),
            g_discrepancy: T::zero(),
        });
    }
    if !(delta > T::zero()) {
        return Err(AsymptoticsError::InvalidSweep(format!(
            "delta = {delta} must be positive"
        )));
    }
    let grid = &spec.grid;
    let alpha = delta.sqrt();
    let u0 = smooth_data(grid, &spec.u0, alpha)?;
    let forcing = Forcing::Smoothed {
        inner: Box::new(spec.forcing.clone()),
        alpha,
    };
    let u0_discrepancy = grid.norm_l2(&u0.sub(&spec.u0));
    let g_discrepancy = forcing_distance(spec, &forcing, &spec.forcing);
    Ok(DeltaData {
        u0,
        forcing,
        u0_discrepancy,
        g_discrepancy,
    })
}

/// `g_ε = T_ε(g)`.
pub fn prepare_eps_forcing<T: Real>(g: &Forcing<T>, eps: T) -> Forcing<T> {
    Forcing::Truncated {
        inner: Box::new(g.clone()),
        eps,
    }
}

/// Discrete `L²(0,T;H)` distance of two forcing rules sampled at `kτ`, `k = 1..n`.
pub fn forcing_distance<T: Real>(spec: &ProblemSpec<T>, a: &Forcing<T>, b: &Forcing<T>) -> T {
    let grid = &spec.grid;
    let sum = (1..=spec.steps())
        .map(|k| {
            let t = spec.time(k);
            let d = grid.norm_l2(&a.eval(grid, t).sub(&b.eval(grid, t)));
            d * d
        })
        .fold(T::zero(), |acc, v| acc + v);
    (spec.tau * sum).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Epsilon,
    Delta,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            Self::Epsilon => "epsilon",
            Self::Delta => "delta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceStrategy {
    /// Solve with the swept parameter set to zero.
    LimitSolve,
    /// Use the smallest swept value as reference.
    Finest,
}

#[derive(Debug, Clone)]
pub struct SweepConfig<T: Real> {
    pub base: ProblemSpec<T>,
    pub parameter: SweepParameter,
    /// Strictly decreasing, positive, at least three.
    pub values: Vec<T>,
    pub reference: ReferenceStrategy,
    /// δ-sweeps only: smooth `u₀` and `g` at `α = δ^{1/2}`.
    pub smooth: bool,
}

impl<T: Real> SweepConfig<T> {
    pub fn new(base: ProblemSpec<T>, parameter: SweepParameter, values: Vec<T>) -> Self {
        Self {
            base,
            parameter,
            values,
            reference: ReferenceStrategy::LimitSolve,
            smooth: false,
        }
    }

    pub fn validate(&self) -> Result<(), AsymptoticsError> {
        let bad = |m: String| Err(AsymptoticsError::InvalidSweep(m));
        if self.values.len() < 3 {
            return bad(format!("need at least 3 values, got {}", self.values.len()));
        }
        if self
            .values
            .iter()
            .any(|v| !(*v > T::zero() && v.is_finite()))
        {
            return bad("values must be positive and finite".into());
        }
        if self.values.windows(2).any(|w| w[1] >= w[0]) {
            return bad("values must be strictly decreasing".into());
        }
        let other = match self.parameter {
            SweepParameter::Epsilon => self.base.delta,
            SweepParameter::Delta => self.base.epsilon,
        };
        if self.reference == ReferenceStrategy::LimitSolve && other <= T::zero() {
            return bad(format!(
                "a {} = 0 reference needs the complementary parameter to be positive",
                self.parameter.name()
            ));
        }
        Ok(())
    }
}

/// One sweep member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint<T> {
    pub value: T,
    /// `‖μ − μ_ref‖_{L²V₀}`.
    pub err_mu: T,
    /// `‖u − u_ref‖_{H¹H}`.
    pub err_u: T,
    /// `err_mu + err_u`.
    pub error: T,
    /// δ-sweeps: `δ^{1/4} + ‖u₀δ − u₀‖ + ‖gδ − g‖_{L²H}`; ε-sweeps: zero.
    pub rhs: T,
    /// ε-sweeps: `ε·max_k ‖wᵏ‖`; δ-sweeps: zero.
    pub witness: T,
    pub u0_discrepancy: T,
    pub g_discrepancy: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport<T> {
    pub parameter: SweepParameter,
    pub reference: String,
    pub points: Vec<RatePoint<T>>,
    /// `None` when the fit is degenerate.
    pub slope: Option<T>,
    pub fit_residual: Option<T>,
    pub points_used: usize,
    /// Slope of the vanishing-viscosity witness (ε-sweeps).
    pub witness_slope: Option<T>,
    /// Smallest `C` with `error ≤ C·rhs` on every point (δ-sweeps).
    pub constant: Option<T>,
}

impl<T: Real> RateReport<T> {
    pub fn errors_monotone(&self) -> bool {
        self.points.windows(2).all(|w| w[1].error <= w[0].error)
    }
}

/// Least-squares slope of `log error` against `log param`, and the largest
/// absolute deviation of the fitted line.
pub fn fit_rate<T: Real>(pairs: &[(T, T)]) -> Result<(T, T), AsymptoticsError> {
    if pairs.len() < 3 {
        return Err(AsymptoticsError::InvalidSweep(format!(
            "need at least 3 points to fit, got {}",
            pairs.len()
        )));
    }
    if pairs.iter().all(|(_, e)| *e < lit(1e-13)) {
        return Err(AsymptoticsError::DegenerateFit);
    }
    if pairs
        .iter()
        .any(|(p, e)| !(*p > T::zero() && *e > T::zero()))
    {
        return Err(AsymptoticsError::InvalidSweep(
            "parameters and errors must be positive".into(),
        ));
    }
    let xs: Vec<T> = pairs.iter().map(|(p, _)| p.ln()).collect();
    let ys: Vec<T> = pairs.iter().map(|(_, e)| e.ln()).collect();
    let n = T::from_usize(pairs.len()).unwrap();
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxx: T = xs.iter().map(|x| (*x - mx) * (*x - mx)).sum();
    let sxy: T = xs.iter().zip(&ys).map(|(x, y)| (*x - mx) * (*y - my)).sum();
    if sxx == T::zero() {
        return Err(AsymptoticsError::InvalidSweep(
            "parameters are all equal".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (*y - intercept - slope * *x).abs())
        .fold(T::zero(), T::max);
    Ok((slope, residual))
}

fn run<T: Real>(
    spec: &ProblemSpec<T>,
    parameter: SweepParameter,
    value: T,
) -> Result<Trajectory<T>, AsymptoticsError> {
    solve(spec).map_err(|e| AsymptoticsError::Solve {
        parameter: parameter.name(),
        value: to_f64(value),
        nonconvergence: matches!(e, RunError::Solve(_)),
        message: e.to_string(),
    })
}

fn differences<T: Real>(grid: &Grid1D<T>, a: &Series<T>, b: &Series<T>) -> (T, T) {
    let d = a.difference(b).expect("sweep members share the time grid");
    (
        d.norm(grid, SpacetimeNorm::L2V0),
        d.norm(grid, SpacetimeNorm::H1H),
    )
}

struct Member<T: Real> {
    spec: ProblemSpec<T>,
    value: T,
    u0_discrepancy: T,
    g_discrepancy: T,
}

fn sweep<T: Real>(
    cfg: &SweepConfig<T>,
    members: Vec<Member<T>>,
    reference: ProblemSpec<T>,
    reference_label: String,
) -> Result<RateReport<T>, AsymptoticsError> {
    let parameter = cfg.parameter;
    let mut jobs: Vec<(ProblemSpec<T>, T)> =
        members.iter().map(|m| (m.spec.clone(), m.value)).collect();
    let finest = cfg.reference == ReferenceStrategy::Finest;
    if !finest {
        jobs.push((reference, T::zero()));
    }
    let mut solved = jobs
        .par_iter()
        .map(|(spec, value)| run(spec, parameter, *value))
        .collect::<Result<Vec<_>, _>>()?;
    let reference = if finest {
        solved.last().unwrap().clone()
    } else {
        solved.pop().unwrap()
    };
    let grid = &cfg.base.grid;
    let ref_series = reference.series();
    let points: Vec<RatePoint<T>> = members
        .iter()
        .zip(&solved)
        .map(|(m, traj)| {
            let (err_mu, err_u) = differences(grid, &traj.series(), &ref_series);
            let (rhs, witness) = match parameter {
                SweepParameter::Delta => (
                    m.value.sqrt().sqrt() + m.u0_discrepancy + m.g_discrepancy,
                    T::zero(),
                ),
                SweepParameter::Epsilon => {
                    let wmax = traj
                        .states
                        .iter()
                        .map(|s| grid.norm_l2(&s.w))
                        .fold(T::zero(), T::max);
                    (T::zero(), m.value * wmax)
                }
            };
            RatePoint {
                value: m.value,
                err_mu,
                err_u,
                error: err_mu + err_u,
                rhs,
                witness,
                u0_discrepancy: m.u0_discrepancy,
                g_discrepancy: m.g_discrepancy,
            }
        })
        .collect();
    // with the finest member as reference its own error is zero; leave it out of fits
    let fitted: Vec<&RatePoint<T>> = if finest {
        points[..points.len() - 1].iter().collect()
    } else {
        points.iter().collect()
    };
    let pairs: Vec<(T, T)> = fitted.iter().map(|p| (p.value, p.error)).collect();
    let (slope, fit_residual) = match fit_rate(&pairs) {
        Ok((s, r)) => (Some(s), Some(r)),
        Err(AsymptoticsError::DegenerateFit) | Err(AsymptoticsError::InvalidSweep(_)) => {
            (None, None)
        }
        Err(e) => return Err(e),
    };
    let witness_slope = match parameter {
        SweepParameter::Epsilon => {
            let pairs: Vec<(T, T)> = points.iter().map(|p| (p.value, p.witness)).collect();
            fit_rate(&pairs).ok().map(|(s, _)| s)
        }
        SweepParameter::Delta => None,
    };
    let constant = match parameter {
        SweepParameter::Delta => Some(
            fitted
                .iter()
                .map(|p| p.error / p.rhs)
                .fold(T::zero(), T::max),
        ),
        SweepParameter::Epsilon => None,
    };
    Ok(RateReport {
        parameter,
        reference: reference_label,
        points_used: pairs.len(),
        points,
        slope,
        fit_residual,
        witness_slope,
        constant,
    })
}

/// δ-sweep against the δ = 0 solve with unsmoothed data (or the finest δ).
pub fn delta_sweep<T: Real>(cfg: &SweepConfig<T>) -> Result<RateReport<T>, AsymptoticsError> {
    if cfg.parameter != SweepParameter::Delta {
        return Err(AsymptoticsError::InvalidSweep(
            "delta_sweep needs parameter = delta".into(),
        ));
    }
    if !(cfg.base.epsilon > T::zero()) {
        return Err(AsymptoticsError::InvalidSweep(
            "delta sweep needs epsilon > 0".into(),
        ));
    }
    cfg.validate()?;
    let mut members = Vec::with_capacity(cfg.values.len());
    for &delta in &cfg.values {
        let mut spec = cfg.base.clone();
        spec.delta = delta;
        let (mut du, mut dg) = (T::zero(), T::zero());
        if cfg.smooth {
            let data = prepare_delta_data(&cfg.base, delta)?;
            spec.u0 = data.u0;
            spec.forcing = data.forcing;
            du = data.u0_discrepancy;
            dg = data.g_discrepancy;
        }
        members.push(Member {
            spec,
            value: delta,
            u0_discrepancy: du,
            g_discrepancy: dg,
        });
    }
    let mut reference = cfg.base.clone();
    reference.delta = T::zero();
    let label = match cfg.reference {
        ReferenceStrategy::LimitSolve => "delta=0, unsmoothed data".to_string(),
        ReferenceStrategy::Finest => format!("delta={}", cfg.values.last().unwrap()),
    };
    sweep(cfg, members, reference, label)
}

/// ε-sweep with truncated forcing against the ε = 0 solve (or the finest ε).
pub fn eps_sweep<T: Real>(cfg: &SweepConfig<T>) -> Result<RateReport<T>, AsymptoticsError> {
    if cfg.parameter != SweepParameter::Epsilon {
        return Err(AsymptoticsError::InvalidSweep(
            "eps_sweep needs parameter = epsilon".into(),
        ));
    }
    if !(cfg.base.delta > T::zero()) {
        return Err(AsymptoticsError::InvalidSweep(
            "epsilon sweep needs delta > 0".into(),
        ));
    }
    cfg.validate()?;
    let members = cfg
        .values
        .iter()
        .map(|&eps| {
            let mut spec = cfg.base.clone();
            spec.epsilon = eps;
            spec.forcing = prepare_eps_forcing(&cfg.base.forcing, eps);
            let dg = forcing_distance(&spec, &spec.forcing, &cfg.base.forcing);
            Member {
                spec,
                value: eps,
                u0_discrepancy: T::zero(),
                g_discrepancy: dg,
            }
        })
        .collect();
    let mut reference = cfg.base.clone();
    reference.epsilon = T::zero();
    let label = match cfg.reference {
        ReferenceStrategy::LimitSolve => "epsilon=0".to_string(),
        ReferenceStrategy::Finest => format!("epsilon={}", cfg.values.last().unwrap()),
    };
    sweep(cfg, members, reference, label)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbePoint<T> {
    pub eta: T,
    pub lhs: T,
    pub rhs: T,
    /// `lhs / rhs`, zero when `eta = 0`.
    pub ratio: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport<T> {
    pub points: Vec<ProbePoint<T>>,
    /// `max ratio / min ratio` over the points with `eta > 0`.
    pub spread: T,
}

/// Perturbation profiles used by [`continuous_dependence_probe`].
#[derive(Debug, Clone)]
pub struct Perturbation<T: Real> {
    pub u0: Field<T>,
    pub g: Field<T>,
}

impl<T: Real> Perturbation<T> {
    /// `cos(2πx/L)` on the initial datum and `cos(πx/L)` on the forcing.
    pub fn standard(grid: &Grid1D<T>) -> Self {
        let k = T::PI() / grid.length();
        Self {
            u0: grid.sample(|x| (lit::<T>(2.0) * k * x).cos()),
            g: grid.sample(|x| (k * x).cos()),
        }
    }
}

/// Solves the base problem and `η`-perturbed copies and compares
/// `‖μ₁−μ₂‖²_{L²V₀} + ‖u₁−u₂‖²_{H¹H} + ‖u₁−u₂‖²_{L∞V}` against
/// `‖u₀₁−u₀₂‖²_V + ‖g₁−g₂‖²_{L²H}`.
pub fn continuous_dependence_probe<T: Real>(
    spec: &ProblemSpec<T>,
    scales: &[T],
    profile: &Perturbation<T>,
) -> Result<ProbeReport<T>, AsymptoticsError> {
    if !(spec.epsilon > T::zero() && spec.delta > T::zero()) {
        return Err(AsymptoticsError::InvalidSweep(
            "the dependence probe needs epsilon > 0 and delta > 0".into(),
        ));
    }
    let grid = &spec.grid;
    let mut jobs = vec![(spec.clone(), T::zero())];
    for &eta in scales {
        let mut s = spec.clone();
        s.u0 = spec.u0.add(&profile.u0.scale(eta));
        s.initial_bounds = (
            spec.initial_bounds.0.min(s.u0.min()),
            spec.initial_bounds.1.max(s.u0.max()),
        );
        s.forcing = Forcing::Sum(
            Box::new(spec.forcing.clone()),
            Box::new(Forcing::Profile(profile.g.scale(eta))),
        );
        jobs.push((s, eta));
    }
    let solved = jobs
        .par_iter()
        .map(|(s, eta)| {
            s.validate()
                .map_err(|e| AsymptoticsError::InvalidSweep(e.to_string()))?;
            solve(s).map_err(|e| AsymptoticsError::Solve {
                parameter: "eta",
                value: to_f64(*eta),
                nonconvergence: matches!(e, RunError::Solve(_)),
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let base = solved[0].series();
    let mut points = Vec::with_capacity(scales.len());
    for (traj, (s, eta)) in solved.iter().zip(&jobs).skip(1) {
        let d = traj.series().difference(&base).expect("same time grid");
        let l2v0 = d.norm(grid, SpacetimeNorm::L2V0);
        let h1h = d.norm(grid, SpacetimeNorm::H1H);
        let linfv = d.norm(grid, SpacetimeNorm::LinfV);
        let lhs = l2v0 * l2v0 + h1h * h1h + linfv * linfv;
        let du0 = grid.norm_h1(&s.u0.sub(&spec.u0));
        let dg = forcing_distance(spec, &s.forcing, &spec.forcing);
        let rhs = du0 * du0 + dg * dg;
        let ratio = if rhs > T::zero() {
            lhs / rhs
        } else {
            T::zero()
        };
        points.push(ProbePoint {
            eta: *eta,
            lhs,
            rhs,
            ratio,
        });
    }
    let ratios: Vec<T> = points
        .iter()
        .filter(|p| p.eta > T::zero())
        .map(|p| p.ratio)
        .collect();
    let spread = if ratios.is_empty() {
        T::one()
    } else {
        let max = ratios.iter().copied().fold(T::zero(), T::max);
        let min = ratios.iter().copied().fold(T::infinity(), T::min);
        max / min
    };
    Ok(ProbeReport { points, spread })
}
