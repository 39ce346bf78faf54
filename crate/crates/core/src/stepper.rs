//! Implicit Euler (Rothe) stepping for the λ-regularized system.
//!
//! Each step solves for the difference quotient `w = (uᵏ − uᵏ⁻¹)/τ`:
//!
//! ```text
//! uᵏ = uᵏ⁻¹ + τw
//! μ  = εw + β_λ(w) − δ·Δ_N uᵏ + λuᵏ + γ_λ(uᵏ) − K·T_λ((I+λγ)⁻¹uᵏ) + gᵏ
//! 0  = w − Δ_D μ
//! ```
//!
//! with `Δ_N`/`Δ_D` the Neumann/Dirichlet Laplacians of [`crate::grid`]. The
//! Jacobian `I − Δ_D·(diag(∂μ/∂w) − τδΔ_N)` is pentadiagonal.

use std::fmt;
use std::sync::Arc;

use crate::asymptotics::smooth_data;
use crate::banded::{BandError, BandMatrix};
use crate::diagnostics::EnergyLedger;
use crate::grid::{Field, Grid1D, GridError, Series};
use crate::monotone::{truncation, truncation_derivative, GraphSpec, MonotoneError, PotentialSpec};
use crate::scalar::{count, lit, to_f64, Real};

/// Time-dependent forcing rule `t ↦ g(·, t)`.
#[derive(Clone)]
pub enum Forcing<T: Real> {
    Zero,
    Constant(T),
    /// `amplitude · cos(mode·πx/L) · (1 + rate·t)`.
    Cosine {
        amplitude: T,
        mode: T,
        rate: T,
    },
    /// A fixed spatial profile, constant in time.
    Profile(Field<T>),
    Sum(Box<Forcing<T>>, Box<Forcing<T>>),
    Scaled(T, Box<Forcing<T>>),
    /// Elliptic smoothing `v − αΔ_N v = g(t)` applied at every sampled time.
    Smoothed {
        inner: Box<Forcing<T>>,
        alpha: T,
    },
    /// Entrywise truncation at level `1/eps`.
    Truncated {
        inner: Box<Forcing<T>>,
        eps: T,
    },
    Custom(ForcingFn<T>),
}

/// User-supplied `g(·, t)` sampler.
pub type ForcingFn<T> = Arc<dyn Fn(&Grid1D<T>, T) -> Field<T> + Send + Sync>;

impl<T: Real> fmt::Debug for Forcing<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl<T: Real> Forcing<T> {
    pub fn eval(&self, grid: &Grid1D<T>, t: T) -> Field<T> {
        match self {
            Self::Zero => grid.zeros(),
            Self::Constant(c) => grid.constant(*c),
            Self::Cosine {
                amplitude,
                mode,
                rate,
            } => {
                let k = *mode * T::PI() / grid.length();
                let time = T::one() + *rate * t;
                grid.sample(|x| *amplitude * (k * x).cos() * time)
            }
            Self::Profile(p) => p.clone(),
            Self::Sum(a, b) => a.eval(grid, t).add(&b.eval(grid, t)),
            Self::Scaled(s, inner) => inner.eval(grid, t).scale(*s),
            Self::Smoothed { inner, alpha } => smooth_data(grid, &inner.eval(grid, t), *alpha)
                .expect("smoothing system is regular"),
            Self::Truncated { inner, eps } => inner.eval(grid, t).map(|v| truncation(*eps, v)),
            Self::Custom(f) => f(grid, t),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::Constant(c) => format!("const:{c}"),
            Self::Cosine {
                amplitude,
                mode,
                rate,
            } => format!("cos:{amplitude}:{mode}:{rate}"),
            Self::Profile(_) => "profile".into(),
            Self::Sum(a, b) => format!("({} + {})", a.label(), b.label()),
            Self::Scaled(s, inner) => format!("{s}*{}", inner.label()),
            Self::Smoothed { inner, alpha } => format!("smooth[{alpha}]({})", inner.label()),
            Self::Truncated { inner, eps } => format!("trunc[{eps}]({})", inner.label()),
            Self::Custom(_) => "custom".into(),
        }
    }
}

/// Inner solver controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    /// Sup-norm residual tolerance, scaled by `1 + ‖gᵏ‖∞`.
    pub tol: T,
    pub max_newton: usize,
    pub max_halvings: usize,
    pub fallback_iterations: usize,
    pub relaxation: T,
    pub warm_start: bool,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            tol: lit(1e-10),
            max_newton: 50,
            max_halvings: 30,
            fallback_iterations: 500,
            relaxation: lit(0.5),
            warm_start: true,
        }
    }
}

/// Full problem instance.
#[derive(Debug, Clone)]
pub struct ProblemSpec<T: Real> {
    pub epsilon: T,
    pub delta: T,
    pub lambda: T,
    pub tau: T,
    pub horizon: T,
    pub grid: Grid1D<T>,
    pub graph: GraphSpec<T>,
    pub potential: PotentialSpec<T>,
    pub forcing: Forcing<T>,
    pub u0: Field<T>,
    /// `[a₀, b₀]` containing the initial datum.
    pub initial_bounds: (T, T),
    pub solver: SolverOptions<T>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecError {
    #[error("epsilon and delta are both zero; at least one regularization must be active")]
    NoRegularization,
    #[error("parameter {name} = {value} is out of range ({rule})")]
    Parameter {
        name: &'static str,
        value: f64,
        rule: &'static str,
    },
    #[error("horizon {horizon} is not an integer multiple of tau {tau}")]
    Horizon { horizon: f64, tau: f64 },
    #[error("initial bounds [{a0}, {b0}] are not inside the potential's domain")]
    Bounds { a0: f64, b0: f64 },
    #[error("initial datum leaves [{a0}, {b0}] at cell {cell}")]
    InitialRange { a0: f64, b0: f64, cell: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

impl<T: Real> ProblemSpec<T> {
    /// Builds a spec with default solver options and `[a₀, b₀]` taken from
    /// the range of `u0`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        epsilon: T,
        delta: T,
        lambda: T,
        tau: T,
        horizon: T,
        grid: Grid1D<T>,
        graph: GraphSpec<T>,
        potential: PotentialSpec<T>,
        forcing: Forcing<T>,
        u0: Field<T>,
    ) -> Result<Self, SpecError> {
        let initial_bounds = (u0.min(), u0.max());
        let spec = Self {
            epsilon,
            delta,
            lambda,
            tau,
            horizon,
            grid,
            graph,
            potential,
            forcing,
            u0,
            initial_bounds,
            solver: SolverOptions::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let param = |name, value: T, ok: bool, rule| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(SpecError::Parameter {
                    name,
                    value: to_f64(value),
                    rule,
                })
            }
        };
        param("epsilon", self.epsilon, self.epsilon >= T::zero(), ">= 0")?;
        param("delta", self.delta, self.delta >= T::zero(), ">= 0")?;
        param("lambda", self.lambda, self.lambda > T::zero(), "> 0")?;
        param("tau", self.tau, self.tau > T::zero(), "> 0")?;
        param("horizon", self.horizon, self.horizon > T::zero(), "> 0")?;
        if self.epsilon == T::zero() && self.delta == T::zero() {
            return Err(SpecError::NoRegularization);
        }
        let ratio = self.horizon / self.tau;
        if (ratio - ratio.round()).abs() > lit::<T>(1e-9) * ratio.max(T::one()) || ratio < T::one()
        {
            return Err(SpecError::Horizon {
                horizon: to_f64(self.horizon),
                tau: to_f64(self.tau),
            });
        }
        self.grid.check(&self.u0)?;
        let (a0, b0) = self.initial_bounds;
        if !(a0 <= b0 && self.potential.in_domain(a0) && self.potential.in_domain(b0)) {
            return Err(SpecError::Bounds {
                a0: to_f64(a0),
                b0: to_f64(b0),
            });
        }
        if let Some(cell) = self.u0.iter().position(|v| !(*v >= a0 && *v <= b0)) {
            return Err(SpecError::InitialRange {
                a0: to_f64(a0),
                b0: to_f64(b0),
                cell,
            });
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.tau)
            .round()
            .to_usize()
            .expect("step count fits usize")
    }

    pub fn time(&self, k: usize) -> T {
        count::<T>(k) * self.tau
    }

    pub fn forcing_at(&self, k: usize) -> Field<T> {
        self.forcing.eval(&self.grid, self.time(k))
    }
}

/// One accepted time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepState<T> {
    pub k: usize,
    pub t: T,
    pub u: Field<T>,
    pub mu: Field<T>,
    /// Backward difference quotient `(uᵏ − uᵏ⁻¹)/τ`.
    pub w: Field<T>,
    /// `β_λ(w)`.
    pub xi: Field<T>,
    /// Forcing sample `g(·, kτ)` used by the step.
    pub g: Field<T>,
    pub newton_iters: usize,
    pub residual: T,
}

/// A solved run: spec snapshot, states `1..=n`, and the energy ledger.
#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    pub spec: ProblemSpec<T>,
    pub initial: Field<T>,
    pub states: Vec<StepState<T>>,
    pub ledger: EnergyLedger<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn series(&self) -> Series<T> {
        Series {
            tau: self.spec.tau,
            initial: self.initial.clone(),
            u: self.states.iter().map(|s| s.u.clone()).collect(),
            mu: self.states.iter().map(|s| s.mu.clone()).collect(),
        }
    }

    pub fn final_u(&self) -> &Field<T> {
        self.states.last().map_or(&self.initial, |s| &s.u)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StepError {
    #[error("Newton and fallback iterations did not converge (residual {residual:e} after {iterations} iterations)")]
    NonConvergence { residual: f64, iterations: usize },
    #[error("iterate left the potential's domain (cell {cell}, value {value})")]
    DomainEscape { cell: usize, value: f64 },
    #[error(transparent)]
    Domain(#[from] MonotoneError),
    #[error("linear solve failed: {0}")]
    Linear(#[from] BandError),
    #[error("field shape mismatch: {0}")]
    Shape(#[from] GridError),
    #[error("non-finite value produced")]
    NotFinite,
}

/// Failure of a full solve; `partial` holds the accepted steps.
#[derive(Debug, Clone, thiserror::Error)]
#[error("step {step} failed: {source}")]
pub struct SolveError<T: Real> {
    pub step: usize,
    pub source: StepError,
    pub partial: Box<Trajectory<T>>,
}

/// Invalid spec or failed step.
#[derive(Debug, Clone, thiserror::Error)]
pub enum RunError<T: Real> {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Solve(#[from] SolveError<T>),
}

/// Residual of the eliminated step system and the assembled `μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResidual<T> {
    pub r1: Field<T>,
    pub mu: Field<T>,
}

struct Assembly<T> {
    u: Field<T>,
    mu: Field<T>,
    xi: Field<T>,
    r1: Field<T>,
    /// `∂μᵢ/∂wᵢ` without the gradient-energy coupling.
    diag: Vec<T>,
    /// Largest sum of term magnitudes entering one `μᵢ`; sets the rounding
    /// level of `μ`.
    mu_scale: T,
}

/// `lap_prev = Δ_N uᵏ⁻¹` is passed in so that its rounding error is a fixed
/// vector across Newton iterations; recomputing `Δ_N(uᵏ⁻¹ + τw)` would add
/// `O(eps/h²)` noise to `μ` that `Δ_D` then amplifies beyond the tolerance.
fn assemble<T: Real>(
    spec: &ProblemSpec<T>,
    u_prev: &[T],
    lap_prev: &[T],
    w: &[T],
    g: &[T],
) -> Result<Assembly<T>, StepError> {
    let grid = &spec.grid;
    let (eps, delta, lambda, tau) = (spec.epsilon, spec.delta, spec.lambda, spec.tau);
    let k = spec.potential.k();
    let u: Field<T> = u_prev
        .iter()
        .zip(w)
        .map(|(p, wi)| *p + tau * *wi)
        .collect::<Vec<_>>()
        .into();
    if let Some(cell) = u.iter().position(|v| !spec.potential.in_domain(*v)) {
        return Err(StepError::DomainEscape {
            cell,
            value: to_f64(u[cell]),
        });
    }
    let lap_w = grid.lap_neumann(w);
    let n = u.len();
    let mut mu = Vec::with_capacity(n);
    let mut xi = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);
    let mut mu_scale = T::zero();
    let lap_scale = lit::<T>(4.0) / (grid.h() * grid.h());
    for i in 0..n {
        let parts = spec.potential.gamma_parts(lambda, u[i])?;
        let beta = spec.graph.yosida(lambda, w[i]);
        let trunc = truncation(lambda, parts.resolvent);
        let m = compensated_sum(&[
            eps * w[i],
            beta,
            -delta * lap_prev[i],
            -delta * tau * lap_w[i],
            lambda * u[i],
            parts.yosida,
            -k * trunc,
            g[i],
        ]);
        mu_scale = mu_scale.max(
            (eps * w[i]).abs()
                + beta.abs()
                + delta * (lap_prev[i].abs() + tau * lap_scale * w[i].abs())
                + (lambda * u[i]).abs()
                + parts.yosida.abs()
                + (k * trunc).abs()
                + g[i].abs(),
        );
        let bulk_slope = lambda + parts.yosida_derivative
            - k * truncation_derivative(lambda, parts.resolvent) * parts.resolvent_derivative;
        diag.push(eps + spec.graph.yosida_derivative(lambda, w[i]) + tau * bulk_slope);
        mu.push(m);
        xi.push(beta);
    }
    let mu = Field(mu);
    let lap_mu = grid.lap_dirichlet(&mu);
    let r1 = Field(w.iter().zip(lap_mu.iter()).map(|(a, b)| *a - *b).collect());
    Ok(Assembly {
        u,
        mu,
        xi: Field(xi),
        r1,
        diag,
        mu_scale,
    })
}

/// Neumaier summation. The terms of `μ` cancel to a much smaller value, and
/// plain summation would leave rounding noise that `Δ_D` amplifies by `4/h²`.
fn compensated_sum<T: Real>(terms: &[T]) -> T {
    let mut sum = T::zero();
    let mut carry = T::zero();
    for &t in terms {
        let next = sum + t;
        carry += if sum.abs() >= t.abs() {
            (sum - next) + t
        } else {
            (t - next) + sum
        };
        sum = next;
    }
    sum + carry
}

/// Residual `r1 = w − Δ_D μ` of one step together with the assembled `μ`.
pub fn step_residual<T: Real>(
    spec: &ProblemSpec<T>,
    u_prev: &Field<T>,
    w: &Field<T>,
    g: &Field<T>,
) -> Result<StepResidual<T>, StepError> {
    for f in [u_prev, w, g] {
        spec.grid.check(f)?;
    }
    let a = assemble(spec, u_prev, &spec.grid.lap_neumann(u_prev), w, g)?;
    Ok(StepResidual { r1: a.r1, mu: a.mu })
}

/// `I − Δ_D·(diag(d) − cΔ_N)` as a pentadiagonal band matrix.
fn jacobian<T: Real>(grid: &Grid1D<T>, diag: &[T], coupling: T) -> BandMatrix<T> {
    let n = diag.len();
    let inv_h2 = (grid.h() * grid.h()).recip();
    let two = lit::<T>(2.0);
    // M = diag(d) − cΔ_N, tridiagonal
    let m_diag: Vec<T> = (0..n)
        .map(|i| {
            let lap_ii = if i == 0 || i + 1 == n {
                -inv_h2
            } else {
                -two * inv_h2
            };
            diag[i] - coupling * lap_ii
        })
        .collect();
    let m_off = -coupling * inv_h2;
    let m = |i: usize, j: usize| -> T {
        if i == j {
            m_diag[i]
        } else if i + 1 == j || j + 1 == i {
            m_off
        } else {
            T::zero()
        }
    };
    let ld = |i: usize, j: usize| -> T {
        if i == j {
            if i == 0 || i + 1 == n {
                -lit::<T>(3.0) * inv_h2
            } else {
                -two * inv_h2
            }
        } else if i + 1 == j || j + 1 == i {
            inv_h2
        } else {
            T::zero()
        }
    };
    let mut jac = BandMatrix::zeros(n, 2, 2);
    for i in 0..n {
        jac.add(i, i, T::one());
        for kk in i.saturating_sub(1)..(i + 2).min(n) {
            let l = ld(i, kk);
            for j in kk.saturating_sub(1)..(kk + 2).min(n) {
                let v = m(kk, j);
                if v != T::zero() {
                    jac.add(i, j, -l * v);
                }
            }
        }
    }
    jac
}

fn sup<T: Real>(f: &[T]) -> T {
    f.iter().fold(T::zero(), |m, v| {
        if v.is_nan() {
            T::nan()
        } else {
            m.max(v.abs())
        }
    })
}

/// Roundoff floor of `r1`: relative error `eps` on the largest terms of
/// `w − Δ_D μ`.
fn noise_floor<T: Real>(grid: &Grid1D<T>, a: &Assembly<T>, w: &[T]) -> T {
    let scale = sup(w) + lit::<T>(4.0) * a.mu_scale / (grid.h() * grid.h());
    lit::<T>(4.0) * T::epsilon() * scale
}

fn newton_direction<T: Real>(
    grid: &Grid1D<T>,
    a: &Assembly<T>,
    coupling: T,
) -> Result<Vec<T>, StepError> {
    let rhs: Vec<T> = a.r1.iter().map(|r| -*r).collect();
    Ok(jacobian(grid, &a.diag, coupling).factorize()?.solve(&rhs)?)
}

fn axpy<T: Real>(w: &[T], alpha: T, d: &[T]) -> Vec<T> {
    w.iter().zip(d).map(|(a, b)| *a + alpha * *b).collect()
}

/// Damped Newton with backtracking on the sup norm, then a relaxed
/// fixed-point sweep (Newton direction with fixed relaxation) if Newton
/// stagnates.
///
/// Converged means `‖r1‖∞ ≤ max(tol, floor)` with `floor` the roundoff level
/// of the residual evaluation; up to two extra full steps are then taken as
/// long as they keep reducing the residual.
fn newton<T: Real, F>(
    grid: &Grid1D<T>,
    opts: &SolverOptions<T>,
    coupling: T,
    tol: T,
    w_init: &[T],
    eval: F,
) -> Result<(Field<T>, Assembly<T>, usize), StepError>
where
    F: Fn(&[T]) -> Result<Assembly<T>, StepError>,
{
    let mut w: Vec<T> = w_init.to_vec();
    let mut current = match eval(&w) {
        Ok(a) => a,
        Err(StepError::DomainEscape { .. }) => {
            // cold start from the previous state
            w.iter_mut().for_each(|v| *v = T::zero());
            eval(&w)?
        }
        Err(e) => return Err(e),
    };
    let mut res = sup(&current.r1);
    let mut iters = 0;
    let mut polished = 0;
    let converged = |res: T, a: &Assembly<T>, w: &[T]| res <= tol.max(noise_floor(grid, a, w));
    let mut escape = None;
    while iters < opts.max_newton {
        if res.is_nan() {
            return Err(StepError::NotFinite);
        }
        let done = converged(res, &current, &w);
        if done && (polished >= 2 || res <= tol * lit(1e-3)) {
            return Ok((Field(w), current, iters));
        }
        let dir = newton_direction(grid, &current, coupling)?;
        iters += 1;
        if done {
            polished += 1;
            match eval(&axpy(&w, T::one(), &dir)) {
                Ok(a) if sup(&a.r1) < res => {
                    w = axpy(&w, T::one(), &dir);
                    res = sup(&a.r1);
                    current = a;
                    continue;
                }
                _ => return Ok((Field(w), current, iters)),
            }
        }
        let mut alpha = T::one();
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = axpy(&w, alpha, &dir);
            match eval(&trial) {
                Ok(a) => {
                    let r = sup(&a.r1);
                    if r <= (T::one() - lit::<T>(1e-4) * alpha) * res {
                        accepted = Some((trial, a, r));
                        break;
                    }
                }
                Err(e @ StepError::DomainEscape { .. }) => escape = Some(e),
                Err(e) => return Err(e),
            }
            alpha *= lit(0.5);
        }
        match accepted {
            Some((trial, a, r)) => {
                w = trial;
                current = a;
                res = r;
            }
            None => break,
        }
    }
    if converged(res, &current, &w) {
        return Ok((Field(w), current, iters));
    }
    for _ in 0..opts.fallback_iterations {
        let dir = newton_direction(grid, &current, coupling)?;
        let mut step = opts.relaxation;
        let mut next = None;
        for _ in 0..=opts.max_halvings {
            let trial = axpy(&w, step, &dir);
            match eval(&trial) {
                Ok(a) => {
                    next = Some((trial, a));
                    break;
                }
                Err(e @ StepError::DomainEscape { .. }) => {
                    escape = Some(e);
                    step *= lit(0.5);
                }
                Err(e) => return Err(e),
            }
        }
        let Some((trial, a)) = next else {
            return Err(escape.expect("only domain escapes shorten the step"));
        };
        w = trial;
        current = a;
        res = sup(&current.r1);
        iters += 1;
        if res.is_nan() {
            return Err(StepError::NotFinite);
        }
        if converged(res, &current, &w) {
            return Ok((Field(w), current, iters));
        }
    }
    Err(StepError::NonConvergence {
        residual: to_f64(res),
        iterations: iters,
    })
}

/// Solves one step starting from `w_init`.
pub fn newton_step_solve<T: Real>(
    spec: &ProblemSpec<T>,
    u_prev: &Field<T>,
    g: &Field<T>,
    w_init: &Field<T>,
    k: usize,
) -> Result<StepState<T>, StepError> {
    for f in [u_prev, g, w_init] {
        spec.grid.check(f)?;
    }
    let tol = spec.solver.tol * (T::one() + spec.grid.norm_sup(g));
    let coupling = spec.tau * spec.delta;
    let lap_prev = spec.grid.lap_neumann(u_prev);
    let (w, a, iters) = newton(&spec.grid, &spec.solver, coupling, tol, w_init, |w| {
        assemble(spec, u_prev, &lap_prev, w, g)
    })?;
    let residual = sup(&a.r1);
    if !(a.u.all_finite() && a.mu.all_finite()) {
        return Err(StepError::NotFinite);
    }
    // Conservative update: take the increment from the flux of the converged
    // μ, so the mass balance holds to rounding instead of to the Newton
    // residual. The change is of the size of the residual.
    let w_flux = spec.grid.lap_dirichlet(&a.mu);
    let u_flux = Field(axpy(u_prev, spec.tau, &w_flux));
    let (a_dom, b_dom) = (spec.potential.a(), spec.potential.b());
    let inside = u_flux.iter().all(|&v| v > a_dom && v < b_dom);
    let (u, w, xi) = if inside {
        let xi = w_flux
            .iter()
            .map(|v| spec.graph.yosida(spec.lambda, *v))
            .collect();
        (u_flux, w_flux, Field(xi))
    } else {
        (a.u, w, a.xi)
    };
    Ok(StepState {
        k,
        t: spec.time(k),
        u,
        mu: a.mu,
        w,
        xi,
        g: g.clone(),
        newton_iters: iters,
        residual,
    })
}

/// Runs all `T/τ` steps, warm-starting each Newton solve from the previous `w`.
pub fn solve<T: Real>(spec: &ProblemSpec<T>) -> Result<Trajectory<T>, RunError<T>> {
    spec.validate()?;
    let n = spec.steps();
    let mut states: Vec<StepState<T>> = Vec::with_capacity(n);
    let mut u = spec.u0.clone();
    let mut w = spec.grid.zeros();
    for k in 1..=n {
        let g = spec.forcing_at(k);
        let start = if spec.solver.warm_start {
            w.clone()
        } else {
            spec.grid.zeros()
        };
        match newton_step_solve(spec, &u, &g, &start, k) {
            Ok(state) => {
                u = state.u.clone();
                w = state.w.clone();
                states.push(state);
            }
            Err(source) => {
                let partial = finish(spec, states);
                return Err(SolveError {
                    step: k,
                    source,
                    partial: Box::new(partial),
                }
                .into());
            }
        }
    }
    Ok(finish(spec, states))
}

fn finish<T: Real>(spec: &ProblemSpec<T>, states: Vec<StepState<T>>) -> Trajectory<T> {
    let ledger = EnergyLedger::build(spec, &spec.u0, &states);
    Trajectory {
        spec: spec.clone(),
        initial: spec.u0.clone(),
        states,
        ledger,
    }
}

/// `(μ, w, ξ)` triple.
pub type Rates<T> = (Field<T>, Field<T>, Field<T>);

/// Initial rates `(μ₀, w₀, ξ₀)` solving `w₀ − Δ_D μ₀ = 0`,
/// `μ₀ = εw₀ + β_λ(w₀) + z₀`, `z₀ = −δΔ_N u₀ + ψ′(u₀) + g(0)`.
pub fn initial_rates<T: Real>(spec: &ProblemSpec<T>) -> Result<Rates<T>, StepError> {
    let grid = &spec.grid;
    let lap = grid.lap_neumann(&spec.u0);
    let g0 = spec.forcing_at(0);
    let mut z0 = Vec::with_capacity(grid.cells());
    for i in 0..grid.cells() {
        z0.push(-spec.delta * lap[i] + spec.potential.psi_prime(spec.u0[i])? + g0[i]);
    }
    let lambda = spec.lambda;
    let eval = |w: &[T]| -> Result<Assembly<T>, StepError> {
        let xi: Vec<T> = w.iter().map(|v| spec.graph.yosida(lambda, *v)).collect();
        let mu: Field<T> = Field(
            (0..w.len())
                .map(|i| spec.epsilon * w[i] + xi[i] + z0[i])
                .collect(),
        );
        let lap_mu = grid.lap_dirichlet(&mu);
        let r1 = Field(w.iter().zip(lap_mu.iter()).map(|(a, b)| *a - *b).collect());
        let diag = w
            .iter()
            .map(|v| spec.epsilon + spec.graph.yosida_derivative(lambda, *v))
            .collect();
        let mu_scale = (0..w.len())
            .map(|i| (spec.epsilon * w[i]).abs() + xi[i].abs() + z0[i].abs())
            .fold(T::zero(), T::max);
        Ok(Assembly {
            u: spec.u0.clone(),
            mu,
            xi: Field(xi),
            r1,
            diag,
            mu_scale,
        })
    };
    let tol = spec.solver.tol * (T::one() + grid.norm_sup(&g0));
    let (w, a, _) = newton(grid, &spec.solver, T::zero(), tol, &grid.zeros(), eval)?;
    Ok((a.mu, w, a.xi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quartic_spec(
        graph: GraphSpec<f64>,
        eps: f64,
        delta: f64,
        lambda: f64,
        n: usize,
    ) -> ProblemSpec<f64> {
        let grid = Grid1D::<f64>::new(1.0, n).unwrap();
        let u0 = grid.sample(|x| 0.9 * (std::f64::consts::PI * x).cos());
        ProblemSpec::new(
            eps,
            delta,
            lambda,
            1e-3,
            0.01,
            grid,
            graph,
            PotentialSpec::<f64>::double_well(1.0, 1.0, 1.0).unwrap(),
            Forcing::Zero,
            u0,
        )
        .unwrap()
    }

    #[test]
    fn residual_at_gamma_root_is_boundary_only() {
        // r₀ = 0 for the symmetric double well, so μ = λ r₀ = 0 everywhere
        let spec = quartic_spec(GraphSpec::Sign, 1.0, 1.0, 1e-5, 16);
        let zero = spec.grid.zeros();
        let res = step_residual(&spec, &zero, &zero, &zero).unwrap();
        assert!(res.mu.iter().all(|m| *m == 0.0));
        assert!(res.r1.iter().all(|r| *r == 0.0));
    }

    #[test]
    fn residual_at_shifted_root() {
        // tilted quartic with r₀ ≠ 0: γ_λ(r₀) = 0 and the resolvent fixes r₀,
        // so μ = λr₀ − K r₀ = λr₀ + ψ′(r₀) at w = 0
        let mut spec = quartic_spec(GraphSpec::Zero, 1.0, 1.0, 1e-3, 8);
        spec.potential =
            PotentialSpec::<f64>::polynomial(vec![0.0, 0.3, -0.5, 0.0, 0.25], 1.0).unwrap();
        let r0 = spec.potential.r0();
        let u = spec.grid.constant(r0);
        let zero = spec.grid.zeros();
        let res = step_residual(&spec, &u, &zero, &zero).unwrap();
        for m in res.mu.iter() {
            assert!((m - (1e-3 - 1.0) * r0).abs() < 1e-15);
        }
        let expect = spec.grid.lap_dirichlet(&res.mu).scale(-1.0);
        for (a, b) in res.r1.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(res.r1[1..7].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn regularized_chain_at_well_bottom() {
        let spec = quartic_spec(GraphSpec::Zero, 1.0, 1.0, 1e-6, 16);
        let u = spec.grid.constant(1.0);
        let zero = spec.grid.zeros();
        let res = step_residual(&spec, &u, &zero, &zero).unwrap();
        assert!(res.mu.iter().all(|m| m.abs() < 2e-6));
    }

    #[test]
    fn domain_escape_is_an_error_not_a_panic() {
        let mut spec = quartic_spec(GraphSpec::Zero, 1.0, 1.0, 1e-5, 8);
        spec.potential = PotentialSpec::<f64>::logarithmic(1.0, 2.0, 2.0).unwrap();
        let u = spec.grid.constant(0.5);
        let w = spec.grid.constant(1e4);
        let zero = spec.grid.zeros();
        assert!(matches!(
            step_residual(&spec, &u, &w, &zero),
            Err(StepError::DomainEscape { cell: 0, .. })
        ));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let spec = quartic_spec(
            GraphSpec::<f64>::power(3.0, 0.7).unwrap(),
            0.5,
            0.3,
            1e-2,
            8,
        );
        let u = spec.grid.sample(|x| 0.4 * (3.0 * x).sin());
        let g = spec.grid.sample(|x| x - 0.5);
        let w: Field<f64> = spec.grid.sample(|x| 0.2 * x * x - 0.1);
        let lap = spec.grid.lap_neumann(&u);
        let base = assemble(&spec, &u, &lap, &w, &g).unwrap();
        let jac = jacobian(&spec.grid, &base.diag, spec.tau * spec.delta);
        for j in 0..8 {
            let mut wp = w.clone();
            let h = 1e-6;
            wp[j] += h;
            let rp = assemble(&spec, &u, &lap, &wp, &g).unwrap().r1;
            for i in 0..8 {
                let fd = (rp[i] - base.r1[i]) / h;
                let an = jac.get(i, j);
                assert!(
                    (fd - an).abs() <= 1e-4 * (1.0 + an.abs()),
                    "({i},{j}) {fd} vs {an}"
                );
            }
        }
    }
}
