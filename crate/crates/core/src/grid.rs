//! Cell-centered finite differences on `(0, L)`.
//!
//! `u` carries homogeneous Neumann conditions (mirrored ghost cells) and `μ`
//! homogeneous Dirichlet conditions (antisymmetric ghost cells, so the zero
//! sits on the boundary faces). Both live on the same cell centers
//! `x_i = (i + 1/2)h`.

use std::ops::{Deref, DerefMut};

use crate::scalar::{count, lit, Real};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("grid needs L > 0 and N >= 4, got L = {length}, N = {cells}")]
    Invalid { length: f64, cells: usize },
    #[error("field has {got} entries, grid has {expected} cells")]
    Length { expected: usize, got: usize },
    #[error("series length mismatch: {0} vs {1} steps")]
    SeriesLength(usize, usize),
    #[error("series time steps differ: {0} vs {1}")]
    SeriesStep(f64, f64),
}

/// Boundary convention for the gradient seminorm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bc {
    Neumann,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D<T> {
    length: T,
    cells: usize,
    h: T,
}

impl<T: Real> Grid1D<T> {
    pub fn new(length: T, cells: usize) -> Result<Self, GridError> {
        if !(length > T::zero()) || !length.is_finite() || cells < 4 {
            return Err(GridError::Invalid {
                length: crate::scalar::to_f64(length),
                cells,
            });
        }
        Ok(Self {
            length,
            cells,
            h: length / count(cells),
        })
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn center(&self, i: usize) -> T {
        (count::<T>(i) + lit(0.5)) * self.h
    }

    pub fn centers(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.cells).map(|i| self.center(i))
    }

    /// Samples `f` at the cell centers.
    pub fn sample(&self, f: impl Fn(T) -> T) -> Field<T> {
        Field(self.centers().map(f).collect())
    }

    pub fn zeros(&self) -> Field<T> {
        Field(vec![T::zero(); self.cells])
    }

    pub fn constant(&self, c: T) -> Field<T> {
        Field(vec![c; self.cells])
    }

    pub fn check(&self, f: &Field<T>) -> Result<(), GridError> {
        if f.len() == self.cells {
            Ok(())
        } else {
            Err(GridError::Length {
                expected: self.cells,
                got: f.len(),
            })
        }
    }

    fn laplacian(&self, f: &[T], ghost_sign: T) -> Field<T> {
        let n = f.len();
        let inv_h2 = (self.h * self.h).recip();
        Field(
            (0..n)
                .map(|i| {
                    let left = if i == 0 { ghost_sign * f[0] } else { f[i - 1] };
                    let right = if i + 1 == n {
                        ghost_sign * f[n - 1]
                    } else {
                        f[i + 1]
                    };
                    // difference of face differences: neighbouring values are
                    // close, so each difference is nearly exact
                    ((right - f[i]) - (f[i] - left)) * inv_h2
                })
                .collect(),
        )
    }

    /// Three-point Laplacian with mirrored ghosts (`∂ₙf = 0`).
    pub fn lap_neumann(&self, f: &[T]) -> Field<T> {
        self.laplacian(f, T::one())
    }

    /// Three-point Laplacian with antisymmetric ghosts (`f = 0` on the faces).
    pub fn lap_dirichlet(&self, f: &[T]) -> Field<T> {
        self.laplacian(f, -T::one())
    }

    /// Outward face fluxes `(left, right)` with `h·Σ lap_dirichlet(μ) = right − left`.
    pub fn boundary_flux(&self, mu: &[T]) -> (T, T) {
        let two = lit::<T>(2.0);
        let n = mu.len();
        (two * mu[0] / self.h, -two * mu[n - 1] / self.h)
    }

    pub fn norm_l2(&self, f: &[T]) -> T {
        (self.h * f.iter().map(|v| *v * *v).sum::<T>()).sqrt()
    }

    pub fn norm_sup(&self, f: &[T]) -> T {
        f.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn inner(&self, f: &[T], g: &[T]) -> T {
        self.h * f.iter().zip(g).map(|(a, b)| *a * *b).sum::<T>()
    }

    /// Discrete `‖∇f‖`: interior face differences, plus for Dirichlet the two
    /// half-cell differences to the zero boundary value. With these
    /// conventions `h1_seminorm(f, bc)² = −h·Σ f·lap_bc(f)` exactly.
    pub fn h1_seminorm(&self, f: &[T], bc: Bc) -> T {
        let h = self.h;
        let interior: T = f
            .windows(2)
            .map(|w| {
                let d = (w[1] - w[0]) / h;
                d * d
            })
            .sum::<T>()
            * h;
        let boundary = match bc {
            Bc::Neumann => T::zero(),
            Bc::Dirichlet => {
                let half = h * lit(0.5);
                let l = f[0] / half;
                let r = f[f.len() - 1] / half;
                (l * l + r * r) * half
            }
        };
        (interior + boundary).sqrt()
    }

    /// Full `H¹` norm with the Neumann seminorm.
    pub fn norm_h1(&self, f: &[T]) -> T {
        let l2 = self.norm_l2(f);
        let semi = self.h1_seminorm(f, Bc::Neumann);
        (l2 * l2 + semi * semi).sqrt()
    }

    pub fn mean(&self, f: &[T]) -> T {
        self.h * f.iter().copied().sum::<T>() / self.length
    }

    /// `h·Σ f`, the discrete mass.
    pub fn mass(&self, f: &[T]) -> T {
        self.h * f.iter().copied().sum::<T>()
    }
}

/// Values of one scalar field on the grid cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Field<T>(pub Vec<T>);

impl<T: Real> Field<T> {
    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Field(self.0.iter().map(|v| f(*v)).collect())
    }

    pub fn zip_map(&self, other: &[T], f: impl Fn(T, T) -> T) -> Self {
        Field(self.0.iter().zip(other).map(|(a, b)| f(*a, *b)).collect())
    }

    pub fn sub(&self, other: &[T]) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &[T]) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    pub fn min(&self) -> T {
        self.0.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.0.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl<T> Deref for Field<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> DerefMut for Field<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.0
    }
}

impl<T> From<Vec<T>> for Field<T> {
    fn from(v: Vec<T>) -> Self {
        Field(v)
    }
}

/// Space-time norms evaluated on a [`Series`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpacetimeNorm {
    /// `L²(0,T; V₀)` of `μ` with the Dirichlet gradient seminorm.
    L2V0,
    /// `H¹(0,T; H)` of `u`, with backward difference quotients.
    H1H,
    /// `L²(0,T; H)` of `u`.
    L2H,
    /// `L∞(0,T; H)` of `u`, including the initial value.
    LinfH,
    /// `L∞(0,T; V)` of `u` with the full `H¹` norm.
    LinfV,
}

/// Time-indexed `u` and `μ` values on a uniform step, used for norms of
/// trajectories and of differences between trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<T> {
    pub tau: T,
    /// `u⁰`.
    pub initial: Field<T>,
    /// `u¹ … uⁿ`.
    pub u: Vec<Field<T>>,
    /// `μ¹ … μⁿ`.
    pub mu: Vec<Field<T>>,
}

impl<T: Real> Series<T> {
    /// `self − other`, requiring matching step count and time step.
    pub fn difference(&self, other: &Series<T>) -> Result<Series<T>, GridError> {
        if self.u.len() != other.u.len() || self.mu.len() != other.mu.len() {
            return Err(GridError::SeriesLength(self.u.len(), other.u.len()));
        }
        let rel = ((self.tau - other.tau) / self.tau).abs();
        if rel > lit(1e-12) {
            return Err(GridError::SeriesStep(
                crate::scalar::to_f64(self.tau),
                crate::scalar::to_f64(other.tau),
            ));
        }
        Ok(Series {
            tau: self.tau,
            initial: self.initial.sub(&other.initial),
            u: self.u.iter().zip(&other.u).map(|(a, b)| a.sub(b)).collect(),
            mu: self
                .mu
                .iter()
                .zip(&other.mu)
                .map(|(a, b)| a.sub(b))
                .collect(),
        })
    }

    /// Rectangle rule over the step values.
    pub fn norm(&self, grid: &Grid1D<T>, which: SpacetimeNorm) -> T {
        let tau = self.tau;
        match which {
            SpacetimeNorm::L2V0 => (tau
                * self
                    .mu
                    .iter()
                    .map(|m| grid.h1_seminorm(m, Bc::Dirichlet).powi(2))
                    .sum::<T>())
            .sqrt(),
            SpacetimeNorm::L2H => {
                (tau * self.u.iter().map(|u| grid.norm_l2(u).powi(2)).sum::<T>()).sqrt()
            }
            SpacetimeNorm::H1H => {
                let values: T = self.u.iter().map(|u| grid.norm_l2(u).powi(2)).sum();
                let mut prev = &self.initial;
                let mut rates = T::zero();
                for u in &self.u {
                    let d = u.sub(prev).scale(tau.recip());
                    rates += grid.norm_l2(&d).powi(2);
                    prev = u;
                }
                (tau * (values + rates)).sqrt()
            }
            SpacetimeNorm::LinfH => std::iter::once(&self.initial)
                .chain(&self.u)
                .map(|u| grid.norm_l2(u))
                .fold(T::zero(), T::max),
            SpacetimeNorm::LinfV => std::iter::once(&self.initial)
                .chain(&self.u)
                .map(|u| grid.norm_h1(u))
                .fold(T::zero(), T::max),
        }
    }
}
