//! Scalar root finding and minimization used by the monotone toolkit and the
//! bound report.

use crate::scalar::{lit, Real};

/// Absolute tolerance of every scalar solve.
pub const SCALAR_TOL: f64 = 1e-13;
/// Iteration cap of every scalar solve.
pub const SCALAR_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum RootError {
    #[error("residual does not change sign on [{lo}, {hi}] (f(lo) = {flo}, f(hi) = {fhi})")]
    Bracket {
        lo: f64,
        hi: f64,
        flo: f64,
        fhi: f64,
    },
    #[error("could not bracket a root starting from {start}")]
    Unbounded { start: f64 },
}

/// Root of a nondecreasing function on `[lo, hi]` by bisection.
///
/// Requires `f(lo) <= 0 <= f(hi)`. Stops when the bracket is narrower than
/// `tol` or cannot be split further in the floating point format.
pub fn bisect<T: Real>(
    mut f: impl FnMut(T) -> T,
    mut lo: T,
    mut hi: T,
    tol: T,
) -> Result<T, RootError> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo > T::zero() || fhi < T::zero() || flo.is_nan() || fhi.is_nan() {
        return Err(bracket_err(lo, hi, flo, fhi));
    }
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    let two = lit::<T>(2.0);
    for _ in 0..SCALAR_MAX_ITER {
        let mid = lo + (hi - lo) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == T::zero() {
            return Ok(mid);
        }
        if fm < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol {
            break;
        }
    }
    Ok(lo + (hi - lo) / two)
}

/// Safeguarded Newton iteration for a nondecreasing `f` on `[lo, hi]`.
///
/// Newton steps that leave the current bracket, or that fail to shrink it
/// fast enough, are replaced by bisection. `fdf` returns `(f, f')`. With
/// `tol = 0` the iteration runs to full floating point precision.
pub fn newton_bisect<T: Real>(
    mut fdf: impl FnMut(T) -> (T, T),
    mut lo: T,
    mut hi: T,
    start: T,
    tol: T,
) -> Result<T, RootError> {
    let (flo, _) = fdf(lo);
    let (fhi, _) = fdf(hi);
    if flo > T::zero() || fhi < T::zero() || flo.is_nan() || fhi.is_nan() {
        return Err(bracket_err(lo, hi, flo, fhi));
    }
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    let two = lit::<T>(2.0);
    let mut x = if start > lo && start < hi {
        start
    } else {
        lo + (hi - lo) / two
    };
    let mut last_step = hi - lo;
    for _ in 0..SCALAR_MAX_ITER {
        let (fx, dfx) = fdf(x);
        if fx == T::zero() {
            return Ok(x);
        }
        if fx < T::zero() {
            lo = x;
        } else {
            hi = x;
        }
        let mid = lo + (hi - lo) / two;
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let newton = x - fx / dfx;
        let accept = dfx > T::zero()
            && newton.is_finite()
            && newton > lo
            && newton < hi
            && (two * fx).abs() <= (last_step * dfx).abs();
        let next = if accept { newton } else { mid };
        last_step = (next - x).abs();
        x = next;
        if accept && (last_step <= tol * lit(0.25) || last_step <= T::epsilon() * x.abs()) {
            return Ok(x);
        }
    }
    Ok(lo + (hi - lo) / two)
}

/// Expands `[start - step, start + step]` geometrically until the nondecreasing
/// `f` changes sign, and returns the bracket.
pub fn expand_bracket<T: Real>(
    mut f: impl FnMut(T) -> T,
    start: T,
    step: T,
) -> Result<(T, T), RootError> {
    let mut lo = start - step;
    let mut hi = start + step;
    let mut width = step;
    let two = lit::<T>(2.0);
    for _ in 0..SCALAR_MAX_ITER {
        let flo = f(lo);
        let fhi = f(hi);
        if flo <= T::zero() && fhi >= T::zero() {
            return Ok((lo, hi));
        }
        width *= two;
        if flo > T::zero() {
            lo -= width;
        }
        if fhi < T::zero() {
            hi += width;
        }
        if !lo.is_finite() || !hi.is_finite() {
            break;
        }
    }
    Err(RootError::Unbounded {
        start: crate::scalar::to_f64(start),
    })
}

/// Golden-section minimization on `[lo, hi]`; returns `(argmin, min)`.
pub fn golden_min<T: Real>(mut f: impl FnMut(T) -> T, mut lo: T, mut hi: T, tol: T) -> (T, T) {
    let inv_phi = (lit::<T>(5.0).sqrt() - T::one()) / lit(2.0);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..SCALAR_MAX_ITER {
        if (hi - lo).abs() <= tol {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn bracket_err<T: Real>(lo: T, hi: T, flo: T, fhi: T) -> RootError {
    use crate::scalar::to_f64;
    RootError::Bracket {
        lo: to_f64(lo),
        hi: to_f64(hi),
        flo: to_f64(flo),
        fhi: to_f64(fhi),
    }
}
