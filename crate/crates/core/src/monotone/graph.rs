//! Scalar maximal monotone graphs `β = ∂β̂` and their regularizations.

use std::fmt;
use std::sync::Arc;

use crate::roots::newton_bisect;
use crate::scalar::{lit, Real};

use super::MonotoneError;

/// User-supplied maximal monotone graph with `0 ∈ β(0)`.
///
/// Implementors provide the resolvent and the two convex potentials; the
/// Yosida quantities are derived from them.
pub trait ScalarGraph<T: Real>: Send + Sync {
    /// `(I + λβ)⁻¹(r)`.
    fn resolvent(&self, lambda: T, r: T) -> T;
    /// `β̂(r)`, possibly `+∞`.
    fn potential(&self, r: T) -> T;
    /// Convex conjugate of `β̂` at `s`, possibly `+∞`.
    fn conjugate(&self, s: T) -> T;
    /// Right derivative of the Yosida approximation. The default uses a
    /// one-sided difference quotient.
    fn yosida_derivative(&self, lambda: T, r: T) -> T {
        let step = lit::<T>(1e-7) * (T::one() + r.abs());
        let y0 = (r - self.resolvent(lambda, r)) / lambda;
        let y1 = (r + step - self.resolvent(lambda, r + step)) / lambda;
        ((y1 - y0) / step).max(T::zero()).min(lambda.recip())
    }
    fn name(&self) -> &str {
        "custom"
    }
}

/// Continuous nondecreasing piecewise-linear graph through the origin.
///
/// `slopes[j]` applies on `[breakpoints[j-1], breakpoints[j])`, with the
/// first and last pieces extending to infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear<T> {
    breakpoints: Vec<T>,
    slopes: Vec<T>,
}

impl<T: Real> PiecewiseLinear<T> {
    pub fn new(breakpoints: Vec<T>, slopes: Vec<T>) -> Result<Self, MonotoneError> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(MonotoneError::InvalidGraph(format!(
                "piecewise-linear graph needs {} slopes for {} breakpoints, got {}",
                breakpoints.len() + 1,
                breakpoints.len(),
                slopes.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite())
            || breakpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(MonotoneError::InvalidGraph(
                "breakpoints must be finite and strictly increasing".into(),
            ));
        }
        if slopes.iter().any(|s| !s.is_finite() || *s < T::zero()) {
            return Err(MonotoneError::InvalidGraph(
                "slopes must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            breakpoints,
            slopes,
        })
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[T] {
        &self.slopes
    }

    /// Index of the piece containing `r`; breakpoints belong to the piece on
    /// their right.
    fn piece(&self, r: T) -> usize {
        self.breakpoints.partition_point(|b| *b <= r)
    }

    /// Pieces traversed from 0 to `r` as `(from, to, slope)` triples.
    fn walk(&self, r: T) -> Vec<(T, T, T)> {
        let mut out = Vec::new();
        let mut x = T::zero();
        if r >= T::zero() {
            let mut j = self.piece(T::zero());
            while x < r {
                let end = self
                    .breakpoints
                    .get(j)
                    .copied()
                    .unwrap_or(T::infinity())
                    .min(r);
                out.push((x, end, self.slopes[j]));
                x = end;
                j += 1;
            }
        } else {
            // pieces to the left of 0: a breakpoint at exactly 0 starts the piece to its right
            let mut j = self.breakpoints.partition_point(|b| *b < T::zero());
            while x > r {
                let start = if j == 0 {
                    T::neg_infinity()
                } else {
                    self.breakpoints[j - 1]
                };
                let end = start.max(r);
                out.push((x, end, self.slopes[j]));
                x = end;
                if j == 0 {
                    break;
                }
                j -= 1;
            }
        }
        out
    }

    pub fn value(&self, r: T) -> T {
        self.walk(r)
            .into_iter()
            .fold(T::zero(), |acc, (a, b, s)| acc + s * (b - a))
    }

    pub fn potential(&self, r: T) -> T {
        let mut beta = T::zero();
        let mut acc = T::zero();
        let half = lit::<T>(0.5);
        for (a, b, s) in self.walk(r) {
            let d = b - a;
            acc += beta * d + half * s * d * d;
            beta += s * d;
        }
        acc
    }

    fn sup(&self) -> T {
        match self.breakpoints.last() {
            Some(&b) if *self.slopes.last().unwrap() == T::zero() => self.value(b),
            Some(_) => T::infinity(),
            None if self.slopes[0] == T::zero() => T::zero(),
            None => T::infinity(),
        }
    }

    fn inf(&self) -> T {
        match self.breakpoints.first() {
            Some(&b) if self.slopes[0] == T::zero() => self.value(b),
            Some(_) => T::neg_infinity(),
            None if self.slopes[0] == T::zero() => T::zero(),
            None => T::neg_infinity(),
        }
    }

    pub fn resolvent(&self, lambda: T, r: T) -> T {
        // s + λβ(s) is strictly increasing and affine on each piece
        let lifted = |s: T| s + lambda * self.value(s);
        let j = self.breakpoints.partition_point(|b| lifted(*b) <= r);
        let (anchor, anchor_val) = if j == 0 {
            match self.breakpoints.first() {
                Some(&b) => (b, lifted(b)),
                None => (T::zero(), T::zero()),
            }
        } else {
            let b = self.breakpoints[j - 1];
            (b, lifted(b))
        };
        anchor + (r - anchor_val) / (T::one() + lambda * self.slopes[j])
    }

    pub fn yosida_derivative(&self, lambda: T, r: T) -> T {
        let s = self.slopes[self.piece(self.resolvent(lambda, r))];
        s / (T::one() + lambda * s)
    }

    pub fn conjugate(&self, s: T) -> T {
        if s > self.sup() || s < self.inf() {
            return T::infinity();
        }
        if s == T::zero() {
            return T::zero();
        }
        // find r with β(r) = s, walking away from the origin
        let far = if s > T::zero() {
            T::infinity()
        } else {
            T::neg_infinity()
        };
        let mut beta = T::zero();
        let mut r = T::zero();
        for (a, b, slope) in self.walk(far) {
            let next = beta + slope * (b - a);
            let reached = if s > T::zero() { next >= s } else { next <= s };
            if reached || !b.is_finite() {
                r = if slope > T::zero() {
                    a + (s - beta) / slope
                } else {
                    a
                };
                break;
            }
            beta = next;
        }
        r * s - self.potential(r)
    }
}

/// A scalar maximal monotone graph `β` with `0 ∈ β(0)`.
#[derive(Clone)]
pub enum GraphSpec<T: Real> {
    /// `β ≡ 0`.
    Zero,
    /// The multivalued sign graph, `β̂ = |·|`.
    Sign,
    /// `β(r) = κ|r|^p sign(r)`, `β̂(r) = κ|r|^{p+1}/(p+1)`.
    Power {
        exponent: T,
        coefficient: T,
    },
    PiecewiseLinear(PiecewiseLinear<T>),
    Custom(Arc<dyn ScalarGraph<T>>),
}

impl<T: Real> fmt::Debug for GraphSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Sign => write!(f, "Sign"),
            Self::Power {
                exponent,
                coefficient,
            } => write!(
                f,
                "Power {{ exponent: {exponent}, coefficient: {coefficient} }}"
            ),
            Self::PiecewiseLinear(p) => write!(f, "PiecewiseLinear({p:?})"),
            Self::Custom(g) => write!(f, "Custom({})", g.name()),
        }
    }
}

impl<T: Real> GraphSpec<T> {
    pub fn power(exponent: T, coefficient: T) -> Result<Self, MonotoneError> {
        if !(exponent >= T::one()) || !(coefficient > T::zero()) || !exponent.is_finite() {
            return Err(MonotoneError::InvalidGraph(format!(
                "power graph needs p >= 1 and coefficient > 0, got p = {exponent}, coefficient = {coefficient}"
            )));
        }
        Ok(Self::Power {
            exponent,
            coefficient,
        })
    }

    pub fn piecewise_linear(breakpoints: Vec<T>, slopes: Vec<T>) -> Result<Self, MonotoneError> {
        PiecewiseLinear::new(breakpoints, slopes).map(Self::PiecewiseLinear)
    }

    /// Short identifier used in run headers.
    pub fn label(&self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::Sign => "sign".into(),
            Self::Power {
                exponent,
                coefficient,
            } => format!("power:{exponent}:{coefficient}"),
            Self::PiecewiseLinear(p) => {
                let join = |v: &[T]| {
                    v.iter()
                        .map(|x| x.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                };
                format!("piecewise:{}:{}", join(p.breakpoints()), join(p.slopes()))
            }
            Self::Custom(g) => g.name().to_string(),
        }
    }

    /// Upper bound on `|β|` when `β` is bounded (sign graph and bounded
    /// piecewise graphs).
    pub fn is_bounded(&self) -> bool {
        match self {
            Self::Zero | Self::Sign => true,
            Self::PiecewiseLinear(p) => p.sup().is_finite() && p.inf().is_finite(),
            _ => false,
        }
    }

    /// `β̂(r)`.
    pub fn potential(&self, r: T) -> T {
        match self {
            Self::Zero => T::zero(),
            Self::Sign => r.abs(),
            Self::Power {
                exponent,
                coefficient,
            } => {
                let q = *exponent + T::one();
                *coefficient * r.abs().powf(q) / q
            }
            Self::PiecewiseLinear(p) => p.potential(r),
            Self::Custom(g) => g.potential(r),
        }
    }

    /// `(I + λβ)⁻¹(r)`; defined for every real `r`.
    pub fn resolvent(&self, lambda: T, r: T) -> T {
        debug_assert!(lambda > T::zero());
        let s = match self {
            Self::Zero => r,
            Self::Sign => r.signum() * (r.abs() - lambda).max(T::zero()),
            Self::Power {
                exponent,
                coefficient,
            } => power_resolvent(*exponent, *coefficient, lambda, r),
            Self::PiecewiseLinear(p) => p.resolvent(lambda, r),
            Self::Custom(g) => g.resolvent(lambda, r),
        };
        assert!(
            s.is_finite() || !r.is_finite(),
            "resolvent of a maximal monotone graph is everywhere defined"
        );
        s
    }

    /// Yosida approximation `β_λ(r) = (r − (I+λβ)⁻¹ r)/λ`.
    ///
    /// Single-valued graphs evaluate `β` at the resolvent instead, which
    /// avoids the cancellation in `r − J` for small `λ`.
    pub fn yosida(&self, lambda: T, r: T) -> T {
        match self {
            Self::Zero => T::zero(),
            Self::Sign => (r / lambda).max(-T::one()).min(T::one()),
            Self::Power {
                exponent,
                coefficient,
            } => {
                if *exponent == T::one() {
                    *coefficient * r / (T::one() + lambda * *coefficient)
                } else {
                    let s = self.resolvent(lambda, r);
                    s.signum() * *coefficient * s.abs().powf(*exponent)
                }
            }
            Self::PiecewiseLinear(p) => p.value(p.resolvent(lambda, r)),
            Self::Custom(_) => (r - self.resolvent(lambda, r)) / lambda,
        }
    }

    /// Right derivative of `β_λ` at `r`, always in `[0, 1/λ]`.
    pub fn yosida_derivative(&self, lambda: T, r: T) -> T {
        match self {
            Self::Zero => T::zero(),
            Self::Sign => {
                if r >= -lambda && r < lambda {
                    lambda.recip()
                } else {
                    T::zero()
                }
            }
            Self::Power {
                exponent,
                coefficient,
            } => {
                let s = self.resolvent(lambda, r).abs();
                let slope = if *exponent == T::one() {
                    *coefficient
                } else {
                    *coefficient * *exponent * s.powf(*exponent - T::one())
                };
                slope / (T::one() + lambda * slope)
            }
            Self::PiecewiseLinear(p) => p.yosida_derivative(lambda, r),
            Self::Custom(g) => g.yosida_derivative(lambda, r),
        }
    }

    /// Moreau envelope `β̂_λ(r) = (λ/2) β_λ(r)² + β̂((I+λβ)⁻¹ r)`.
    pub fn moreau_envelope(&self, lambda: T, r: T) -> T {
        let y = self.yosida(lambda, r);
        lit::<T>(0.5) * lambda * y * y + self.potential(self.resolvent(lambda, r))
    }

    /// Convex conjugate of `β̂`; `+∞` outside its domain.
    pub fn conjugate(&self, s: T) -> T {
        match self {
            Self::Zero => {
                if s == T::zero() {
                    T::zero()
                } else {
                    T::infinity()
                }
            }
            Self::Sign => {
                if s.abs() <= T::one() {
                    T::zero()
                } else {
                    T::infinity()
                }
            }
            Self::Power {
                exponent,
                coefficient,
            } => {
                // sup_r (rs − κ|r|^{p+1}/(p+1)) attained at κ|r|^p = |s|
                let p = *exponent;
                p / (p + T::one()) * s.abs().powf((p + T::one()) / p) * coefficient.powf(-p.recip())
            }
            Self::PiecewiseLinear(p) => p.conjugate(s),
            Self::Custom(g) => g.conjugate(s),
        }
    }

    /// Gap in the Young inequality `r·s ≤ β̂(r) + β̂*(s)`; zero iff `s ∈ β(r)`.
    pub fn young_gap(&self, r: T, s: T) -> T {
        self.potential(r) + self.conjugate(s) - r * s
    }
}

fn power_resolvent<T: Real>(p: T, kappa: T, lambda: T, r: T) -> T {
    if p == T::one() {
        return r / (T::one() + lambda * kappa);
    }
    if r == T::zero() {
        return T::zero();
    }
    let target = r.abs();
    let lk = lambda * kappa;
    let fdf = |s: T| {
        let sp = s.powf(p);
        (
            s + lk * sp - target,
            T::one() + lk * p * sp / s.max(T::min_positive_value()),
        )
    };
    // the root lies in [0, min(|r|, (|r|/λκ)^{1/p})]
    let hi = target.min((target / lk).powf(p.recip()));
    let s = newton_bisect(fdf, T::zero(), hi, hi, T::zero())
        .expect("s + λκ s^p − |r| changes sign on [0, |r|]");
    r.signum() * s
}
