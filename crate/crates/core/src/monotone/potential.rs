//! Semiconvex potentials `ψ` on `(a, b)` and the monotone part
//! `γ = ψ′ + K·id`.

use crate::roots::{golden_min, newton_bisect, RootError};
use crate::scalar::{count, lit, Real};

use super::{truncation, MonotoneError};

/// Closed-form potential families.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind<T> {
    /// `ψ(r) = (α/4)(r² − m²)²` on ℝ.
    DoubleWell { alpha: T, well: T },
    /// `ψ(r) = (c/2)[(1+r)ln(1+r) + (1−r)ln(1−r)] − (c₀/2)r²` on `(−1, 1)`, `0 < c < c₀`.
    Logarithmic { c: T, c0: T },
    /// `ψ(r) = Σ coeffs[i]·rⁱ` on ℝ; even degree, positive leading coefficient.
    Polynomial { coeffs: Vec<T> },
}

/// A potential together with its semiconvexity constant, domain, offset and
/// the root `r₀` of `γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec<T> {
    kind: PotentialKind<T>,
    k: T,
    a: T,
    b: T,
    offset: T,
    r0: T,
}

impl<T: Real> PotentialSpec<T> {
    pub fn double_well(alpha: T, well: T, k: T) -> Result<Self, MonotoneError> {
        Self::new(PotentialKind::DoubleWell { alpha, well }, k)
    }

    pub fn logarithmic(c: T, c0: T, k: T) -> Result<Self, MonotoneError> {
        Self::new(PotentialKind::Logarithmic { c, c0 }, k)
    }

    pub fn polynomial(coeffs: Vec<T>, k: T) -> Result<Self, MonotoneError> {
        Self::new(PotentialKind::Polynomial { coeffs }, k)
    }

    pub fn new(kind: PotentialKind<T>, k: T) -> Result<Self, MonotoneError> {
        if !(k > T::zero()) || !k.is_finite() {
            return Err(MonotoneError::InvalidPotential(format!(
                "semiconvexity constant must be positive, got {k}"
            )));
        }
        let (a, b) = match &kind {
            PotentialKind::DoubleWell { alpha, well } => {
                if !(*alpha > T::zero()) || !well.is_finite() || !alpha.is_finite() {
                    return Err(MonotoneError::InvalidPotential(
                        "double well needs alpha > 0 and a finite well position".into(),
                    ));
                }
                (T::neg_infinity(), T::infinity())
            }
            PotentialKind::Logarithmic { c, c0 } => {
                if !(*c > T::zero() && *c < *c0) || !c0.is_finite() {
                    return Err(MonotoneError::InvalidPotential(format!(
                        "logarithmic potential needs 0 < c < c0, got c = {c}, c0 = {c0}"
                    )));
                }
                (-T::one(), T::one())
            }
            PotentialKind::Polynomial { coeffs } => {
                let degree = coeffs.iter().rposition(|c| *c != T::zero()).unwrap_or(0);
                if degree < 2 || degree % 2 != 0 || !(coeffs[degree] > T::zero()) {
                    return Err(MonotoneError::InvalidPotential(
                        "polynomial potential needs even degree >= 2 and positive leading coefficient"
                            .into(),
                    ));
                }
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(MonotoneError::InvalidPotential(
                        "polynomial coefficients must be finite".into(),
                    ));
                }
                (T::neg_infinity(), T::infinity())
            }
        };
        let mut spec = Self {
            kind,
            k,
            a,
            b,
            offset: T::zero(),
            r0: T::zero(),
        };
        spec.check_semiconvex()?;
        spec.offset = -spec.raw_minimum();
        spec.r0 = spec.find_r0()?;
        Ok(spec)
    }

    pub fn kind(&self) -> &PotentialKind<T> {
        &self.kind
    }

    /// Semiconvexity constant `K`.
    pub fn k(&self) -> T {
        self.k
    }

    /// Left endpoint `a` (possibly `−∞`).
    pub fn a(&self) -> T {
        self.a
    }

    /// Right endpoint `b` (possibly `+∞`).
    pub fn b(&self) -> T {
        self.b
    }

    /// Constant added to the raw formula so that `ψ ≥ 0`.
    pub fn offset(&self) -> T {
        self.offset
    }

    /// Unique root of `γ` in `(a, b)`.
    pub fn r0(&self) -> T {
        self.r0
    }

    pub fn label(&self) -> String {
        match &self.kind {
            PotentialKind::DoubleWell { alpha, well } => format!("double-well:{alpha}:{well}"),
            PotentialKind::Logarithmic { c, c0 } => format!("log:{c}:{c0}"),
            PotentialKind::Polynomial { coeffs } => format!(
                "poly:{}",
                coeffs
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        }
    }

    pub fn in_domain(&self, r: T) -> bool {
        r > self.a && r < self.b
    }

    fn check(&self, r: T) -> Result<(), MonotoneError> {
        if self.in_domain(r) {
            Ok(())
        } else {
            Err(MonotoneError::Domain {
                value: crate::scalar::to_f64(r),
                a: crate::scalar::to_f64(self.a),
                b: crate::scalar::to_f64(self.b),
            })
        }
    }

    /// `ψ(r)`, offset so that `ψ ≥ 0`.
    pub fn psi(&self, r: T) -> Result<T, MonotoneError> {
        self.check(r)?;
        Ok(self.psi_unchecked(r))
    }

    pub fn psi_prime(&self, r: T) -> Result<T, MonotoneError> {
        self.check(r)?;
        Ok(self.psi_prime_unchecked(r))
    }

    pub fn psi_second(&self, r: T) -> Result<T, MonotoneError> {
        self.check(r)?;
        Ok(self.psi_second_unchecked(r))
    }

    pub(crate) fn psi_unchecked(&self, r: T) -> T {
        self.raw_psi(r) + self.offset
    }

    fn raw_psi(&self, r: T) -> T {
        let half = lit::<T>(0.5);
        match &self.kind {
            PotentialKind::DoubleWell { alpha, well } => {
                let q = r * r - *well * *well;
                *alpha * lit(0.25) * q * q
            }
            PotentialKind::Logarithmic { c, c0 } => {
                let plus = (T::one() + r) * r.ln_1p();
                let minus = (T::one() - r) * (-r).ln_1p();
                half * *c * (plus + minus) - half * *c0 * r * r
            }
            PotentialKind::Polynomial { coeffs } => horner(coeffs, r),
        }
    }

    pub(crate) fn psi_prime_unchecked(&self, r: T) -> T {
        match &self.kind {
            PotentialKind::DoubleWell { alpha, well } => *alpha * r * (r * r - *well * *well),
            PotentialKind::Logarithmic { c, c0 } => *c * atanh(r) - *c0 * r,
            PotentialKind::Polynomial { coeffs } => {
                let d: Vec<T> = coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(i, c)| *c * count(i))
                    .collect();
                horner(&d, r)
            }
        }
    }

    pub(crate) fn psi_second_unchecked(&self, r: T) -> T {
        match &self.kind {
            PotentialKind::DoubleWell { alpha, well } => {
                *alpha * (lit::<T>(3.0) * r * r - *well * *well)
            }
            PotentialKind::Logarithmic { c, c0 } => *c / (T::one() - r * r) - *c0,
            PotentialKind::Polynomial { coeffs } => {
                let d: Vec<T> = coeffs
                    .iter()
                    .enumerate()
                    .skip(2)
                    .map(|(i, c)| *c * count(i * (i - 1)))
                    .collect();
                horner(&d, r)
            }
        }
    }

    /// `γ(r) = ψ′(r) + K r`.
    pub fn gamma(&self, r: T) -> T {
        self.psi_prime_unchecked(r) + self.k * r
    }

    pub fn gamma_prime(&self, r: T) -> T {
        self.psi_second_unchecked(r) + self.k
    }

    /// `γ̂(r) = ∫_{r₀}^r γ`.
    pub fn gamma_hat(&self, r: T) -> T {
        let half = lit::<T>(0.5);
        self.raw_psi(r) + half * self.k * r * r
            - self.raw_psi(self.r0)
            - half * self.k * self.r0 * self.r0
    }

    /// Interval used for sampling checks: the domain itself when bounded,
    /// otherwise a window around the origin wide enough to contain the wells.
    pub fn sample_window(&self) -> (T, T) {
        if self.a.is_finite() && self.b.is_finite() {
            let pad = (self.b - self.a) * lit(1e-6);
            return (self.a + pad, self.b - pad);
        }
        let scale = match &self.kind {
            PotentialKind::DoubleWell { well, .. } => well.abs() + T::one(),
            PotentialKind::Polynomial { coeffs } => {
                // Cauchy bound on the roots of ψ′
                let n = coeffs.len() - 1;
                let lead = coeffs[n] * count(n);
                T::one()
                    + coeffs
                        .iter()
                        .enumerate()
                        .skip(1)
                        .take(n - 1)
                        .map(|(i, c)| (*c * count(i) / lead).abs())
                        .fold(T::zero(), T::max)
            }
            PotentialKind::Logarithmic { .. } => T::one(),
        };
        (-lit::<T>(4.0) * scale, lit::<T>(4.0) * scale)
    }

    fn samples(&self, n: usize) -> impl Iterator<Item = T> + '_ {
        let (lo, hi) = self.sample_window();
        (0..=n).map(move |i| lo + (hi - lo) * count(i) / count(n))
    }

    fn check_semiconvex(&self) -> Result<(), MonotoneError> {
        let tol = lit::<T>(1e-12);
        let mut prev: Option<T> = None;
        for r in self.samples(4000) {
            let curv = self.psi_second_unchecked(r) + self.k;
            if curv < -tol * (T::one() + self.k) {
                return Err(MonotoneError::InvalidPotential(format!(
                    "psi'' + K = {curv} < 0 at r = {r}; increase K"
                )));
            }
            let g = self.gamma(r);
            if let Some(p) = prev {
                if g <= p {
                    return Err(MonotoneError::InvalidPotential(format!(
                        "gamma = psi' + K r is not strictly increasing near r = {r}"
                    )));
                }
            }
            prev = Some(g);
        }
        Ok(())
    }

    fn raw_minimum(&self) -> T {
        if let PotentialKind::DoubleWell { .. } = self.kind {
            return T::zero();
        }
        // coarse scan, then golden-section refinement around the best sample
        let n = 4000;
        let pts: Vec<T> = self.samples(n).collect();
        let (best, _) = pts
            .iter()
            .enumerate()
            .map(|(i, r)| (i, self.raw_psi(*r)))
            .fold(
                (0, T::infinity()),
                |acc, x| if x.1 < acc.1 { x } else { acc },
            );
        let lo = pts[best.saturating_sub(1)];
        let hi = pts[(best + 1).min(n)];
        let (_, m) = golden_min(|r| self.raw_psi(r), lo, hi, lit(1e-12));
        m.min(self.raw_psi(pts[best]))
    }

    fn find_r0(&self) -> Result<T, MonotoneError> {
        let (lo, hi) = self.sample_window();
        if self.gamma(lo) > T::zero() || self.gamma(hi) < T::zero() {
            return Err(MonotoneError::InvalidPotential(
                "gamma has no root inside the sampling window".into(),
            ));
        }
        newton_bisect(
            |s| (self.gamma(s), self.gamma_prime(s)),
            lo,
            hi,
            T::zero(),
            T::zero(),
        )
        .map_err(MonotoneError::from)
    }

    /// Closest representable-enough points inside `(a, b)`.
    fn inner_bounds(&self) -> (T, T) {
        let eps = T::epsilon() * lit(4.0);
        let lo = if self.a.is_finite() {
            self.a + eps * self.a.abs().max(T::one())
        } else {
            T::neg_infinity()
        };
        let hi = if self.b.is_finite() {
            self.b - eps * self.b.abs().max(T::one())
        } else {
            T::infinity()
        };
        (lo, hi)
    }

    /// `(I + λγ)⁻¹(r)`, the unique `s ∈ (a, b)` with `s + λγ(s) = r`.
    ///
    /// The root lies between `r₀` and `r` because the resolvent is
    /// nonexpansive and fixes `r₀`. When it is closer to an endpoint than
    /// floating point can resolve, the nearest interior point is returned.
    pub fn gamma_resolvent(&self, lambda: T, r: T) -> Result<T, MonotoneError> {
        debug_assert!(lambda > T::zero());
        if r == self.r0 {
            return Ok(r);
        }
        let (inner_lo, inner_hi) = self.inner_bounds();
        let lo = r.min(self.r0).max(inner_lo);
        let hi = r.max(self.r0).min(inner_hi);
        let f = |s: T| s + lambda * self.gamma(s) - r;
        if f(lo) > T::zero() {
            return if lo == inner_lo {
                Ok(lo)
            } else {
                Err(self.bracket_error(lo, hi, f(lo), f(hi)))
            };
        }
        if f(hi) < T::zero() {
            return if hi == inner_hi {
                Ok(hi)
            } else {
                Err(self.bracket_error(lo, hi, f(lo), f(hi)))
            };
        }
        newton_bisect(
            |s| (f(s), T::one() + lambda * self.gamma_prime(s)),
            lo,
            hi,
            r.max(lo).min(hi),
            T::zero(),
        )
        .map_err(MonotoneError::from)
    }

    fn bracket_error(&self, lo: T, hi: T, flo: T, fhi: T) -> MonotoneError {
        use crate::scalar::to_f64;
        MonotoneError::Bracket(RootError::Bracket {
            lo: to_f64(lo),
            hi: to_f64(hi),
            flo: to_f64(flo),
            fhi: to_f64(fhi),
        })
    }

    /// Yosida approximation `γ_λ(r) = (r − (I+λγ)⁻¹ r)/λ`.
    ///
    /// Evaluated as `γ((I+λγ)⁻¹ r)` for `r` in the domain, which is the same
    /// number without the `1/λ` amplification of the resolvent's rounding
    /// error.
    pub fn gamma_yosida(&self, lambda: T, r: T) -> Result<T, MonotoneError> {
        Ok(self.gamma_parts(lambda, r)?.yosida)
    }

    /// Everything the step solver needs about `γ` at one point.
    pub fn gamma_parts(&self, lambda: T, r: T) -> Result<GammaParts<T>, MonotoneError> {
        let resolvent = self.gamma_resolvent(lambda, r)?;
        let slope = self.gamma_prime(resolvent);
        let denom = T::one() + lambda * slope;
        // outside (a, b) the resolvent may saturate at the last float before
        // the endpoint, and only the difference form stays accurate
        let yosida = if self.in_domain(r) {
            self.gamma(resolvent)
        } else {
            (r - resolvent) / lambda
        };
        Ok(GammaParts {
            resolvent,
            yosida,
            yosida_derivative: slope / denom,
            resolvent_derivative: denom.recip(),
        })
    }

    /// Regularized bulk density `Ψ_λ` with `Ψ_λ′ = γ_λ − K·T_λ∘(I+λγ)⁻¹` and
    /// `Ψ_λ(r₀) = ψ(r₀)`. It converges to `ψ` as `λ ↘ 0` and keeps the
    /// semiconvexity constant `K`.
    pub fn regularized_psi(&self, lambda: T, r: T) -> Result<T, MonotoneError> {
        let parts = self.gamma_parts(lambda, r)?;
        let half = lit::<T>(0.5);
        let envelope =
            half * lambda * parts.yosida * parts.yosida + self.gamma_hat(parts.resolvent);
        let shift = self.truncated_primitive(lambda, parts.resolvent)
            - self.truncated_primitive(lambda, self.r0);
        Ok(self.psi_unchecked(self.r0) + envelope - self.k * shift)
    }

    /// Antiderivative in `σ` of `T_λ(σ)(1 + λγ′(σ))`.
    fn truncated_primitive(&self, lambda: T, sigma: T) -> T {
        let level = lambda.recip();
        let inner = |s: T| {
            let g = self.gamma(s);
            let big_g = self.raw_psi(s) + lit::<T>(0.5) * self.k * s * s;
            lit::<T>(0.5) * s * s + lambda * (s * g - big_g)
        };
        if sigma > level {
            inner(level) + (sigma - level) * level + self.gamma(sigma) - self.gamma(level)
        } else if sigma < -level {
            inner(-level) + (sigma + level) * (-level) + self.gamma(-level) - self.gamma(sigma)
        } else {
            inner(sigma)
        }
    }

    /// `ψ′` of the regularized density, `γ_λ(r) − K·T_λ((I+λγ)⁻¹ r)`.
    pub fn regularized_psi_prime(&self, lambda: T, r: T) -> Result<T, MonotoneError> {
        let parts = self.gamma_parts(lambda, r)?;
        Ok(parts.yosida - self.k * truncation(lambda, parts.resolvent))
    }
}

/// Resolvent, Yosida value and their derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParts<T> {
    pub resolvent: T,
    pub yosida: T,
    pub yosida_derivative: T,
    pub resolvent_derivative: T,
}

/// Odd by construction; `1 − |r|` is exact for `|r| ≥ 1/2`, so this stays
/// accurate next to the singular endpoints.
fn atanh<T: Real>(r: T) -> T {
    let a = r.abs();
    let v = lit::<T>(0.5) * (lit::<T>(2.0) * a / (T::one() - a)).ln_1p();
    if r < T::zero() {
        -v
    } else {
        v
    }
}

fn horner<T: Real>(coeffs: &[T], r: T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, c| acc * r + *c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roots::bisect;

    fn quartic() -> PotentialSpec<f64> {
        PotentialSpec::<f64>::double_well(1.0, 1.0, 1.0).unwrap()
    }

    fn logwell() -> PotentialSpec<f64> {
        PotentialSpec::<f64>::logarithmic(1.0, 2.0, 2.0).unwrap()
    }

    #[test]
    fn gamma_resolvent_examples() {
        let p = quartic();
        // γ(s) = s³; oracle bisection on s + s³ = 2
        let oracle = bisect(|s: f64| s + s.powi(3) - 2.0, 0.0, 2.0, 1e-14).unwrap();
        let s = p.gamma_resolvent(1.0, 2.0).unwrap();
        assert!((s - oracle).abs() < 1e-12 && (s - 1.0).abs() < 1e-12);
        assert_eq!(p.gamma_resolvent(0.7, p.r0()).unwrap(), p.r0());
        assert_eq!(logwell().gamma_resolvent(0.1, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn gamma_yosida_examples() {
        let p = quartic();
        assert!((p.gamma_yosida(1.0, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(p.gamma_yosida(0.3, p.r0()).unwrap(), 0.0);
        assert_eq!(logwell().gamma_yosida(0.5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn yosida_agrees_with_difference_form() {
        for p in [quartic(), logwell()] {
            for lambda in [1e-3, 0.1, 1.0] {
                for r in [-3.0, -0.95, -0.2, 0.0, 0.5, 0.99, 4.0] {
                    let s = p.gamma_resolvent(lambda, r).unwrap();
                    let diff = (r - s) / lambda;
                    let y = p.gamma_yosida(lambda, r).unwrap();
                    assert!(
                        (diff - y).abs() <= 1e-10 * (1.0 + y.abs()),
                        "{} {r} {lambda}: {s} {diff} {y}",
                        p.label()
                    );
                }
            }
        }
    }

    #[test]
    fn psi_examples() {
        let p = quartic();
        assert_eq!(p.psi(1.0).unwrap(), 0.0);
        assert_eq!(p.psi_second(0.0).unwrap(), -1.0);
        let fd = (p.psi_prime(1e-5).unwrap() - p.psi_prime(-1e-5).unwrap()) / 2e-5;
        assert!((fd + 1.0).abs() < 1e-8);
        assert_eq!(logwell().psi_prime(0.0).unwrap(), 0.0);
    }

    #[test]
    fn logarithmic_prime_formula() {
        let p = logwell();
        for r in [-0.9f64, -0.3, 0.1, 0.75] {
            let expect = 0.5 * ((1.0 + r) / (1.0 - r)).ln() - 2.0 * r;
            assert!((p.psi_prime(r).unwrap() - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn domain_errors() {
        let p = logwell();
        assert!(matches!(p.psi(1.0), Err(MonotoneError::Domain { .. })));
        assert!(p.psi_prime(-1.2).is_err());
        assert!(p.psi_second(f64::NAN).is_err());
    }

    #[test]
    fn log_offset_makes_psi_nonnegative() {
        let p = logwell();
        assert!(p.offset() > 0.0);
        let min = (1..200_000)
            .map(|i| -1.0 + i as f64 / 100_000.0)
            .map(|r| p.psi(r).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!((-1e-12..1e-6).contains(&min));
        // ψ″ unaffected by the offset; minimum c − c₀ at 0
        assert_eq!(p.psi_second(0.0).unwrap(), -1.0);
    }

    #[test]
    fn log_derivative_diverges_at_endpoints() {
        let p = logwell();
        let mut last = f64::NEG_INFINITY;
        for j in 1..15 {
            let r = 1.0 - 10f64.powi(-j);
            let v = p.psi_prime(r).unwrap();
            assert!(v > last);
            assert!((p.psi_prime(-r).unwrap() + v).abs() <= 1e-12 * (1.0 + v.abs()));
            last = v;
        }
        assert!(last > 10.0);
    }

    #[test]
    fn rejects_insufficient_k_and_bad_families() {
        assert!(PotentialSpec::<f64>::double_well(1.0, 1.0, 0.5).is_err());
        assert!(PotentialSpec::<f64>::logarithmic(2.0, 1.0, 3.0).is_err());
        assert!(PotentialSpec::<f64>::logarithmic(1.0, 2.0, 0.5).is_err());
        assert!(PotentialSpec::<f64>::polynomial(vec![0.0, 0.0, 0.0, 1.0], 1.0).is_err());
        assert!(PotentialSpec::<f64>::polynomial(vec![0.0, 0.0, -1.0], 1.0).is_err());
    }

    #[test]
    fn polynomial_matches_double_well() {
        // (1/4)(r² − 1)² = 1/4 − r²/2 + r⁴/4
        let poly = PotentialSpec::<f64>::polynomial(vec![0.25, 0.0, -0.5, 0.0, 0.25], 1.0).unwrap();
        let dw = quartic();
        for r in [-2.0, -0.4, 0.0, 0.3, 1.7] {
            assert!((poly.psi(r).unwrap() - dw.psi(r).unwrap()).abs() < 1e-9);
            assert!((poly.gamma(r) - dw.gamma(r)).abs() < 1e-12);
        }
        assert!(poly.r0().abs() < 1e-10);
    }

    #[test]
    fn tilted_polynomial_root_is_fixed() {
        // ψ = r⁴/4 − r²/2 + 0.3 r, γ = r³ + 0.3 with K = 1
        let p = PotentialSpec::<f64>::polynomial(vec![0.0, 0.3, -0.5, 0.0, 0.25], 1.0).unwrap();
        let r0 = p.r0();
        assert!((r0 + 0.3f64.cbrt()).abs() < 1e-12);
        assert!((p.gamma_resolvent(0.4, r0).unwrap() - r0).abs() < 1e-15);
        assert!(p.offset() > 0.0);
    }

    #[test]
    fn extreme_arguments_saturate_inside_domain() {
        let p = logwell();
        let s = p.gamma_resolvent(1e-5, 1e9).unwrap();
        assert!(s < 1.0 && s > 0.999);
        let s = p.gamma_resolvent(1e-5, -1e9).unwrap();
        assert!(s > -1.0 && s < -0.999);
    }

    #[test]
    fn regularized_density_converges_and_differentiates() {
        for p in [quartic(), logwell()] {
            for r in [-0.8, -0.1, 0.3, 0.9] {
                let exact = p.psi(r).unwrap();
                let approx = p.regularized_psi(1e-7, r).unwrap();
                assert!((exact - approx).abs() < 1e-5, "r={r}");
                let lambda = 0.05;
                let h = 1e-6;
                let fd = (p.regularized_psi(lambda, r + h).unwrap()
                    - p.regularized_psi(lambda, r - h).unwrap())
                    / (2.0 * h);
                let d = p.regularized_psi_prime(lambda, r).unwrap();
                assert!((fd - d).abs() < 1e-6, "r={r}: {fd} vs {d}");
            }
        }
    }

    #[test]
    fn regularized_density_with_active_truncation() {
        // λ = 0.5 puts the truncation level at 2, inside the sampled range
        let p = quartic();
        let lambda = 0.5;
        for r in [-6.0, -2.5, 3.0, 7.0] {
            let h = 1e-6;
            let fd = (p.regularized_psi(lambda, r + h).unwrap()
                - p.regularized_psi(lambda, r - h).unwrap())
                / (2.0 * h);
            let d = p.regularized_psi_prime(lambda, r).unwrap();
            assert!(
                (fd - d).abs() < 1e-5 * (1.0 + d.abs()),
                "r={r}: {fd} vs {d}"
            );
        }
    }
}
