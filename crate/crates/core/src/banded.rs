//! Banded direct solvers: LU with partial pivoting for general band
//! matrices and the Thomas algorithm for diagonally dominant tridiagonal
//! systems.

#![allow(clippy::needless_range_loop)]

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum BandError {
    #[error("zero pivot at row {0}")]
    Singular(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Each row keeps `kl` extra slots on the right for pivoting fill-in.
#[derive(Debug, Clone)]
pub struct BandMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Real> BandMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![T::zero(); n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n || j + self.kl < i || j > i + self.kl + self.ku {
            None
        } else {
            Some(i * self.width + (j + self.kl - i))
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.slot(i, j).map_or(T::zero(), |s| self.data[s])
    }

    /// Adds `v` to entry `(i, j)`; the entry must lie inside the band.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band"
        );
        let s = self.slot(i, j).expect("entry inside band");
        self.data[s] += v;
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku + 1).min(self.n);
                (lo..hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Factorizes in place and returns the solver.
    pub fn factorize(mut self) -> Result<BandLu<T>, BandError> {
        let n = self.n;
        let kl = self.kl;
        let reach = kl + self.ku;
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == T::zero() || !best.is_finite() {
                return Err(BandError::Singular(k));
            }
            pivots[k] = p;
            let col_end = (k + reach).min(n - 1);
            if p != k {
                // only the trailing columns move; earlier multipliers stay with their rows
                for j in k..=col_end {
                    let a = self.slot(k, j).unwrap();
                    let b = self.slot(p, j).unwrap();
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last {
                let si = self.slot(i, k).unwrap();
                let factor = self.data[si] / pivot;
                self.data[si] = factor;
                if factor == T::zero() {
                    continue;
                }
                for j in k + 1..=col_end {
                    let ukj = self.get(k, j);
                    if ukj != T::zero() {
                        let s = self.slot(i, j).unwrap();
                        self.data[s] -= factor * ukj;
                    }
                }
            }
        }
        Ok(BandLu { lu: self, pivots })
    }
}

/// LU factors of a [`BandMatrix`].
#[derive(Debug, Clone)]
pub struct BandLu<T> {
    lu: BandMatrix<T>,
    pivots: Vec<usize>,
}

impl<T: Real> BandLu<T> {
    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>, BandError> {
        let n = self.lu.n;
        if rhs.len() != n {
            return Err(BandError::Dimension {
                expected: n,
                got: rhs.len(),
            });
        }
        let kl = self.lu.kl;
        let reach = kl + self.lu.ku;
        let mut x = rhs.to_vec();
        for k in 0..n {
            x.swap(k, self.pivots[k]);
            let xk = x[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                x[i] -= self.lu.get(i, k) * xk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = x[k];
            for j in k + 1..=(k + reach).min(n - 1) {
                acc -= self.lu.get(k, j) * x[j];
            }
            x[k] = acc / self.lu.get(k, k);
        }
        Ok(x)
    }
}

/// Thomas algorithm for `lower[i]·x[i−1] + diag[i]·x[i] + upper[i]·x[i+1] = rhs[i]`.
///
/// `lower[0]` and `upper[n−1]` are ignored. No pivoting: intended for
/// diagonally dominant systems.
pub fn solve_tridiagonal<T: Real>(
    lower: &[T],
    diag: &[T],
    upper: &[T],
    rhs: &[T],
) -> Result<Vec<T>, BandError> {
    let n = diag.len();
    for len in [lower.len(), upper.len(), rhs.len()] {
        if len != n {
            return Err(BandError::Dimension {
                expected: n,
                got: len,
            });
        }
    }
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    let mut denom = diag[0];
    if denom == T::zero() {
        return Err(BandError::Singular(0));
    }
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom == T::zero() || !denom.is_finite() {
            return Err(BandError::Singular(i));
        }
        c[i] = if i + 1 < n {
            upper[i] / denom
        } else {
            T::zero()
        };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] = d[i] - c[i] * d[i + 1];
    }
    Ok(d)
}
