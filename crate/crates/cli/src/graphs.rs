//! Randomized comparison of graph resolvents against a bisection oracle.

use dnch_core::monotone::GraphSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ORACLE_TOLERANCE: f64 = 1e-10;

/// Solves `s + λ·b(s) ∋ r` by bisection on a single-valued selection `b`.
/// A jump of `b` is located exactly, which solves the multivalued inclusion.
pub fn bisection_oracle(b: impl Fn(f64) -> f64, lambda: f64, r: f64) -> f64 {
    let (mut lo, mut hi) = (-r.abs() - 1.0, r.abs() + 1.0);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        if mid + lambda * b(mid) - r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// A graph with an independent pointwise selection for the oracle.
pub struct OracleGraph {
    pub name: &'static str,
    pub graph: GraphSpec<f64>,
    pub selection: fn(f64) -> f64,
}

fn sign(s: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s.signum()
    }
}

fn cube(s: f64) -> f64 {
    s * s * s
}

/// Slopes 0.5, 2, 0, 3 with breakpoints −1, 0.5, 2.
fn piecewise(s: f64) -> f64 {
    if s < -1.0 {
        -2.0 + 0.5 * (s + 1.0)
    } else if s < 0.5 {
        2.0 * s
    } else if s < 2.0 {
        1.0
    } else {
        1.0 + 3.0 * (s - 2.0)
    }
}

pub fn standard_graphs() -> Vec<OracleGraph> {
    vec![
        OracleGraph {
            name: "sign",
            graph: GraphSpec::Sign,
            selection: sign,
        },
        OracleGraph {
            name: "power:1:1",
            graph: GraphSpec::power(1.0, 1.0).expect("valid"),
            selection: |s| s,
        },
        OracleGraph {
            name: "power:3:1",
            graph: GraphSpec::power(3.0, 1.0).expect("valid"),
            selection: cube,
        },
        OracleGraph {
            name: "piecewise:-1,0.5,2:0.5,2,0,3",
            graph: GraphSpec::piecewise_linear(vec![-1.0, 0.5, 2.0], vec![0.5, 2.0, 0.0, 3.0])
                .expect("valid"),
            selection: piecewise,
        },
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphCheck {
    pub name: &'static str,
    pub samples: usize,
    pub max_error: f64,
    /// `(λ, r)` of the worst sample.
    pub worst: (f64, f64),
    pub pass: bool,
}

/// `samples` pairs with `log10 λ ~ U(−6, 0)` and `r ~ U(−10, 10)`.
pub fn check_graphs(seed: u64, samples: usize) -> Vec<GraphCheck> {
    standard_graphs()
        .into_iter()
        .map(|g| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut max_error: f64 = 0.0;
            let mut worst = (0.0, 0.0);
            for _ in 0..samples {
                let lambda = 10f64.powf(rng.gen_range(-6.0..=0.0));
                let r = rng.gen_range(-10.0..=10.0);
                let err =
                    (g.graph.resolvent(lambda, r) - bisection_oracle(g.selection, lambda, r)).abs();
                if !(err <= max_error) {
                    max_error = err;
                    worst = (lambda, r);
                }
            }
            GraphCheck {
                name: g.name,
                samples,
                max_error,
                worst,
                pass: max_error <= ORACLE_TOLERANCE,
            }
        })
        .collect()
}
