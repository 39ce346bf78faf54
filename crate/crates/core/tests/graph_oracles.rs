use dnch_core::monotone::{GraphSpec, PotentialSpec};
use proptest::prelude::*;

/// Solves `s + λ·b(s) ∋ r` by plain bisection on a single-valued selection
/// `b` of the graph. At a jump of `b` the sign change sits exactly on the
/// jump, which is where the multivalued inclusion is solved.
fn bisection_oracle(b: impl Fn(f64) -> f64, lambda: f64, r: f64) -> f64 {
    let f = |s: f64| s + lambda * b(s) - r;
    let (mut lo, mut hi) = (-r.abs() - 1.0, r.abs() + 1.0);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn sign(s: f64) -> f64 {
    if s > 0.0 {
        1.0
    } else if s < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn piecewise_value(s: f64) -> f64 {
    // slopes 0.5 | 2 | 0 | 3 with breakpoints -1, 0.5, 2
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

type Selection = Box<dyn Fn(f64) -> f64>;

fn graphs() -> Vec<(&'static str, GraphSpec<f64>, Selection)> {
    vec![
        ("sign", GraphSpec::Sign, Box::new(sign)),
        (
            "power1",
            GraphSpec::power(1.0, 1.0).unwrap(),
            Box::new(|s| s),
        ),
        (
            "power3",
            GraphSpec::power(3.0, 1.0).unwrap(),
            Box::new(|s: f64| s * s * s),
        ),
        (
            "piecewise",
            GraphSpec::piecewise_linear(vec![-1.0, 0.5, 2.0], vec![0.5, 2.0, 0.0, 3.0]).unwrap(),
            Box::new(piecewise_value),
        ),
    ]
}

fn all_graphs() -> Vec<GraphSpec<f64>> {
    let mut g: Vec<_> = graphs().into_iter().map(|(_, g, _)| g).collect();
    g.push(GraphSpec::Zero);
    g
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn resolvent_matches_bisection(log_lambda in -6.0f64..0.0, r in -10.0f64..10.0) {
        let lambda = 10f64.powf(log_lambda);
        for (name, graph, b) in graphs() {
            let got = graph.resolvent(lambda, r);
            let want = bisection_oracle(&b, lambda, r);
            prop_assert!((got - want).abs() <= 1e-10, "{name}: λ={lambda} r={r} got {got} want {want}");
        }
    }

    #[test]
    fn resolvent_is_nonexpansive(log_lambda in -6.0f64..0.0, a in -10.0f64..10.0, b in -10.0f64..10.0) {
        let lambda = 10f64.powf(log_lambda);
        let (r1, r2) = if a < b { (a, b) } else { (b, a) };
        for g in all_graphs() {
            let d = g.resolvent(lambda, r2) - g.resolvent(lambda, r1);
            prop_assert!(d >= -1e-15 && d <= r2 - r1 + 1e-12 * (1.0 + r2.abs()), "{g:?}: {d}");
        }
    }

    #[test]
    fn yosida_is_monotone_and_lipschitz(log_lambda in -6.0f64..0.0, a in -10.0f64..10.0, b in -10.0f64..10.0) {
        let lambda = 10f64.powf(log_lambda);
        let (r1, r2) = if a < b { (a, b) } else { (b, a) };
        for g in all_graphs() {
            let d = g.yosida(lambda, r2) - g.yosida(lambda, r1);
            let slack = 1e-9 * (1.0 + g.yosida(lambda, r2).abs());
            prop_assert!(d >= -slack, "{g:?}: decreasing by {d}");
            prop_assert!(d <= (r2 - r1) / lambda + slack, "{g:?}: Lipschitz bound broken");
        }
    }

    #[test]
    fn yosida_value_is_a_selection(log_lambda in -3.0f64..0.0, r in -10.0f64..10.0) {
        let lambda = 10f64.powf(log_lambda);
        for g in all_graphs() {
            let j = g.resolvent(lambda, r);
            let s = g.yosida(lambda, r);
            let gap = g.young_gap(j, s);
            prop_assert!(gap.abs() <= 1e-9 * (1.0 + (j * s).abs()), "{g:?}: young gap {gap}");
        }
    }

    #[test]
    fn yosida_derivative_matches_central_differences(log_lambda in -3.0f64..0.0, r in -10.0f64..10.0) {
        let lambda = 10f64.powf(log_lambda);
        for g in all_graphs() {
            let step = 1e-6 * (1.0 + r.abs());
            // skip points within a step of a kink of the Yosida map
            let kinks: Vec<f64> = match &g {
                GraphSpec::Sign => vec![-lambda, lambda],
                GraphSpec::PiecewiseLinear(p) => p
                    .breakpoints()
                    .iter()
                    .map(|b| *b + lambda * piecewise_value(*b))
                    .collect(),
                _ => vec![],
            };
            if kinks.iter().any(|k| (r - k).abs() < 4.0 * step) {
                continue;
            }
            let fd = (g.yosida(lambda, r + step) - g.yosida(lambda, r - step)) / (2.0 * step);
            let an = g.yosida_derivative(lambda, r);
            prop_assert!((fd - an).abs() <= 1e-6 * (1.0 + an.abs()), "{g:?} at {r}: fd {fd} analytic {an}");
            prop_assert!((0.0..=1.0 / lambda).contains(&an));
        }
    }

    #[test]
    fn moreau_envelope_is_nonnegative_and_below_potential(log_lambda in -6.0f64..0.0, r in -10.0f64..10.0) {
        let lambda = 10f64.powf(log_lambda);
        for g in all_graphs() {
            let m = g.moreau_envelope(lambda, r);
            prop_assert!(m >= 0.0);
            prop_assert!(m <= g.potential(r) + 1e-12 * (1.0 + g.potential(r)));
        }
    }

    #[test]
    fn gamma_yosida_is_nondecreasing(log_lambda in -6.0f64..0.0, a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let lambda = 10f64.powf(log_lambda);
        let (r1, r2) = if a < b { (a, b) } else { (b, a) };
        let potentials = [
            PotentialSpec::double_well(1.0, 1.0, 1.0).unwrap(),
            PotentialSpec::logarithmic(1.0, 2.0, 2.0).unwrap(),
        ];
        for p in potentials {
            let y1 = p.gamma_yosida(lambda, r1).unwrap();
            let y2 = p.gamma_yosida(lambda, r2).unwrap();
            prop_assert!(y2 >= y1 - 1e-9 * (1.0 + y1.abs()), "{}: {y1} > {y2}", p.label());
        }
    }
}

#[test]
fn sign_graph_examples_agree_with_the_oracle() {
    assert_eq!(GraphSpec::Sign.resolvent(0.5, 2.0), 1.5);
    assert_eq!(GraphSpec::Sign.resolvent(0.5, 0.3), 0.0);
    assert!((bisection_oracle(sign, 0.5, 2.0) - 1.5).abs() < 1e-14);
    assert!(bisection_oracle(sign, 0.5, 0.3).abs() < 1e-14);
    assert_eq!(GraphSpec::Sign.yosida(0.5, 2.0), 1.0);
    assert_eq!(GraphSpec::Sign.moreau_envelope(0.5, 2.0), 1.75);
    let cubic = GraphSpec::<f64>::power(3.0, 1.0).unwrap();
    assert!((cubic.yosida(1.0, 2.0) - 1.0).abs() < 1e-13);
}

#[test]
fn log_potential_semiconvexity_minimum() {
    let p = PotentialSpec::logarithmic(1.0, 2.0, 2.0).unwrap();
    let min = (1..20_000)
        .map(|i| -1.0 + 2.0 * i as f64 / 20_000.0)
        .map(|r| p.psi_second(r).unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!((min + 1.0).abs() < 1e-12);
    assert!(min + p.k() > 0.0);
}
