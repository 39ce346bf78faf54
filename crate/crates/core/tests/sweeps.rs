use dnch_core::asymptotics::{
    continuous_dependence_probe, delta_sweep, eps_sweep, prepare_delta_data, Perturbation,
    ReferenceStrategy,
};
use dnch_core::presets::preset;
use dnch_core::stepper::Forcing;
use dnch_core::{Grid1D, SweepConfig, SweepParameter};

const PI: f64 = std::f64::consts::PI;

#[test]
fn delta_sweep_on_smooth_data() {
    let mut base = preset::<f64>("logwell-sign").unwrap();
    base.grid = Grid1D::new(1.0, 128).unwrap();
    base.u0 = base.grid.sample(|x| 0.9 * (PI * x).cos());
    base.initial_bounds = (base.u0.min(), base.u0.max());
    base.tau = 5e-4;
    base.forcing = Forcing::Cosine {
        amplitude: 2.0,
        mode: 1.0,
        rate: 0.0,
    };
    let cfg = SweepConfig::new(base, SweepParameter::Delta, vec![1e-2, 1e-3, 1e-4, 1e-5]);
    let report = delta_sweep(&cfg).unwrap();
    assert!(report.slope.unwrap() >= 0.2);
    assert!(report.errors_monotone());
    let c = report.constant.unwrap();
    assert!(report
        .points
        .iter()
        .all(|p| p.error <= c * p.rhs * (1.0 + 1e-12)));
}

#[test]
fn smoothed_delta_data_discrepancies_shrink() {
    let spec = preset::<f64>("logwell-sign").unwrap();
    let mut last = f64::INFINITY;
    for delta in [1e-2, 1e-3, 1e-4, 1e-5] {
        let data = prepare_delta_data(&spec, delta).unwrap();
        assert!(data.u0_discrepancy < last);
        assert!(data.u0.min() >= spec.initial_bounds.0 - 1e-12);
        assert!(data.u0.max() <= spec.initial_bounds.1 + 1e-12);
        last = data.u0_discrepancy;
    }
}

#[test]
fn eps_sweep_witness_vanishes() {
    let base = preset::<f64>("quartic-power").unwrap();
    let cfg = SweepConfig::new(base, SweepParameter::Epsilon, vec![1e-1, 1e-2, 1e-3]);
    let report = eps_sweep(&cfg).unwrap();
    assert!(report.errors_monotone());
    assert!(report.witness_slope.unwrap() >= 0.45);
}

#[test]
fn finest_reference_leaves_out_the_reference_point() {
    let base = preset::<f64>("quartic-power").unwrap();
    let mut cfg = SweepConfig::new(base, SweepParameter::Epsilon, vec![1e-1, 3e-2, 1e-2, 3e-3]);
    cfg.reference = ReferenceStrategy::Finest;
    let report = eps_sweep(&cfg).unwrap();
    assert_eq!(report.points.last().unwrap().error, 0.0);
    assert_eq!(report.points_used, 3);
}

#[test]
fn dependence_ratios_are_bounded() {
    let spec = preset::<f64>("quartic-zero").unwrap();
    let profile = Perturbation::standard(&spec.grid);
    let report = continuous_dependence_probe(&spec, &[1e-1, 1e-2, 1e-3, 1e-4], &profile).unwrap();
    assert!(report.spread <= 10.0, "spread {}", report.spread);

    // doubling the profile quadruples the data distance
    let doubled = Perturbation {
        u0: profile.u0.scale(2.0),
        g: profile.g.scale(2.0),
    };
    let twice = continuous_dependence_probe(&spec, &[1e-2], &doubled).unwrap();
    let once = &report.points[1];
    assert!((twice.points[0].rhs / once.rhs - 4.0).abs() < 1e-12);
}

#[test]
fn zero_perturbation_gives_zero_lhs() {
    let spec = preset::<f64>("quartic-zero").unwrap();
    let report =
        continuous_dependence_probe(&spec, &[0.0], &Perturbation::standard(&spec.grid)).unwrap();
    assert_eq!(report.points[0].lhs, 0.0);
}
