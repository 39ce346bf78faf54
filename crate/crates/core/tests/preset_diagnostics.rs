use dnch_core::diagnostics::{energy_inequality_check, flux_identity_check, max_principle_report};
use dnch_core::presets::{preset, CATALOGUE};
use dnch_core::stepper::solve;

#[test]
fn every_preset_passes_the_structural_checks() {
    for info in CATALOGUE {
        let spec = preset::<f64>(info.name).unwrap();
        let traj = solve(&spec).unwrap();
        assert_eq!(traj.states.len(), 100);

        let f0 = traj.ledger.initial_free_energy_reg;
        let energy = energy_inequality_check(&traj);
        assert!(
            energy <= 1e-8 * f0.max(1.0),
            "{}: energy violation {energy}",
            info.name
        );

        let flux = flux_identity_check(&traj);
        assert!(flux <= 1e-12, "{}: flux violation {flux}", info.name);

        for e in &traj.ledger.entries {
            assert!(e.d_grad >= 0.0 && e.d_visc >= 0.0 && e.correction >= 0.0);
            assert!(e.d_beta >= -1e-14, "{}: D_beta {}", info.name, e.d_beta);
        }

        let report = max_principle_report(&spec, &traj).unwrap();
        assert!(report.pass, "{}: {report:?}", info.name);
        assert!(
            report.a0_prime <= report.a_bar
                && report.a_bar <= report.b_bar
                && report.b_bar <= report.b0_prime
        );
        let (a, b) = (spec.potential.a(), spec.potential.b());
        assert!(report.min_u > a && report.max_u < b);
    }
}

#[test]
fn logwell_stays_strictly_inside_the_obstacle() {
    let spec = preset::<f64>("logwell-sign").unwrap();
    let traj = solve(&spec).unwrap();
    for s in &traj.states {
        assert!(s.u.min() > -1.0 && s.u.max() < 1.0);
    }
    let report = max_principle_report(&spec, &traj).unwrap();
    assert!(report.b_bar < 1.0 && report.b0_prime < 1.0);
}

#[test]
fn pure_gradient_flow_decreases_the_corrected_energy() {
    let mut spec = preset::<f64>("quartic-zero").unwrap();
    spec.epsilon = 10.0;
    let traj = solve(&spec).unwrap();
    let mut prev = traj.ledger.initial_free_energy_reg;
    for e in &traj.ledger.entries {
        assert!(
            e.free_energy_reg <= prev + e.correction + 1e-12,
            "step {}",
            e.k
        );
        prev = e.free_energy_reg;
    }
}
