//! The wave equation (`nu = 1`) end to end: trunk, branch structure and
//! rescaled-trunk connections mirror the beam behaviour.

use wavebeam::continuation::{seed_trunk, trace, EventKind, Termination, TraceConfig};
use wavebeam::model::EquationKind::Wave;
use wavebeam::reducible::{branch_window, ModePair};

#[test]
fn wave_n2_trunk_is_junction_free_below_omega_3() {
    // At N = 2 no admissible pair exists for the wave equation, so the trunk
    // runs clean to the frequency limit.
    let config = TraceConfig {
        omega_max: 3.0,
        ..TraceConfig::default()
    };
    let start = seed_trunk(1.0001, 4, 2, Wave, config.tol).unwrap();
    let traced = trace(&start, 1.0, Wave, &config, "trunk").unwrap();
    assert!(matches!(traced.termination, Termination::OmegaLimit));
    assert!(traced
        .curve
        .events
        .iter()
        .all(|e| e.kind == EventKind::Endpoint));
}

#[test]
fn wave_n3_reaches_the_one_two_branch_connection() {
    let config = TraceConfig {
        omega_max: 3.1,
        energy_max: 2000.0,
        ..TraceConfig::default()
    };
    let start = seed_trunk(1.0001, 9, 3, Wave, config.tol).unwrap();
    let traced = trace(&start, 1.0, Wave, &config, "trunk").unwrap();
    assert!(matches!(traced.termination, Termination::FundamentalAbsent));

    // The junction with the (1,2) family appears as a fold within 1% of the
    // upper window edge, and the curve terminates at the lower edge where
    // the family meets the rescaled trunk.
    let pair = ModePair::new(1, 2, Wave).unwrap();
    let (low, high) = branch_window(&pair);
    let fold = traced
        .curve
        .events
        .iter()
        .find(|e| e.kind == EventKind::Fold)
        .expect("junction fold detected");
    let fold_omega = traced.curve.points[fold.index].omega;
    assert!(
        (fold_omega - high.sqrt()).abs() / high.sqrt() <= 0.01,
        "fold at {fold_omega} vs {}",
        high.sqrt()
    );

    let end = traced.curve.points.last().unwrap();
    assert!(end.grid.fundamental().abs() <= 1e-8);
    assert!(
        (end.omega - low.sqrt()).abs() / low.sqrt() <= 0.01,
        "endpoint {} vs window edge {}",
        end.omega,
        low.sqrt()
    );

    // Endpoint sits on the trunk rescaled by the (1,2) harmonics (3, 5):
    // omega = 5 omega_trunk / 3 and amplitude 5 A for nu = 1.
    let b = end.grid.get(1, 2).abs();
    assert!(b > 1.0, "dominant mode amplitude {b}");
    let trunk_amp = b / 5.0;
    let omega_trunk = (1.0 + (3.0 * trunk_amp / 4.0).powi(2)).sqrt();
    let rescaled = 5.0 * omega_trunk / 3.0;
    let rel = (end.omega - rescaled).abs() / end.omega;
    assert!(
        rel <= 0.01,
        "endpoint {} vs rescaled trunk {}",
        end.omega,
        rescaled
    );
}
