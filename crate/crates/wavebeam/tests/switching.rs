//! Branch-point switching on the beam N = 2 curve: the trace localizes the
//! junctions with the (3,1) and (2,1) two-mode families, and perturbing
//! along the bordered-kernel direction lands on the crossing family.

use std::sync::OnceLock;
use wavebeam::continuation::{
    branch_null_direction, seed_trunk, switch_branch, trace, EventKind, Termination, Trace,
    TraceConfig,
};
use wavebeam::model::EquationKind::Beam;

fn config() -> TraceConfig {
    TraceConfig {
        omega_max: 3.42,
        energy_max: 2000.0,
        ..TraceConfig::default()
    }
}

fn traced() -> &'static Trace {
    static T: OnceLock<Trace> = OnceLock::new();
    T.get_or_init(|| {
        let start = seed_trunk(1.0001, 4, 2, Beam, 1e-11).unwrap();
        trace(&start, 1.0, Beam, &config(), "trunk").unwrap()
    })
}

#[test]
fn junctions_are_localized_near_reducible_predictions() {
    let t = traced();
    let branch_points: Vec<f64> = t
        .curve
        .branch_point_indices()
        .iter()
        .map(|&i| t.curve.points[i].omega)
        .collect();
    // (3,1) and (2,1) window edges; the terminal (1,1) connection is a
    // branch point on the rescaled trunk.
    for predicted in [(239.0f64 / 143.0).sqrt(), (239.0f64 / 71.0).sqrt()] {
        let nearest = branch_points
            .iter()
            .map(|o| (o - predicted).abs() / predicted)
            .fold(f64::INFINITY, f64::min);
        assert!(
            nearest <= 0.05,
            "no branch point within 5% of {predicted}: {branch_points:?}"
        );
    }
}

#[test]
fn switching_lands_on_the_crossing_family() {
    let t = traced();
    let idx = t.curve.branch_point_indices()[0];
    let at = &t.curve.points[idx];
    let tangent = &t.tangents[idx];
    let w = branch_null_direction(at, tangent, Beam).unwrap();
    let switched = switch_branch(at, &w, 1e-3, Beam, &config()).unwrap();

    // Off the trunk: the (3,1) amplitude switches on.
    assert!(switched.grid.get(3, 1).abs() > 1e-4);
    assert!(switched.residual_norm <= 1e-11);

    // Tracing the new family reaches the rescaled-trunk connection where
    // the fundamental mode is absent.
    let branch = trace(&switched, 1.0, Beam, &config(), "branch").unwrap();
    assert!(matches!(branch.termination, Termination::FundamentalAbsent));
    let end = branch.curve.points.last().unwrap();
    assert!(end.grid.fundamental().abs() <= 1e-8);
    // The connection point is simultaneously a branch point of the rescaled
    // trunk and the endpoint of this curve; both events may share the index.
    let last = branch.curve.points.len() - 1;
    assert!(branch
        .curve
        .events
        .iter()
        .any(|e| e.index == last && e.kind == EventKind::Endpoint));

    // The endpoint sits on the trunk rescaled by the (3,1) harmonics
    // (2m+1, 2n+1) = (7, 3): omega = 3^nu / 7 * omega_trunk.
    let b = end.grid.get(3, 1).abs();
    let trunk_amp = b / 9.0;
    let omega_trunk = (1.0 + (3.0 * trunk_amp / 4.0).powi(2)).sqrt();
    let rescaled = 9.0 * omega_trunk / 7.0;
    let rel = (end.omega - rescaled).abs() / end.omega;
    assert!(
        rel <= 0.01,
        "endpoint {} vs rescaled {}",
        end.omega,
        rescaled
    );
}

#[test]
fn switch_offset_shrinks_with_epsilon() {
    let t = traced();
    let idx = t.curve.branch_point_indices()[0];
    let at = &t.curve.points[idx];
    let tangent = &t.tangents[idx];
    let w = branch_null_direction(at, tangent, Beam).unwrap();
    let mut prev = f64::INFINITY;
    for eps in [1e-2, 1e-3, 1e-4] {
        let s = switch_branch(at, &w, eps, Beam, &config()).unwrap();
        let mut dist2 = (s.omega - at.omega).powi(2);
        for m in 0..4 {
            for n in 0..2 {
                dist2 += (s.grid.get(m, n) - at.grid.get(m, n)).powi(2);
            }
        }
        let dist = dist2.sqrt();
        assert!(dist <= 10.0 * eps, "eps {eps}: distance {dist}");
        assert!(dist < prev);
        prev = dist;
    }
}
