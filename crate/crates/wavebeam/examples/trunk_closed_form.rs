//! Trace the one-mode trunk and compare against its closed form.
//!
//! At truncation M = N = 1 the Galerkin system collapses to a single cubic
//! whose nontrivial root is A = (4/3) sqrt(omega^2 - 1), identical for the
//! wave and beam equations. The traced curve must reproduce it pointwise.
//!
//! Run with: `cargo run --example trunk_closed_form`

use wavebeam::continuation::{seed_trunk, trace, TraceConfig};
use wavebeam::model::EquationKind::Beam;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = TraceConfig {
        omega_max: 3.0,
        ..TraceConfig::default()
    };
    let start = seed_trunk(1.0001, 1, 1, Beam, config.tol)?;
    let traced = trace(&start, 1.0, Beam, &config, "trunk")?;

    println!(
        "{:>10} {:>14} {:>14} {:>10}",
        "omega", "traced A", "closed form", "deviation"
    );
    let mut worst: f64 = 0.0;
    for p in traced.curve.points.iter().step_by(5) {
        let exact = 4.0 / 3.0 * (p.omega * p.omega - 1.0).sqrt();
        let dev = (p.grid.get(0, 0) - exact).abs();
        worst = worst.max(dev);
        println!(
            "{:>10.6} {:>14.10} {:>14.10} {:>10.2e}",
            p.omega,
            p.grid.get(0, 0),
            exact,
            dev
        );
    }
    println!(
        "\n{} points, worst deviation {:.2e}, termination {:?}",
        traced.curve.points.len(),
        worst,
        traced.termination
    );

    // Truncated solutions conserve E(tau) only approximately; the defect is
    // a useful convergence diagnostic.
    let last = traced.curve.points.last().unwrap();
    let defect = wavebeam::model::energy_conservation_defect(&last.grid, last.omega, Beam, 64)?;
    println!(
        "energy-conservation defect at omega {:.4}: {:.2e}",
        last.omega, defect
    );
    Ok(())
}
