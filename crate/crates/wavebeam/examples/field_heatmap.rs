//! Sample a converged solution on a (tau, x) grid for density plotting.
//!
//! Produces the raw data behind space-time heat maps of individual
//! solutions: a CSV of (tau, x, u) rows over one period and the full
//! interval.
//!
//! Run with: `cargo run --example field_heatmap`

use wavebeam::continuation::{seed_trunk, trace, TraceConfig};
use wavebeam::io;
use wavebeam::model::EquationKind::Beam;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A solution deep on the (1,1) branch, where the field mixes the
    // fundamental with the cos(3 tau) sin(3 x) harmonic.
    let config = TraceConfig {
        omega_max: 3.42,
        energy_max: 2000.0,
        ..TraceConfig::default()
    };
    let start = seed_trunk(1.0001, 4, 2, Beam, config.tol)?;
    let traced = trace(&start, 1.0, Beam, &config, "trunk")?;
    let n = traced.curve.points.len();
    let point = &traced.curve.points[n - n / 6];
    println!(
        "sampling the solution at omega {:.5}, E {:.3} (u00 {:+.4}, u11 {:+.4})",
        point.omega,
        point.energy,
        point.grid.get(0, 0),
        point.grid.get(1, 1)
    );

    let out = std::path::Path::new("out/field_heatmap");
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("field.csv"), io::field_grid_csv(point, 181, 91))?;
    std::fs::write(out.join("solution.json"), io::solution_to_json(point, Beam))?;
    println!("grid written to {}", out.join("field.csv").display());
    Ok(())
}
