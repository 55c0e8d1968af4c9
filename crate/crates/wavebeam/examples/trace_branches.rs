//! Trace the beam N = 2 solution curve with event detection and branch
//! switching, writing figure-ready CSV files.
//!
//! The trace starts on the trunk just above omega = 1. On its way up it
//! crosses the junctions with the (3,1) and (2,1) two-mode families (branch
//! points), rounds a fold near the reducible prediction for the (1,1) window
//! edge, descends that branch and stops where the fundamental mode dies out:
//! the connection with a rescaled trunk. Each detected branch point is then
//! switched onto and the emerging family traced to its own connection.
//!
//! Run with: `cargo run --example trace_branches`

use wavebeam::continuation::{
    branch_null_direction, seed_trunk, switch_branch, trace, TraceConfig,
};
use wavebeam::io;
use wavebeam::model::EquationKind::Beam;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::path::Path::new("out/trace_branches");
    std::fs::create_dir_all(out)?;

    let config = TraceConfig {
        omega_max: 3.42,
        energy_max: 2000.0,
        ..TraceConfig::default()
    };
    let start = seed_trunk(1.0001, 4, 2, Beam, config.tol)?;
    let trunk = trace(&start, 1.0, Beam, &config, "trunk")?;

    println!(
        "trunk: {} points, termination {:?}",
        trunk.curve.points.len(),
        trunk.termination
    );
    for e in &trunk.curve.events {
        let p = &trunk.curve.points[e.index];
        println!(
            "  {:>12} at omega {:.6}, E {:>9.3}, u00 {:+.4}, u11 {:+.4}",
            e.kind.to_string(),
            p.omega,
            p.energy,
            p.grid.get(0, 0),
            p.grid.get(1, 1)
        );
    }
    std::fs::write(out.join("trunk.csv"), io::curve_to_csv(&trunk.curve))?;
    std::fs::write(
        out.join("trunk.json"),
        io::curve_to_json(&trunk.curve, Beam),
    )?;

    for idx in trunk.curve.branch_point_indices() {
        let at = &trunk.curve.points[idx];
        let tangent = &trunk.tangents[idx];
        let null_dir = branch_null_direction(at, tangent, Beam)?;
        let switched = switch_branch(at, &null_dir, 1e-3, Beam, &config)?;
        println!("switched at omega {:.6} onto a crossing family", at.omega);
        for direction in [1.0, -1.0] {
            let branch = trace(&switched, direction, Beam, &config, "branch")?;
            let end = branch.curve.points.last().unwrap();
            // Label by the dominant mode at the far end.
            let g = &end.grid;
            let (mut bm, mut bn, mut bv) = (0, 0, 0.0);
            for m in 0..g.m_modes() {
                for n in 0..g.n_modes() {
                    if g.get(m, n).abs() > bv {
                        bv = g.get(m, n).abs();
                        (bm, bn) = (m, n);
                    }
                }
            }
            println!(
                "  direction {:+}: {} points, ends at omega {:.6}, E {:.3}, dominant u{}{} = {:+.4} ({:?})",
                direction,
                branch.curve.points.len(),
                end.omega,
                end.energy,
                bm,
                bn,
                g.get(bm, bn),
                branch.termination
            );
            let name = format!(
                "branch_m{bm}_n{bn}_{}",
                if direction > 0.0 { "fwd" } else { "rev" }
            );
            std::fs::write(
                out.join(format!("{name}.csv")),
                io::curve_to_csv(&branch.curve),
            )?;
        }
    }
    println!("curves written to {}", out.display());
    Ok(())
}
