//! Floquet-classify the beam N = 2 trunk through its unstable window.
//!
//! Every point is re-converged at an enlarged time truncation, the
//! linearised Hamiltonian system is integrated over one period with the
//! order-6 Gauss collocation scheme, and the multiplier moduli decide the
//! verdict. The trunk carries a narrow unstable segment near
//! (E, omega) = (27, 2.3) with stable solutions on both sides.
//!
//! Run with: `cargo run --example stability_scan`

use wavebeam::continuation::{seed_trunk, BranchCurve};
use wavebeam::floquet::{stability_scan, ScanConfig};
use wavebeam::io;
use wavebeam::model::EquationKind::Beam;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Fixed-frequency sampling gives uniform resolution in omega.
    let mut points = Vec::new();
    let mut omega = 2.0;
    while omega <= 2.7 {
        points.push(seed_trunk(omega, 4, 2, Beam, 1e-11)?);
        omega += 0.005;
    }
    let curve = BranchCurve {
        points,
        events: vec![],
        provenance: "beam N=2 trunk".into(),
    };

    let entries = stability_scan(&curve, Beam, &ScanConfig::default());

    // Report contiguous verdict runs.
    let mut run_start = 0;
    for i in 1..=entries.len() {
        if i == entries.len() || entries[i].verdict != entries[i - 1].verdict {
            let (a, b) = (&entries[run_start], &entries[i - 1]);
            println!(
                "{:?}: omega [{:.4}, {:.4}], E [{:8.3}, {:8.3}], worst ||l|-1| {:.3e}",
                a.verdict.unwrap(),
                a.omega,
                b.omega,
                a.energy,
                b.energy,
                entries[run_start..i]
                    .iter()
                    .fold(0.0f64, |acc, e| acc.max(e.max_modulus_deviation))
            );
            run_start = i;
        }
    }

    let out = std::path::Path::new("out/stability_scan");
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("stability.csv"), io::scan_to_csv(&entries))?;
    std::fs::write(
        out.join("multipliers.json"),
        io::multipliers_to_json(&entries),
    )?;
    println!("scan written to {}", out.display());
    Ok(())
}
