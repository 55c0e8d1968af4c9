//! Compare the minimally coupled two-mode approximation with the actual
//! restricted system for the one pair where they differ: the beam modes
//! cos(tau) sin(x) and cos(3 tau) sin(3 x), whose equations pick up the
//! extra -3 A^2 B and -A^3 couplings.
//!
//! Run with: `cargo run --example nonreducible_beam`

use wavebeam::model::EquationKind::Beam;
use wavebeam::reducible::{branch_window, nonreducible_11_beam, two_mode_branch, ModePair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pair = ModePair::new(1, 1, Beam)?;
    let (low, high) = branch_window(&pair);
    println!(
        "two-mode window: omega^2 in ({:.4}, {:.4}), omega in ({:.4}, {:.4})\n",
        low,
        high,
        low.sqrt(),
        high.sqrt()
    );
    println!(
        "{:>8} | {:>10} {:>10} | {:>10} {:>10}  (pattern vs actual system)",
        "omega^2", "A", "B", "A", "B"
    );

    let mut csv = String::from("omega_sq,A_pattern,B_pattern,A_actual,B_actual\n");
    for i in 0..=24 {
        let osq = low + (high - low) * i as f64 / 24.0;
        let omega = osq.sqrt();
        let pattern = two_mode_branch(&pair, omega)?;
        // Pick the actual solution continuing the pattern one: nearest in
        // amplitude space among the Newton-refined roots.
        let actual = nonreducible_11_beam(omega)
            .into_iter()
            .min_by(|x, y| {
                let dx = (x.amplitudes[0] - pattern.amplitudes[0]).powi(2)
                    + (x.amplitudes[1] - pattern.amplitudes[1]).powi(2);
                let dy = (y.amplitudes[0] - pattern.amplitudes[0]).powi(2)
                    + (y.amplitudes[1] - pattern.amplitudes[1]).powi(2);
                dx.total_cmp(&dy)
            })
            .expect("the zero solution always exists");
        println!(
            "{:>8.4} | {:>10.6} {:>10.6} | {:>10.6} {:>10.6}",
            osq,
            pattern.amplitudes[0],
            pattern.amplitudes[1],
            actual.amplitudes[0],
            actual.amplitudes[1]
        );
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            osq,
            pattern.amplitudes[0],
            pattern.amplitudes[1],
            actual.amplitudes[0],
            actual.amplitudes[1]
        ));
    }

    let out = std::path::Path::new("out/nonreducible_beam");
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("comparison.csv"), csv)?;
    println!(
        "\ncomparison written to {}",
        out.join("comparison.csv").display()
    );
    Ok(())
}
