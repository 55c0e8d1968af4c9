//! Demonstrate the scaling symmetry u -> n^nu u(m tau, n x),
//! omega -> n^nu omega / m on converged solutions.
//!
//! Images of solutions are solutions: coefficients shift to the harmonics
//! (m (2a+1), n (2b+1)), the frequency rescales, the energy picks up the
//! exact factor n^(4 nu) and the residual entries the factor n^(3 nu).
//!
//! Run with: `cargo run --example rescale_symmetry`

use wavebeam::continuation::seed_trunk;
use wavebeam::model::EquationKind::{Beam, Wave};
use wavebeam::model::{rescale, RescaleParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (kind, omega) in [(Wave, 1.5), (Beam, 1.5), (Beam, 2.2)] {
        let point = seed_trunk(omega, 4, 2, kind, 1e-12)?;
        println!(
            "{kind} trunk at omega {:.3}: E = {:.6}, residual {:.2e}",
            point.omega, point.energy, point.residual_norm
        );
        for (ms, ns) in [(1u32, 3u32), (3, 1), (3, 3)] {
            let image = rescale(&point, RescaleParams::new(ms, ns)?, kind)?;
            let expected = (ns as f64).powi(4 * kind.nu() as i32);
            println!(
                "  (m, n) = ({ms}, {ns}): omega {:.4} -> {:.4}, E ratio {:>9.3} (exact {:>9.3}), residual {:.2e}",
                point.omega,
                image.omega,
                image.energy / point.energy,
                expected,
                image.residual_norm
            );
        }
        println!();
    }
    Ok(())
}
