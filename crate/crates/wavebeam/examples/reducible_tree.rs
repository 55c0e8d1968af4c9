//! Emit the closed-form reducible tree: the trunk plus every admissible
//! two-mode family at a given truncation, each sampled across its existence
//! window.
//!
//! Run with: `cargo run --example reducible_tree`

use wavebeam::io;
use wavebeam::model::EquationKind::Beam;
use wavebeam::reducible::{admissible_pairs, branch_window, reducible_tree};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_trunc = 4;
    println!("beam equation, truncation N = {n_trunc}");
    println!(
        "{:>4} {:>4} {:>12} {:>12}",
        "m", "n", "omega low", "omega high"
    );
    for pair in admissible_pairs(n_trunc, n_trunc, Beam) {
        let (low, high) = branch_window(&pair);
        println!(
            "{:>4} {:>4} {:>12.6} {:>12.6}",
            pair.m(),
            pair.n(),
            low.sqrt(),
            high.sqrt()
        );
    }

    let grid: Vec<f64> = (0..1200).map(|i| 1.0 + 2.6 * i as f64 / 1199.0).collect();
    let rows = reducible_tree(n_trunc, Beam, &grid);
    let trunk_rows = rows.iter().filter(|r| r.m == 0).count();
    println!(
        "\n{} rows ({} trunk, {} branch)",
        rows.len(),
        trunk_rows,
        rows.len() - trunk_rows
    );

    let out = std::path::Path::new("out/reducible_tree");
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("reducible_tree.csv"), io::tree_to_csv(&rows))?;
    println!(
        "tree written to {}",
        out.join("reducible_tree.csv").display()
    );
    Ok(())
}
