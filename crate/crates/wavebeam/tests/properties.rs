//! Property tests for the structural invariants of the solver stack.

use proptest::prelude::*;
use wavebeam::continuation::{self, trace, TraceConfig};
use wavebeam::model::{
    self, cubic_projection, energy_with_oversampling, jacobian, CoefficientGrid, EquationKind,
    RescaleParams, SolutionPoint,
};
use wavebeam::reducible::{branch_window, two_mode_branch, ModePair};

use EquationKind::{Beam, Wave};

fn kind_strategy() -> impl Strategy<Value = EquationKind> {
    prop_oneof![Just(Wave), Just(Beam)]
}

fn grid_strategy(max_modes: usize) -> impl Strategy<Value = CoefficientGrid> {
    (1..=max_modes, 1..=max_modes)
        .prop_flat_map(|(m, n)| {
            (
                Just(m),
                Just(n),
                proptest::collection::vec(-1.5f64..1.5, m * n),
            )
        })
        .prop_map(|(m, n, data)| CoefficientGrid::from_row_major(m, n, &data).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// The cubic block of the Jacobian represents multiplication by 3 u^2 in
    /// an orthogonal basis, so it is symmetric.
    #[test]
    fn cubic_jacobian_block_symmetric(
        grid in grid_strategy(3),
        kind in kind_strategy(),
        omega in 0.5f64..3.0,
    ) {
        let jac = jacobian(&grid, omega, kind).unwrap();
        let size = grid.m_modes() * grid.n_modes();
        for r in 0..size {
            for c in 0..size {
                if r != c {
                    prop_assert!((jac[(r, c)] - jac[(c, r)]).abs() <= 1e-12);
                }
            }
        }
    }

    /// The energy quadrature is already exact: refining the grid changes
    /// nothing beyond roundoff.
    #[test]
    fn energy_quadrature_exact(
        grid in grid_strategy(3),
        kind in kind_strategy(),
        omega in 0.5f64..3.0,
        tau in 0.0f64..6.2,
    ) {
        let e1 = energy_with_oversampling(&grid, omega, kind, tau, 1).unwrap();
        let e2 = energy_with_oversampling(&grid, omega, kind, tau, 2).unwrap();
        prop_assert!((e1 - e2).abs() <= 1e-12 * e1.abs().max(1.0));
    }

    /// Exact bookkeeping of the scaling symmetry: energies scale by
    /// n^(4 nu), residual norms by n^(3 nu).
    #[test]
    fn rescale_scaling_exact(
        grid in grid_strategy(2),
        kind in kind_strategy(),
        omega in 0.5f64..2.5,
        m_scale in prop_oneof![Just(1u32), Just(3u32)],
        n_scale in prop_oneof![Just(1u32), Just(3u32), Just(5u32)],
    ) {
        let point = SolutionPoint::from_grid(grid, omega, kind).unwrap();
        prop_assume!(point.energy > 1e-9);
        let params = RescaleParams::new(m_scale, n_scale).unwrap();
        let image = model::rescale(&point, params, kind).unwrap();
        let e_ratio = (n_scale as f64).powi(4 * kind.nu() as i32);
        prop_assert!((image.energy / point.energy - e_ratio).abs() <= 1e-12 * e_ratio);
        let r_ratio = (n_scale as f64).powi(3 * kind.nu() as i32);
        prop_assert!(
            (image.residual_norm - r_ratio * point.residual_norm).abs()
                <= 1e-10 * (1.0 + r_ratio * point.residual_norm)
        );
    }

    /// Projection linearity: with the cubic part removed, the residual of a
    /// one-entry grid is exactly the diagonal weight times the entry.
    #[test]
    fn residual_linear_part_exact(
        kind in kind_strategy(),
        omega in 0.5f64..3.0,
        m in 0usize..3,
        n in 0usize..3,
        amp in -2.0f64..2.0,
    ) {
        let grid = CoefficientGrid::single_mode(3, 3, m, n, amp);
        let res = model::residual(&grid, omega, kind).unwrap();
        let cubic = cubic_projection(&grid);
        let tm = (2 * m + 1) as f64;
        let expected = (-omega * omega * tm * tm + kind.spatial_weight(n)) * amp;
        // Exact up to the single rounding of the final addition.
        let ulp = 4e-16 * (res.get(m, n).abs() + cubic.get(m, n).abs() + expected.abs());
        prop_assert!((res.get(m, n) - cubic.get(m, n) - expected).abs() <= ulp);
        // Off-site entries carry no linear contribution at all.
        for mm in 0..3 {
            for nn in 0..3 {
                if (mm, nn) != (m, n) {
                    prop_assert_eq!(res.get(mm, nn), cubic.get(mm, nn));
                }
            }
        }
    }

    /// Two-mode closed form is real exactly inside its window.
    #[test]
    fn window_consistency(
        m in 1usize..4,
        n in 1usize..4,
        kind in kind_strategy(),
        frac in -0.5f64..1.5,
    ) {
        let pair = match ModePair::new(m, n, kind) {
            Ok(p) => p,
            Err(_) => return Ok(()),
        };
        let (low, high) = branch_window(&pair);
        prop_assert!(low < high);
        let osq = low + (high - low) * frac;
        prop_assume!(osq > 1e-6);
        let inside = osq > low && osq < high;
        let boundary = (osq - low).abs() <= 1e-9 * low || (osq - high).abs() <= 1e-9 * high;
        let sol = two_mode_branch(&pair, osq.sqrt());
        if !boundary {
            prop_assert_eq!(inside, sol.is_ok());
        }
        if let Ok(s) = sol {
            prop_assert!(s.amplitudes.iter().all(|a| a.is_finite() && *a >= 0.0));
        }
    }
}

/// Small-amplitude trunk obeys the leading-order relation
/// omega^2 - 1 = (9/16) u00^2.
#[test]
fn trunk_leading_order_relation() {
    let config = TraceConfig {
        omega_max: 1.02,
        step_max: 0.01,
        ..TraceConfig::default()
    };
    let start = continuation::seed_trunk(1.00005, 4, 2, Beam, config.tol).unwrap();
    let traced = trace(&start, 1.0, Beam, &config, "trunk").unwrap();
    let mut prev_defect = f64::INFINITY;
    for p in traced.curve.points.iter().take(8).rev() {
        let a = p.grid.fundamental();
        let defect = (p.omega * p.omega - 1.0 - 9.0 / 16.0 * a * a).abs();
        // The defect shrinks as the amplitude does (next correction is A^4).
        assert!(
            defect <= prev_defect * 1.001 && defect <= 1e-3,
            "defect {defect}"
        );
        prev_defect = defect;
    }
}

/// Step control stays within its bounds along a real trace.
#[test]
fn steps_honour_bounds() {
    let config = TraceConfig {
        omega_max: 2.5,
        step_min: 1e-6,
        step_max: 0.05,
        ..TraceConfig::default()
    };
    let start = continuation::seed_trunk(1.0001, 1, 1, Wave, config.tol).unwrap();
    let traced = trace(&start, 1.0, Wave, &config, "trunk").unwrap();
    for w in traced.curve.points.windows(2) {
        let d = ((w[0].omega - w[1].omega).powi(2)
            + (w[0].grid.get(0, 0) - w[1].grid.get(0, 0)).powi(2))
        .sqrt();
        assert!(d <= 2.0 * config.step_max + 1e-9, "step {d}");
    }
}
