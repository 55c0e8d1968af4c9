//! Odd-mode Galerkin representation of the defocusing cubic wave and beam
//! equations on `[0, pi]`, together with the residual, Jacobian, energy and
//! scaling-symmetry operations that everything else in the crate builds on.
//!
//! A field is expanded as
//!
//! ```text
//! u(tau, x) = sum_{m,n} u[m][n] cos((2m+1) tau) sin((2n+1) x)
//! ```
//!
//! which automatically satisfies the boundary conditions (Dirichlet for the
//! string, Navier for the beam) and 2 pi time periodicity. The cubic term is
//! projected pseudo-spectrally on collocation grids large enough that the
//! quadrature is exact for degree-3 products, so the discrete system carries
//! no aliasing error.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Errors raised by the model-level operations.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("omega must be positive, got {0}")]
    NonPositiveOmega(f64),
    #[error("rescale factors must be odd positive integers, got ({0}, {1})")]
    EvenRescaleFactor(u32, u32),
    #[error("coefficient ({0},{1}) is not finite")]
    NonFiniteCoefficient(usize, usize),
    #[error("mode counts must be positive, got {0}x{1}")]
    EmptyGrid(usize, usize),
    #[error("nu must be 1 (wave) or 2 (beam), got {0}")]
    InvalidNu(u32),
    #[error("coefficient data has length {got}, expected {expected}")]
    CoefficientLength { got: usize, expected: usize },
}

/// Which fourth- or second-order model is being solved.
///
/// `Wave` is the string (`nu = 1`, Dirichlet), `Beam` the Euler–Bernoulli beam
/// (`nu = 2`, Navier). All spectral weights are `(2n+1)^(2 nu)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquationKind {
    Wave,
    Beam,
}

impl EquationKind {
    pub fn nu(self) -> u32 {
        match self {
            EquationKind::Wave => 1,
            EquationKind::Beam => 2,
        }
    }

    pub fn from_nu(nu: u32) -> Result<Self, ModelError> {
        match nu {
            1 => Ok(EquationKind::Wave),
            2 => Ok(EquationKind::Beam),
            other => Err(ModelError::InvalidNu(other)),
        }
    }

    /// Spatial spectral weight `(2n+1)^(2 nu)` of lattice row `n`.
    pub fn spatial_weight(self, n: usize) -> f64 {
        let h = (2 * n + 1) as f64;
        h.powi(2 * self.nu() as i32)
    }

    /// Weight `k^(2 nu)` of the perturbation mode `sin(k x)`.
    pub fn perturbation_weight(self, k: usize) -> f64 {
        (k as f64).powi(2 * self.nu() as i32)
    }
}

impl std::fmt::Display for EquationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EquationKind::Wave => write!(f, "wave"),
            EquationKind::Beam => write!(f, "beam"),
        }
    }
}

/// Linear-stability verdict attached to a converged solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityVerdict {
    Stable,
    Unstable,
}

/// `M x N` matrix of Galerkin amplitudes on the odd-mode lattice.
///
/// Entry `(m, n)` multiplies `cos((2m+1) tau) sin((2n+1) x)`. Entries are
/// validated finite at construction and the value is immutable afterwards,
/// so grids are safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientGrid {
    coeffs: DMatrix<f64>,
}

impl CoefficientGrid {
    pub fn new(coeffs: DMatrix<f64>) -> Result<Self, ModelError> {
        if coeffs.nrows() == 0 || coeffs.ncols() == 0 {
            return Err(ModelError::EmptyGrid(coeffs.nrows(), coeffs.ncols()));
        }
        for m in 0..coeffs.nrows() {
            for n in 0..coeffs.ncols() {
                if !coeffs[(m, n)].is_finite() {
                    return Err(ModelError::NonFiniteCoefficient(m, n));
                }
            }
        }
        Ok(Self { coeffs })
    }

    pub fn zeros(m_modes: usize, n_modes: usize) -> Self {
        assert!(m_modes > 0 && n_modes > 0, "mode counts must be positive");
        Self {
            coeffs: DMatrix::zeros(m_modes, n_modes),
        }
    }

    /// Grid with a single nonzero amplitude at lattice site `(m, n)`.
    pub fn single_mode(m_modes: usize, n_modes: usize, m: usize, n: usize, amplitude: f64) -> Self {
        let mut g = Self::zeros(m_modes, n_modes);
        g.coeffs[(m, n)] = amplitude;
        g
    }

    /// Build from a row-major slice of `m_modes * n_modes` values.
    pub fn from_row_major(
        m_modes: usize,
        n_modes: usize,
        data: &[f64],
    ) -> Result<Self, ModelError> {
        if data.len() != m_modes * n_modes {
            return Err(ModelError::CoefficientLength {
                got: data.len(),
                expected: m_modes * n_modes,
            });
        }
        let coeffs = DMatrix::from_fn(m_modes, n_modes, |m, n| data[m * n_modes + n]);
        Self::new(coeffs)
    }

    pub fn m_modes(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.coeffs[(m, n)]
    }

    pub fn set(&mut self, m: usize, n: usize, value: f64) {
        assert!(value.is_finite(), "coefficient must be finite");
        self.coeffs[(m, n)] = value;
    }

    /// Amplitude of the fundamental mode `cos(tau) sin(x)`.
    pub fn fundamental(&self) -> f64 {
        self.coeffs[(0, 0)]
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    /// Row-major flattening, index `m * N + n`.
    pub fn to_row_major(&self) -> Vec<f64> {
        let (mm, nn) = (self.m_modes(), self.n_modes());
        let mut out = Vec::with_capacity(mm * nn);
        for m in 0..mm {
            for n in 0..nn {
                out.push(self.coeffs[(m, n)]);
            }
        }
        out
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_vec(self.to_row_major())
    }

    pub fn from_vector(
        m_modes: usize,
        n_modes: usize,
        v: &DVector<f64>,
    ) -> Result<Self, ModelError> {
        Self::from_row_major(m_modes, n_modes, v.as_slice())
    }

    /// Zero-pad (or keep) the grid to a larger truncation.
    pub fn padded(&self, m_modes: usize, n_modes: usize) -> Self {
        assert!(m_modes >= self.m_modes() && n_modes >= self.n_modes());
        let mut g = Self::zeros(m_modes, n_modes);
        for m in 0..self.m_modes() {
            for n in 0..self.n_modes() {
                g.coeffs[(m, n)] = self.coeffs[(m, n)];
            }
        }
        g
    }
}

/// Odd integers of the scaling symmetry `u -> n^nu u(m tau, n x)`.
///
/// Even integers would carry solutions off the odd-mode lattice, so they are
/// rejected at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RescaleParams {
    m_scale: u32,
    n_scale: u32,
}

impl RescaleParams {
    pub fn new(m_scale: u32, n_scale: u32) -> Result<Self, ModelError> {
        if m_scale % 2 == 0 || n_scale % 2 == 0 || m_scale == 0 || n_scale == 0 {
            return Err(ModelError::EvenRescaleFactor(m_scale, n_scale));
        }
        Ok(Self { m_scale, n_scale })
    }

    pub fn m_scale(&self) -> u32 {
        self.m_scale
    }

    pub fn n_scale(&self) -> u32 {
        self.n_scale
    }
}

/// A converged periodic solution: coefficients, frequency, canonical energy
/// `E(0)`, the max-norm of its Galerkin residual and an optional stability
/// verdict (`None` = unknown).
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPoint {
    pub grid: CoefficientGrid,
    pub omega: f64,
    pub energy: f64,
    pub residual_norm: f64,
    pub stability: Option<StabilityVerdict>,
}

impl SolutionPoint {
    /// Assemble a point from a grid and frequency, computing the energy and
    /// residual norm so that the stored fields are always consistent.
    pub fn from_grid(
        grid: CoefficientGrid,
        omega: f64,
        kind: EquationKind,
    ) -> Result<Self, ModelError> {
        let energy = energy(&grid, omega, kind, 0.0)?;
        let residual_norm = residual(&grid, omega, kind)?.max_abs();
        Ok(Self {
            grid,
            omega,
            energy,
            residual_norm,
            stability: None,
        })
    }
}

// Collocation sizes. u^3 has time harmonics up to 3(2M-1) and projecting onto
// cos((2m+1) tau) yields even harmonics up to 8M-4, which the uniform P-point
// rule on [0, 2pi) integrates exactly for P >= 8M. In space the products are
// even cosine harmonics up to 8N-4 and the midpoint rule on [0, pi] with Q
// points is exact for harmonics below 2Q, so Q >= 4N suffices.
fn time_points(m_modes: usize) -> usize {
    8 * m_modes
}

fn space_points(n_modes: usize) -> usize {
    4 * n_modes
}

fn time_basis(m_modes: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(p, m_modes, |j, m| {
        let tau = 2.0 * std::f64::consts::PI * j as f64 / p as f64;
        ((2 * m + 1) as f64 * tau).cos()
    })
}

fn space_basis(n_modes: usize, q: usize) -> DMatrix<f64> {
    DMatrix::from_fn(q, n_modes, |i, n| {
        let x = std::f64::consts::PI * (i as f64 + 0.5) / q as f64;
        ((2 * n + 1) as f64 * x).sin()
    })
}

/// Evaluate the truncated field at a single point `(tau, x)`.
pub fn evaluate_field(grid: &CoefficientGrid, tau: f64, x: f64) -> f64 {
    let mut total = 0.0;
    for m in 0..grid.m_modes() {
        let ct = ((2 * m + 1) as f64 * tau).cos();
        if ct == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for n in 0..grid.n_modes() {
            row += grid.get(m, n) * ((2 * n + 1) as f64 * x).sin();
        }
        total += ct * row;
    }
    total
}

/// Exact Galerkin projection of `u^3` back onto the odd-mode lattice.
///
/// Normalised in the amplitude convention of the ansatz itself: projecting a
/// pure basis mode returns its own amplitude. Exact for trigonometric
/// polynomial input because the collocation grids resolve degree-3 products.
pub fn cubic_projection(grid: &CoefficientGrid) -> CoefficientGrid {
    let (mm, nn) = (grid.m_modes(), grid.n_modes());
    let p = time_points(mm);
    let q = space_points(nn);
    let ct = time_basis(mm, p);
    let sx = space_basis(nn, q);
    let field = &ct * grid.coeffs() * sx.transpose();
    let cubed = field.map(|v| v * v * v);
    let proj = ct.transpose() * cubed * &sx * (4.0 / (p as f64 * q as f64));
    CoefficientGrid { coeffs: proj }
}

/// Linear spectral weight `-(omega (2m+1))^2 + (2n+1)^(2 nu)` of site `(m,n)`.
fn linear_weight(m: usize, n: usize, omega: f64, kind: EquationKind) -> f64 {
    let tm = (2 * m + 1) as f64;
    -omega * omega * tm * tm + kind.spatial_weight(n)
}

/// Galerkin residual of the periodic-solution system.
///
/// `R[m][n] = (-(omega (2m+1))^2 + (2n+1)^(2 nu)) u[m][n] + P(u^3)[m][n]`;
/// a vanishing residual characterises a truncated periodic solution.
pub fn residual(
    grid: &CoefficientGrid,
    omega: f64,
    kind: EquationKind,
) -> Result<CoefficientGrid, ModelError> {
    if !(omega > 0.0) {
        return Err(ModelError::NonPositiveOmega(omega));
    }
    let mut r = cubic_projection(grid);
    for m in 0..grid.m_modes() {
        for n in 0..grid.n_modes() {
            let v = r.coeffs[(m, n)] + linear_weight(m, n, omega, kind) * grid.get(m, n);
            r.coeffs[(m, n)] = v;
        }
    }
    Ok(r)
}

/// Extended Jacobian of the residual, `MN x (MN + 1)`.
///
/// The square block is `dR/du` (symmetric: diagonal weights plus the Galerkin
/// matrix of multiplication by `3 u^2`); the last column is `dR/d omega`,
/// i.e. `-2 omega (2m+1)^2 u[m][n]`. Row-major flattening `m * N + n`.
pub fn jacobian(
    grid: &CoefficientGrid,
    omega: f64,
    kind: EquationKind,
) -> Result<DMatrix<f64>, ModelError> {
    if !(omega > 0.0) {
        return Err(ModelError::NonPositiveOmega(omega));
    }
    let (mm, nn) = (grid.m_modes(), grid.n_modes());
    let size = mm * nn;
    let p = time_points(mm);
    let q = space_points(nn);
    let ct = time_basis(mm, p);
    let sx = space_basis(nn, q);
    let field = &ct * grid.coeffs() * sx.transpose();
    let weight3 = field.map(|v| 3.0 * v * v);
    let scale = 4.0 / (p as f64 * q as f64);

    let mut jac = DMatrix::zeros(size, size + 1);
    let mut basis_col = DMatrix::zeros(p, q);
    for mc in 0..mm {
        for nc in 0..nn {
            // dR/du[mc][nc]: project 3 u^2 * basis(mc,nc) onto every mode.
            for j in 0..p {
                let ctv = ct[(j, mc)];
                for i in 0..q {
                    basis_col[(j, i)] = weight3[(j, i)] * ctv * sx[(i, nc)];
                }
            }
            let proj = ct.transpose() * &basis_col * &sx;
            let col = mc * nn + nc;
            for m in 0..mm {
                for n in 0..nn {
                    jac[(m * nn + n, col)] = scale * proj[(m, n)];
                }
            }
            jac[(col, col)] += linear_weight(mc, nc, omega, kind);
            let tm = (2 * mc + 1) as f64;
            jac[(col, size)] = -2.0 * omega * tm * tm * grid.get(mc, nc);
        }
    }
    Ok(jac)
}

/// Energy of the truncated field at phase `tau`,
/// `E(tau) = int_0^pi (1/2 omega^2 (du/dtau)^2 + 1/2 (d^nu u/dx^nu)^2 + 1/4 u^4) dx`,
/// by quadrature that is exact for the trigonometric polynomial integrand.
/// The canonical reported energy of a solution is `E(0)`, where the velocity
/// term vanishes identically in the cosine-only time basis.
pub fn energy(
    grid: &CoefficientGrid,
    omega: f64,
    kind: EquationKind,
    tau: f64,
) -> Result<f64, ModelError> {
    energy_with_oversampling(grid, omega, kind, tau, 1)
}

/// Same as [`energy`] on a quadrature grid refined by `factor`; used to
/// verify that the default rule is already exact.
pub fn energy_with_oversampling(
    grid: &CoefficientGrid,
    omega: f64,
    kind: EquationKind,
    tau: f64,
    factor: usize,
) -> Result<f64, ModelError> {
    if !(omega > 0.0) {
        return Err(ModelError::NonPositiveOmega(omega));
    }
    assert!(factor >= 1);
    let nn = grid.n_modes();
    let q = space_points(nn) * factor;

    // Spatial coefficient vectors at this phase.
    let mut field_c = vec![0.0; nn];
    let mut vel_c = vec![0.0; nn];
    for m in 0..grid.m_modes() {
        let h = (2 * m + 1) as f64;
        let c = (h * tau).cos();
        let s = h * (h * tau).sin();
        for n in 0..nn {
            field_c[n] += grid.get(m, n) * c;
            vel_c[n] -= grid.get(m, n) * s;
        }
    }

    let nu = kind.nu();
    let mut total = 0.0;
    for i in 0..q {
        let x = std::f64::consts::PI * (i as f64 + 0.5) / q as f64;
        let mut u = 0.0;
        let mut du = 0.0;
        let mut dx = 0.0;
        for n in 0..nn {
            let h = (2 * n + 1) as f64;
            let s = (h * x).sin();
            u += field_c[n] * s;
            du += vel_c[n] * s;
            dx += match nu {
                1 => field_c[n] * h * (h * x).cos(),
                _ => -field_c[n] * h * h * s,
            };
        }
        total += 0.5 * omega * omega * du * du + 0.5 * dx * dx + 0.25 * u * u * u * u;
    }
    Ok(total * std::f64::consts::PI / q as f64)
}

/// Relative conservation defect `max_tau |E(tau) - E(0)| / E(0)` sampled over
/// one period. For exact solutions of the truncated system this is small but
/// not zero; it is reported as a diagnostic, never asserted.
pub fn energy_conservation_defect(
    grid: &CoefficientGrid,
    omega: f64,
    kind: EquationKind,
    samples: usize,
) -> Result<f64, ModelError> {
    let e0 = energy(grid, omega, kind, 0.0)?;
    if e0 == 0.0 {
        return Ok(0.0);
    }
    let mut worst: f64 = 0.0;
    for j in 1..samples {
        let tau = 2.0 * std::f64::consts::PI * j as f64 / samples as f64;
        let e = energy(grid, omega, kind, tau)?;
        worst = worst.max(((e - e0) / e0).abs());
    }
    Ok(worst)
}

/// Apply the scaling symmetry `u -> n^nu u(m tau, n x)`, `omega -> n^nu omega / m`.
///
/// Coefficient `(a, b)` moves to the site with harmonics
/// `(m_scale (2a+1), n_scale (2b+1))`, scaled by `n_scale^nu`; the image grid
/// is enlarged to hold every shifted mode. Residuals map exactly (each entry
/// scales by `n_scale^(3 nu)`) and the energy by `n_scale^(4 nu)`.
pub fn rescale(
    point: &SolutionPoint,
    params: RescaleParams,
    kind: EquationKind,
) -> Result<SolutionPoint, ModelError> {
    let ms = params.m_scale() as usize;
    let ns = params.n_scale() as usize;
    let src = &point.grid;
    let new_m = (ms * (2 * src.m_modes() - 1) + 1) / 2;
    let new_n = (ns * (2 * src.n_modes() - 1) + 1) / 2;
    let amp_scale = (ns as f64).powi(kind.nu() as i32);

    let mut grid = CoefficientGrid::zeros(new_m, new_n);
    for a in 0..src.m_modes() {
        for b in 0..src.n_modes() {
            let a2 = (ms * (2 * a + 1) - 1) / 2;
            let b2 = (ns * (2 * b + 1) - 1) / 2;
            grid.set(a2, b2, amp_scale * src.get(a, b));
        }
    }
    let omega = amp_scale * point.omega / ms as f64;
    SolutionPoint::from_grid(grid, omega, kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI: f64 = std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn evaluate_field_matches_basis_products() {
        let zero = CoefficientGrid::zeros(3, 2);
        assert_eq!(evaluate_field(&zero, 0.7, 1.3), 0.0);

        let unit = CoefficientGrid::single_mode(1, 1, 0, 0, 1.0);
        assert!(close(evaluate_field(&unit, 0.0, PI / 2.0), 1.0, 1e-15));

        let g = CoefficientGrid::single_mode(2, 2, 0, 0, 4.0 / 3.0);
        let v = evaluate_field(&g, PI / 3.0, PI / 6.0);
        assert!(close(v, 1.0 / 3.0, 1e-15), "got {v}");
    }

    #[test]
    fn cubic_projection_single_mode() {
        // (A cos t sin x)^3 expands through cos^3 t = (3 cos t + cos 3t)/4 and
        // sin^3 x = (3 sin x - sin 3x)/4.
        let a = 1.7;
        let g = CoefficientGrid::single_mode(2, 2, 0, 0, a);
        let c = cubic_projection(&g);
        let a3 = a * a * a;
        assert!(close(c.get(0, 0), 9.0 * a3 / 16.0, 1e-14 * a3));
        assert!(close(c.get(0, 1), -3.0 * a3 / 16.0, 1e-14 * a3));
        assert!(close(c.get(1, 0), 3.0 * a3 / 16.0, 1e-14 * a3));
        assert!(close(c.get(1, 1), -a3 / 16.0, 1e-14 * a3));
    }

    #[test]
    fn cubic_projection_zero_grid() {
        let g = CoefficientGrid::zeros(3, 3);
        assert_eq!(cubic_projection(&g).max_abs(), 0.0);
    }

    #[test]
    fn cubic_projection_two_mode_beam_pair() {
        // Fundamental plus cos 3t sin 3x, the pair whose restricted system
        // carries the extra -3A^2 B and -A^3 terms.
        let (a, b) = (1.3, 0.7);
        let mut g = CoefficientGrid::zeros(2, 2);
        g.set(0, 0, a);
        g.set(1, 1, b);
        let c = cubic_projection(&g);
        let expect00 = (9.0 * a * a * a + 12.0 * a * b * b - 3.0 * a * a * b) / 16.0;
        let expect11 = (12.0 * a * a * b + 9.0 * b * b * b - a * a * a) / 16.0;
        assert!(close(c.get(0, 0), expect00, 1e-13));
        assert!(close(c.get(1, 1), expect11, 1e-13));
    }

    #[test]
    fn cubic_projection_amplitude_convention() {
        // In the ansatz normalization the cube of any single mode projects
        // onto itself with coefficient 9/16 A^3, independent of the site.
        let g = CoefficientGrid::single_mode(3, 3, 1, 2, 2.0);
        let c = cubic_projection(&g);
        assert!(close(c.get(1, 2), 9.0 * 8.0 / 16.0, 1e-13));
    }

    #[test]
    fn residual_zero_grid_is_zero() {
        let g = CoefficientGrid::zeros(2, 3);
        let r = residual(&g, 1.7, EquationKind::Beam).unwrap();
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn residual_one_mode_closed_form_root() {
        // A = 4/3 sqrt(omega^2 - 1) solves the one-mode system exactly.
        let omega = std::f64::consts::SQRT_2;
        for kind in [EquationKind::Wave, EquationKind::Beam] {
            let g = CoefficientGrid::single_mode(1, 1, 0, 0, 4.0 / 3.0);
            let r = residual(&g, omega, kind).unwrap();
            assert!(r.max_abs() < 1e-14, "residual {}", r.max_abs());
        }
    }

    #[test]
    fn residual_rejects_nonpositive_omega() {
        let g = CoefficientGrid::zeros(1, 1);
        assert!(residual(&g, 0.0, EquationKind::Wave).is_err());
        assert!(residual(&g, -1.0, EquationKind::Beam).is_err());
        assert!(energy(&g, 0.0, EquationKind::Wave, 0.0).is_err());
        assert!(jacobian(&g, -2.0, EquationKind::Wave).is_err());
    }

    #[test]
    fn residual_linear_part_is_diagonal_weight_exactly() {
        // With the cubic term subtracted the residual of a single-entry grid
        // is exactly the diagonal weight times the entry.
        let omega = 1.37;
        for kind in [EquationKind::Wave, EquationKind::Beam] {
            for (m, n) in [(0usize, 0usize), (1, 0), (2, 1)] {
                let g = CoefficientGrid::single_mode(3, 2, m, n, 0.83);
                let r = residual(&g, omega, kind).unwrap();
                let c = cubic_projection(&g);
                let lin = r.get(m, n) - c.get(m, n);
                let w = super::linear_weight(m, n, omega, kind) * 0.83;
                // Exact up to the single rounding of the final addition.
                assert!(
                    (lin - w).abs() <= 4e-16 * (r.get(m, n).abs() + c.get(m, n).abs() + w.abs())
                );
                // No linear contribution lands anywhere else.
                for mm in 0..3 {
                    for nn in 0..2 {
                        if (mm, nn) != (m, n) {
                            assert_eq!(r.get(mm, nn), c.get(mm, nn));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn jacobian_zero_grid_is_diagonal() {
        let g = CoefficientGrid::zeros(2, 2);
        let omega = 1.9;
        let j = jacobian(&g, omega, EquationKind::Beam).unwrap();
        for row in 0..4 {
            for col in 0..4 {
                let expected = if row == col {
                    let (m, n) = (row / 2, row % 2);
                    super::linear_weight(m, n, omega, EquationKind::Beam)
                } else {
                    0.0
                };
                assert!(close(j[(row, col)], expected, 1e-14));
            }
            assert_eq!(j[(row, 4)], 0.0);
        }
    }

    #[test]
    fn jacobian_one_mode_closed_form() {
        let a = 0.9;
        let omega = 1.3;
        let g = CoefficientGrid::single_mode(1, 1, 0, 0, a);
        let j = jacobian(&g, omega, EquationKind::Wave).unwrap();
        let expected = -omega * omega + 1.0 + 27.0 * a * a / 16.0;
        assert!(close(j[(0, 0)], expected, 1e-13));
        assert!(close(j[(0, 1)], -2.0 * omega * a, 1e-13));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut g = CoefficientGrid::zeros(2, 2);
        let vals = [0.4, -0.3, 0.25, 0.11];
        for (idx, v) in vals.iter().enumerate() {
            g.set(idx / 2, idx % 2, *v);
        }
        let omega = 1.21;
        let kind = EquationKind::Beam;
        let j = jacobian(&g, omega, kind).unwrap();
        let h = 1e-6;
        for col in 0..4 {
            let (mc, nc) = (col / 2, col % 2);
            let mut gp = g.clone();
            gp.set(mc, nc, vals[col] + h);
            let mut gm = g.clone();
            gm.set(mc, nc, vals[col] - h);
            let rp = residual(&gp, omega, kind).unwrap();
            let rm = residual(&gm, omega, kind).unwrap();
            for row in 0..4 {
                let (m, n) = (row / 2, row % 2);
                let fd = (rp.get(m, n) - rm.get(m, n)) / (2.0 * h);
                assert!(
                    close(j[(row, col)], fd, 1e-6),
                    "entry ({row},{col}): {} vs fd {}",
                    j[(row, col)],
                    fd
                );
            }
        }
    }

    #[test]
    fn cubic_jacobian_block_is_symmetric() {
        let mut g = CoefficientGrid::zeros(2, 2);
        g.set(0, 0, 1.1);
        g.set(0, 1, -0.4);
        g.set(1, 0, 0.6);
        g.set(1, 1, 0.2);
        let j = jacobian(&g, 1.234, EquationKind::Wave).unwrap();
        // Remove the diagonal linear weights; the cubic block must be symmetric.
        for row in 0..4 {
            for col in 0..4 {
                if row == col {
                    continue;
                }
                assert!(
                    close(j[(row, col)], j[(col, row)], 1e-12),
                    "asymmetry at ({row},{col})"
                );
            }
        }
    }

    #[test]
    fn energy_single_mode_closed_form() {
        let a = 1.3;
        for kind in [EquationKind::Wave, EquationKind::Beam] {
            let g = CoefficientGrid::single_mode(1, 1, 0, 0, a);
            let e = energy(&g, 2.0, kind, 0.0).unwrap();
            let expected = PI * a * a / 4.0 + 3.0 * PI * a.powi(4) / 32.0;
            assert!(close(e, expected, 1e-13), "{kind}: {e} vs {expected}");
        }
    }

    #[test]
    fn energy_zero_grid() {
        let g = CoefficientGrid::zeros(2, 2);
        assert_eq!(energy(&g, 1.0, EquationKind::Wave, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn energy_quadrature_already_exact() {
        let mut g = CoefficientGrid::zeros(2, 3);
        g.set(0, 0, 0.9);
        g.set(1, 2, -0.35);
        g.set(0, 1, 0.21);
        for kind in [EquationKind::Wave, EquationKind::Beam] {
            for tau in [0.0, 0.7, 2.3] {
                let e1 = energy(&g, 1.4, kind, tau).unwrap();
                let e2 = energy_with_oversampling(&g, 1.4, kind, tau, 2).unwrap();
                let rel = (e1 - e2).abs() / e1.abs().max(1e-300);
                assert!(rel <= 1e-12, "{kind} tau={tau}: rel {rel}");
            }
        }
    }

    #[test]
    fn rescale_identity() {
        let g = CoefficientGrid::single_mode(1, 1, 0, 0, 4.0 / 3.0);
        let p = SolutionPoint::from_grid(g, std::f64::consts::SQRT_2, EquationKind::Wave).unwrap();
        let q = rescale(&p, RescaleParams::new(1, 1).unwrap(), EquationKind::Wave).unwrap();
        assert_eq!(q.grid, p.grid);
        assert_eq!(q.omega, p.omega);
    }

    #[test]
    fn rescale_one_mode_trunk_in_space() {
        // (m, n) = (1, 3) sends the fundamental to (0, 1) with amplitude 3A,
        // frequency 3 omega and energy 3^4 E for the wave equation.
        let omega = std::f64::consts::SQRT_2;
        let g = CoefficientGrid::single_mode(1, 1, 0, 0, 4.0 / 3.0);
        let p = SolutionPoint::from_grid(g, omega, EquationKind::Wave).unwrap();
        let q = rescale(&p, RescaleParams::new(1, 3).unwrap(), EquationKind::Wave).unwrap();
        assert!(close(q.grid.get(0, 1), 4.0, 1e-15));
        assert!(close(q.omega, 3.0 * omega, 1e-15));
        assert!(close(q.energy / p.energy, 81.0, 1e-12 * 81.0));
        assert!(q.residual_norm < 1e-12);
    }

    #[test]
    fn rescale_beam_in_time() {
        let omega: f64 = 3.3;
        let g = CoefficientGrid::single_mode(1, 1, 0, 0, 4.0 / 3.0 * (omega * omega - 1.0).sqrt());
        let p = SolutionPoint::from_grid(g, omega, EquationKind::Beam).unwrap();
        let q = rescale(&p, RescaleParams::new(3, 1).unwrap(), EquationKind::Beam).unwrap();
        assert!(close(q.omega, omega / 3.0, 1e-15));
        assert!(close(q.grid.get(1, 0), p.grid.get(0, 0), 1e-15));
        assert!(close(q.energy, p.energy, 1e-12 * p.energy));
    }

    #[test]
    fn rescale_rejects_even_factors() {
        assert!(RescaleParams::new(2, 1).is_err());
        assert!(RescaleParams::new(1, 4).is_err());
        assert!(RescaleParams::new(0, 1).is_err());
    }

    #[test]
    fn rescale_residual_scales_by_n_to_3nu() {
        // An unconverged grid makes the exact residual scaling visible.
        let mut g = CoefficientGrid::zeros(2, 2);
        g.set(0, 0, 1.2);
        g.set(1, 1, -0.4);
        let p = SolutionPoint::from_grid(g, 1.8, EquationKind::Beam).unwrap();
        let q = rescale(&p, RescaleParams::new(1, 3).unwrap(), EquationKind::Beam).unwrap();
        let factor = 3.0f64.powi(6); // n^(3 nu), nu = 2
        let rel = (q.residual_norm - factor * p.residual_norm).abs() / (factor * p.residual_norm);
        assert!(rel < 1e-12, "rel {rel}");
    }

    #[test]
    fn conservation_defect_is_a_small_diagnostic() {
        // A one-mode grid solves its truncation exactly, yet E(tau) is only
        // approximately conserved; the defect is reported, not bounded.
        let omega = std::f64::consts::SQRT_2;
        let g = CoefficientGrid::single_mode(1, 1, 0, 0, 4.0 / 3.0);
        let defect = energy_conservation_defect(&g, omega, EquationKind::Wave, 64).unwrap();
        assert!(defect.is_finite() && defect >= 0.0);
        assert!(defect < 1.0, "defect {defect} unexpectedly large");

        let zero = CoefficientGrid::zeros(1, 1);
        assert_eq!(
            energy_conservation_defect(&zero, 1.0, EquationKind::Beam, 16).unwrap(),
            0.0
        );
    }

    #[test]
    fn grid_round_trip_and_validation() {
        let g = CoefficientGrid::from_row_major(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(g.get(1, 2), 6.0);
        assert_eq!(g.to_row_major(), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert!(CoefficientGrid::from_row_major(2, 2, &[1.0]).is_err());
        let bad = DMatrix::from_element(1, 1, f64::NAN);
        assert!(CoefficientGrid::new(bad).is_err());
    }
}
