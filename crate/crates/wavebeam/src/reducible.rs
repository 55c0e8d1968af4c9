//! Closed-form and small-system analysis of minimally coupled mode sets.
//!
//! A truncated Galerkin system restricted to a set of modes is *reducible*
//! when its equations contain only monomials of the form `c_i c_j^2`; such
//! systems are linear in the squared amplitudes and solve explicitly. This
//! module carries the trunk and two-mode closed forms, their existence
//! windows, a generic solver over support subsets, the constructive
//! reducibility check, and the one two-mode beam system that is *not*
//! reducible.

use crate::model::{self, CoefficientGrid, EquationKind};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Error)]
pub enum ReducibleError {
    #[error("trunk amplitude is imaginary for omega = {0} < 1")]
    OmegaBelowOne(f64),
    #[error("omega^2 = {omega_sq} lies outside the branch window ({low}, {high})")]
    WindowViolation { omega_sq: f64, low: f64, high: f64 },
    #[error("mode pair (m={m}, n={n}) violates (2m+1) < (2n+1)^nu for nu = {nu}")]
    InvalidPair { m: usize, n: usize, nu: u32 },
    #[error("mode set is not reducible: equation {equation} carries monomial {monomial:?}")]
    NotReducible {
        equation: usize,
        monomial: (usize, usize, usize),
    },
    #[error("duplicate mode in set: ({0}, {1})")]
    DuplicateMode(usize, usize),
    #[error("closed-form solution fails the restricted system: residual {0}")]
    ResidualCheck(f64),
}

/// Secondary mode `cos((2m+1) tau) sin((2n+1) x)` paired with the fundamental.
///
/// The standing assumption `(2m+1) < (2n+1)^nu` (with `m, n >= 1`) orders the
/// branch window and is enforced at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModePair {
    m: usize,
    n: usize,
    kind: EquationKind,
}

impl ModePair {
    pub fn new(m: usize, n: usize, kind: EquationKind) -> Result<Self, ReducibleError> {
        let tm = (2 * m + 1) as f64;
        if m < 1 || n < 1 || tm >= spatial_harmonic(n, kind) {
            return Err(ReducibleError::InvalidPair {
                m,
                n,
                nu: kind.nu(),
            });
        }
        Ok(Self { m, n, kind })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> EquationKind {
        self.kind
    }
}

/// `(2n+1)^nu` as a float, the spatial harmonic entering the standing assumption.
fn spatial_harmonic(n: usize, kind: EquationKind) -> f64 {
    ((2 * n + 1) as f64).powi(kind.nu() as i32)
}

/// Amplitude set solving a restricted Galerkin system at a given frequency.
///
/// Construction verifies the amplitudes against the system they solve: the
/// actual restricted Galerkin equations for reducible sets and for the
/// non-reducible solver, or the minimally coupled pattern for the two-mode
/// closed form on the one pair where the pattern is only an approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducibleSolution {
    pub modes: Vec<(usize, usize)>,
    pub amplitudes: Vec<f64>,
    pub omega: f64,
}

enum Validation {
    /// Against the exact restricted Galerkin equations.
    Restricted,
    /// Against the minimally coupled pattern `c_i (9 c_i^2 + 12 sum c_j^2 + 16 w_i)/16`.
    Pattern,
}

impl ReducibleSolution {
    fn checked_with(
        modes: Vec<(usize, usize)>,
        amplitudes: Vec<f64>,
        omega: f64,
        kind: EquationKind,
        validation: Validation,
    ) -> Result<Self, ReducibleError> {
        assert_eq!(modes.len(), amplitudes.len());
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(ReducibleError::ResidualCheck(f64::INFINITY));
        }
        let res = match validation {
            Validation::Restricted => restricted_residual(&modes, &amplitudes, omega, kind),
            Validation::Pattern => pattern_residual(&modes, &amplitudes, omega, kind),
        };
        let worst = res.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let scale = amplitudes
            .iter()
            .fold(1.0f64, |acc, a| acc.max(a.abs()))
            .powi(3)
            .max(1.0);
        if worst > 1e-12 * scale.max(omega * omega) {
            return Err(ReducibleError::ResidualCheck(worst));
        }
        Ok(Self {
            modes,
            amplitudes,
            omega,
        })
    }

    /// Validate against the exact restricted Galerkin system.
    pub fn checked(
        modes: Vec<(usize, usize)>,
        amplitudes: Vec<f64>,
        omega: f64,
        kind: EquationKind,
    ) -> Result<Self, ReducibleError> {
        Self::checked_with(modes, amplitudes, omega, kind, Validation::Restricted)
    }

    /// Embed the solution as a coefficient grid on the smallest rectangular
    /// lattice containing its modes.
    pub fn to_grid(&self) -> CoefficientGrid {
        let mm = self.modes.iter().map(|&(m, _)| m + 1).max().unwrap_or(1);
        let nn = self.modes.iter().map(|&(_, n)| n + 1).max().unwrap_or(1);
        let mut grid = CoefficientGrid::zeros(mm, nn);
        for (&(m, n), &a) in self.modes.iter().zip(&self.amplitudes) {
            grid.set(m, n, a);
        }
        grid
    }

    /// Energy of the embedded field at phase zero.
    pub fn energy(&self, kind: EquationKind) -> f64 {
        model::energy(&self.to_grid(), self.omega, kind, 0.0)
            .expect("omega of a checked solution is positive")
    }
}

/// `(1/pi) * integral over [0, 2pi)` of a product of four cosines with odd
/// harmonics is `(1/4) * #\{sign choices with a ± b ± c ± d = 0\}`. Returned
/// here as the plain integral.
fn cos_quad_integral(a: i64, b: i64, c: i64, d: i64) -> f64 {
    let mut count = 0;
    for sb in [-1i64, 1] {
        for sc in [-1i64, 1] {
            for sd in [-1i64, 1] {
                if a + sb * b + sc * c + sd * d == 0 {
                    count += 1;
                }
            }
        }
    }
    0.25 * PI * count as f64
}

/// Integral over `[0, pi]` of a product of four sines with odd harmonics.
fn sin_quad_integral(a: i64, b: i64, c: i64, d: i64) -> f64 {
    // sin A sin B = (cos(A-B) - cos(A+B)) / 2, and for even p, q:
    // int cos(px) cos(qx) = pi [p=q=0], pi/2 [|p|=|q|>0], 0 otherwise.
    let even_pair = |p: i64, q: i64| -> f64 {
        if p.abs() == q.abs() {
            if p == 0 {
                PI
            } else {
                0.5 * PI
            }
        } else {
            0.0
        }
    };
    0.25 * (even_pair(a - b, c - d) - even_pair(a - b, c + d) - even_pair(a + b, c - d)
        + even_pair(a + b, c + d))
}

/// Projection of the triple basis product `phi_f1 phi_f2 phi_f3` onto the
/// basis mode `target`, in the amplitude convention of the ansatz
/// (orthogonal projection divided by the basis norm `pi^2 / 2`).
fn triple_projection(
    target: (usize, usize),
    f1: (usize, usize),
    f2: (usize, usize),
    f3: (usize, usize),
) -> f64 {
    let th = |m: usize| (2 * m + 1) as i64;
    let sh = |n: usize| (2 * n + 1) as i64;
    let time = cos_quad_integral(th(target.0), th(f1.0), th(f2.0), th(f3.0));
    let space = sin_quad_integral(sh(target.1), sh(f1.1), sh(f2.1), sh(f3.1));
    time * space / (PI * PI / 2.0)
}

/// Cubic form of the restricted system: coefficient of the monomial
/// `c_j c_k c_l` (with `j <= k <= l`) in equation `i`, including the
/// multinomial multiplicity.
fn cubic_form(modes: &[(usize, usize)]) -> Vec<Vec<((usize, usize, usize), f64)>> {
    let k = modes.len();
    let mut eqs = Vec::with_capacity(k);
    for i in 0..k {
        let mut terms = Vec::new();
        for j in 0..k {
            for l in j..k {
                for p in l..k {
                    let mult = multiplicity(j, l, p);
                    let coef = mult * triple_projection(modes[i], modes[j], modes[l], modes[p]);
                    if coef.abs() > 0.0 {
                        terms.push(((j, l, p), coef));
                    }
                }
            }
        }
        eqs.push(terms);
    }
    eqs
}

fn multiplicity(j: usize, l: usize, p: usize) -> f64 {
    if j == l && l == p {
        1.0
    } else if j == l || l == p || j == p {
        3.0
    } else {
        6.0
    }
}

/// Residual of the minimally coupled pattern system
/// `w_i c_i + (9 c_i^3 + 12 c_i sum_{j != i} c_j^2) / 16`, which coincides
/// with the restricted Galerkin system exactly when the set is reducible.
fn pattern_residual(
    modes: &[(usize, usize)],
    amplitudes: &[f64],
    omega: f64,
    kind: EquationKind,
) -> Vec<f64> {
    let sq_sum: f64 = amplitudes.iter().map(|a| a * a).sum();
    modes
        .iter()
        .zip(amplitudes)
        .map(|(&(m, n), &c)| {
            let tm = (2 * m + 1) as f64;
            let w = -omega * omega * tm * tm + kind.spatial_weight(n);
            w * c + (9.0 * c * c * c + 12.0 * c * (sq_sum - c * c)) / 16.0
        })
        .collect()
}

/// Residual of the Galerkin system restricted to the given mode set, i.e.
/// the projections of the full equation onto exactly those modes of a field
/// supported on them. The cubic coefficients come from exact trigonometric
/// quadruple-product integrals.
pub fn restricted_residual(
    modes: &[(usize, usize)],
    amplitudes: &[f64],
    omega: f64,
    kind: EquationKind,
) -> Vec<f64> {
    assert!(omega > 0.0, "omega must be positive");
    assert_eq!(modes.len(), amplitudes.len());
    let form = cubic_form(modes);
    let mut out = Vec::with_capacity(modes.len());
    for (i, &(m, n)) in modes.iter().enumerate() {
        let tm = (2 * m + 1) as f64;
        let mut r = (-omega * omega * tm * tm + kind.spatial_weight(n)) * amplitudes[i];
        for &((j, l, p), coef) in &form[i] {
            r += coef * amplitudes[j] * amplitudes[l] * amplitudes[p];
        }
        out.push(r);
    }
    out
}

/// One-mode amplitude of the trunk, `A = (4/3) sqrt(omega^2 - 1)`.
pub fn trunk_amplitude(omega: f64) -> Result<f64, ReducibleError> {
    if omega < 1.0 {
        return Err(ReducibleError::OmegaBelowOne(omega));
    }
    Ok(4.0 / 3.0 * (omega * omega - 1.0).sqrt())
}

/// Open interval of `omega^2` on which the two-mode closed form is real:
/// `( (4(2n+1)^(2nu) - 3) / (4(2m+1)^2 - 3), (3(2n+1)^(2nu) - 4) / (3(2m+1)^2 - 4) )`.
pub fn branch_window(pair: &ModePair) -> (f64, f64) {
    let w = ((2 * pair.m + 1) as f64).powi(2);
    let big = pair.kind.spatial_weight(pair.n);
    let low = (4.0 * big - 3.0) / (4.0 * w - 3.0);
    let high = (3.0 * big - 4.0) / (3.0 * w - 4.0);
    (low, high)
}

/// Two-mode closed form at a frequency inside (or on the boundary of) the
/// branch window. At the upper edge `B = 0` (trunk connection), at the lower
/// edge `A = 0` (the fundamental is absent).
pub fn two_mode_branch(pair: &ModePair, omega: f64) -> Result<ReducibleSolution, ReducibleError> {
    let (low, high) = branch_window(pair);
    let osq = omega * omega;
    // Closed boundary: the formulas degrade gracefully to one vanishing
    // amplitude exactly at the window edges.
    if osq < low - 1e-14 * low || osq > high + 1e-14 * high {
        return Err(ReducibleError::WindowViolation {
            omega_sq: osq,
            low,
            high,
        });
    }
    let w = ((2 * pair.m + 1) as f64).powi(2);
    let big = pair.kind.spatial_weight(pair.n);
    let a_sq = ((4.0 * w - 3.0) * osq - (4.0 * big - 3.0)).max(0.0);
    let b_sq = ((3.0 * big - 4.0) - (3.0 * w - 4.0) * osq).max(0.0);
    let scale = 4.0 / 21.0f64.sqrt();
    let modes = vec![(0, 0), (pair.m, pair.n)];
    // For the single non-reducible valid pair the closed form solves the
    // pattern system only; everywhere else pattern and restricted coincide.
    let validation = if is_reducible(&modes, pair.kind) {
        Validation::Restricted
    } else {
        Validation::Pattern
    };
    ReducibleSolution::checked_with(
        modes,
        vec![scale * a_sq.sqrt(), scale * b_sq.sqrt()],
        omega,
        pair.kind,
        validation,
    )
}

/// Constructive reducibility check: project every basis triple-product of
/// the set and confirm that no monomial outside the pattern `c_i c_j^2`
/// survives above `1e-14`.
///
/// The check is purely trigonometric, so a given mode set has the same
/// verdict for the wave and beam equations.
pub fn is_reducible(modes: &[(usize, usize)], kind: EquationKind) -> bool {
    off_pattern_monomial(modes, kind).is_none()
}

fn off_pattern_monomial(
    modes: &[(usize, usize)],
    _kind: EquationKind,
) -> Option<(usize, (usize, usize, usize))> {
    for (a, &ma) in modes.iter().enumerate() {
        for (b, &mb) in modes.iter().enumerate().skip(a + 1) {
            if ma == mb {
                let _ = b;
                panic!("duplicate mode ({}, {}) in reducibility check", ma.0, ma.1);
            }
        }
    }
    let form = cubic_form(modes);
    for (i, terms) in form.iter().enumerate() {
        for &((j, l, p), coef) in terms {
            // Allowed in equation i: multisets {i, q, q} for any q.
            let allowed = (j == i && l == p) || (l == i && j == p) || (p == i && j == l);
            if !allowed && coef.abs() > 1e-14 {
                return Some((i, (j, l, p)));
            }
        }
    }
    None
}

/// All solutions of the reducible pattern system (linear in squared
/// amplitudes) over every support subset, without checking reducibility.
/// Amplitudes are returned non-negative; sign flips generate equivalent
/// solutions through the half-period shift `u -> -u`.
fn pattern_solutions(modes: &[(usize, usize)], omega: f64, kind: EquationKind) -> Vec<Vec<f64>> {
    let k = modes.len();
    assert!(k <= 20, "subset enumeration limited to 20 modes");
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mask in 0u32..(1 << k) {
        let support: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let s = support.len();
        let mut amps = vec![0.0; k];
        if s > 0 {
            // 9 s_i + 12 sum_{j != i} s_j = 16 ((2m+1)^2 omega^2 - (2n+1)^(2nu))
            let mut mat = DMatrix::from_element(s, s, 12.0 / 16.0 * 3.0);
            let mut rhs = DVector::zeros(s);
            for (row, &i) in support.iter().enumerate() {
                for (col, _) in support.iter().enumerate() {
                    mat[(row, col)] = if row == col { 9.0 / 16.0 } else { 12.0 / 16.0 };
                }
                let tm = (2 * modes[i].0 + 1) as f64;
                rhs[row] = omega * omega * tm * tm - kind.spatial_weight(modes[i].1);
            }
            let lu = mat.lu();
            let sol = match lu.solve(&rhs) {
                Some(v) => v,
                None => continue,
            };
            if sol.iter().any(|&v| v < -1e-12 || !v.is_finite()) {
                continue;
            }
            for (row, &i) in support.iter().enumerate() {
                amps[i] = sol[row].max(0.0).sqrt();
            }
        }
        if !out
            .iter()
            .any(|prev| prev.iter().zip(&amps).all(|(a, b)| (a - b).abs() <= 1e-12))
        {
            out.push(amps);
        }
    }
    out
}

/// Explicit solutions of a reducible system: enumerate all `2^k` support
/// subsets, solve the linear system in squared amplitudes, and keep every
/// solution with all squares nonnegative (the zero solution always included).
pub fn solve_reducible(
    modes: &[(usize, usize)],
    omega: f64,
    kind: EquationKind,
) -> Result<Vec<ReducibleSolution>, ReducibleError> {
    for (a, &ma) in modes.iter().enumerate() {
        if modes.iter().skip(a + 1).any(|&mb| mb == ma) {
            return Err(ReducibleError::DuplicateMode(ma.0, ma.1));
        }
    }
    if let Some((equation, monomial)) = off_pattern_monomial(modes, kind) {
        return Err(ReducibleError::NotReducible { equation, monomial });
    }
    let mut out = Vec::new();
    for amps in pattern_solutions(modes, omega, kind) {
        out.push(ReducibleSolution::checked(
            modes.to_vec(),
            amps,
            omega,
            kind,
        )?);
    }
    Ok(out)
}

/// All real solutions of the non-reducible beam system for the pair
/// `{(0,0), (1,1)}`:
///
/// ```text
/// A (9A^2 + 12B^2 - 16 omega^2 + 16)   - 3A^2 B = 0
/// B (12A^2 + 9B^2 - 144 omega^2 + 1296) -   A^3 = 0
/// ```
///
/// found by Newton iteration from the reducible-pattern seeds at the same
/// frequency and deduplicated to `1e-9` in amplitude space.
pub fn nonreducible_11_beam(omega: f64) -> Vec<ReducibleSolution> {
    assert!(omega > 0.0, "omega must be positive");
    let modes = [(0usize, 0usize), (1usize, 1usize)];
    let kind = EquationKind::Beam;
    let mut found: Vec<[f64; 2]> = Vec::new();

    let mut seeds = pattern_solutions(&modes, omega, kind);
    // Sign variants of the seeds widen the Newton basins; solutions come in
    // (A, B) ~ (-A, -B) pairs so canonical representatives suffice.
    for s in seeds.clone() {
        seeds.push(vec![s[0], -s[1]]);
    }

    'seed: for seed in seeds {
        let mut a = seed[0];
        let mut b = seed[1];
        for _ in 0..60 {
            let osq = omega * omega;
            let f0 = a * (9.0 * a * a + 12.0 * b * b - 16.0 * osq + 16.0) - 3.0 * a * a * b;
            let f1 = b * (12.0 * a * a + 9.0 * b * b - 144.0 * osq + 1296.0) - a * a * a;
            if f0.abs().max(f1.abs()) < 1e-13 * (1.0 + a.abs().max(b.abs()).powi(3)) {
                break;
            }
            let j00 = 27.0 * a * a + 12.0 * b * b - 16.0 * osq + 16.0 - 6.0 * a * b;
            let j01 = 24.0 * a * b - 3.0 * a * a;
            let j10 = 24.0 * a * b - 3.0 * a * a;
            let j11 = 12.0 * a * a + 27.0 * b * b - 144.0 * osq + 1296.0;
            let det = j00 * j11 - j01 * j10;
            if det.abs() < 1e-12 {
                continue 'seed;
            }
            let da = (-f0 * j11 + f1 * j01) / det;
            let db = (-j00 * f1 + j10 * f0) / det;
            a += da;
            b += db;
            if !a.is_finite() || !b.is_finite() {
                continue 'seed;
            }
        }
        let osq = omega * omega;
        let f0 = a * (9.0 * a * a + 12.0 * b * b - 16.0 * osq + 16.0) - 3.0 * a * a * b;
        let f1 = b * (12.0 * a * a + 9.0 * b * b - 144.0 * osq + 1296.0) - a * a * a;
        if f0.abs().max(f1.abs()) > 1e-11 * (1.0 + a.abs().max(b.abs()).powi(3)) {
            continue;
        }
        // Canonical sign: flip the equivalent (-A, -B) representative.
        if a < 0.0 || (a == 0.0 && b < 0.0) {
            a = -a;
            b = -b;
        }
        if !found
            .iter()
            .any(|&[pa, pb]| (pa - a).abs() <= 1e-9 && (pb - b).abs() <= 1e-9)
        {
            found.push([a, b]);
        }
    }
    found.sort_by(|x, y| x[0].total_cmp(&y[0]).then(x[1].total_cmp(&y[1])));
    found
        .into_iter()
        .filter_map(|[a, b]| {
            ReducibleSolution::checked(modes.to_vec(), vec![a, b], omega, kind).ok()
        })
        .collect()
}

/// Row of the reducible-tree dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeRow {
    pub omega: f64,
    pub energy: f64,
    pub family: Family,
    pub m: usize,
    pub n: usize,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Trunk,
    Branch,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::Trunk => write!(f, "trunk"),
            Family::Branch => write!(f, "branch"),
        }
    }
}

/// Mode pairs admissible at spatial truncation `n_trunc` with a time cutoff
/// `2m+1 <= 2 m_cut - 1`, honouring the standing assumption.
pub fn admissible_pairs(m_cut: usize, n_trunc: usize, kind: EquationKind) -> Vec<ModePair> {
    let mut out = Vec::new();
    for n in 1..n_trunc {
        for m in 1..m_cut {
            if let Ok(p) = ModePair::new(m, n, kind) {
                out.push(p);
            }
        }
    }
    out.sort_by_key(|p| (p.n, p.m));
    out
}

/// Trunk plus every admissible two-mode family at truncation `n_trunc`,
/// sampled on `omega_grid` (each branch restricted to its window) with the
/// exact window endpoints appended. The default time cutoff matches the
/// spatial one; both are independently adjustable through
/// [`reducible_tree_with_cutoffs`].
pub fn reducible_tree(n_trunc: usize, kind: EquationKind, omega_grid: &[f64]) -> Vec<TreeRow> {
    reducible_tree_with_cutoffs(n_trunc, n_trunc, kind, omega_grid)
}

pub fn reducible_tree_with_cutoffs(
    m_cut: usize,
    n_trunc: usize,
    kind: EquationKind,
    omega_grid: &[f64],
) -> Vec<TreeRow> {
    assert!(n_trunc >= 1);
    let mut rows = Vec::new();
    for &omega in omega_grid {
        if omega < 1.0 {
            continue;
        }
        let a = trunk_amplitude(omega).expect("omega >= 1");
        let grid = CoefficientGrid::single_mode(1, 1, 0, 0, a);
        let energy = model::energy(&grid, omega, kind, 0.0).expect("omega positive");
        rows.push(TreeRow {
            omega,
            energy,
            family: Family::Trunk,
            m: 0,
            n: 0,
            a,
            b: 0.0,
        });
    }

    use rayon::prelude::*;
    let pairs = admissible_pairs(m_cut, n_trunc, kind);
    let mut branch_rows: Vec<Vec<TreeRow>> = pairs
        .par_iter()
        .map(|pair| {
            let (low, high) = branch_window(pair);
            let mut omegas: Vec<f64> = omega_grid
                .iter()
                .copied()
                .filter(|w| {
                    let s = w * w;
                    s > low && s < high
                })
                .collect();
            omegas.push(low.sqrt());
            omegas.push(high.sqrt());
            omegas.sort_by(f64::total_cmp);
            let mut rows = Vec::with_capacity(omegas.len());
            for omega in omegas {
                let sol = match two_mode_branch(pair, omega) {
                    Ok(s) => s,
                    Err(_) => continue,
                };
                rows.push(TreeRow {
                    omega,
                    energy: sol.energy(kind),
                    family: Family::Branch,
                    m: pair.m,
                    n: pair.n,
                    a: sol.amplitudes[0],
                    b: sol.amplitudes[1],
                });
            }
            rows
        })
        .collect();
    for chunk in branch_rows.drain(..) {
        rows.extend(chunk);
    }
    rows
}
