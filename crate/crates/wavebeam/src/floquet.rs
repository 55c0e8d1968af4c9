//! Linear stability of periodic solutions through Floquet theory.
//!
//! Linearising around a periodic background `u` gives
//! `omega^2 v'' + (-1)^nu d^{2nu}v/dx^{2nu} + 3 u^2 v = 0`. Truncated to `K`
//! spatial modes `sin((k+1) x)` this is a nonautonomous linear Hamiltonian
//! system of size `2K`, `dp/dtau = q`, `dq/dtau = -L(tau) p / omega^2`, with
//! `L` symmetric. One period of the flow, integrated with an implicit
//! Gauss–Legendre collocation scheme (symplectic at every order), yields the
//! monodromy matrix whose eigenvalues — the Floquet multipliers — decide
//! stability: a Hamiltonian spectrum off the unit circle implies a growing
//! counterpart, while all multipliers on the circle indicate linear
//! stability.

use crate::continuation::{self, BranchCurve};
use crate::model::{self, EquationKind, SolutionPoint, StabilityVerdict};
use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Error)]
pub enum FloquetError {
    #[error("perturbation basis size K must be a positive odd integer, got {0}")]
    EvenModeCount(usize),
    #[error("integration needs at least 64 steps, got {0}")]
    TooFewSteps(usize),
    #[error("integrator order must be 4, 6 or 8, got {0}")]
    InvalidOrder(usize),
    #[error(
        "symplecticity defect {defect:.3e} exceeds 1e-9 at {steps} steps; increase the step count"
    )]
    StepCountTooSmall { defect: f64, steps: usize },
    #[error("stage system singular during monodromy integration")]
    SingularStageSystem,
}

/// Spatial perturbation basis `sin((k+1) x)`, `k = 0..K-1`, with `K` odd so
/// that the background truncation `N = (K+1)/2` is an integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PerturbationBasis {
    k: usize,
}

impl PerturbationBasis {
    pub fn new(k: usize) -> Result<Self, FloquetError> {
        if k == 0 || k % 2 == 0 {
            return Err(FloquetError::EvenModeCount(k));
        }
        Ok(Self { k })
    }

    /// Policy basis for a background with `n_modes` spatial modes: `K = 2N - 1`.
    pub fn for_spatial_truncation(n_modes: usize) -> Self {
        Self { k: 2 * n_modes - 1 }
    }

    pub fn mode_count(&self) -> usize {
        self.k
    }
}

/// Spatial operator of the linearised equation at phase `tau`, acting on the
/// coefficients of `sin((k+1) x)`: the diagonal `(k+1)^(2 nu)` plus the
/// Galerkin matrix of multiplication by `3 u(tau, .)^2`. Always symmetric.
pub fn build_l(
    point: &SolutionPoint,
    kind: EquationKind,
    basis: &PerturbationBasis,
    tau: f64,
) -> DMatrix<f64> {
    let tables = SpatialTables::new(&point.grid, basis);
    tables.build_l(point, kind, tau)
}

/// Precomputed sine tables on the spatial quadrature grid, reused across the
/// thousands of `L(tau)` evaluations inside one monodromy integration.
struct SpatialTables {
    /// Quadrature nodes count.
    q: usize,
    /// `sin((2n+1) x_i)` for the background modes, `n_modes x q`.
    background: DMatrix<f64>,
    /// `sin((k+1) x_i)` for the perturbation modes, `k_modes x q`.
    perturbation: DMatrix<f64>,
}

impl SpatialTables {
    fn new(grid: &model::CoefficientGrid, basis: &PerturbationBasis) -> Self {
        let n_modes = grid.n_modes();
        let k = basis.mode_count();
        // u^2 carries even cosine harmonics up to 4N-2 and the sine products
        // up to 2K; the midpoint rule is exact below 2q.
        let q = 2 * n_modes + k + 2;
        let node = |i: usize| PI * (i as f64 + 0.5) / q as f64;
        let background = DMatrix::from_fn(n_modes, q, |n, i| ((2 * n + 1) as f64 * node(i)).sin());
        let perturbation = DMatrix::from_fn(k, q, |kk, i| ((kk + 1) as f64 * node(i)).sin());
        Self {
            q,
            background,
            perturbation,
        }
    }

    fn build_l(&self, point: &SolutionPoint, kind: EquationKind, tau: f64) -> DMatrix<f64> {
        let grid = &point.grid;
        let (mm, nn) = (grid.m_modes(), grid.n_modes());
        let k = self.perturbation.nrows();

        // Spatial coefficients of the background at this phase.
        let mut coef = vec![0.0; nn];
        for m in 0..mm {
            let c = ((2 * m + 1) as f64 * tau).cos();
            for n in 0..nn {
                coef[n] += grid.get(m, n) * c;
            }
        }
        // 3 u^2 on the quadrature nodes.
        let mut weight = vec![0.0; self.q];
        for (i, w) in weight.iter_mut().enumerate() {
            let mut u = 0.0;
            for n in 0..nn {
                u += coef[n] * self.background[(n, i)];
            }
            *w = 3.0 * u * u;
        }

        let mut l = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let mut acc = 0.0;
                for i in 0..self.q {
                    acc += weight[i] * self.perturbation[(a, i)] * self.perturbation[(b, i)];
                }
                let v = 2.0 * acc / self.q as f64;
                l[(a, b)] = v;
                l[(b, a)] = v;
            }
        }
        for a in 0..k {
            l[(a, a)] += kind.perturbation_weight(a + 1);
        }
        l
    }
}

/// Monodromy matrix: the linear map advancing perturbation data by one
/// period, with the integration step count and scheme order that produced it.
#[derive(Debug, Clone)]
pub struct MonodromyMatrix {
    pub entries: DMatrix<f64>,
    pub steps: usize,
    pub order: usize,
}

/// `max |M^T J M - J|` with `J` the canonical symplectic form.
pub fn symplectic_defect(m: &DMatrix<f64>) -> f64 {
    let dim = m.nrows();
    let k = dim / 2;
    let mut j = DMatrix::zeros(dim, dim);
    for i in 0..k {
        j[(i, k + i)] = 1.0;
        j[(k + i, i)] = -1.0;
    }
    let defect = m.transpose() * &j * m - j;
    defect.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Gauss–Legendre collocation nodes on [0, 1] for 2, 3 and 4 stages.
fn gauss_nodes(stages: usize) -> Vec<f64> {
    match stages {
        2 => {
            let d = 3.0f64.sqrt() / 6.0;
            vec![0.5 - d, 0.5 + d]
        }
        3 => {
            let d = 15.0f64.sqrt() / 10.0;
            vec![0.5 - d, 0.5, 0.5 + d]
        }
        4 => {
            let r = (6.0f64 / 5.0).sqrt();
            let w1 = ((3.0 + 2.0 * r) / 7.0).sqrt() / 2.0;
            let w2 = ((3.0 - 2.0 * r) / 7.0).sqrt() / 2.0;
            vec![0.5 - w1, 0.5 - w2, 0.5 + w2, 0.5 + w1]
        }
        _ => unreachable!("stage count validated by order check"),
    }
}

/// Collocation tableau from the order conditions
/// `sum_j a[i][j] c_j^(r-1) = c_i^r / r`, solved to machine precision.
fn gauss_tableau(stages: usize) -> (DMatrix<f64>, Vec<f64>) {
    let c = gauss_nodes(stages);
    let vander = DMatrix::from_fn(stages, stages, |r, j| c[j].powi(r as i32));
    let lu = vander.lu();
    let mut a = DMatrix::zeros(stages, stages);
    for i in 0..stages {
        let rhs = DVector::from_fn(stages, |r, _| c[i].powi(r as i32 + 1) / (r as f64 + 1.0));
        let row = lu.solve(&rhs).expect("Gauss Vandermonde is regular");
        for j in 0..stages {
            a[(i, j)] = row[j];
        }
    }
    let rhs = DVector::from_fn(stages, |r, _| 1.0 / (r as f64 + 1.0));
    let b = lu.solve(&rhs).expect("Gauss Vandermonde is regular");
    (a, b.iter().copied().collect())
}

/// Integrate the `2K`-dimensional linearised Hamiltonian system over one
/// period from the identity, assembling the monodromy matrix.
///
/// The time-periodic coefficient `3 u(tau, .)^2` is evaluated exactly at the
/// collocation times from the Galerkin coefficients; the implicit stage
/// equations of the linear system are solved directly, so the map is
/// symplectic to roundoff. A defect above `1e-9` reports
/// [`FloquetError::StepCountTooSmall`].
pub fn monodromy(
    point: &SolutionPoint,
    kind: EquationKind,
    basis: &PerturbationBasis,
    steps: usize,
    order: usize,
) -> Result<MonodromyMatrix, FloquetError> {
    if steps < 64 {
        return Err(FloquetError::TooFewSteps(steps));
    }
    if !matches!(order, 4 | 6 | 8) {
        return Err(FloquetError::InvalidOrder(order));
    }
    let stages = order / 2;
    let (a, b) = gauss_tableau(stages);
    let c = gauss_nodes(stages);
    let k = basis.mode_count();
    let dim = 2 * k;
    let osq = point.omega * point.omega;
    let tables = SpatialTables::new(&point.grid, basis);

    let h = 2.0 * PI / steps as f64;
    let mut z = DMatrix::<f64>::identity(dim, dim);

    // Stage system (I - h a x A) G = A Z stacked over stages, where
    // A(tau) = [[0, I], [-L/omega^2, 0]] and G holds the stage derivatives.
    let sdim = stages * dim;
    let mut stage_mat = DMatrix::<f64>::zeros(sdim, sdim);
    let mut rhs = DMatrix::<f64>::zeros(sdim, dim);
    let mut ls: Vec<DMatrix<f64>> = Vec::with_capacity(stages);

    for step in 0..steps {
        let tau0 = h * step as f64;
        ls.clear();
        for ci in c.iter().take(stages) {
            ls.push(tables.build_l(point, kind, tau0 + ci * h));
        }

        stage_mat.fill(0.0);
        for i in 0..sdim {
            stage_mat[(i, i)] = 1.0;
        }
        for si in 0..stages {
            let l = &ls[si];
            for sj in 0..stages {
                let f = h * a[(si, sj)];
                if f == 0.0 {
                    continue;
                }
                // A_i block rows: top row couples q (identity), bottom couples p.
                for r in 0..k {
                    stage_mat[(si * dim + r, sj * dim + k + r)] -= f;
                }
                for r in 0..k {
                    for cc in 0..k {
                        stage_mat[(si * dim + k + r, sj * dim + cc)] += f * l[(r, cc)] / osq;
                    }
                }
            }
        }

        // RHS block i = A_i Z.
        for si in 0..stages {
            let l = &ls[si];
            let zp = z.view((0, 0), (k, dim));
            let zq = z.view((k, 0), (k, dim));
            rhs.view_mut((si * dim, 0), (k, dim)).copy_from(&zq);
            let bottom = -(l * zp) / osq;
            rhs.view_mut((si * dim + k, 0), (k, dim)).copy_from(&bottom);
        }

        let lu = stage_mat.clone().lu();
        let stage_sol = lu.solve(&rhs).ok_or(FloquetError::SingularStageSystem)?;

        for si in 0..stages {
            let g = stage_sol.view((si * dim, 0), (dim, dim));
            z += g * (h * b[si]);
        }
    }

    let defect = symplectic_defect(&z);
    if defect > 1e-9 {
        return Err(FloquetError::StepCountTooSmall { defect, steps });
    }
    Ok(MonodromyMatrix {
        entries: z,
        steps,
        order,
    })
}

/// Floquet multipliers with the stability verdict.
#[derive(Debug, Clone)]
pub struct FloquetSpectrum {
    pub multipliers: Vec<Complex<f64>>,
    pub verdict: StabilityVerdict,
    /// `max | |lambda| - 1 |` over the multipliers the verdict considers.
    pub max_modulus_deviation: f64,
    /// `max | |lambda| - 1 |` over the full spectrum.
    pub raw_modulus_deviation: f64,
}

/// Default stability threshold on `||lambda| - 1|`.
pub const STABILITY_THRESHOLD: f64 = 1e-12;

/// Radius around `+1` inside which multipliers are treated as the neutral
/// time-translation pair when classifying a periodic background.
///
/// Around any periodic solution, `v = du/dtau` solves the linearised
/// equation, so the monodromy carries a defective double multiplier at `+1`.
/// Any perturbation of size `delta` — the background's truncation residue,
/// or plain roundoff — splits a defective pair by `sqrt(delta)`, which for
/// binary64 means a spurious `||lambda| - 1|` of order `1e-8` even on exact
/// data. The split is structural, not an instability, so the scan verdict
/// ignores multipliers inside this window; genuine unstable pairs found in
/// practice sit two or more orders of magnitude outside it.
pub const TRANSLATION_WINDOW: f64 = 1e-5;

/// Eigenvalues of the monodromy matrix with the verdict applied literally to
/// the full spectrum at the default threshold `1e-12`. Appropriate when the
/// background carries no neutral translation pair (e.g. the zero solution);
/// scans over periodic backgrounds use [`classify_spectrum`] instead.
pub fn multipliers(m: &MonodromyMatrix) -> FloquetSpectrum {
    multipliers_with_threshold(m, STABILITY_THRESHOLD)
}

pub fn multipliers_with_threshold(m: &MonodromyMatrix, threshold: f64) -> FloquetSpectrum {
    classify_spectrum(m, threshold, 0.0)
}

/// Classification with a translation window: multipliers within
/// `translation_window` of `+1` are excluded from the verdict.
pub fn classify_spectrum(
    m: &MonodromyMatrix,
    threshold: f64,
    translation_window: f64,
) -> FloquetSpectrum {
    let eigs = m.entries.complex_eigenvalues();
    let multipliers: Vec<Complex<f64>> = eigs.iter().copied().collect();
    let raw_modulus_deviation = multipliers
        .iter()
        .fold(0.0f64, |acc, l| acc.max((l.norm() - 1.0).abs()));
    let max_modulus_deviation = multipliers
        .iter()
        .filter(|l| (*l - Complex::new(1.0, 0.0)).norm() > translation_window)
        .fold(0.0f64, |acc, l| acc.max((l.norm() - 1.0).abs()));
    let verdict = if max_modulus_deviation <= threshold {
        StabilityVerdict::Stable
    } else {
        StabilityVerdict::Unstable
    };
    FloquetSpectrum {
        multipliers,
        verdict,
        max_modulus_deviation,
        raw_modulus_deviation,
    }
}

/// Stability-scan configuration. The basis policy is `K = 2N - 1`; each
/// point is re-converged at time truncation `max(M, 3 N^2)` before its
/// monodromy integration, and the step count doubles until the symplecticity
/// defect drops below `defect_target`.
#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub k_override: Option<usize>,
    pub steps: usize,
    pub order: usize,
    pub defect_target: f64,
    pub max_step_doublings: usize,
    pub stability_threshold: f64,
    /// See [`TRANSLATION_WINDOW`]; set to 0 for the literal full-spectrum rule.
    pub translation_window: f64,
    pub refine_background: bool,
    pub tol: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            k_override: None,
            steps: 4096,
            order: 6,
            defect_target: 1e-10,
            max_step_doublings: 5,
            stability_threshold: STABILITY_THRESHOLD,
            translation_window: TRANSLATION_WINDOW,
            refine_background: true,
            tol: 1e-11,
        }
    }
}

/// Per-point scan result.
#[derive(Debug, Clone)]
pub struct ScanEntry {
    pub index: usize,
    pub omega: f64,
    pub energy: f64,
    pub verdict: Option<StabilityVerdict>,
    /// Deviation the verdict is based on (translation window applied).
    pub max_modulus_deviation: f64,
    /// Deviation over the full spectrum.
    pub raw_modulus_deviation: f64,
    pub multipliers: Vec<Complex<f64>>,
    pub det: f64,
    pub symplectic_defect: f64,
    pub error: Option<String>,
}

/// Classify every point of a curve, in parallel; per-point failures are
/// recorded in the entry without aborting the scan. Results are
/// deterministic for a fixed configuration regardless of thread schedule.
pub fn stability_scan(
    curve: &BranchCurve,
    kind: EquationKind,
    config: &ScanConfig,
) -> Vec<ScanEntry> {
    curve
        .points
        .par_iter()
        .enumerate()
        .map(|(index, point)| scan_point(index, point, kind, config))
        .collect()
}

fn scan_point(
    index: usize,
    point: &SolutionPoint,
    kind: EquationKind,
    config: &ScanConfig,
) -> ScanEntry {
    let mut entry = ScanEntry {
        index,
        omega: point.omega,
        energy: point.energy,
        verdict: None,
        max_modulus_deviation: f64::NAN,
        raw_modulus_deviation: f64::NAN,
        multipliers: Vec::new(),
        det: f64::NAN,
        symplectic_defect: f64::NAN,
        error: None,
    };
    let n_modes = point.grid.n_modes();
    let basis = match config.k_override {
        Some(k) => match PerturbationBasis::new(k) {
            Ok(b) => b,
            Err(e) => {
                entry.error = Some(e.to_string());
                return entry;
            }
        },
        None => PerturbationBasis::for_spatial_truncation(n_modes),
    };

    let background = if config.refine_background {
        let target_m = point.grid.m_modes().max(3 * n_modes * n_modes);
        match continuation::refine_time_truncation(point, target_m, kind, config.tol) {
            Ok(p) => p,
            Err(e) => {
                entry.error = Some(format!("background refinement failed: {e}"));
                return entry;
            }
        }
    } else {
        point.clone()
    };

    let mut steps = config.steps;
    let mut result = None;
    for _ in 0..=config.max_step_doublings {
        match monodromy(&background, kind, &basis, steps, config.order) {
            Ok(m) => {
                let defect = symplectic_defect(&m.entries);
                if defect <= config.defect_target {
                    result = Some(m);
                    break;
                }
                result = Some(m);
                steps *= 2;
            }
            Err(FloquetError::StepCountTooSmall { .. }) => {
                steps *= 2;
            }
            Err(e) => {
                entry.error = Some(e.to_string());
                return entry;
            }
        }
    }
    let m = match result {
        Some(m) => m,
        None => {
            entry.error = Some("symplecticity defect did not reach target".into());
            return entry;
        }
    };
    let spectrum = classify_spectrum(&m, config.stability_threshold, config.translation_window);
    entry.symplectic_defect = symplectic_defect(&m.entries);
    entry.det = m.entries.determinant();
    entry.max_modulus_deviation = spectrum.max_modulus_deviation;
    entry.raw_modulus_deviation = spectrum.raw_modulus_deviation;
    entry.verdict = Some(spectrum.verdict);
    entry.multipliers = spectrum.multipliers;
    entry
}

/// Copy of the curve with the scan verdicts written onto its points.
pub fn annotated_curve(curve: &BranchCurve, entries: &[ScanEntry]) -> BranchCurve {
    let verdicts: Vec<_> = entries.iter().map(|e| e.verdict).collect();
    continuation::annotate(curve, &verdicts)
}

/// Closed-form monodromy of the zero background: block-diagonal rotations
/// with frequencies `(k+1)^nu / omega`.
pub fn free_field_multipliers(
    basis: &PerturbationBasis,
    kind: EquationKind,
    omega: f64,
) -> Vec<Complex<f64>> {
    let mut out = Vec::new();
    for k in 0..basis.mode_count() {
        let phase = 2.0 * PI * kind.perturbation_weight(k + 1).sqrt() / omega;
        out.push(Complex::new(phase.cos(), phase.sin()));
        out.push(Complex::new(phase.cos(), -phase.sin()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CoefficientGrid;
    use crate::model::EquationKind::{Beam, Wave};

    fn zero_point(m: usize, n: usize, omega: f64, kind: EquationKind) -> SolutionPoint {
        SolutionPoint::from_grid(CoefficientGrid::zeros(m, n), omega, kind).unwrap()
    }

    #[test]
    fn basis_requires_odd_k() {
        assert!(PerturbationBasis::new(2).is_err());
        assert!(PerturbationBasis::new(0).is_err());
        assert_eq!(PerturbationBasis::new(3).unwrap().mode_count(), 3);
        assert_eq!(PerturbationBasis::for_spatial_truncation(2).mode_count(), 3);
    }

    #[test]
    fn build_l_free_operator_is_diagonal() {
        let p = zero_point(1, 1, 1.3, Beam);
        let basis = PerturbationBasis::new(3).unwrap();
        let l = build_l(&p, Beam, &basis, 0.4);
        for a in 0..3 {
            for b in 0..3 {
                let expected = if a == b {
                    ((a + 1) as f64).powi(4)
                } else {
                    0.0
                };
                assert!((l[(a, b)] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn build_l_vanishing_background_at_quarter_period() {
        // A cos(tau) background vanishes at tau = pi/2, leaving the free operator.
        let grid = CoefficientGrid::single_mode(1, 1, 0, 0, 2.0);
        let p = SolutionPoint::from_grid(grid, 1.5, Wave).unwrap();
        let basis = PerturbationBasis::new(3).unwrap();
        let l = build_l(&p, Wave, &basis, std::f64::consts::FRAC_PI_2);
        for a in 0..3 {
            for b in 0..3 {
                let expected = if a == b {
                    ((a + 1) as f64).powi(2)
                } else {
                    0.0
                };
                assert!((l[(a, b)] - expected).abs() < 1e-12, "({a},{b})");
            }
        }
    }

    #[test]
    fn build_l_spatial_parity_decouples() {
        // u^2 of an odd-lattice field has only even spatial harmonics, so the
        // odd and even sin(k x) sectors never couple.
        let grid = CoefficientGrid::single_mode(1, 1, 0, 0, 1.4);
        let p = SolutionPoint::from_grid(grid, 1.5, Wave).unwrap();
        let basis = PerturbationBasis::new(3).unwrap();
        let l = build_l(&p, Wave, &basis, 0.0);
        // modes are sin x, sin 2x, sin 3x: (0,1) and (1,2) couplings vanish.
        assert!(l[(0, 1)].abs() < 1e-13);
        assert!(l[(1, 2)].abs() < 1e-13);
        assert!(l[(0, 2)].abs() > 1e-3, "odd sector couples");
    }

    #[test]
    fn monodromy_validates_inputs() {
        let p = zero_point(1, 1, 1.0, Wave);
        let basis = PerturbationBasis::new(1).unwrap();
        assert!(matches!(
            monodromy(&p, Wave, &basis, 32, 6),
            Err(FloquetError::TooFewSteps(32))
        ));
        assert!(matches!(
            monodromy(&p, Wave, &basis, 128, 5),
            Err(FloquetError::InvalidOrder(5))
        ));
    }

    #[test]
    fn free_monodromy_single_mode_trace() {
        let omega = 1.37;
        let p = zero_point(1, 1, omega, Wave);
        let basis = PerturbationBasis::new(1).unwrap();
        let m = monodromy(&p, Wave, &basis, 256, 6).unwrap();
        let trace = m.entries[(0, 0)] + m.entries[(1, 1)];
        let expected = 2.0 * (2.0 * PI / omega).cos();
        assert!((trace - expected).abs() < 1e-10, "{trace} vs {expected}");
    }

    #[test]
    fn free_monodromy_multipliers_on_unit_circle() {
        let omega = 1.23;
        for kind in [Wave, Beam] {
            let p = zero_point(1, 2, omega, kind);
            let basis = PerturbationBasis::new(3).unwrap();
            let m = monodromy(&p, kind, &basis, 512, 6).unwrap();
            let spec = multipliers(&m);
            let expected = free_field_multipliers(&basis, kind, omega);
            for e in &expected {
                let nearest = spec
                    .multipliers
                    .iter()
                    .map(|l| (l - e).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(nearest < 1e-8, "{kind}: multiplier {e} missed by {nearest}");
            }
            assert_eq!(spec.verdict, StabilityVerdict::Stable);
        }
    }

    #[test]
    fn monodromy_is_symplectic_on_nontrivial_background() {
        let grid = CoefficientGrid::single_mode(2, 2, 0, 0, 1.8);
        let p = SolutionPoint::from_grid(grid, 1.4, Beam).unwrap();
        let basis = PerturbationBasis::new(3).unwrap();
        let m = monodromy(&p, Beam, &basis, 256, 6).unwrap();
        assert!(symplectic_defect(&m.entries) <= 1e-11);
        let det = m.entries.determinant();
        assert!((det - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn integrator_order_observed_on_free_field() {
        // Compare against the closed-form rotation for one mode; halving the
        // step must reduce the error by at least 2^(order - 1). A small
        // omega keeps the order-8 error above the roundoff floor.
        for (order, omega) in [(4usize, 1.11), (6, 1.11), (8, 0.35)] {
            let p = zero_point(1, 1, omega, Wave);
            let basis = PerturbationBasis::new(1).unwrap();
            let err_at = |steps: usize| -> f64 {
                let m = monodromy(&p, Wave, &basis, steps, order).unwrap();
                let w = 1.0 / omega;
                let phase = 2.0 * PI * w;
                let exact = [
                    [phase.cos(), phase.sin() / w],
                    [-w * phase.sin(), phase.cos()],
                ];
                let mut e = 0.0f64;
                for r in 0..2 {
                    for c in 0..2 {
                        e = e.max((m.entries[(r, c)] - exact[r][c]).abs());
                    }
                }
                e
            };
            let e1 = err_at(64);
            let e2 = err_at(128);
            let observed = (e1 / e2).log2();
            assert!(
                observed >= order as f64 - 1.0,
                "order {order}: observed {observed}"
            );
        }
    }

    #[test]
    fn monodromy_routes_agree_on_periodic_background() {
        // Two independent discretizations of the same flow — different order
        // and step count — must agree far beyond either one's error bound.
        let grid = CoefficientGrid::single_mode(2, 2, 0, 0, 2.0);
        let p = SolutionPoint::from_grid(grid, 1.45, Beam).unwrap();
        let basis = PerturbationBasis::new(3).unwrap();
        let a = monodromy(&p, Beam, &basis, 2048, 6).unwrap();
        let b = monodromy(&p, Beam, &basis, 4096, 8).unwrap();
        let diff = (&a.entries - &b.entries)
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        assert!(diff <= 1e-10, "routes differ by {diff:.3e}");
    }

    #[test]
    fn multiplier_classification() {
        let identity = MonodromyMatrix {
            entries: DMatrix::identity(2, 2),
            steps: 64,
            order: 6,
        };
        let spec = multipliers(&identity);
        assert_eq!(spec.verdict, StabilityVerdict::Stable);
        assert!(spec.max_modulus_deviation < 1e-15);

        let hyperbolic = MonodromyMatrix {
            entries: DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]),
            steps: 64,
            order: 6,
        };
        let spec = multipliers(&hyperbolic);
        assert_eq!(spec.verdict, StabilityVerdict::Unstable);
        assert!((spec.max_modulus_deviation - 1.0).abs() < 1e-12);
    }

    #[test]
    fn multipliers_closed_under_inversion_and_conjugation() {
        let grid = CoefficientGrid::single_mode(2, 2, 0, 0, 2.2);
        let p = SolutionPoint::from_grid(grid, 1.6, Beam).unwrap();
        let basis = PerturbationBasis::new(3).unwrap();
        let m = monodromy(&p, Beam, &basis, 512, 6).unwrap();
        let spec = multipliers(&m);
        for l in &spec.multipliers {
            for target in [1.0 / l, l.conj()] {
                let nearest = spec
                    .multipliers
                    .iter()
                    .map(|o| (o - target).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(nearest <= 1e-8 * (1.0 + target.norm()), "missing {target}");
            }
        }
    }

    #[test]
    fn scan_small_amplitude_trunk_is_stable() {
        // Continuity from the unit-circle spectrum of the zero background.
        let points: Vec<_> = [1.0005, 1.001]
            .iter()
            .map(|&omega| crate::continuation::seed_trunk(omega, 4, 2, Beam, 1e-12).unwrap())
            .collect();
        let curve = BranchCurve {
            points,
            events: vec![],
            provenance: "small-amplitude trunk".into(),
        };
        let entries = stability_scan(&curve, Beam, &ScanConfig::default());
        for e in &entries {
            assert_eq!(
                e.verdict,
                Some(StabilityVerdict::Stable),
                "omega {}",
                e.omega
            );
        }
        let annotated = annotated_curve(&curve, &entries);
        assert!(annotated
            .points
            .iter()
            .all(|p| p.stability == Some(StabilityVerdict::Stable)));
    }

    #[test]
    fn block_diagonal_in_spatial_parity() {
        let grid = CoefficientGrid::single_mode(1, 2, 0, 1, 1.9);
        let p = SolutionPoint::from_grid(grid, 2.1, Beam).unwrap();
        let basis = PerturbationBasis::new(5).unwrap();
        let m = monodromy(&p, Beam, &basis, 128, 6).unwrap();
        let k = 5;
        // Perturbation mode k couples sin((k+1) x); parity of k+1 splits.
        for a in 0..k {
            for b in 0..k {
                if (a + 1) % 2 != (b + 1) % 2 {
                    for (r, c) in [(a, b), (a, k + b), (k + a, b), (k + a, k + b)] {
                        assert!(
                            m.entries[(r, c)].abs() <= 1e-12,
                            "coupling ({r},{c}) = {}",
                            m.entries[(r, c)]
                        );
                    }
                }
            }
        }
    }
}
