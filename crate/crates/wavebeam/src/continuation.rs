//! Pseudo-arclength continuation of periodic-solution families.
//!
//! Solutions of the Galerkin system form one-parameter curves in the
//! `(coefficients, omega)` space. A trace alternates a tangent predictor with
//! a bordered Newton corrector constrained to the hyperplane orthogonal to
//! the previous tangent, adapts the arclength step, flags folds (sign change
//! of the frequency component of the tangent) and branch points (sign change
//! of the bordered-Jacobian determinant), localizes branch points by
//! bisection, and stops when a limit is reached or when the fundamental mode
//! dies out — the signature of a connection to a rescaled trunk.

use crate::model::{
    self, CoefficientGrid, EquationKind, ModelError, SolutionPoint, StabilityVerdict,
};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ContinuationError {
    #[error("Newton failed to converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("bordered Jacobian numerically singular (condition number {cond:.3e})")]
    SingularJacobian { cond: f64 },
    #[error("starting point has residual {residual:.3e} above tolerance {tol:.3e}")]
    InvalidStart { residual: f64, tol: f64 },
    #[error("both branch-switch perturbations failed to converge")]
    SwitchFailed,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Parameters of a trace. Defaults follow the step policy used throughout:
/// tolerance `1e-11`, steps within `[1e-8, 0.1]`, doubling after three
/// consecutive fast corrections and halving on failure.
#[derive(Debug, Clone)]
pub struct TraceConfig {
    pub tol: f64,
    pub max_newton_iter: usize,
    pub step_initial: f64,
    pub step_min: f64,
    pub step_max: f64,
    pub max_points: usize,
    pub energy_max: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    /// Fundamental-mode amplitude below which the curve is declared to have
    /// reached a rescaled-trunk connection.
    pub fundamental_tol: f64,
    /// Localize detected branch points by bisection to this arclength.
    pub branch_point_arclength: f64,
    pub locate_branch_points: bool,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_newton_iter: 25,
            step_initial: 1e-2,
            step_min: 1e-8,
            step_max: 0.1,
            max_points: 10_000,
            energy_max: f64::INFINITY,
            omega_min: 0.0,
            omega_max: f64::INFINITY,
            fundamental_tol: 1e-10,
            branch_point_arclength: 1e-10,
            locate_branch_points: true,
        }
    }
}

/// Affine constraint `normal . y = offset` closing the bordered system:
/// either frequency held fixed or Keller's arclength hyperplane.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub normal: DVector<f64>,
    pub offset: f64,
}

impl Constraint {
    /// Hold `omega` fixed at the given value.
    pub fn fixed_omega(unknowns: usize, omega: f64) -> Self {
        let mut normal = DVector::zeros(unknowns);
        normal[unknowns - 1] = 1.0;
        Self {
            normal,
            offset: omega,
        }
    }

    /// Hyperplane through `anchor` orthogonal to `direction`.
    pub fn hyperplane(direction: DVector<f64>, anchor: &DVector<f64>) -> Self {
        let offset = direction.dot(anchor);
        Self {
            normal: direction,
            offset,
        }
    }
}

/// Continuation state: the current point, the unit tangent in
/// `(coefficients, omega)` space, the arclength step and the orientation.
#[derive(Debug, Clone)]
pub struct ContinuationState {
    pub current: SolutionPoint,
    pub tangent: DVector<f64>,
    pub step: f64,
    pub orientation: f64,
}

/// Kinds of events recorded along a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Fold,
    BranchPoint,
    Endpoint,
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EventKind::Fold => write!(f, "fold"),
            EventKind::BranchPoint => write!(f, "branch_point"),
            EventKind::Endpoint => write!(f, "endpoint"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchEvent {
    pub index: usize,
    pub kind: EventKind,
}

/// Ordered list of converged points with continuation metadata.
#[derive(Debug, Clone)]
pub struct BranchCurve {
    pub points: Vec<SolutionPoint>,
    pub events: Vec<BranchEvent>,
    pub provenance: String,
}

impl BranchCurve {
    pub fn event_at(&self, index: usize) -> Option<EventKind> {
        self.events
            .iter()
            .find(|e| e.index == index)
            .map(|e| e.kind)
    }

    pub fn branch_point_indices(&self) -> Vec<usize> {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::BranchPoint)
            .map(|e| e.index)
            .collect()
    }
}

/// Why a trace stopped.
#[derive(Debug, Clone)]
pub enum Termination {
    OmegaLimit,
    EnergyLimit,
    MaxPoints,
    /// Fundamental amplitude fell below the threshold: the curve has reached
    /// its connection with a rescaled trunk.
    FundamentalAbsent,
    /// Step control hit `step_min` without convergence; the curve holds the
    /// points accepted so far.
    Stalled(String),
}

/// A traced curve with its termination cause and per-point tangents.
#[derive(Debug, Clone)]
pub struct Trace {
    pub curve: BranchCurve,
    pub termination: Termination,
    pub tangents: Vec<DVector<f64>>,
}

fn pack(grid: &CoefficientGrid, omega: f64) -> DVector<f64> {
    let mut data = grid.to_row_major();
    data.push(omega);
    DVector::from_vec(data)
}

fn unpack(
    y: &DVector<f64>,
    m_modes: usize,
    n_modes: usize,
) -> Result<(CoefficientGrid, f64), ModelError> {
    let omega = y[y.len() - 1];
    let grid =
        CoefficientGrid::from_row_major(m_modes, n_modes, &y.as_slice()[..m_modes * n_modes])?;
    Ok((grid, omega))
}

/// Bordered matrix `[J; row]` where `J` is the extended Jacobian.
fn bordered(jac: &DMatrix<f64>, row: &DVector<f64>) -> DMatrix<f64> {
    let n = jac.ncols();
    let mut b = DMatrix::zeros(n, n);
    b.view_mut((0, 0), (n - 1, n)).copy_from(jac);
    for c in 0..n {
        b[(n - 1, c)] = row[c];
    }
    b
}

/// Sign of the determinant through an LU factorization; avoids overflow of
/// the determinant value itself on larger truncations.
fn det_sign(matrix: &DMatrix<f64>) -> f64 {
    let n = matrix.nrows();
    let lu = matrix.clone().lu();
    let mut sign: f64 = lu.p().determinant::<f64>();
    let u = lu.u();
    for i in 0..n {
        let d = u[(i, i)];
        if d == 0.0 {
            return 0.0;
        }
        if d < 0.0 {
            sign = -sign;
        }
    }
    sign
}

/// Newton correction of a seed onto the solution manifold subject to an
/// affine constraint. Quadratic convergence near regular points; the
/// bordered system is solved by SVD and a condition number above `1e14`
/// raises [`ContinuationError::SingularJacobian`], the signature of a nearby
/// bifurcation point.
pub fn newton_correct(
    grid: &CoefficientGrid,
    omega: f64,
    kind: EquationKind,
    constraint: &Constraint,
    tol: f64,
    max_iter: usize,
) -> Result<SolutionPoint, ContinuationError> {
    newton_correct_counted(grid, omega, kind, constraint, tol, max_iter).map(|(p, _)| p)
}

fn newton_correct_counted(
    grid: &CoefficientGrid,
    omega: f64,
    kind: EquationKind,
    constraint: &Constraint,
    tol: f64,
    max_iter: usize,
) -> Result<(SolutionPoint, usize), ContinuationError> {
    assert!(tol > 0.0, "tolerance must be positive");
    let (mm, nn) = (grid.m_modes(), grid.n_modes());
    let unknowns = mm * nn + 1;
    assert_eq!(constraint.normal.len(), unknowns);

    let mut y = pack(grid, omega);
    let mut last_residual = f64::INFINITY;
    for iter in 0..=max_iter {
        let (g, w) = unpack(&y, mm, nn)?;
        if !(w > 0.0) {
            return Err(ContinuationError::NonConvergence {
                iterations: iter,
                residual: last_residual,
            });
        }
        let res = model::residual(&g, w, kind)?;
        let rn = res.max_abs();
        last_residual = rn;
        let cval = constraint.normal.dot(&y) - constraint.offset;
        let scale = 1.0 + y.amax();
        if rn <= tol && cval.abs() <= 1e-12 * scale {
            let mut point = SolutionPoint::from_grid(g, w, kind)?;
            point.stability = None;
            return Ok((point, iter));
        }
        if iter == max_iter {
            break;
        }

        let jac = model::jacobian(&g, w, kind)?;
        let b = bordered(&jac, &constraint.normal);
        let mut rhs = DVector::zeros(unknowns);
        for (i, v) in res.to_row_major().iter().enumerate() {
            rhs[i] = -v;
        }
        rhs[unknowns - 1] = -cval;

        let svd = b.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let cond = if smin > 0.0 {
            smax / smin
        } else {
            f64::INFINITY
        };
        if cond > 1e14 {
            return Err(ContinuationError::SingularJacobian { cond });
        }
        let delta = svd
            .solve(&rhs, 0.0)
            .map_err(|_| ContinuationError::SingularJacobian { cond })?;
        y += delta;
    }
    Err(ContinuationError::NonConvergence {
        iterations: max_iter,
        residual: last_residual,
    })
}

/// Unit tangent of the solution curve at a point, computed from the bordered
/// system `[J; border] t = e_last`. The caller provides the bordering row
/// (the previous tangent during a trace, the frequency direction initially).
pub fn tangent_at(
    point: &SolutionPoint,
    kind: EquationKind,
    border: &DVector<f64>,
) -> Result<DVector<f64>, ContinuationError> {
    let jac = model::jacobian(&point.grid, point.omega, kind)?;
    let b = bordered(&jac, border);
    let n = b.nrows();
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let svd = b.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if cond > 1e14 {
        return Err(ContinuationError::SingularJacobian { cond });
    }
    let t = svd
        .solve(&rhs, 0.0)
        .map_err(|_| ContinuationError::SingularJacobian { cond })?;
    let norm = t.norm();
    Ok(t / norm)
}

/// Tangent predictor: step from the current point along the oriented tangent.
/// The result is an unconverged seed; its stored residual norm is the honest
/// residual of the predicted coefficients.
pub fn predict(state: &ContinuationState, kind: EquationKind) -> Result<SolutionPoint, ModelError> {
    let (mm, nn) = (state.current.grid.m_modes(), state.current.grid.n_modes());
    let y = pack(&state.current.grid, state.current.omega)
        + &state.tangent * (state.step * state.orientation);
    let (grid, omega) = unpack(&y, mm, nn)?;
    SolutionPoint::from_grid(grid, omega, kind)
}

/// Per-point quantities driving fold and branch-point detection.
#[derive(Debug, Clone, Copy)]
pub struct EventSample {
    /// Frequency component of the unit tangent.
    pub tangent_omega: f64,
    /// Sign of the bordered-Jacobian determinant.
    pub det_sign: f64,
}

/// Offline event detector over a sequence of per-point samples: a fold where
/// the frequency component of the tangent changes sign, a branch point where
/// the bordered determinant changes sign without a fold.
pub fn detect_events(samples: &[EventSample]) -> Vec<BranchEvent> {
    let mut events = Vec::new();
    for i in 1..samples.len() {
        let fold = samples[i - 1].tangent_omega * samples[i].tangent_omega < 0.0;
        let det_flip = samples[i - 1].det_sign * samples[i].det_sign < 0.0;
        if fold {
            events.push(BranchEvent {
                index: i,
                kind: EventKind::Fold,
            });
        } else if det_flip {
            events.push(BranchEvent {
                index: i,
                kind: EventKind::BranchPoint,
            });
        }
    }
    events
}

struct Stepper {
    step: f64,
    fast_streak: usize,
}

impl Stepper {
    fn new(config: &TraceConfig) -> Self {
        Self {
            step: config.step_initial.clamp(config.step_min, config.step_max),
            fast_streak: 0,
        }
    }

    fn on_success(&mut self, iterations: usize, config: &TraceConfig) {
        if iterations <= 3 {
            self.fast_streak += 1;
            if self.fast_streak >= 3 {
                self.step = (self.step * 2.0).min(config.step_max);
                self.fast_streak = 0;
            }
        } else {
            self.fast_streak = 0;
        }
    }

    /// Halve the step; false once the minimum is reached.
    fn on_failure(&mut self, config: &TraceConfig) -> bool {
        self.fast_streak = 0;
        if self.step <= config.step_min {
            return false;
        }
        self.step = (self.step * 0.5).max(config.step_min);
        true
    }
}

/// Trace a solution family from a converged starting point.
///
/// `direction` selects the initial orientation along the frequency axis
/// (`+1.0` for increasing omega where meaningful). Every emitted point
/// satisfies `residual_norm <= config.tol`; events mark folds, localized
/// branch points and the final endpoint.
pub fn trace(
    start: &SolutionPoint,
    direction: f64,
    kind: EquationKind,
    config: &TraceConfig,
    provenance: &str,
) -> Result<Trace, ContinuationError> {
    if start.residual_norm > config.tol {
        return Err(ContinuationError::InvalidStart {
            residual: start.residual_norm,
            tol: config.tol,
        });
    }
    let (mm, nn) = (start.grid.m_modes(), start.grid.n_modes());
    let unknowns = mm * nn + 1;

    // Initial tangent bordered by the frequency direction, oriented so that
    // `direction = +1` means increasing omega (falling back to the dominant
    // component when the curve is locally orthogonal to the frequency axis).
    let omega_border = {
        let mut v = DVector::zeros(unknowns);
        v[unknowns - 1] = 1.0;
        v
    };
    let mut tangent = tangent_at(start, kind, &omega_border)?;
    let tw = tangent[unknowns - 1];
    let sign_fix = if tw.abs() > 1e-12 {
        tw.signum()
    } else {
        let mut idx = 0;
        let mut best = 0.0;
        for i in 0..unknowns {
            if tangent[i].abs() > best {
                best = tangent[i].abs();
                idx = i;
            }
        }
        tangent[idx].signum()
    };
    tangent *= sign_fix * direction.signum();

    let mut curve = BranchCurve {
        points: vec![start.clone()],
        events: Vec::new(),
        provenance: provenance.to_string(),
    };
    let mut tangents = vec![tangent.clone()];
    let mut samples = vec![sample_at(start, &tangent, kind)?];
    let mut stepper = Stepper::new(config);

    let termination = loop {
        if curve.points.len() >= config.max_points {
            break Termination::MaxPoints;
        }
        let prev = curve.points.last().unwrap().clone();
        let prev_tangent = tangents.last().unwrap().clone();
        let prev_sample = *samples.last().unwrap();

        // Predictor-corrector with step halving; remember the step that the
        // accepted segment was actually taken with (the stepper may double
        // afterwards).
        let accepted = loop {
            let used_step = stepper.step;
            let y_pred = pack(&prev.grid, prev.omega) + &prev_tangent * used_step;
            let (pg, pw) = unpack(&y_pred, mm, nn)?;
            let constraint = Constraint::hyperplane(prev_tangent.clone(), &y_pred);
            match newton_correct_counted(
                &pg,
                pw,
                kind,
                &constraint,
                config.tol,
                config.max_newton_iter,
            ) {
                Ok((point, iters)) => {
                    // Reject corrections that jumped backwards onto the
                    // already-traced segment.
                    let dy = pack(&point.grid, point.omega) - pack(&prev.grid, prev.omega);
                    if dy.dot(&prev_tangent) <= 0.0 {
                        if !stepper.on_failure(config) {
                            break Err(ContinuationError::NonConvergence {
                                iterations: config.max_newton_iter,
                                residual: point.residual_norm,
                            });
                        }
                        continue;
                    }
                    stepper.on_success(iters, config);
                    break Ok((point, used_step));
                }
                Err(err) => {
                    if !stepper.on_failure(config) {
                        break Err(err);
                    }
                }
            }
        };
        let (point, used_step) = match accepted {
            Ok(p) => p,
            Err(err) => break Termination::Stalled(err.to_string()),
        };

        let mut new_tangent = match tangent_at(&point, kind, &prev_tangent) {
            Ok(t) => t,
            Err(_) => prev_tangent.clone(),
        };
        if new_tangent.dot(&prev_tangent) < 0.0 {
            new_tangent = -new_tangent;
        }
        let sample = sample_at(&point, &new_tangent, kind)?;

        curve.points.push(point.clone());
        tangents.push(new_tangent.clone());
        samples.push(sample);
        let idx = curve.points.len() - 1;

        // Event detection on the freshly accepted segment.
        let fold = prev_sample.tangent_omega * sample.tangent_omega < 0.0;
        let det_flip = prev_sample.det_sign * sample.det_sign < 0.0;
        if fold {
            curve.events.push(BranchEvent {
                index: idx,
                kind: EventKind::Fold,
            });
        } else if det_flip {
            let localized = if config.locate_branch_points {
                locate_branch_point(&prev, &prev_tangent, used_step, kind, config).filter(
                    |(bp, _)| {
                        let d = (pack(&bp.grid, bp.omega) - pack(&prev.grid, prev.omega)).norm();
                        d <= 2.0 * used_step
                    },
                )
            } else {
                None
            };
            match localized {
                Some((bp, bp_tangent)) => {
                    let at = curve.points.len() - 1;
                    curve.points.insert(at, bp);
                    tangents.insert(at, bp_tangent);
                    samples.insert(at, prev_sample);
                    for e in curve.events.iter_mut() {
                        if e.index >= at {
                            e.index += 1;
                        }
                    }
                    curve.events.push(BranchEvent {
                        index: at,
                        kind: EventKind::BranchPoint,
                    });
                }
                None => {
                    curve.events.push(BranchEvent {
                        index: idx,
                        kind: EventKind::BranchPoint,
                    });
                }
            }
        }

        // Termination checks.
        let last_idx = curve.points.len() - 1;
        let last = curve.points.last().unwrap();
        let fundamental = last.grid.fundamental();
        let prev_fundamental = prev.grid.fundamental();
        if fundamental.abs() < config.fundamental_tol {
            curve.events.push(BranchEvent {
                index: last_idx,
                kind: EventKind::Endpoint,
            });
            break Termination::FundamentalAbsent;
        }
        if prev_fundamental * fundamental < 0.0 {
            // The fundamental changed sign inside the last step: bisect to
            // the connection point where it vanishes.
            if let Some(endpoint) =
                locate_fundamental_zero(&prev, &prev_tangent, used_step, kind, config)
            {
                let n_pts = curve.points.len();
                curve.points[n_pts - 1] = endpoint;
                curve.events.push(BranchEvent {
                    index: n_pts - 1,
                    kind: EventKind::Endpoint,
                });
                break Termination::FundamentalAbsent;
            }
            curve.events.push(BranchEvent {
                index: last_idx,
                kind: EventKind::Endpoint,
            });
            break Termination::Stalled(
                "fundamental-mode zero crossing could not be localized".into(),
            );
        }
        if last.omega < config.omega_min || last.omega > config.omega_max {
            curve.events.push(BranchEvent {
                index: last_idx,
                kind: EventKind::Endpoint,
            });
            break Termination::OmegaLimit;
        }
        if last.energy > config.energy_max {
            curve.events.push(BranchEvent {
                index: last_idx,
                kind: EventKind::Endpoint,
            });
            break Termination::EnergyLimit;
        }
    };

    Ok(Trace {
        curve,
        termination,
        tangents,
    })
}

fn sample_at(
    point: &SolutionPoint,
    tangent: &DVector<f64>,
    kind: EquationKind,
) -> Result<EventSample, ContinuationError> {
    let jac = model::jacobian(&point.grid, point.omega, kind)?;
    let b = bordered(&jac, tangent);
    Ok(EventSample {
        tangent_omega: tangent[tangent.len() - 1],
        det_sign: det_sign(&b),
    })
}

/// Corrected point at fraction `s` of the segment starting at `base` along
/// `tangent`. Corrections that wander further than one full step from the
/// prediction have left the local curve (the corrector can slide far along a
/// nearby crossing family when the Jacobian is close to singular) and are
/// rejected.
fn segment_point(
    base: &SolutionPoint,
    tangent: &DVector<f64>,
    s: f64,
    step: f64,
    kind: EquationKind,
    config: &TraceConfig,
) -> Option<SolutionPoint> {
    let (mm, nn) = (base.grid.m_modes(), base.grid.n_modes());
    let y_pred = pack(&base.grid, base.omega) + tangent * s;
    let (pg, pw) = unpack(&y_pred, mm, nn).ok()?;
    let constraint = Constraint::hyperplane(tangent.clone(), &y_pred);
    let point = newton_correct(
        &pg,
        pw,
        kind,
        &constraint,
        config.tol,
        config.max_newton_iter,
    )
    .ok()?;
    let wander = (pack(&point.grid, point.omega) - y_pred).norm();
    if wander > 2.0 * step {
        return None;
    }
    Some(point)
}

/// Bisection on the bordered-determinant sign over one predictor segment.
fn locate_branch_point(
    base: &SolutionPoint,
    tangent: &DVector<f64>,
    step: f64,
    kind: EquationKind,
    config: &TraceConfig,
) -> Option<(SolutionPoint, DVector<f64>)> {
    let sign_of = |point: &SolutionPoint| -> Option<f64> {
        let jac = model::jacobian(&point.grid, point.omega, kind).ok()?;
        Some(det_sign(&bordered(&jac, tangent)))
    };
    let mut lo = 0.0;
    let mut hi = step;
    let lo_sign = sign_of(base)?;
    let mut best: Option<SolutionPoint> = None;
    let mut last_lo_side: Option<SolutionPoint> = None;
    for _ in 0..80 {
        if hi - lo <= config.branch_point_arclength {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match segment_point(base, tangent, mid, step, kind, config) {
            Some(p) => {
                let s = sign_of(&p)?;
                if s == lo_sign {
                    lo = mid;
                    last_lo_side = Some(p);
                } else {
                    hi = mid;
                    best = Some(p);
                }
            }
            None => {
                // Either the singular neighbourhood of the branch point or a
                // wandering correction; shrink toward the known-good side.
                hi = mid;
            }
        }
    }
    let point = best.or(last_lo_side)?;
    let bp_tangent = tangent_at(&point, kind, tangent)
        .ok()
        .map(|mut t| {
            if t.dot(tangent) < 0.0 {
                t = -t;
            }
            t
        })
        .unwrap_or_else(|| tangent.clone());
    Some((point, bp_tangent))
}

/// Bisection on the fundamental amplitude over one predictor segment.
fn locate_fundamental_zero(
    base: &SolutionPoint,
    tangent: &DVector<f64>,
    step: f64,
    kind: EquationKind,
    config: &TraceConfig,
) -> Option<SolutionPoint> {
    let f_lo = base.grid.fundamental();
    let mut lo = 0.0;
    let mut hi = step;
    let mut best: Option<SolutionPoint> = None;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match segment_point(base, tangent, mid, step, kind, config) {
            Some(p) => {
                let f = p.grid.fundamental();
                if f.abs() < config.fundamental_tol {
                    return Some(p);
                }
                if best
                    .as_ref()
                    .map(|b| f.abs() < b.grid.fundamental().abs())
                    .unwrap_or(true)
                {
                    best = Some(p.clone());
                }
                if f * f_lo > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            // The crossing with another solution family is itself a singular
            // point of the corrector; shrink toward the known side.
            None => hi = mid,
        }
        if hi - lo < 1e-15 * step.max(1.0) {
            break;
        }
    }
    best.filter(|p| p.grid.fundamental().abs() < config.fundamental_tol)
}

/// Approximate second null direction of the extended Jacobian at a branch
/// point: the kernel vector of the bordered matrix `[J; tangent]`, which is
/// orthogonal to the curve tangent by construction.
pub fn branch_null_direction(
    point: &SolutionPoint,
    tangent: &DVector<f64>,
    kind: EquationKind,
) -> Result<DVector<f64>, ContinuationError> {
    let jac = model::jacobian(&point.grid, point.omega, kind)?;
    let b = bordered(&jac, tangent);
    let ncols = b.ncols();
    let svd = b.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let mut min_idx = 0;
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s < svd.singular_values[min_idx] {
            min_idx = i;
        }
    }
    let mut w = DVector::zeros(ncols);
    for c in 0..ncols {
        w[c] = v_t[(min_idx, c)];
    }
    // Canonical sign: largest component positive.
    let mut idx = 0;
    let mut best = 0.0;
    for i in 0..w.len() {
        if w[i].abs() > best {
            best = w[i].abs();
            idx = i;
        }
    }
    if w[idx] < 0.0 {
        w = -w;
    }
    let norm = w.norm();
    Ok(w / norm)
}

/// Jump from a branch point onto the crossing family: perturb along the
/// kernel direction with magnitude `epsilon`, then re-correct holding the
/// component along that direction fixed. Tries both perturbation signs.
pub fn switch_branch(
    at: &SolutionPoint,
    null_direction: &DVector<f64>,
    epsilon: f64,
    kind: EquationKind,
    config: &TraceConfig,
) -> Result<SolutionPoint, ContinuationError> {
    let (mm, nn) = (at.grid.m_modes(), at.grid.n_modes());
    let y0 = pack(&at.grid, at.omega);
    let w = null_direction / null_direction.norm();
    for sign in [1.0, -1.0] {
        let seed = &y0 + &w * (sign * epsilon);
        let (grid, omega) = match unpack(&seed, mm, nn) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let constraint = Constraint {
            normal: w.clone(),
            offset: w.dot(&seed),
        };
        if let Ok(point) = newton_correct(
            &grid,
            omega,
            kind,
            &constraint,
            config.tol,
            config.max_newton_iter,
        ) {
            return Ok(point);
        }
    }
    Err(ContinuationError::SwitchFailed)
}

/// Correct a one-mode closed-form seed into a converged trunk point of the
/// full `(m_modes x n_modes)` system at fixed frequency.
pub fn seed_trunk(
    omega: f64,
    m_modes: usize,
    n_modes: usize,
    kind: EquationKind,
    tol: f64,
) -> Result<SolutionPoint, ContinuationError> {
    let amplitude = 4.0 / 3.0 * (omega * omega - 1.0).max(0.0).sqrt();
    let grid = CoefficientGrid::single_mode(m_modes, n_modes, 0, 0, amplitude);
    let constraint = Constraint::fixed_omega(m_modes * n_modes + 1, omega);
    newton_correct(&grid, omega, kind, &constraint, tol, 50)
}

/// Re-converge a point at an enlarged time truncation, holding omega fixed;
/// falls back to pinning the dominant coefficient (freeing omega) near folds
/// where the fixed-frequency system is singular.
pub fn refine_time_truncation(
    point: &SolutionPoint,
    m_modes: usize,
    kind: EquationKind,
    tol: f64,
) -> Result<SolutionPoint, ContinuationError> {
    let grid = point
        .grid
        .padded(m_modes.max(point.grid.m_modes()), point.grid.n_modes());
    let unknowns = grid.m_modes() * grid.n_modes() + 1;
    let fixed = Constraint::fixed_omega(unknowns, point.omega);
    match newton_correct(&grid, point.omega, kind, &fixed, tol, 50) {
        Ok(p) => Ok(p),
        Err(_) => {
            // Pin the largest coefficient instead.
            let flat = grid.to_row_major();
            let (mut idx, mut best) = (0usize, 0.0f64);
            for (i, v) in flat.iter().enumerate() {
                if v.abs() > best {
                    best = v.abs();
                    idx = i;
                }
            }
            let mut normal = DVector::zeros(unknowns);
            normal[idx] = 1.0;
            let constraint = Constraint {
                normal,
                offset: flat[idx],
            };
            newton_correct(&grid, point.omega, kind, &constraint, tol, 50)
        }
    }
}

/// Insert fixed-frequency corrected points wherever consecutive curve points
/// are further apart than `max_domega` in frequency, seeding each insertion
/// from the nearer neighbour. Events are remapped onto the new indices.
/// Useful for resolving structures narrower than the trace step.
pub fn densify_in_omega(
    curve: &BranchCurve,
    max_domega: f64,
    kind: EquationKind,
    tol: f64,
) -> BranchCurve {
    assert!(max_domega > 0.0);
    let mut points: Vec<SolutionPoint> = Vec::new();
    let mut index_map = Vec::with_capacity(curve.points.len());
    for (i, p) in curve.points.iter().enumerate() {
        if i > 0 {
            let prev = points.last().unwrap().clone();
            let gap = p.omega - prev.omega;
            let steps = (gap.abs() / max_domega).floor() as usize;
            for k in 1..=steps {
                let omega = prev.omega + gap * k as f64 / (steps + 1) as f64;
                let seed = if k * 2 <= steps { &prev } else { p };
                let unknowns = seed.grid.m_modes() * seed.grid.n_modes() + 1;
                let constraint = Constraint::fixed_omega(unknowns, omega);
                if let Ok(q) = newton_correct(&seed.grid, omega, kind, &constraint, tol, 25) {
                    points.push(q);
                }
            }
        }
        index_map.push(points.len());
        points.push(p.clone());
    }
    let events = curve
        .events
        .iter()
        .map(|e| BranchEvent {
            index: index_map[e.index],
            kind: e.kind,
        })
        .collect();
    BranchCurve {
        points,
        events,
        provenance: curve.provenance.clone(),
    }
}

/// Offline event samples along a stored curve: tangents approximated by the
/// normalized secants and determinant signs of the correspondingly bordered
/// Jacobians. Feed the result to [`detect_events`].
pub fn curve_event_samples(
    curve: &BranchCurve,
    kind: EquationKind,
) -> Result<Vec<EventSample>, ContinuationError> {
    let n = curve.points.len();
    let mut samples = Vec::with_capacity(n);
    for (i, p) in curve.points.iter().enumerate() {
        let lo = &curve.points[i.saturating_sub(1)];
        let hi = &curve.points[(i + 1).min(n - 1)];
        let mut secant = pack(&hi.grid, hi.omega) - pack(&lo.grid, lo.omega);
        let norm = secant.norm();
        if norm == 0.0 {
            secant = DVector::zeros(secant.len());
        } else {
            secant /= norm;
        }
        let jac = model::jacobian(&p.grid, p.omega, kind)?;
        samples.push(EventSample {
            tangent_omega: secant[secant.len() - 1],
            det_sign: det_sign(&bordered(&jac, &secant)),
        });
    }
    Ok(samples)
}

/// Carry a stability verdict onto a copy of the curve.
pub fn annotate(curve: &BranchCurve, verdicts: &[Option<StabilityVerdict>]) -> BranchCurve {
    let mut out = curve.clone();
    for (p, v) in out.points.iter_mut().zip(verdicts) {
        p.stability = *v;
    }
    out
}
