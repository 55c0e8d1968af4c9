//! Computation, continuation and linear-stability classification of
//! time-periodic solutions to the defocusing cubic wave and beam equations
//! on an interval.
//!
//! The crate is organised around five modules:
//!
//! * [`model`] — the odd-mode Galerkin representation: residual, Jacobian,
//!   energy, cubic projection and the scaling symmetry.
//! * [`continuation`] — pseudo-arclength tracing of solution families with
//!   fold / branch-point detection and branch switching.
//! * [`reducible`] — closed forms for minimally coupled mode systems: the
//!   trunk, two-mode branches and their existence windows, plus the
//!   non-reducible beam pair.
//! * [`floquet`] — monodromy matrices from a high-order symplectic
//!   integrator and Floquet-multiplier stability verdicts.
//! * [`io`] / [`cli`] — deterministic CSV/JSON emission and the thin
//!   command-line front end.
//!
//! The `examples/` directory carries one runnable program per capability;
//! start with `trunk_closed_form` and `trace_branches`.

pub mod cli;
pub mod continuation;
pub mod floquet;
pub mod io;
pub mod model;
pub mod reducible;

pub use continuation::{
    newton_correct, trace, BranchCurve, BranchEvent, Constraint, ContinuationError, EventKind,
    Termination, Trace, TraceConfig,
};
pub use floquet::{
    monodromy, multipliers, stability_scan, FloquetError, FloquetSpectrum, MonodromyMatrix,
    PerturbationBasis, ScanConfig, ScanEntry,
};
pub use model::{
    cubic_projection, energy, evaluate_field, jacobian, rescale, residual, CoefficientGrid,
    EquationKind, ModelError, RescaleParams, SolutionPoint, StabilityVerdict,
};
pub use reducible::{
    branch_window, is_reducible, nonreducible_11_beam, reducible_tree, solve_reducible,
    trunk_amplitude, two_mode_branch, Family, ModePair, ReducibleError, ReducibleSolution, TreeRow,
};
