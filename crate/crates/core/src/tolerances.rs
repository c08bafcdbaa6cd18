//! Every numeric threshold used by the library, the self-test and the
//! acceptance suite.
//!
//! | Constant | Value | Used for |
//! |---|---|---|
//! | [`HERMITIAN_OPERATOR`] | 1e-12 | Hamiltonians built by `machine` |
//! | [`HERMITIAN_INPUT`] | 1e-10 | Hamiltonians accepted by `coherent_generator` |
//! | [`STATE_HERMITIAN`] | 1e-10 | density-matrix Hermiticity |
//! | [`STATE_TRACE`] | 1e-10 | density-matrix trace |
//! | [`STATE_PSD`] | -1e-9 | smallest admissible eigenvalue |
//! | [`TRAJECTORY_TRACE`] | 1e-8 | trace drift along trajectories |
//! | [`TRAJECTORY_HERMITIAN`] | 1e-8 | Hermiticity along trajectories |
//! | [`TRAJECTORY_PSD`] | -1e-7 | eigenvalues along trajectories |
//! | [`STEP_TRACE_DRIFT`] | 1e-8 | per-step trace renormalisation bound |
//! | [`STEP_GUARD`] | 0.1 | max `dt·‖L‖₂` |
//! | [`STEADY_RESIDUAL`] | 1e-10 | `‖Lρ‖₂ / ‖L‖₂` |
//! | [`DEGENERACY`] | 1e-10 | second-smallest singular value / `‖L‖₂` |
//! | [`ILL_CONDITIONED`] | 1e12 | condition number triggering the SVD fallback |
//! | [`OFF_DIAGONAL_THERMAL`] | 1e-8 | coherence tolerated by `effective_temperature` |
//! | [`STALLED_Q1`] | 1e-14 | `|Q1|` floor for COP and efficiency |
//! | [`RATIO_IDENTITY`] | 1e-9 | relative agreement of heat-current ratios |
//! | [`CONSERVATION`] | 1e-10 | `ΣQ` relative to `max|Q|` |
//! | [`CARNOT_RELATIVE`] | 1e-9 | design COP vs Carnot COP |
//! | [`STALL_CURRENT`] | 1e-12 | currents at the reversibility point, in units of `p·E` |
//! | [`ENGINE_RATIO`] | 0.02 | engine ratio and efficiency checks |
//! | [`BOUNDARY_POPULATION`] | 1e-3 | ladder end population during a measurement window |
//! | [`BISECTION`] | 1e-6 | zero-crossing refinement |
//! | [`ORACLE_PANEL`] | 1e-5 | steady state vs long-time evolution |
//! | [`ORACLE_ANALYTIC`] | 1e-10 | same, for product-state steady states |
//! | [`ORACLE_EXAMPLE`] | 1e-6 | same, for the worked refrigerator example |
//! | [`RK4_CLOSED_FORM`] | 1e-9 | single-qubit reset relaxation |
//! | [`CONTRACTIVITY_SLACK`] | 1e-9 | allowed increase of trace distance |
//! | [`RK4_ORDER_FACTOR`] | 12 | error reduction when halving `dt` |

pub const HERMITIAN_OPERATOR: f64 = 1e-12;
pub const HERMITIAN_INPUT: f64 = 1e-10;

pub const STATE_HERMITIAN: f64 = 1e-10;
pub const STATE_TRACE: f64 = 1e-10;
pub const STATE_PSD: f64 = -1e-9;

pub const TRAJECTORY_TRACE: f64 = 1e-8;
pub const TRAJECTORY_HERMITIAN: f64 = 1e-8;
pub const TRAJECTORY_PSD: f64 = -1e-7;

pub const STEP_TRACE_DRIFT: f64 = 1e-8;
pub const STEP_GUARD: f64 = 0.1;

pub const STEADY_RESIDUAL: f64 = 1e-10;
pub const DEGENERACY: f64 = 1e-10;
pub const ILL_CONDITIONED: f64 = 1e12;

pub const OFF_DIAGONAL_THERMAL: f64 = 1e-8;
pub const STALLED_Q1: f64 = 1e-14;

pub const RATIO_IDENTITY: f64 = 1e-9;
pub const CONSERVATION: f64 = 1e-10;
pub const CARNOT_RELATIVE: f64 = 1e-9;
pub const STALL_CURRENT: f64 = 1e-12;
pub const ENGINE_RATIO: f64 = 0.02;
pub const BOUNDARY_POPULATION: f64 = 1e-3;
pub const BISECTION: f64 = 1e-6;

pub const ORACLE_PANEL: f64 = 1e-5;
pub const ORACLE_ANALYTIC: f64 = 1e-10;
pub const ORACLE_EXAMPLE: f64 = 1e-6;

pub const RK4_CLOSED_FORM: f64 = 1e-9;
pub const CONTRACTIVITY_SLACK: f64 = 1e-9;
pub const RK4_ORDER_FACTOR: f64 = 12.0;

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_difference(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Largest pairwise relative difference within a set of values.
pub fn max_pairwise_relative(values: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            worst = worst.max(relative_difference(*a, *b));
        }
    }
    worst
}
