//! Steady states by direct linear solve and time evolution by fixed-step RK4.
//!
//! The two are independent routes to the same stationary state and are
//! cross-checked by [`oracle_crosscheck`].

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::error::{Error, Result};
use crate::liouvillian::{assemble_fridge_liouvillian, Generator, Liouvillian, Superoperator, ZeroFrequencySector};
use crate::machine::FridgeSpec;
use crate::state::{hermitian_part, CMatrix, DensityMatrix, ONE, ZERO};
use crate::tolerances;

/// Stationary state of a generator.
#[derive(Clone, Debug)]
pub struct SteadyStateResult {
    pub state: DensityMatrix,
    /// `‖L vec(ρ)‖₂`.
    pub residual: f64,
    /// Second-smallest singular value of `L`.
    pub gap_proxy: f64,
    /// `‖L‖₂`.
    pub generator_norm: f64,
    /// `ρ - ρ_ref` when solved relative to a reference state, computed
    /// directly rather than by subtraction.
    pub deviation: Option<CMatrix>,
    /// Whether the SVD fallback produced the state.
    pub used_svd_fallback: bool,
}

/// Steady state of `l`, solved with the trace constraint replacing the
/// `ρ₀₀` equation.
pub fn steady_state(l: &Superoperator) -> Result<SteadyStateResult> {
    solve(l, None, None, "generator")
}

/// Steady state written as `reference + δ`, solving `L δ = -L(reference)`
/// with `Tr δ = 0`. Small currents are read off `δ` without cancellation.
pub fn steady_state_near(l: &Superoperator, reference: &DensityMatrix, context: &str) -> Result<SteadyStateResult> {
    if reference.dim() != l.dim() {
        return Err(Error::domain("reference state dimension does not match the generator"));
    }
    let d = l.dim();
    let forcing = l.matrix() * DVector::from_column_slice(reference.matrix().as_slice());
    let forcing = CMatrix::from_column_slice(d, d, forcing.as_slice());
    solve(l, None, Some((reference, forcing)), context)
}

/// Steady state of a structured generator. The linear solve runs inside
/// its zero-frequency sector, where the entries are set by the rates and
/// couplings alone; degeneracy and residual checks use the full generator.
pub fn steady_state_structured(
    l: &Liouvillian,
    reference: Option<&DensityMatrix>,
    context: &str,
) -> Result<SteadyStateResult> {
    let dense = l.superoperator()?;
    let sector = l.zero_frequency_sector().ok();
    let reference = match reference {
        Some(r) if r.dim() != dense.dim() => {
            return Err(Error::domain("reference state dimension does not match the generator"))
        }
        Some(r) => {
            // resets fix their own Gibbs product exactly; leave them out of the forcing
            let fixed = l.dissipative_fixed_point().is_some_and(|f| f.matrix() == r.matrix());
            let forcing = if fixed { l.apply_hamiltonian(r.matrix()) } else { l.apply(r.matrix()) };
            Some((r, forcing))
        }
        None => None,
    };
    solve(&dense, sector.as_ref(), reference, context)
}

/// Refrigerator steady state relative to `τ1 ⊗ τ2 ⊗ τ3`.
pub fn solve_fridge(spec: &FridgeSpec) -> Result<SteadyStateResult> {
    let l = assemble_fridge_liouvillian(spec)?;
    steady_state_structured(&l, Some(&spec.thermal_product()), &spec.to_string())
}

fn solve(
    l: &Superoperator,
    sector: Option<&ZeroFrequencySector>,
    reference: Option<(&DensityMatrix, CMatrix)>,
    context: &str,
) -> Result<SteadyStateResult> {
    let d = l.dim();
    let singular = l.singular_values();
    let norm = *singular.last().unwrap_or(&0.0);
    let gap_proxy = singular.get(1).copied().unwrap_or(0.0);
    let threshold = tolerances::DEGENERACY * norm;
    if gap_proxy < threshold || norm == 0.0 {
        return Err(Error::DegenerateSteadyState {
            context: context.to_string(),
            gap_proxy,
            threshold,
        });
    }

    let (entries, block) = match sector {
        Some(s) => (s.entries().to_vec(), s.dense()),
        None => (
            (0..d).flat_map(|y| (0..d).map(move |x| (x, y))).collect::<Vec<_>>(),
            l.matrix().clone(),
        ),
    };
    let m = entries.len();
    let pivot = entries
        .iter()
        .position(|&(x, y)| x == 0 && y == 0)
        .ok_or_else(|| Error::domain("sector does not contain the first population"))?;
    let mut system = block.clone();
    for (k, &(x, y)) in entries.iter().enumerate() {
        system[(pivot, k)] = if x == y { ONE } else { ZERO };
    }
    let rhs = match &reference {
        Some((r, forcing)) => {
            if sector.is_some_and(|s| s.compress(r.matrix()).is_none()) {
                return Err(Error::domain("reference state has weight outside the zero-frequency sector"));
            }
            let mut b = DVector::from_iterator(m, entries.iter().map(|&(x, y)| -forcing[(x, y)]));
            b[pivot] = ZERO;
            b
        }
        None => {
            let mut b = DVector::zeros(m);
            b[pivot] = ONE;
            b
        }
    };

    let sv = system.clone().singular_values();
    let (smax, smin) = sv.iter().fold((0.0_f64, f64::INFINITY), |(a, b), s| (a.max(*s), b.min(*s)));
    let ill_conditioned = smin == 0.0 || smax / smin > tolerances::ILL_CONDITIONED;

    let (state_matrix, deviation) = if ill_conditioned {
        let rho = svd_null_vector(l)?;
        let dev = reference.as_ref().map(|(r, _)| &rho - r.matrix());
        (rho, dev)
    } else {
        let lu = system.clone().lu();
        let singular = || Error::numerical(format!("singular steady-state system for {context}"));
        let mut x = lu.solve(&rhs).ok_or_else(singular)?;
        // one step of iterative refinement
        let correction = lu.solve(&(&rhs - &system * &x)).ok_or_else(singular)?;
        x += correction;
        let mut full = CMatrix::zeros(d, d);
        for (k, &(i, j)) in entries.iter().enumerate() {
            full[(i, j)] = x[k];
        }
        let x = hermitian_part(&full);
        match &reference {
            Some((r, _)) => (r.matrix() + &x, Some(x)),
            None => (x, None),
        }
    };

    let residual = (l.matrix() * DVector::from_column_slice(state_matrix.as_slice())).norm();
    if residual > tolerances::STEADY_RESIDUAL * norm {
        return Err(Error::numerical(format!(
            "steady-state residual {residual:e} exceeds {:e} for {context}",
            tolerances::STEADY_RESIDUAL * norm
        )));
    }
    let state = DensityMatrix::new(state_matrix)?;
    Ok(SteadyStateResult {
        state,
        residual,
        gap_proxy,
        generator_norm: norm,
        deviation,
        used_svd_fallback: ill_conditioned,
    })
}

fn svd_null_vector(l: &Superoperator) -> Result<CMatrix> {
    let d = l.dim();
    let svd = l.matrix().clone().svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::numerical("SVD did not return right singular vectors"))?;
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bk, bs), (k, s)| if *s < bs { (k, *s) } else { (bk, bs) });
    let v: Vec<Complex64> = v_t.row(k).iter().map(|z| z.conj()).collect();
    let m = CMatrix::from_column_slice(d, d, &v);
    let tr = m.trace();
    if tr.norm() == 0.0 {
        return Err(Error::numerical("null vector has zero trace"));
    }
    Ok(hermitian_part(&m.map(|z| z / tr)))
}

/// Sampled time evolution.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub step_size: f64,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<DensityMatrix>, step_size: f64) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::domain("trajectory times and states differ in length"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("trajectory times must be strictly increasing"));
        }
        Ok(Self { times, states, step_size })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &DensityMatrix)> {
        self.times.last().copied().zip(self.states.last())
    }
}

/// Step size `defaults::STEP_FRACTION / ‖L‖₂`.
pub fn default_step<G: Generator + ?Sized>(generator: &G) -> f64 {
    let norm = generator.norm_bound();
    if norm > 0.0 {
        defaults::STEP_FRACTION / norm
    } else {
        1.0
    }
}

/// Number of RK4 steps and the step actually taken (`≤ dt`, landing exactly on `t_final`).
pub fn step_plan<G: Generator + ?Sized>(generator: &G, t_final: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::domain(format!("time step must be positive, got {dt}")));
    }
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(Error::domain(format!("final time must be non-negative, got {t_final}")));
    }
    let guard = dt * generator.norm_bound();
    if guard > tolerances::STEP_GUARD {
        return Err(Error::domain(format!(
            "step-size guard violated: dt·‖L‖₂ = {guard:.4} exceeds {}",
            tolerances::STEP_GUARD
        )));
    }
    let steps = (t_final / dt).ceil() as usize;
    let h = if steps == 0 { dt } else { t_final / steps as f64 };
    Ok((steps, h))
}

fn axpy(y: &mut [Complex64], a: f64, x: &[Complex64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += x * a);
}

/// Integrates `ρ' = L(ρ)` with classical RK4 and hands every `stride`-th
/// state (plus the first and last) to `observer` in the lab frame.
pub fn evolve_with<G, F>(generator: &G, rho0: &DensityMatrix, t_final: f64, dt: f64, stride: usize, mut observer: F) -> Result<f64>
where
    G: Generator + ?Sized,
    F: FnMut(f64, &CMatrix) -> Result<()>,
{
    let d = generator.dim();
    if rho0.dim() != d {
        return Err(Error::domain(format!(
            "initial state dimension {} does not match generator dimension {d}",
            rho0.dim()
        )));
    }
    if stride == 0 {
        return Err(Error::domain("sampling stride must be at least 1"));
    }
    let (steps, h) = step_plan(generator, t_final, dt)?;
    if let Some((sector, v0)) = generator.sector().and_then(|s| Some((s, s.compress(rho0.matrix())?))) {
        let apply = |v: &Vec<Complex64>, out: &mut Vec<Complex64>| sector.apply_into(v, out);
        let trace = |v: &Vec<Complex64>| sector.trace(v);
        let sample = |t: f64, v: &Vec<Complex64>| {
            let mut lab = sector.expand(v);
            generator.to_lab_frame(t, &mut lab);
            observer(t, &lab)
        };
        rk4(v0, steps, h, stride, apply, trace, sample)?;
    } else {
        let apply = |m: &CMatrix, out: &mut CMatrix| generator.apply_into(m, out);
        let trace = |m: &CMatrix| m.trace();
        let sample = |t: f64, m: &CMatrix| {
            let mut lab = m.clone();
            generator.to_lab_frame(t, &mut lab);
            observer(t, &lab)
        };
        rk4(rho0.matrix().clone(), steps, h, stride, apply, trace, sample)?;
    }
    Ok(h)
}

/// Storage RK4 can step: full matrices or sparse sector coordinates.
trait StepState: Clone {
    fn zeroed(&self) -> Self;
    fn axpy(&mut self, a: f64, x: &Self);
    fn assign(&mut self, x: &Self);
    fn scale_down(&mut self, s: f64);
}

impl StepState for CMatrix {
    fn zeroed(&self) -> Self {
        CMatrix::zeros(self.nrows(), self.ncols())
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        axpy(self.as_mut_slice(), a, x.as_slice());
    }
    fn assign(&mut self, x: &Self) {
        self.copy_from(x);
    }
    fn scale_down(&mut self, s: f64) {
        self.unscale_mut(s);
    }
}

impl StepState for Vec<Complex64> {
    fn zeroed(&self) -> Self {
        vec![ZERO; self.len()]
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        axpy(self, a, x);
    }
    fn assign(&mut self, x: &Self) {
        self.copy_from_slice(x);
    }
    fn scale_down(&mut self, s: f64) {
        self.iter_mut().for_each(|z| *z /= s);
    }
}

fn rk4<S, A, T, O>(mut rho: S, steps: usize, h: f64, stride: usize, apply: A, trace: T, mut sample: O) -> Result<()>
where
    S: StepState,
    A: Fn(&S, &mut S),
    T: Fn(&S) -> Complex64,
    O: FnMut(f64, &S) -> Result<()>,
{
    let mut k1 = rho.zeroed();
    let mut k2 = rho.zeroed();
    let mut k3 = rho.zeroed();
    let mut k4 = rho.zeroed();
    let mut stage = rho.zeroed();

    sample(0.0, &rho)?;
    for step in 1..=steps {
        apply(&rho, &mut k1);
        stage.assign(&rho);
        stage.axpy(0.5 * h, &k1);
        apply(&stage, &mut k2);
        stage.assign(&rho);
        stage.axpy(0.5 * h, &k2);
        apply(&stage, &mut k3);
        stage.assign(&rho);
        stage.axpy(h, &k3);
        apply(&stage, &mut k4);

        rho.axpy(h / 6.0, &k1);
        rho.axpy(h / 3.0, &k2);
        rho.axpy(h / 3.0, &k3);
        rho.axpy(h / 6.0, &k4);

        let tr = trace(&rho);
        let drift = (tr - ONE).norm();
        if drift > tolerances::STEP_TRACE_DRIFT {
            return Err(Error::numerical(format!(
                "trace drift {drift:e} at step {step} exceeds {:e}; reduce dt",
                tolerances::STEP_TRACE_DRIFT
            )));
        }
        rho.scale_down(tr.re);

        if step % stride == 0 || step == steps {
            sample(step as f64 * h, &rho)?;
        }
    }
    Ok(())
}

/// RK4 trajectory sampled every `stride` steps; every sample is validated
/// as a density matrix at trajectory tolerances.
pub fn evolve<G: Generator + ?Sized>(generator: &G, rho0: &DensityMatrix, t_final: f64, dt: f64, stride: usize) -> Result<Trajectory> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    let h = evolve_with(generator, rho0, t_final, dt, stride, |t, rho| {
        let state = DensityMatrix::with_tolerances(
            rho.clone(),
            tolerances::TRAJECTORY_HERMITIAN,
            tolerances::TRAJECTORY_TRACE,
            tolerances::TRAJECTORY_PSD,
        )
        .map_err(|e| Error::numerical(format!("state at t={t} left the density-matrix set: {e}")))?;
        times.push(t);
        states.push(state);
        Ok(())
    })?;
    Trajectory::new(times, states, h)
}

/// Final state of an RK4 run, without storing intermediate samples.
pub fn evolve_final<G: Generator + ?Sized>(generator: &G, rho0: &DensityMatrix, t_final: f64, dt: f64) -> Result<DensityMatrix> {
    let mut last = None;
    evolve_with(generator, rho0, t_final, dt, usize::MAX, |_, rho| {
        last = Some(rho.clone());
        Ok(())
    })?;
    DensityMatrix::with_tolerances(
        last.expect("observer sees at least the initial state"),
        tolerances::TRAJECTORY_HERMITIAN,
        tolerances::TRAJECTORY_TRACE,
        tolerances::TRAJECTORY_PSD,
    )
}

/// Outcome of comparing the linear-solve steady state with long-time evolution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleReport {
    pub spec: FridgeSpec,
    pub horizon: f64,
    pub step: f64,
    pub trace_distance: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Evolves `τ1 ⊗ τ2 ⊗ τ3` for `200 / min(p)` and measures its trace
/// distance to [`solve_fridge`].
pub fn oracle_crosscheck_report(spec: &FridgeSpec, tolerance: f64) -> Result<OracleReport> {
    oracle_crosscheck_with(spec, None, None, tolerance)
}

/// [`oracle_crosscheck_report`] with an explicit horizon and step size.
pub fn oracle_crosscheck_with(spec: &FridgeSpec, horizon: Option<f64>, dt: Option<f64>, tolerance: f64) -> Result<OracleReport> {
    let steady = solve_fridge(spec)?;
    let l = assemble_fridge_liouvillian(spec)?;
    let frame = l.interaction_frame()?;
    let p_min = spec.rates().iter().fold(f64::INFINITY, |a, b| a.min(*b));
    let horizon = horizon.unwrap_or(defaults::FRIDGE_HORIZON_RESET_TIMES / p_min);
    let dt = dt.unwrap_or_else(|| default_step(&frame));
    let final_state = evolve_final(&frame, &spec.thermal_product(), horizon, dt)?;
    let (_, step) = step_plan(&frame, horizon, dt)?;
    let trace_distance = final_state.trace_distance(&steady.state);
    Ok(OracleReport {
        spec: *spec,
        horizon,
        step,
        trace_distance,
        tolerance,
        passed: trace_distance <= tolerance,
    })
}

/// [`oracle_crosscheck_report`] at the panel tolerance; divergence is an error.
pub fn oracle_crosscheck(spec: &FridgeSpec) -> Result<OracleReport> {
    let report = oracle_crosscheck_report(spec, tolerances::ORACLE_PANEL)?;
    if report.passed {
        Ok(report)
    } else {
        Err(Error::numerical(format!(
            "steady state and evolution disagree for {spec}: trace distance {:e} > {:e}",
            report.trace_distance, report.tolerance
        )))
    }
}
