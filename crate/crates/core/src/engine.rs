//! Time-domain measurement of the heat engine.
//!
//! The weight never equilibrates, so the engine has no steady state. It is
//! started in `τ1 ⊗ τ2 ⊗ |n0⟩⟨n0|`, integrated in the interaction frame, and
//! its currents are averaged over a window that starts once the qubits have
//! relaxed. The work current is `E3` times the least-squares slope of `⟨n⟩`.

use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::error::{Error, Result};
use crate::liouvillian::assemble_engine_liouvillian;
use crate::machine::{EngineSpec, MachineKind};
use crate::observables::{effective_temperature_from_shift, interaction_current, performance, CurrentsReport, Machine};
use crate::solvers::{default_step, evolve_with, step_plan, Trajectory};
use crate::state::CMatrix;
use crate::tolerances;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EngineNumerics {
    pub horizon: Option<f64>,
    pub window_start: Option<f64>,
    pub dt: Option<f64>,
    pub samples: Option<usize>,
}

impl EngineNumerics {
    pub fn resolve(&self, spec: &EngineSpec) -> (f64, f64, usize) {
        let p_min = spec.rates().iter().fold(f64::INFINITY, |a, b| a.min(*b));
        let horizon = self.horizon.unwrap_or(defaults::ENGINE_HORIZON_RESET_TIMES / p_min);
        let start = self
            .window_start
            .unwrap_or((defaults::ENGINE_WINDOW_START_RESET_TIMES / p_min).min(0.6 * horizon));
        (horizon, start, self.samples.unwrap_or(defaults::ENGINE_SAMPLES).max(2))
    }
}

/// Scalars recorded at one sampled time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineSample {
    pub t: f64,
    pub mean_level: f64,
    /// Population on ladder levels `0` and `N-1`.
    pub boundary_population: f64,
    /// `r_i - q_i` for both qubits.
    pub delta_q: [f64; 2],
    pub interaction_current: f64,
}

impl EngineSample {
    pub fn of_state(spec: &EngineSpec, t: f64, rho: &CMatrix) -> Result<Self> {
        let layout = spec.layout();
        let weight = layout.reduce(rho, 2)?;
        let n = spec.ladder_levels;
        let mean_level = (0..n).map(|k| k as f64 * weight[(k, k)].re).sum();
        let boundary_population = weight[(0, 0)].re + weight[(n - 1, n - 1)].re;
        let dq = |i: usize| -> Result<f64> {
            let q = layout.excited_population(rho, i)?;
            Ok(spec.bath(i)?.thermal_excited() - q)
        };
        Ok(Self {
            t,
            mean_level,
            boundary_population,
            delta_q: [dq(0)?, dq(1)?],
            interaction_current: interaction_current(rho, spec),
        })
    }
}

/// A finished engine run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EngineRun {
    pub spec: EngineSpec,
    pub step: f64,
    pub window: (f64, f64),
    pub samples: Vec<EngineSample>,
    pub report: CurrentsReport,
}

/// `E3 · d⟨n⟩/dt` by least squares over the samples inside `window`;
/// fails when the ladder ends are populated above tolerance there.
pub fn work_from_samples(samples: &[EngineSample], spec: &EngineSpec, window: (f64, f64)) -> Result<f64> {
    let inside: Vec<&EngineSample> = samples.iter().filter(|s| s.t >= window.0 && s.t <= window.1).collect();
    if inside.len() < 2 {
        return Err(Error::domain(format!(
            "measurement window [{}, {}] holds fewer than two samples",
            window.0, window.1
        )));
    }
    let worst = inside.iter().fold(0.0_f64, |a, s| a.max(s.boundary_population));
    if worst >= tolerances::BOUNDARY_POPULATION {
        return Err(Error::TruncationContaminated {
            population: worst,
            limit: tolerances::BOUNDARY_POPULATION,
        });
    }
    let k = inside.len() as f64;
    let t_mean = inside.iter().map(|s| s.t).sum::<f64>() / k;
    let n_mean = inside.iter().map(|s| s.mean_level).sum::<f64>() / k;
    let (mut num, mut den) = (0.0, 0.0);
    for s in &inside {
        num += (s.t - t_mean) * (s.mean_level - n_mean);
        den += (s.t - t_mean) * (s.t - t_mean);
    }
    Ok(spec.ladder_step * num / den)
}

/// Work current of a stored trajectory over `window`.
pub fn work_current(trajectory: &Trajectory, spec: &EngineSpec, window: (f64, f64)) -> Result<f64> {
    if window.0 < trajectory.times[0] || window.1 > *trajectory.times.last().unwrap_or(&0.0) || window.0 >= window.1 {
        return Err(Error::domain(format!("window [{}, {}] is not inside the trajectory", window.0, window.1)));
    }
    let samples = trajectory
        .times
        .iter()
        .zip(&trajectory.states)
        .map(|(t, s)| EngineSample::of_state(spec, *t, s.matrix()))
        .collect::<Result<Vec<_>>>()?;
    work_from_samples(&samples, spec, window)
}

/// Windowed currents report from recorded samples.
pub fn engine_report(samples: &[EngineSample], spec: &EngineSpec, window: (f64, f64)) -> Result<CurrentsReport> {
    let work = work_from_samples(samples, spec, window)?;
    let inside: Vec<&EngineSample> = samples.iter().filter(|s| s.t >= window.0 && s.t <= window.1).collect();
    let k = inside.len() as f64;
    let delta_q = [0, 1].map(|i| inside.iter().map(|s| s.delta_q[i]).sum::<f64>() / k);
    let j = inside.iter().map(|s| s.interaction_current).sum::<f64>() / k;
    let qubits = [&spec.qubit1, &spec.qubit2];
    let heat: Vec<f64> = qubits
        .iter()
        .zip(delta_q)
        .map(|(q, dq)| q.reset_rate * q.energy * dq)
        .collect();
    let effective_temperature = qubits
        .iter()
        .zip(delta_q)
        .map(|(q, dq)| effective_temperature_from_shift(q, dq))
        .collect();
    let mut report = CurrentsReport {
        machine: MachineKind::Engine,
        heat,
        work: Some(work),
        delta_q: delta_q.to_vec(),
        interaction_current: j,
        effective_temperature,
        cop_or_eff: None,
    };
    report.cop_or_eff = performance(&report).ok();
    Ok(report)
}

/// Runs the engine from `τ1 ⊗ τ2 ⊗ |n0⟩⟨n0|` and measures its currents.
pub fn run_engine(spec: &EngineSpec, numerics: &EngineNumerics) -> Result<EngineRun> {
    let (horizon, start, sample_count) = numerics.resolve(spec);
    if !(start >= 0.0 && start < horizon) {
        return Err(Error::domain(format!(
            "window start {start} must lie in [0, horizon = {horizon})"
        )));
    }
    let l = assemble_engine_liouvillian(spec)?;
    let frame = l.interaction_frame()?;
    let dt = numerics.dt.unwrap_or_else(|| default_step(&frame));
    let (steps, _) = step_plan(&frame, horizon, dt)?;
    let stride = (steps / sample_count).max(1);
    let mut samples = Vec::with_capacity(sample_count + 2);
    let step = evolve_with(&frame, &spec.initial_state(), horizon, dt, stride, |t, rho| {
        samples.push(EngineSample::of_state(spec, t, rho)?);
        Ok(())
    })?;
    let window = (start, horizon);
    let report = engine_report(&samples, spec, window)?;
    Ok(EngineRun {
        spec: *spec,
        step,
        window,
        samples,
        report,
    })
}
