//! Parameter sweeps, working-regime boundaries and Carnot-limit checks.
//!
//! The refrigerator's COP is fixed by its design at `E3/E1` whatever the
//! temperatures, rates or coupling. The working regime `E1/T1 + E3/T3 <
//! E2/T2` bounds `E3/E1` from above by the Carnot COP, and at the boundary
//! the currents vanish. The engine has the same structure with `η = E3/E1`
//! and boundary `E1/T1 = E2/T2`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_engine, EngineNumerics};
use crate::error::{Error, Result};
use crate::machine::{EngineSpec, FridgeSpec, MachineKind};
use crate::observables::{fridge_currents, CurrentsReport};
use crate::solvers::solve_fridge;
use crate::tolerances;

/// `E1*` solving `E1/T1 + E3/T3 = (E1 + E3)/T2`.
pub fn reversibility_point_fridge(t1: f64, t2: f64, t3: f64, e3: f64) -> Result<f64> {
    check_fridge_temperatures(t1, t2, t3)?;
    if !(e3 > 0.0) {
        return Err(Error::domain(format!("E3 must be positive, got {e3}")));
    }
    Ok(e3 * t1 * (t2 - t3) / (t3 * (t1 - t2)))
}

/// `T3 (T1 - T2) / (T1 (T2 - T3))`, the reversible `Q3/Q1`.
pub fn carnot_cop(t1: f64, t2: f64, t3: f64) -> Result<f64> {
    check_fridge_temperatures(t1, t2, t3)?;
    Ok(t3 * (t1 - t2) / (t1 * (t2 - t3)))
}

/// `1 - T2/T1`.
pub fn carnot_efficiency_engine(t1: f64, t2: f64) -> Result<f64> {
    if !(t2 > 0.0 && t1 >= t2) {
        return Err(Error::domain(format!("requires T1 >= T2 > 0, got T1={t1}, T2={t2}")));
    }
    Ok(1.0 - t2 / t1)
}

/// `E3* = E2 (T1/T2 - 1)`, where `E1/T1 = E2/T2` with `E1 = E2 + E3`.
pub fn reversibility_point_engine(t1: f64, t2: f64, e2: f64) -> Result<f64> {
    if !(t2 > 0.0 && t1 > t2) {
        return Err(Error::domain(format!("requires T1 > T2 > 0, got T1={t1}, T2={t2}")));
    }
    Ok(e2 * (t1 - t2) / t2)
}

fn check_fridge_temperatures(t1: f64, t2: f64, t3: f64) -> Result<()> {
    if t1 > t2 && t2 > t3 && t3 > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("requires T1 > T2 > T3 > 0, got T1={t1}, T2={t2}, T3={t3}")))
    }
}

/// A sweepable refrigerator parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FridgeParam {
    E1,
    E3,
    #[serde(rename = "g")]
    Coupling,
    T1,
    T2,
    T3,
    #[serde(rename = "p1")]
    P1,
    #[serde(rename = "p2")]
    P2,
    #[serde(rename = "p3")]
    P3,
}

impl FridgeParam {
    pub const ALL: [FridgeParam; 9] = [
        FridgeParam::E1,
        FridgeParam::E3,
        FridgeParam::Coupling,
        FridgeParam::T1,
        FridgeParam::T2,
        FridgeParam::T3,
        FridgeParam::P1,
        FridgeParam::P2,
        FridgeParam::P3,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FridgeParam::E1 => "E1",
            FridgeParam::E3 => "E3",
            FridgeParam::Coupling => "g",
            FridgeParam::T1 => "T1",
            FridgeParam::T2 => "T2",
            FridgeParam::T3 => "T3",
            FridgeParam::P1 => "p1",
            FridgeParam::P2 => "p2",
            FridgeParam::P3 => "p3",
        }
    }

    /// The template with this parameter replaced, revalidated.
    pub fn apply(&self, template: &FridgeSpec, value: f64) -> Result<FridgeSpec> {
        let [e1, _, e3] = template.energies();
        let mut e = [e1, e3];
        let mut t = template.temperatures();
        let mut p = template.rates();
        let mut g = template.coupling;
        match self {
            FridgeParam::E1 => e[0] = value,
            FridgeParam::E3 => e[1] = value,
            FridgeParam::Coupling => g = value,
            FridgeParam::T1 => t[0] = value,
            FridgeParam::T2 => t[1] = value,
            FridgeParam::T3 => t[2] = value,
            FridgeParam::P1 => p[0] = value,
            FridgeParam::P2 => p[1] = value,
            FridgeParam::P3 => p[2] = value,
        }
        FridgeSpec::new(e[0], e[1], t, p, g)
    }
}

impl fmt::Display for FridgeParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FridgeParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FridgeParam::ALL
            .iter()
            .find(|p| p.name() == s)
            .copied()
            .ok_or_else(|| {
                let names: Vec<&str> = FridgeParam::ALL.iter().map(|p| p.name()).collect();
                Error::domain(format!("unknown sweep parameter '{s}'; expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<f64>,
}

/// Result of one grid point. Failed points stay in the table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum RowOutcome {
    Ok { report: CurrentsReport },
    Error { message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: f64,
    #[serde(flatten)]
    pub outcome: RowOutcome,
}

impl SweepRow {
    pub fn report(&self) -> Option<&CurrentsReport> {
        match &self.outcome {
            RowOutcome::Ok { report } => Some(report),
            RowOutcome::Error { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "machine", rename_all = "lowercase")]
pub enum SpecTemplate {
    Fridge { spec: FridgeSpec },
    Engine { spec: EngineSpec },
}

/// Rows in grid order, one per grid value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub template: SpecTemplate,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn machine(&self) -> MachineKind {
        match self.template {
            SpecTemplate::Fridge { .. } => MachineKind::Fridge,
            SpecTemplate::Engine { .. } => MachineKind::Engine,
        }
    }
}

/// Steady-state currents of one refrigerator spec.
pub fn fridge_point(spec: &FridgeSpec) -> Result<CurrentsReport> {
    fridge_currents(spec, &solve_fridge(spec)?)
}

/// Solves every grid point (in parallel) and returns rows in grid order.
pub fn sweep_fridge(template: &FridgeSpec, param: FridgeParam, grid: &[f64]) -> SweepTable {
    let rows = grid
        .par_iter()
        .map(|&value| {
            let outcome = param
                .apply(template, value)
                .and_then(|spec| fridge_point(&spec))
                .map_or_else(|e| RowOutcome::Error { message: e.to_string() }, |report| RowOutcome::Ok { report });
            SweepRow { param: value, outcome }
        })
        .collect();
    SweepTable {
        axis: SweepAxis {
            name: param.name().to_string(),
            values: grid.to_vec(),
        },
        template: SpecTemplate::Fridge { spec: *template },
        rows,
    }
}

/// Parameter value where `Q3` changes sign, bracketed by the first sign
/// change in `table` and refined by bisection to `tolerance`.
pub fn locate_q3_zero(template: &FridgeSpec, param: FridgeParam, table: &SweepTable, tolerance: f64) -> Result<f64> {
    let bracket = table
        .rows
        .windows(2)
        .find_map(|w| {
            let (a, b) = (w[0].report()?, w[1].report()?);
            (a.heat[2].signum() != b.heat[2].signum() || a.heat[2] == 0.0).then_some((w[0].param, a.heat[2], w[1].param))
        })
        .ok_or_else(|| Error::numerical(format!("Q3 does not change sign along the {} sweep", param.name())))?;
    let (mut lo, q_lo, mut hi) = bracket;
    if q_lo == 0.0 {
        return Ok(lo);
    }
    let sign_lo = q_lo.signum();
    while (hi - lo).abs() > tolerance {
        let mid = 0.5 * (lo + hi);
        let q = fridge_point(&param.apply(template, mid)?)?.heat[2];
        if q == 0.0 {
            return Ok(mid);
        }
        if q.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One named pass/fail check with its measured value and threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl CheckResult {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            threshold,
            passed: value <= threshold,
        }
    }
}

/// Performance at the reversibility point compared with the Carnot value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarnotCheck {
    pub machine: MachineKind,
    /// `E1*` (refrigerator) or `E3*` (engine).
    pub reversibility_value: f64,
    /// Design COP `E3/E1*` or efficiency `E3*/E1*`.
    pub limit_performance: f64,
    pub carnot_performance: f64,
    /// `limit_performance - carnot_performance`.
    pub difference: f64,
    /// Largest current at the reversibility point (`max|Q_i|` or `|W|`).
    pub current_at_point: f64,
    /// Natural current scale `max(p)·max(E)` used for the stall threshold.
    pub current_scale: f64,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

/// Builds the refrigerator at `E1 = E1*`, solves it, and checks that the
/// design COP equals the Carnot COP and that the machine stalls there.
pub fn carnot_check_fridge(temperatures: [f64; 3], e3: f64, coupling: f64, rates: [f64; 3]) -> Result<CarnotCheck> {
    let [t1, t2, t3] = temperatures;
    let e1 = reversibility_point_fridge(t1, t2, t3, e3)?;
    let spec = FridgeSpec::new(e1, e3, temperatures, rates, coupling)?;
    let report = fridge_point(&spec)?;
    let limit = e3 / e1;
    let carnot = carnot_cop(t1, t2, t3)?;
    let current = report.max_abs_heat().max(report.interaction_current.abs() * spec.qubit2.energy);
    let scale = rates.iter().fold(0.0_f64, |a, b| a.max(*b)) * spec.qubit2.energy;
    let checks = vec![
        CheckResult::at_most(
            "design COP equals Carnot COP (relative)",
            tolerances::relative_difference(limit, carnot),
            tolerances::CARNOT_RELATIVE,
        ),
        CheckResult::at_most(
            "currents vanish at reversibility (units of p·E)",
            current / scale,
            tolerances::STALL_CURRENT,
        ),
    ];
    let passed = checks.iter().all(|c| c.passed);
    Ok(CarnotCheck {
        machine: MachineKind::Fridge,
        reversibility_value: e1,
        limit_performance: limit,
        carnot_performance: carnot,
        difference: limit - carnot,
        current_at_point: current,
        current_scale: scale,
        checks,
        passed,
    })
}

/// Inputs of the engine Carnot check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineCarnotInputs {
    pub temperatures: [f64; 2],
    pub e2: f64,
    /// Ladder steps to measure, all strictly below `E3*`.
    pub e3_grid: Vec<f64>,
    pub coupling: f64,
    pub rates: [f64; 2],
    pub ladder_levels: usize,
    pub initial_level: usize,
    pub numerics: EngineNumerics,
}

/// Runs the engine across the `E3` grid and at `E3*`, checking
/// `η = E3/E1` per point, `η ≤ η_C`, monotone approach, and the stall at `E3*`.
pub fn carnot_check_engine(inputs: &EngineCarnotInputs) -> Result<(CarnotCheck, SweepTable)> {
    let [t1, t2] = inputs.temperatures;
    let e3_star = reversibility_point_engine(t1, t2, inputs.e2)?;
    if let Some(bad) = inputs.e3_grid.iter().find(|&&e3| !(e3 > 0.0 && e3 < e3_star)) {
        return Err(Error::domain(format!(
            "engine grid must lie in the working regime 0 < E3 < E3* = {e3_star}, got {bad}"
        )));
    }
    let build = |e3: f64| {
        EngineSpec::new(
            inputs.e2,
            e3,
            inputs.temperatures,
            inputs.rates,
            inputs.ladder_levels,
            inputs.initial_level,
            inputs.coupling,
        )
    };
    let template = build(e3_star)?;
    let mut points: Vec<f64> = inputs.e3_grid.clone();
    points.push(e3_star);
    let outcomes: Vec<Result<CurrentsReport>> = points
        .par_iter()
        .map(|&e3| run_engine(&build(e3)?, &inputs.numerics).map(|run| run.report))
        .collect();
    let (grid_outcomes, stall) = outcomes.split_at(inputs.e3_grid.len());
    let stall = match &stall[0] {
        Ok(r) => r.clone(),
        Err(e) => return Err(Error::numerical(format!("engine run at E3* = {e3_star} failed: {e}"))),
    };

    let rows: Vec<SweepRow> = inputs
        .e3_grid
        .iter()
        .zip(grid_outcomes)
        .map(|(&e3, outcome)| SweepRow {
            param: e3,
            outcome: match outcome {
                Ok(report) => RowOutcome::Ok { report: report.clone() },
                Err(e) => RowOutcome::Error { message: e.to_string() },
            },
        })
        .collect();

    let eta_c = carnot_efficiency_engine(t1, t2)?;
    let limit = e3_star / (inputs.e2 + e3_star);
    let p_max = inputs.rates.iter().fold(0.0_f64, |a, b| a.max(*b));
    let w_stall = stall
        .work
        .ok_or_else(|| Error::numerical("engine report at E3* carries no work current"))?
        .abs();
    let mut checks = vec![
        CheckResult::at_most(
            "design efficiency at E3* equals Carnot (relative)",
            tolerances::relative_difference(limit, eta_c),
            tolerances::CARNOT_RELATIVE,
        ),
        CheckResult::at_most(
            "work current vanishes at E3* (units of E3*·p)",
            w_stall / (e3_star * p_max),
            tolerances::STALL_CURRENT,
        ),
    ];
    let mut previous: Option<f64> = None;
    let mut monotone = true;
    for row in &rows {
        let (Some(eta), Some(w)) = row.report().map_or((None, None), |r| (r.cop_or_eff, r.work)) else {
            checks.push(CheckResult {
                name: format!("engine run completes at E3={}", row.param),
                value: 0.0,
                threshold: 1.0,
                passed: false,
            });
            monotone = false;
            continue;
        };
        let design = row.param / (inputs.e2 + row.param);
        checks.push(CheckResult {
            name: format!("W > 0 at E3={}", row.param),
            value: w,
            threshold: 0.0,
            passed: w > 0.0,
        });
        checks.push(CheckResult::at_most(
            &format!("efficiency matches E3/E1 at E3={} (relative)", row.param),
            tolerances::relative_difference(eta, design),
            tolerances::ENGINE_RATIO,
        ));
        checks.push(CheckResult::at_most(
            &format!("efficiency below Carnot at E3={}", row.param),
            eta,
            eta_c * (1.0 + tolerances::ENGINE_RATIO),
        ));
        if let Some(prev) = previous {
            monotone &= eta > prev;
        }
        previous = Some(eta);
    }
    checks.push(CheckResult {
        name: "efficiency increases towards E3*".to_string(),
        value: if monotone { 1.0 } else { 0.0 },
        threshold: 1.0,
        passed: monotone,
    });
    let passed = checks.iter().all(|c| c.passed);
    let check = CarnotCheck {
        machine: MachineKind::Engine,
        reversibility_value: e3_star,
        limit_performance: limit,
        carnot_performance: eta_c,
        difference: limit - eta_c,
        current_at_point: w_stall,
        current_scale: e3_star * p_max,
        checks,
        passed,
    };
    let table = SweepTable {
        axis: SweepAxis {
            name: "E3".to_string(),
            values: inputs.e3_grid.clone(),
        },
        template: SpecTemplate::Engine { spec: template },
        rows,
    };
    Ok((check, table))
}
