//! Seeded self-test: every steady-state identity, the working-regime law,
//! both Carnot limits, the oracle panel and the dynamics invariants.
//!
//! The report is a pure function of the seed, so two runs serialize to the
//! same bytes.

use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::engine::EngineNumerics;
use crate::error::Result;
use crate::liouvillian::{assemble_fridge_liouvillian, reset_dissipator};
use crate::machine::FridgeSpec;
use crate::observables::{check_fridge_identities, CurrentsReport, EffectiveTemperature};
use crate::panel::{analytic_cases, identity_panel, oracle_panel};
use crate::solvers::{default_step, evolve, evolve_final, oracle_crosscheck_report, solve_fridge};
use crate::state::DensityMatrix;
use crate::sweep::{
    carnot_check_engine, carnot_check_fridge, fridge_point, locate_q3_zero, sweep_fridge, CheckResult, EngineCarnotInputs,
    FridgeParam,
};
use crate::tolerances;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl SuiteReport {
    fn new(name: &str, checks: Vec<CheckResult>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self {
            name: name.to_string(),
            checks,
            passed,
        }
    }

    /// A suite whose setup failed before any check could run.
    fn failed(name: &str, error: &crate::error::Error) -> Self {
        Self::new(name, vec![flag(&format!("suite completes ({error})"), false)])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
    pub passed: bool,
}

fn at_most(name: &str, value: f64, threshold: f64) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        value,
        threshold,
        passed: value <= threshold,
    }
}

fn flag(name: &str, ok: bool) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        value: if ok { 1.0 } else { 0.0 },
        threshold: 1.0,
        passed: ok,
    }
}

fn count(name: &str, failures: usize) -> CheckResult {
    at_most(name, failures as f64, 0.0)
}

fn colder(t: &EffectiveTemperature, bath: f64) -> bool {
    match t {
        EffectiveTemperature::Finite { value } => *value > 0.0 && *value < bath,
        EffectiveTemperature::Zero => true,
        _ => false,
    }
}

fn hotter(t: &EffectiveTemperature, bath: f64) -> bool {
    match t {
        EffectiveTemperature::Finite { value } => *value > bath || *value < 0.0,
        EffectiveTemperature::Infinite => true,
        _ => false,
    }
}

/// Whether a working refrigerator cools qubit 3, heats qubit 2 and cools qubit 1.
pub fn effective_temperatures_ordered(spec: &FridgeSpec, report: &CurrentsReport) -> bool {
    let [t1, t2, t3] = spec.temperatures();
    let te = &report.effective_temperature;
    colder(&te[2], t3) && hotter(&te[1], t2) && colder(&te[0], t1)
}

fn identity_suite(seed: u64) -> SuiteReport {
    let panel = identity_panel(seed);
    let mut ratio: f64 = 0.0;
    let mut balance: f64 = 0.0;
    let mut conservation: f64 = 0.0;
    let (mut solve_failures, mut sign_failures, mut regime_failures, mut teff_failures) = (0, 0, 0, 0);
    let mut working = 0;
    for spec in &panel {
        let Ok(report) = fridge_point(spec) else {
            solve_failures += 1;
            continue;
        };
        let id = check_fridge_identities(spec, &report);
        ratio = ratio.max(id.ratio_spread);
        balance = balance.max(id.reset_balance_spread);
        conservation = conservation.max(id.conservation);
        sign_failures += usize::from(!id.sign_pattern_ok);
        let margin = spec.working_margin();
        regime_failures += usize::from(report.heat[2].signum() != margin.signum());
        if margin > 0.0 {
            working += 1;
            teff_failures += usize::from(!effective_temperatures_ordered(spec, &report));
        }
    }
    SuiteReport::new(
        "fridge steady-state identities",
        vec![
            count("specs solved", solve_failures),
            at_most("Q1/E1, -Q2/E2, Q3/E3, J agree (worst relative spread)", ratio, tolerances::RATIO_IDENTITY),
            at_most("|p_i dq_i| agree (worst relative spread)", balance, tolerances::RATIO_IDENTITY),
            at_most("heat currents sum to zero (worst relative)", conservation, tolerances::CONSERVATION),
            count("dq sign pattern violations", sign_failures),
            count("sign(Q3) differs from the working-regime margin", regime_failures),
            flag("panel contains working refrigerators", working > 0),
            count("working refrigerators with misordered effective temperatures", teff_failures),
        ],
    )
}

fn working_regime_suite() -> Result<SuiteReport> {
    let template = FridgeSpec::new_relaxed(0.5, 1.0, [10.0, 5.0, 4.0], [1e-3; 3], 0.01)?;
    let grid: Vec<f64> = (0..20).map(|k| 0.025 + 0.05 * k as f64).collect();
    let table = sweep_fridge(&template, FridgeParam::E1, &grid);
    let mut mismatches = 0;
    for row in &table.rows {
        match row.report() {
            Some(r) => {
                let spec = FridgeParam::E1.apply(&template, row.param)?;
                mismatches += usize::from(r.heat[2].signum() != spec.working_margin().signum());
            }
            None => mismatches += 1,
        }
    }
    let zero = locate_q3_zero(&template, FridgeParam::E1, &table, 1e-9)?;
    Ok(SuiteReport::new(
        "working regime",
        vec![
            count("E1 sweep rows with sign(Q3) off the margin", mismatches),
            at_most("Q3 vanishes at E1 = 0.5", (zero - 0.5).abs(), tolerances::BISECTION),
        ],
    ))
}

fn fridge_carnot_suite() -> Result<SuiteReport> {
    let check = carnot_check_fridge([10.0, 5.0, 4.0], 1.0, 1e-3, [1e-3; 3])?;
    let mut checks = check.checks;
    checks.push(at_most("design COP equals 2", (check.limit_performance - 2.0).abs() / 2.0, tolerances::CARNOT_RELATIVE));
    Ok(SuiteReport::new("refrigerator Carnot limit", checks))
}

fn engine_suite() -> Result<SuiteReport> {
    let inputs = EngineCarnotInputs {
        temperatures: [10.0, 5.0],
        e2: 1.0,
        e3_grid: vec![0.5],
        coupling: 0.01,
        rates: [0.1, 0.1],
        ladder_levels: defaults::LADDER_LEVELS,
        initial_level: defaults::INITIAL_LEVEL,
        numerics: EngineNumerics::default(),
    };
    let (check, table) = carnot_check_engine(&inputs)?;
    let mut checks = check.checks;
    if let Some(r) = table.rows[0].report() {
        let (q1, q2, w) = (r.heat[0], r.heat[1], r.work.unwrap_or(0.0));
        let e1 = 1.5;
        checks.push(at_most("-Q2/Q1 matches E2/E1 (relative)", tolerances::relative_difference(-q2 / q1, 1.0 / e1), tolerances::ENGINE_RATIO));
        checks.push(at_most("W/Q1 matches E3/E1 (relative)", tolerances::relative_difference(w / q1, 0.5 / e1), tolerances::ENGINE_RATIO));
    }
    Ok(SuiteReport::new("engine efficiency", checks))
}

fn oracle_suite(seed: u64) -> Result<SuiteReport> {
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for spec in oracle_panel(seed) {
        match oracle_crosscheck_report(&spec, tolerances::ORACLE_PANEL) {
            Ok(r) => worst = worst.max(r.trace_distance),
            Err(_) => failures += 1,
        }
    }
    let mut checks = vec![
        count("oracle runs completed", failures),
        at_most("linear solve vs long-time evolution (worst trace distance)", worst, tolerances::ORACLE_PANEL),
    ];
    for (name, spec) in analytic_cases() {
        let product = spec.thermal_product();
        let solved = solve_fridge(&spec)?.state.trace_distance(&product);
        let evolved = oracle_crosscheck_report(&spec, tolerances::ORACLE_ANALYTIC)?.trace_distance;
        checks.push(at_most(&format!("{name}: steady state is the thermal product"), solved, tolerances::ORACLE_ANALYTIC));
        checks.push(at_most(&format!("{name}: evolution agrees with the solve"), evolved, tolerances::ORACLE_ANALYTIC));
    }
    Ok(SuiteReport::new("oracle equivalence", checks))
}

fn dynamics_suite(seed: u64) -> Result<SuiteReport> {
    let (p, r, q0) = (0.5, 0.3, 0.9);
    let tau = DensityMatrix::from_populations(&[1.0 - r, r])?;
    let l = reset_dissipator(0, &tau, p, &[2])?;
    let t = 5.0 / p;
    let end = evolve_final(&l, &DensityMatrix::from_populations(&[1.0 - q0, q0])?, t, 1e-3 / p)?;
    let exact = r + (q0 - r) * (-p * t).exp();
    let mut checks = vec![at_most(
        "single-qubit reset relaxation vs closed form",
        (end.populations()[1] - exact).abs(),
        tolerances::RK4_CLOSED_FORM,
    )];

    let (mut trace, mut herm, mut psd, mut increase) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for spec in oracle_panel(seed).iter().take(3) {
        let steady = solve_fridge(spec)?;
        let l = assemble_fridge_liouvillian(spec)?;
        let frame = l.interaction_frame()?;
        let p_min = spec.rates().iter().fold(f64::INFINITY, |a, b| a.min(*b));
        let horizon = defaults::FRIDGE_HORIZON_RESET_TIMES / p_min;
        let dt = default_step(&frame);
        let stride = ((horizon / dt) as usize / 200).max(1);
        for start in [DensityMatrix::basis_state(8, 0b111)?, DensityMatrix::basis_state(8, 0)?, spec.thermal_product()] {
            let traj = evolve(&frame, &start, horizon, dt, stride)?;
            let mut previous = f64::INFINITY;
            for s in &traj.states {
                trace = trace.max((s.trace().re - 1.0).abs().max(s.trace().im.abs()));
                herm = herm.max(s.hermiticity_error());
                psd = psd.min(s.min_eigenvalue());
                let d = s.trace_distance(&steady.state);
                increase = increase.max(d - previous);
                previous = d;
            }
        }
    }
    checks.push(at_most("trace preserved along trajectories", trace, tolerances::TRAJECTORY_TRACE));
    checks.push(at_most("Hermiticity preserved along trajectories", herm, tolerances::TRAJECTORY_HERMITIAN));
    checks.push(at_most("positivity preserved along trajectories (negated min eigenvalue)", -psd, -tolerances::TRAJECTORY_PSD));
    checks.push(at_most(
        "trace distance to the steady state never increases",
        increase,
        tolerances::CONTRACTIVITY_SLACK,
    ));
    Ok(SuiteReport::new("dynamics", checks))
}

/// Runs every suite for `seed`. Failures are recorded in the report, not returned.
pub fn run_selftest(seed: u64) -> SelftestReport {
    let suites = vec![
        identity_suite(seed),
        working_regime_suite().unwrap_or_else(|e| SuiteReport::failed("working regime", &e)),
        fridge_carnot_suite().unwrap_or_else(|e| SuiteReport::failed("refrigerator Carnot limit", &e)),
        engine_suite().unwrap_or_else(|e| SuiteReport::failed("engine efficiency", &e)),
        oracle_suite(seed).unwrap_or_else(|e| SuiteReport::failed("oracle equivalence", &e)),
        dynamics_suite(seed).unwrap_or_else(|e| SuiteReport::failed("dynamics", &e)),
    ];
    let passed = suites.iter().all(|s| s.passed);
    SelftestReport { seed, suites, passed }
}
