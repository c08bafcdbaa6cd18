//! Heat currents, interaction current, effective temperatures and performance.
//!
//! Sign convention: a bath current `Q_i` is positive when energy flows from
//! bath `i` into the machine. Heat is measured against the free Hamiltonian:
//! a reset of qubit `i` moves `E_i (r_i - q_i)` of energy into it on
//! average, so `Q_i = p_i E_i (r_i - q_i)` with `r_i` the thermal and `q_i`
//! the actual excited population.
//!
//! Qubits are addressed by zero-based index: qubit 1 is index 0.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::machine::{EngineSpec, FridgeSpec, MachineKind, QubitSpec, FRIDGE_LOWER, FRIDGE_UPPER};
use crate::solvers::SteadyStateResult;
use crate::state::{CMatrix, DensityMatrix, Layout};
use crate::tolerances;

/// Common view of the two machines for observable extraction.
pub trait Machine {
    fn kind(&self) -> MachineKind;

    fn layout(&self) -> Layout;

    /// The bath-coupled qubit at `index`.
    fn bath(&self, index: usize) -> Result<&QubitSpec>;

    fn bath_count(&self) -> usize;

    fn coupling(&self) -> f64;

    /// Degenerate pairs `(source, destination)` whose forward transition
    /// defines a positive interaction current.
    fn forward_pairs(&self) -> Vec<(usize, usize)>;
}

impl Machine for FridgeSpec {
    fn kind(&self) -> MachineKind {
        MachineKind::Fridge
    }

    fn layout(&self) -> Layout {
        FridgeSpec::layout(self)
    }

    fn bath(&self, index: usize) -> Result<&QubitSpec> {
        self.qubits()
            .get(index)
            .copied()
            .ok_or_else(|| Error::domain(format!("refrigerator has qubits 0..=2, got index {index}")))
    }

    fn bath_count(&self) -> usize {
        3
    }

    fn coupling(&self) -> f64 {
        self.coupling
    }

    /// `|101⟩ → |010⟩`: qubit 3 cools.
    fn forward_pairs(&self) -> Vec<(usize, usize)> {
        vec![(FRIDGE_UPPER, FRIDGE_LOWER)]
    }
}

impl Machine for EngineSpec {
    fn kind(&self) -> MachineKind {
        MachineKind::Engine
    }

    fn layout(&self) -> Layout {
        EngineSpec::layout(self)
    }

    fn bath(&self, index: usize) -> Result<&QubitSpec> {
        match index {
            0 => Ok(&self.qubit1),
            1 => Ok(&self.qubit2),
            2 => Err(Error::domain("the weight (subsystem 2) is not attached to a bath")),
            _ => Err(Error::domain(format!("engine has qubits 0 and 1, got index {index}"))),
        }
    }

    fn bath_count(&self) -> usize {
        2
    }

    fn coupling(&self) -> f64 {
        self.coupling
    }

    /// `|10,n⟩ → |01,n+1⟩`: the weight is lifted.
    fn forward_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.ladder_levels - 1)
            .map(|n| (self.index(1, 0, n), self.index(0, 1, n + 1)))
            .collect()
    }
}

/// `r_i - q_i` for qubit `index`.
pub fn excited_shift<M: Machine>(state: &DensityMatrix, machine: &M, index: usize) -> Result<f64> {
    let qubit = machine.bath(index)?;
    let q = machine.layout().excited_population(state.matrix(), index)?;
    Ok(qubit.thermal_excited() - q)
}

/// `Q_i = p_i E_i (r_i - q_i)`.
pub fn bath_heat_current<M: Machine>(state: &DensityMatrix, machine: &M, index: usize) -> Result<f64> {
    let qubit = machine.bath(index)?;
    Ok(qubit.reset_rate * qubit.energy * excited_shift(state, machine, index)?)
}

/// Net rate of forward transitions through the degenerate pairs,
/// `J = 2g Σ Im⟨source|ρ|destination⟩`, the growth rate of the destination
/// populations due to the interaction.
pub fn interaction_current<M: Machine>(state: &CMatrix, machine: &M) -> f64 {
    let g = machine.coupling();
    machine
        .forward_pairs()
        .iter()
        .map(|&(source, dest)| 2.0 * g * state[(source, dest)].im)
        .sum()
}

/// Temperature whose Gibbs state reproduces a qubit's diagonal populations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EffectiveTemperature {
    /// `E / ln(q0/q1)`; negative under population inversion.
    Finite { value: f64 },
    /// Equal populations.
    Infinite,
    /// No excited population.
    Zero,
    /// The reduced state carries coherence above tolerance.
    NonThermal { off_diagonal: f64 },
}

impl EffectiveTemperature {
    pub fn value(&self) -> Option<f64> {
        match self {
            EffectiveTemperature::Finite { value } => Some(*value),
            _ => None,
        }
    }

    pub fn is_inverted(&self) -> bool {
        matches!(self, EffectiveTemperature::Finite { value } if *value < 0.0)
    }
}

impl fmt::Display for EffectiveTemperature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EffectiveTemperature::Finite { value } => f.write_str(&crate::output::format_real(*value)),
            EffectiveTemperature::Infinite => f.write_str("inf"),
            EffectiveTemperature::Zero => f.write_str("zero"),
            EffectiveTemperature::NonThermal { .. } => f.write_str("nonthermal"),
        }
    }
}

/// `T_eff = E / ln(q0/q1)` of a 2×2 reduced state.
pub fn effective_temperature(reduced: &DensityMatrix, energy: f64) -> Result<EffectiveTemperature> {
    if reduced.dim() != 2 {
        return Err(Error::domain(format!("expected a qubit state, got dimension {}", reduced.dim())));
    }
    let m = reduced.matrix();
    let off = m[(0, 1)].norm().max(m[(1, 0)].norm());
    if off > tolerances::OFF_DIAGONAL_THERMAL {
        return Ok(EffectiveTemperature::NonThermal { off_diagonal: off });
    }
    let (q0, q1) = (m[(0, 0)].re, m[(1, 1)].re);
    Ok(if q1 <= 0.0 {
        EffectiveTemperature::Zero
    } else if q0 <= 0.0 {
        // inversion towards the excited state: T → 0⁻
        EffectiveTemperature::Finite { value: -0.0 }
    } else if q0 == q1 {
        EffectiveTemperature::Infinite
    } else {
        EffectiveTemperature::Finite { value: energy / (q0 / q1).ln() }
    })
}

/// Effective temperature from the bath temperature and the shift
/// `δ = r - q`, using `ln(q0/q1) = E/T + ln(1 + δ/(1-r)) - ln(1 - δ/r)`.
/// Accurate even when `δ` is far below the populations' rounding error.
pub fn effective_temperature_from_shift(qubit: &QubitSpec, shift: f64) -> EffectiveTemperature {
    let r = qubit.thermal_excited();
    let (q0, q1) = (1.0 - r + shift, r - shift);
    if q1 <= 0.0 {
        return EffectiveTemperature::Zero;
    }
    if q0 <= 0.0 {
        return EffectiveTemperature::Finite { value: -0.0 };
    }
    let log_ratio = qubit.energy / qubit.temperature + (shift / (1.0 - r)).ln_1p() - (-shift / r).ln_1p();
    if log_ratio == 0.0 {
        EffectiveTemperature::Infinite
    } else {
        EffectiveTemperature::Finite { value: qubit.energy / log_ratio }
    }
}

/// Scalar summary of a machine's currents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurrentsReport {
    pub machine: MachineKind,
    /// Per-bath heat currents, positive into the machine.
    #[serde(rename = "Q")]
    pub heat: Vec<f64>,
    /// Work current into the weight (engine only).
    #[serde(rename = "W")]
    pub work: Option<f64>,
    /// `r_i - q_i` per qubit.
    #[serde(rename = "dq")]
    pub delta_q: Vec<f64>,
    /// Net forward transition rate through the degenerate subspace.
    #[serde(rename = "J")]
    pub interaction_current: f64,
    #[serde(rename = "Teff")]
    pub effective_temperature: Vec<EffectiveTemperature>,
    /// COP `Q3/Q1` or efficiency `W/Q1`; absent when the machine is stalled.
    pub cop_or_eff: Option<f64>,
}

impl CurrentsReport {
    pub fn max_abs_heat(&self) -> f64 {
        self.heat.iter().fold(0.0_f64, |a, q| a.max(q.abs()))
    }
}

/// Fridge COP `Q3/Q1` or engine efficiency `W/Q1`.
pub fn performance(report: &CurrentsReport) -> Result<f64> {
    let q1 = report.heat.first().copied().unwrap_or(0.0);
    if q1.abs() < tolerances::STALLED_Q1 {
        return Err(Error::numerical(format!(
            "performance undefined: |Q1| = {:e} below {:e} (machine stalled)",
            q1.abs(),
            tolerances::STALLED_Q1
        )));
    }
    match report.machine {
        MachineKind::Fridge => Ok(report.heat[2] / q1),
        MachineKind::Engine => report
            .work
            .map(|w| w / q1)
            .ok_or_else(|| Error::domain("engine report carries no work current")),
    }
}

/// Refrigerator currents at a solved steady state. When the solve carries
/// the deviation from `τ1⊗τ2⊗τ3`, the population shifts are read from it.
pub fn fridge_currents(spec: &FridgeSpec, steady: &SteadyStateResult) -> Result<CurrentsReport> {
    let layout = spec.layout();
    let delta_q: Vec<f64> = match &steady.deviation {
        Some(dev) => (0..3)
            .map(|i| layout.excited_population(dev, i).map(|x| -x))
            .collect::<Result<_>>()?,
        None => (0..3)
            .map(|i| excited_shift(&steady.state, spec, i))
            .collect::<Result<_>>()?,
    };
    let j = interaction_current(steady.state.matrix(), spec);
    Ok(assemble_fridge_report(spec, &delta_q, j, Some(&steady.state)))
}

/// Refrigerator currents of an arbitrary state.
pub fn fridge_currents_of_state(spec: &FridgeSpec, state: &DensityMatrix) -> Result<CurrentsReport> {
    let delta_q: Vec<f64> = (0..3).map(|i| excited_shift(state, spec, i)).collect::<Result<_>>()?;
    let j = interaction_current(state.matrix(), spec);
    Ok(assemble_fridge_report(spec, &delta_q, j, Some(state)))
}

fn assemble_fridge_report(spec: &FridgeSpec, delta_q: &[f64], j: f64, state: Option<&DensityMatrix>) -> CurrentsReport {
    let qubits = spec.qubits();
    let heat: Vec<f64> = qubits
        .iter()
        .zip(delta_q)
        .map(|(q, dq)| q.reset_rate * q.energy * dq)
        .collect();
    let layout = spec.layout();
    let effective_temperature = qubits
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let coherent = state.and_then(|s| {
                let reduced = layout.reduce(s.matrix(), i).ok()?;
                let off = reduced[(0, 1)].norm();
                (off > tolerances::OFF_DIAGONAL_THERMAL).then_some(off)
            });
            match coherent {
                Some(off) => EffectiveTemperature::NonThermal { off_diagonal: off },
                None => effective_temperature_from_shift(q, delta_q[i]),
            }
        })
        .collect();
    let mut report = CurrentsReport {
        machine: MachineKind::Fridge,
        heat,
        work: None,
        delta_q: delta_q.to_vec(),
        interaction_current: j,
        effective_temperature,
        cop_or_eff: None,
    };
    report.cop_or_eff = performance(&report).ok();
    report
}

/// Worst deviations from the refrigerator's steady-state identities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FridgeIdentityCheck {
    /// Pairwise relative spread of `Q1/E1, -Q2/E2, Q3/E3, J`.
    pub ratio_spread: f64,
    /// Pairwise relative spread of `|p_i δq_i|`.
    pub reset_balance_spread: f64,
    /// `|ΣQ| / max|Q|`.
    pub conservation: f64,
    /// `δq` signs follow `(+, -, +)` or its mirror `(-, +, -)`.
    pub sign_pattern_ok: bool,
}

impl FridgeIdentityCheck {
    pub fn passed(&self) -> bool {
        self.ratio_spread <= tolerances::RATIO_IDENTITY
            && self.reset_balance_spread <= tolerances::RATIO_IDENTITY
            && self.conservation <= tolerances::CONSERVATION
            && self.sign_pattern_ok
    }
}

pub fn check_fridge_identities(spec: &FridgeSpec, report: &CurrentsReport) -> FridgeIdentityCheck {
    let [e1, e2, e3] = spec.energies();
    let q = &report.heat;
    let ratio_spread = tolerances::max_pairwise_relative(&[q[0] / e1, -q[1] / e2, q[2] / e3, report.interaction_current]);
    let balance: Vec<f64> = spec
        .rates()
        .iter()
        .zip(&report.delta_q)
        .map(|(p, dq)| (p * dq).abs())
        .collect();
    let reset_balance_spread = tolerances::max_pairwise_relative(&balance);
    let max_q = report.max_abs_heat();
    let conservation = if max_q == 0.0 { 0.0 } else { q.iter().sum::<f64>().abs() / max_q };
    let s: Vec<f64> = report.delta_q.iter().map(|x| x.signum()).collect();
    let sign_pattern_ok = report.delta_q.iter().all(|x| *x == 0.0) || (s[0] == s[2] && s[1] == -s[0]);
    FridgeIdentityCheck {
        ratio_spread,
        reset_balance_spread,
        conservation,
        sign_pattern_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::thermal_qubit_state;
    use crate::solvers::solve_fridge;

    fn working() -> FridgeSpec {
        FridgeSpec::new(1.0, 1.0, [10.0, 5.0, 4.0], [1e-3; 3], 0.01).unwrap()
    }

    #[test]
    fn thermal_product_carries_no_current() {
        let spec = working();
        let rho = spec.thermal_product();
        for i in 0..3 {
            assert_eq!(bath_heat_current(&rho, &spec, i).unwrap(), 0.0);
        }
        assert_eq!(interaction_current(rho.matrix(), &spec), 0.0);
    }

    #[test]
    fn heat_current_is_linear_in_reset_rate() {
        let spec = working();
        let ss = solve_fridge(&spec).unwrap();
        let mut doubled = spec;
        doubled.qubit3.reset_rate *= 2.0;
        let a = bath_heat_current(&ss.state, &spec, 2).unwrap();
        let b = bath_heat_current(&ss.state, &doubled, 2).unwrap();
        assert_eq!(b, 2.0 * a);
    }

    #[test]
    fn weight_has_no_bath() {
        let engine = EngineSpec::new(1.0, 0.5, [10.0, 5.0], [0.1, 0.1], 5, 2, 0.01).unwrap();
        let rho = engine.initial_state();
        assert!(bath_heat_current(&rho, &engine, 2).is_err());
        assert!(bath_heat_current(&rho, &engine, 0).is_ok());
        assert!(bath_heat_current(&working().thermal_product(), &working(), 3).is_err());
    }

    #[test]
    fn working_fridge_signs_and_balance() {
        let spec = working();
        let ss = solve_fridge(&spec).unwrap();
        let report = fridge_currents(&spec, &ss).unwrap();
        assert!(report.heat[0] > 0.0 && report.heat[1] < 0.0 && report.heat[2] > 0.0);
        let j = report.interaction_current;
        assert!(tolerances::relative_difference(j * 1.0, report.heat[2]) < 1e-9);
        let check = check_fridge_identities(&spec, &report);
        assert!(check.passed(), "{check:?}");
        // symmetric design
        assert!((report.cop_or_eff.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn plain_and_reference_currents_agree() {
        let spec = working();
        let ss = solve_fridge(&spec).unwrap();
        let a = fridge_currents(&spec, &ss).unwrap();
        let b = fridge_currents_of_state(&spec, &ss.state).unwrap();
        for (x, y) in a.heat.iter().zip(&b.heat) {
            assert!(tolerances::relative_difference(*x, *y) < 1e-6);
        }
    }

    #[test]
    fn effective_temperature_cases() {
        let tau = thermal_qubit_state(1.3, 2.7).unwrap();
        let t = effective_temperature(&tau, 1.3).unwrap().value().unwrap();
        assert!((t - 2.7).abs() / 2.7 < 1e-10);

        let flat = DensityMatrix::from_populations(&[0.5, 0.5]).unwrap();
        assert_eq!(effective_temperature(&flat, 1.0).unwrap(), EffectiveTemperature::Infinite);

        let ground = DensityMatrix::from_populations(&[1.0, 0.0]).unwrap();
        assert_eq!(effective_temperature(&ground, 1.0).unwrap(), EffectiveTemperature::Zero);

        let inverted = DensityMatrix::from_populations(&[0.3, 0.7]).unwrap();
        assert!(effective_temperature(&inverted, 1.0).unwrap().is_inverted());

        let mut m = flat.matrix().clone();
        m[(0, 1)].re = 0.1;
        m[(1, 0)].re = 0.1;
        let coherent = DensityMatrix::new(m).unwrap();
        assert!(matches!(
            effective_temperature(&coherent, 1.0).unwrap(),
            EffectiveTemperature::NonThermal { .. }
        ));
    }

    #[test]
    fn shifted_effective_temperature_matches_direct() {
        let q = QubitSpec::new(1.3, 2.7, 0.1).unwrap();
        assert!((effective_temperature_from_shift(&q, 0.0).value().unwrap() - 2.7).abs() < 1e-12);
        let shift = 0.01;
        let r = q.thermal_excited();
        let direct = DensityMatrix::from_populations(&[1.0 - r + shift, r - shift]).unwrap();
        let a = effective_temperature(&direct, 1.3).unwrap().value().unwrap();
        let b = effective_temperature_from_shift(&q, shift).value().unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn working_regime_temperatures() {
        let spec = working();
        let report = fridge_currents(&spec, &solve_fridge(&spec).unwrap()).unwrap();
        let t: Vec<f64> = report.effective_temperature.iter().map(|t| t.value().unwrap()).collect();
        assert!(t[0] < 10.0 && t[1] > 5.0 && t[2] < 4.0, "{t:?}");
    }

    #[test]
    fn performance_requires_running_machine() {
        let spec = working();
        let report = fridge_currents_of_state(&spec, &spec.thermal_product()).unwrap();
        assert!(performance(&report).is_err());
        assert!(report.cop_or_eff.is_none());
    }
}
