//! Machine parameterisations, Gibbs states and Hamiltonians.
//!
//! Refrigerator basis: `qubit1 ⊗ qubit2 ⊗ qubit3`, so `|q1 q2 q3⟩` has index
//! `4·q1 + 2·q2 + q3`. Engine basis: `qubit1 ⊗ qubit2 ⊗ weight`, so
//! `|q1 q2, n⟩` has index `2N·q1 + N·q2 + n`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{DensityMatrix, Layout, Operator};

/// Index of `|010⟩` in the refrigerator basis.
pub const FRIDGE_LOWER: usize = 0b010;
/// Index of `|101⟩` in the refrigerator basis.
pub const FRIDGE_UPPER: usize = 0b101;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MachineKind {
    Fridge,
    Engine,
}

impl fmt::Display for MachineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MachineKind::Fridge => f.write_str("fridge"),
            MachineKind::Engine => f.write_str("engine"),
        }
    }
}

/// One qubit and the bath that resets it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitSpec {
    pub energy: f64,
    pub temperature: f64,
    pub reset_rate: f64,
}

impl QubitSpec {
    pub fn new(energy: f64, temperature: f64, reset_rate: f64) -> Result<Self> {
        positive("energy gap", energy)?;
        positive("bath temperature", temperature)?;
        // a vanishing reset rate leaves the steady state non-unique
        positive("reset rate", reset_rate)?;
        Ok(Self { energy, temperature, reset_rate })
    }

    /// Excited population of the bath's Gibbs state.
    pub fn thermal_excited(&self) -> f64 {
        thermal_excited_population(self.energy, self.temperature)
    }

    pub fn thermal_state(&self) -> DensityMatrix {
        let r = self.thermal_excited();
        DensityMatrix::from_raw(Operator::from_diagonal(&[1.0 - r, r]).into_matrix())
    }
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {value}")))
    }
}

fn non_negative(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be non-negative and finite, got {value}")))
    }
}

/// `e^{-E/T} / (1 + e^{-E/T})`, evaluated without overflow.
pub fn thermal_excited_population(energy: f64, temperature: f64) -> f64 {
    let x = energy / temperature;
    if x >= 0.0 {
        let w = (-x).exp();
        w / (1.0 + w)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Gibbs state `diag(1 - r, r)` of a qubit with gap `energy` at `temperature`.
pub fn thermal_qubit_state(energy: f64, temperature: f64) -> Result<DensityMatrix> {
    positive("energy gap", energy)?;
    positive("temperature", temperature)?;
    let x = energy / temperature;
    let w = (-x).exp();
    let (ground, excited) = (1.0 / (1.0 + w), w / (1.0 + w));
    Ok(DensityMatrix::from_raw(Operator::from_diagonal(&[ground, excited]).into_matrix()))
}

/// Three-qubit absorption refrigerator. `qubit2.energy` is always
/// `qubit1.energy + qubit3.energy`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FridgeSpec {
    pub qubit1: QubitSpec,
    pub qubit2: QubitSpec,
    pub qubit3: QubitSpec,
    pub coupling: f64,
}

impl FridgeSpec {
    /// Strict constructor: requires `T1 > T2 > T3` and `g > 0`.
    pub fn new(e1: f64, e3: f64, temperatures: [f64; 3], rates: [f64; 3], coupling: f64) -> Result<Self> {
        let [t1, t2, t3] = temperatures;
        if !(t1 > t2 && t2 > t3) {
            return Err(Error::domain(format!(
                "requires T1 > T2 > T3, got T1={t1}, T2={t2}, T3={t3}"
            )));
        }
        positive("coupling g", coupling)?;
        Self::new_relaxed(e1, e3, temperatures, rates, coupling)
    }

    /// Accepts any positive temperatures and `g ≥ 0`; used for equilibrium
    /// and uncoupled reference cases.
    pub fn new_relaxed(e1: f64, e3: f64, temperatures: [f64; 3], rates: [f64; 3], coupling: f64) -> Result<Self> {
        non_negative("coupling g", coupling)?;
        let qubit1 = QubitSpec::new(e1, temperatures[0], rates[0])?;
        let qubit3 = QubitSpec::new(e3, temperatures[2], rates[2])?;
        let qubit2 = QubitSpec::new(e1 + e3, temperatures[1], rates[1])?;
        Ok(Self { qubit1, qubit2, qubit3, coupling })
    }

    pub fn qubits(&self) -> [&QubitSpec; 3] {
        [&self.qubit1, &self.qubit2, &self.qubit3]
    }

    pub fn energies(&self) -> [f64; 3] {
        [self.qubit1.energy, self.qubit2.energy, self.qubit3.energy]
    }

    pub fn temperatures(&self) -> [f64; 3] {
        [self.qubit1.temperature, self.qubit2.temperature, self.qubit3.temperature]
    }

    pub fn rates(&self) -> [f64; 3] {
        [self.qubit1.reset_rate, self.qubit2.reset_rate, self.qubit3.reset_rate]
    }

    pub fn layout(&self) -> Layout {
        Layout::new(&[2, 2, 2]).expect("static layout")
    }

    /// `E2/T2 - E1/T1 - E3/T3`; positive inside the working regime.
    pub fn working_margin(&self) -> f64 {
        let [e1, e2, e3] = self.energies();
        let [t1, t2, t3] = self.temperatures();
        e2 / t2 - e1 / t1 - e3 / t3
    }

    /// `τ1 ⊗ τ2 ⊗ τ3`.
    pub fn thermal_product(&self) -> DensityMatrix {
        let taus = self.qubits().map(|q| q.thermal_state());
        DensityMatrix::product(&[&taus[0], &taus[1], &taus[2]])
    }
}

impl fmt::Display for FridgeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [e1, e2, e3] = self.energies();
        let [t1, t2, t3] = self.temperatures();
        let [p1, p2, p3] = self.rates();
        write!(
            f,
            "fridge(E=[{e1}, {e2}, {e3}], T=[{t1}, {t2}, {t3}], p=[{p1}, {p2}, {p3}], g={})",
            self.coupling
        )
    }
}

/// Two-qubit engine lifting a weight. `qubit1.energy` is always
/// `qubit2.energy + ladder_step`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineSpec {
    pub qubit1: QubitSpec,
    pub qubit2: QubitSpec,
    pub ladder_step: f64,
    pub ladder_levels: usize,
    pub initial_level: usize,
    pub coupling: f64,
}

impl EngineSpec {
    /// Strict constructor: requires `T1 > T2`, `g > 0`, `N ≥ 3` and `0 < n0 < N - 1`.
    pub fn new(
        e2: f64,
        e3: f64,
        temperatures: [f64; 2],
        rates: [f64; 2],
        ladder_levels: usize,
        initial_level: usize,
        coupling: f64,
    ) -> Result<Self> {
        let [t1, t2] = temperatures;
        if !(t1 > t2) {
            return Err(Error::domain(format!("requires T1 > T2, got T1={t1}, T2={t2}")));
        }
        positive("coupling g", coupling)?;
        Self::new_relaxed(e2, e3, temperatures, rates, ladder_levels, initial_level, coupling)
    }

    /// Accepts any positive temperatures and `g ≥ 0`.
    pub fn new_relaxed(
        e2: f64,
        e3: f64,
        temperatures: [f64; 2],
        rates: [f64; 2],
        ladder_levels: usize,
        initial_level: usize,
        coupling: f64,
    ) -> Result<Self> {
        non_negative("coupling g", coupling)?;
        positive("ladder step E3", e3)?;
        if ladder_levels < 3 {
            return Err(Error::domain(format!("requires ladder levels N >= 3, got {ladder_levels}")));
        }
        if initial_level == 0 || initial_level >= ladder_levels - 1 {
            return Err(Error::domain(format!(
                "requires 0 < n0 < N - 1, got n0={initial_level}, N={ladder_levels}"
            )));
        }
        let qubit2 = QubitSpec::new(e2, temperatures[1], rates[1])?;
        let qubit1 = QubitSpec::new(e2 + e3, temperatures[0], rates[0])?;
        Ok(Self {
            qubit1,
            qubit2,
            ladder_step: e3,
            ladder_levels,
            initial_level,
            coupling,
        })
    }

    pub fn energies(&self) -> [f64; 3] {
        [self.qubit1.energy, self.qubit2.energy, self.ladder_step]
    }

    pub fn temperatures(&self) -> [f64; 2] {
        [self.qubit1.temperature, self.qubit2.temperature]
    }

    pub fn rates(&self) -> [f64; 2] {
        [self.qubit1.reset_rate, self.qubit2.reset_rate]
    }

    pub fn dim(&self) -> usize {
        4 * self.ladder_levels
    }

    pub fn layout(&self) -> Layout {
        Layout::new(&[2, 2, self.ladder_levels]).expect("validated ladder size")
    }

    /// Basis index of `|q1 q2, n⟩`.
    pub fn index(&self, q1: usize, q2: usize, level: usize) -> usize {
        2 * self.ladder_levels * q1 + self.ladder_levels * q2 + level
    }

    /// `E2/T2 - E1/T1`; positive when lifting is favoured.
    pub fn working_margin(&self) -> f64 {
        self.qubit2.energy / self.qubit2.temperature - self.qubit1.energy / self.qubit1.temperature
    }

    /// `τ1 ⊗ τ2 ⊗ |n0⟩⟨n0|`.
    pub fn initial_state(&self) -> DensityMatrix {
        let weight = DensityMatrix::basis_state(self.ladder_levels, self.initial_level).expect("validated n0");
        DensityMatrix::product(&[&self.qubit1.thermal_state(), &self.qubit2.thermal_state(), &weight])
    }
}

impl fmt::Display for EngineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [e1, e2, e3] = self.energies();
        let [t1, t2] = self.temperatures();
        let [p1, p2] = self.rates();
        write!(
            f,
            "engine(E=[{e1}, {e2}, {e3}], T=[{t1}, {t2}], p=[{p1}, {p2}], N={}, n0={}, g={})",
            self.ladder_levels, self.initial_level, self.coupling
        )
    }
}

/// `H0 = Σ_i E_i |1⟩⟨1|_i`, diagonal in the product basis.
pub fn build_free_hamiltonian_fridge(spec: &FridgeSpec) -> Operator {
    let energies = spec.energies();
    let diag: Vec<f64> = (0..8)
        .map(|b| {
            let mut e = 0.0;
            for (k, gap) in energies.iter().enumerate() {
                if (b >> (2 - k)) & 1 == 1 {
                    e += gap;
                }
            }
            e
        })
        .collect();
    Operator::from_diagonal(&diag)
}

/// `g (|010⟩⟨101| + |101⟩⟨010|)`.
pub fn build_interaction_fridge(coupling: f64) -> Result<Operator> {
    non_negative("coupling g", coupling)?;
    let mut h = Operator::zeros(8).into_matrix();
    h[(FRIDGE_LOWER, FRIDGE_UPPER)] = Complex64::new(coupling, 0.0);
    h[(FRIDGE_UPPER, FRIDGE_LOWER)] = Complex64::new(coupling, 0.0);
    Operator::new(h)
}

/// Free and interaction Hamiltonians of the engine.
///
/// The interaction couples `|10,n⟩ ↔ |01,n+1⟩` for `n = 0..N-2`; nothing
/// couples past the ends of the ladder.
pub fn build_hamiltonians_engine(spec: &EngineSpec) -> (Operator, Operator) {
    let n_levels = spec.ladder_levels;
    let [e1, e2, e3] = spec.energies();
    let dim = spec.dim();
    let mut diag = vec![0.0; dim];
    for q1 in 0..2 {
        for q2 in 0..2 {
            for n in 0..n_levels {
                diag[spec.index(q1, q2, n)] = q1 as f64 * e1 + q2 as f64 * e2 + n as f64 * e3;
            }
        }
    }
    let mut h_int = Operator::zeros(dim).into_matrix();
    let g = Complex64::new(spec.coupling, 0.0);
    for n in 0..n_levels - 1 {
        let lower = spec.index(1, 0, n);
        let upper = spec.index(0, 1, n + 1);
        h_int[(lower, upper)] = g;
        h_int[(upper, lower)] = g;
    }
    (Operator::from_diagonal(&diag), Operator::new(h_int).expect("square"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tolerances::HERMITIAN_OPERATOR;
    use proptest::prelude::*;

    fn fridge(e1: f64, e3: f64) -> FridgeSpec {
        FridgeSpec::new(e1, e3, [10.0, 5.0, 4.0], [1e-3; 3], 0.01).unwrap()
    }

    #[test]
    fn thermal_state_limits() {
        let hot = thermal_qubit_state(1.0, 1e12).unwrap();
        let pops = hot.populations();
        assert!((pops[0] - 0.5).abs() < 1e-10 && (pops[1] - 0.5).abs() < 1e-10);

        // 1/(1+e), evaluated with 50-digit arithmetic
        let unit = thermal_qubit_state(1.0, 1.0).unwrap();
        assert!((unit.populations()[1] - 0.268_941_421_369_995_1).abs() < 1e-15);

        let cold = thermal_qubit_state(10.0, 0.1).unwrap();
        assert!(cold.populations()[1] < 1e-40);
        assert!((cold.populations()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn thermal_state_rejects_nonpositive_inputs() {
        assert!(thermal_qubit_state(0.0, 1.0).is_err());
        assert!(thermal_qubit_state(1.0, -1.0).is_err());
        assert!(thermal_qubit_state(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn fridge_free_hamiltonian_diagonal() {
        let h0 = build_free_hamiltonian_fridge(&fridge(2.0, 1.0));
        assert_eq!(h0.diagonal(), vec![0.0, 1.0, 3.0, 4.0, 2.0, 3.0, 5.0, 6.0]);
        assert_eq!(h0.entry(FRIDGE_LOWER, FRIDGE_LOWER), h0.entry(FRIDGE_UPPER, FRIDGE_UPPER));
        assert_eq!(build_free_hamiltonian_fridge(&fridge(1.0, 1.0)).entry(0, 0).re, 0.0);
    }

    #[test]
    fn fridge_interaction_entries() {
        let h = build_interaction_fridge(0.01).unwrap();
        assert_eq!(h.count_nonzero(), 2);
        assert_eq!(h.entry(FRIDGE_LOWER, FRIDGE_UPPER).re, 0.01);
        assert_eq!(h.entry(FRIDGE_UPPER, FRIDGE_LOWER).re, 0.01);
        assert_eq!(h.hermiticity_error(), 0.0);
    }

    #[test]
    fn fridge_spec_validation() {
        assert!(FridgeSpec::new(1.0, 1.0, [5.0, 10.0, 4.0], [1e-3; 3], 0.01)
            .unwrap_err()
            .to_string()
            .contains("T1 > T2 > T3"));
        assert!(FridgeSpec::new(1.0, 1.0, [10.0, 5.0, 4.0], [0.0, 1e-3, 1e-3], 0.01).is_err());
        assert!(FridgeSpec::new(1.0, 1.0, [10.0, 5.0, 4.0], [1e-3; 3], 0.0).is_err());
        assert!(FridgeSpec::new_relaxed(1.0, 1.0, [4.0; 3], [1e-3; 3], 0.0).is_ok());
        assert_eq!(fridge(1.0, 1.0).qubit2.energy, 2.0);
    }

    #[test]
    fn engine_hamiltonians() {
        let spec = EngineSpec::new(1.0, 1.0, [10.0, 5.0], [0.1, 0.1], 3, 1, 0.01).unwrap();
        let (h0, hint) = build_hamiltonians_engine(&spec);
        assert_eq!(hint.count_nonzero(), 4);
        assert!(h0.commutator(&hint).max_abs() < 1e-12);
        assert_eq!(h0.entry(spec.index(1, 0, 0), spec.index(1, 0, 0)).re, 2.0);
        assert_eq!(h0.entry(spec.index(0, 1, 1), spec.index(0, 1, 1)).re, 2.0);
    }

    #[test]
    fn engine_spec_validation() {
        assert!(EngineSpec::new(1.0, 0.5, [5.0, 10.0], [0.1, 0.1], 41, 20, 0.01).is_err());
        assert!(EngineSpec::new(1.0, 0.5, [10.0, 5.0], [0.1, 0.1], 2, 1, 0.01).is_err());
        assert!(EngineSpec::new(1.0, 0.5, [10.0, 5.0], [0.1, 0.1], 41, 0, 0.01).is_err());
        assert!(EngineSpec::new(1.0, 0.5, [10.0, 5.0], [0.1, 0.1], 41, 40, 0.01).is_err());
        let spec = EngineSpec::new(1.0, 0.5, [10.0, 5.0], [0.1, 0.1], 41, 20, 0.01).unwrap();
        assert_eq!(spec.qubit1.energy, 1.5);
    }

    fn arb_fridge() -> impl Strategy<Value = FridgeSpec> {
        (0.05f64..5.0, 0.05f64..5.0, 0.1f64..10.0, 1.01f64..4.0, 1.01f64..4.0, 1e-4f64..1.0)
            .prop_map(|(e1, e3, t3, a, b, g)| {
                FridgeSpec::new(e1, e3, [t3 * a * b, t3 * a, t3], [1e-3; 3], g * e1.min(e3)).unwrap()
            })
    }

    proptest! {
        #[test]
        fn fridge_hamiltonians_commute(spec in arb_fridge()) {
            let h0 = build_free_hamiltonian_fridge(&spec);
            let hint = build_interaction_fridge(spec.coupling).unwrap();
            let scale = spec.coupling * spec.qubit2.energy;
            prop_assert!(h0.commutator(&hint).max_abs() <= 1e-12 * scale);
            prop_assert!(h0.hermiticity_error() <= HERMITIAN_OPERATOR);
            prop_assert!(hint.hermiticity_error() <= HERMITIAN_OPERATOR);
        }

        #[test]
        fn engine_pairs_are_degenerate(e2 in 0.05f64..5.0, e3 in 0.05f64..5.0, n in 3usize..12) {
            let spec = EngineSpec::new(e2, e3, [10.0, 5.0], [0.1, 0.1], n, 1, 0.01).unwrap();
            let (h0, hint) = build_hamiltonians_engine(&spec);
            for level in 0..n - 1 {
                let a = h0.entry(spec.index(1, 0, level), spec.index(1, 0, level)).re;
                let b = h0.entry(spec.index(0, 1, level + 1), spec.index(0, 1, level + 1)).re;
                prop_assert!((a - b).abs() <= 1e-12 * (a.abs() + 1.0));
            }
            prop_assert!(hint.hermiticity_error() <= HERMITIAN_OPERATOR);
            prop_assert_eq!(hint.count_nonzero(), 2 * (n - 1));
        }

        #[test]
        fn thermal_state_is_valid(e in 1e-3f64..50.0, t in 1e-2f64..1e3) {
            let tau = thermal_qubit_state(e, t).unwrap();
            let pops = tau.populations();
            prop_assert!((pops[0] + pops[1] - 1.0).abs() < 1e-15);
            prop_assert!(pops.iter().all(|p| (0.0..=1.0).contains(p)));
            prop_assert!(pops[1] <= pops[0]);
        }
    }
}
