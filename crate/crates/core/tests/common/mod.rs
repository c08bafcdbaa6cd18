//! Independent dense reference model of the refrigerator, written from the
//! model definition without using the library's generator or solver.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type M = DMatrix<Complex64>;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Plain parameters so the oracle does not depend on the library's types.
#[derive(Clone, Copy, Debug)]
pub struct Fridge {
    pub e: [f64; 3],
    pub t: [f64; 3],
    pub p: [f64; 3],
    pub g: f64,
}

impl Fridge {
    pub fn new(e1: f64, e3: f64, t: [f64; 3], p: [f64; 3], g: f64) -> Self {
        Self { e: [e1, e1 + e3, e3], t, p, g }
    }

    pub fn of(spec: &qtm::machine::FridgeSpec) -> Self {
        let [e1, _, e3] = spec.energies();
        Self::new(e1, e3, spec.temperatures(), spec.rates(), spec.coupling)
    }

    /// Excited-state Gibbs population of qubit `i`.
    pub fn r(&self, i: usize) -> f64 {
        1.0 / (1.0 + (self.e[i] / self.t[i]).exp())
    }

    /// Working when `E2/T2 > E1/T1 + E3/T3`.
    pub fn margin(&self) -> f64 {
        self.e[1] / self.t[1] - self.e[0] / self.t[0] - self.e[2] / self.t[2]
    }
}

/// Bit of qubit `i` (0, 1, 2) in basis index `a`; qubit 1 is the most significant.
pub fn bit(a: usize, i: usize) -> usize {
    (a >> (2 - i)) & 1
}

fn with_bit(a: usize, i: usize, v: usize) -> usize {
    let mask = 1 << (2 - i);
    (a & !mask) | (v << (2 - i))
}

pub fn number(i: usize) -> M {
    M::from_fn(8, 8, |a, b| if a == b && bit(a, i) == 1 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
}

pub fn interaction(g: f64) -> M {
    let mut h = M::zeros(8, 8);
    h[(0b010, 0b101)] = Complex64::new(g, 0.0);
    h[(0b101, 0b010)] = Complex64::new(g, 0.0);
    h
}

pub fn hamiltonian(f: &Fridge) -> M {
    let mut h = interaction(f.g);
    for a in 0..8 {
        h[(a, a)] = Complex64::new((0..3).map(|i| f.e[i] * bit(a, i) as f64).sum(), 0.0);
    }
    h
}

pub fn thermal_product(f: &Fridge) -> M {
    M::from_fn(8, 8, |a, b| {
        if a != b {
            return Complex64::new(0.0, 0.0);
        }
        let w: f64 = (0..3).map(|i| if bit(a, i) == 1 { f.r(i) } else { 1.0 - f.r(i) }).product();
        Complex64::new(w, 0.0)
    })
}

/// `τ_i ⊗ Tr_i ρ` with `τ_i` diagonal.
fn replace(f: &Fridge, rho: &M, i: usize) -> M {
    M::from_fn(8, 8, |a, b| {
        if bit(a, i) != bit(b, i) {
            return Complex64::new(0.0, 0.0);
        }
        let tau = if bit(a, i) == 1 { f.r(i) } else { 1.0 - f.r(i) };
        let traced: Complex64 = (0..2).map(|k| rho[(with_bit(a, i, k), with_bit(b, i, k))]).sum();
        traced * tau
    })
}

pub fn commutator_term(h: &M, rho: &M) -> M {
    (h * rho - rho * h) * (-I)
}

pub fn generator(f: &Fridge, rho: &M) -> M {
    let mut out = commutator_term(&hamiltonian(f), rho);
    for i in 0..3 {
        out += (replace(f, rho, i) - rho) * Complex64::new(f.p[i], 0.0);
    }
    out
}

/// Steady state from `L δ = -L(τ)` with `Tr δ = 0`, where `τ` is the
/// thermal product, solved by dense LU on the 64 × 64 matrix of `L`.
pub fn steady_state(f: &Fridge) -> M {
    let mut l = M::zeros(64, 64);
    for col in 0..64 {
        let mut e = M::zeros(8, 8);
        e[(col % 8, col / 8)] = Complex64::new(1.0, 0.0);
        let image = generator(f, &e);
        for row in 0..64 {
            l[(row, col)] = image[(row % 8, row / 8)];
        }
    }
    let tau = thermal_product(f);
    // only the coupling moves the thermal product
    let forcing = commutator_term(&interaction(f.g), &tau) * Complex64::new(-1.0, 0.0);
    let mut rhs = DVector::from_fn(64, |row, _| forcing[(row % 8, row / 8)]);
    for col in 0..64 {
        l[(0, col)] = if col % 9 == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
    }
    rhs[0] = Complex64::new(0.0, 0.0);
    let delta = l.lu().solve(&rhs).expect("nonsingular");
    let mut rho = tau;
    for k in 0..64 {
        rho[(k % 8, k / 8)] += delta[k];
    }
    (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0)
}

pub struct Currents {
    pub q: [f64; 3],
    /// Excitation flow `|101⟩ → |010⟩` driven by the coupling.
    pub j: f64,
    pub excited: [f64; 3],
}

pub fn currents(f: &Fridge, rho: &M) -> Currents {
    let excited = [0, 1, 2].map(|i| (0..8).filter(|&a| bit(a, i) == 1).map(|a| rho[(a, a)].re).sum::<f64>());
    let q = [0, 1, 2].map(|i| f.p[i] * f.e[i] * (f.r(i) - excited[i]));
    let flow = commutator_term(&interaction(f.g), rho);
    let j = (number(1) * flow).trace().re;
    Currents { q, j, excited }
}

/// `E / ln(p0/p1)` of qubit `i`'s populations.
pub fn effective_temperature(f: &Fridge, excited: f64, i: usize) -> f64 {
    f.e[i] / ((1.0 - excited) / excited).ln()
}

pub fn relative_spread(values: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, a) in values.iter().enumerate() {
        for b in &values[k + 1..] {
            let scale = a.abs().max(b.abs());
            if scale > 0.0 {
                worst = worst.max((a - b).abs() / scale);
            }
        }
    }
    worst
}

pub fn relative(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
