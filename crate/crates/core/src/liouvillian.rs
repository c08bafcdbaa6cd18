//! Reset-model master-equation generators.
//!
//! The generator is
//!
//! ```text
//! L(ρ) = -i[H0 + H_int, ρ] + Σ_i p_i (τ_i ⊗ Tr_i ρ - ρ)
//! ```
//!
//! where the sum runs over the qubits attached to a bath. It comes in two
//! forms:
//!
//! * [`Superoperator`]: the dense `d² × d²` matrix acting on column-major
//!   vectorised density matrices, `vec(ρ)[i + d·j] = ρ[i, j]`. Used for
//!   steady-state solves and spectral diagnostics.
//! * [`Liouvillian`]: the same map applied directly to `d × d` matrices in
//!   `O(d²)` work per application. Used for time integration, and the only
//!   practical form for the engine, whose weight ladder makes `d²` large.
//!
//! Because `H0` is diagonal, commutes with `H_int` and the reset targets are
//! diagonal, `-i[H0, ·]` commutes with the rest of the generator. The
//! [`InteractionFrame`] integrates only the slow part and restores the free
//! phases exactly when a sample is taken.

use std::f64::consts::SQRT_2;
use std::sync::OnceLock;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::machine::{build_free_hamiltonian_fridge, build_hamiltonians_engine, build_interaction_fridge, EngineSpec, FridgeSpec};
use crate::state::{kron, CMatrix, DensityMatrix, Layout, Operator, ZERO};
use crate::tolerances;

const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

/// A linear generator of dynamics on `d × d` matrices.
pub trait Generator: Sync {
    /// Hilbert-space dimension `d`.
    fn dim(&self) -> usize;

    /// Writes `L(rho)` into `out`.
    fn apply_into(&self, rho: &CMatrix, out: &mut CMatrix);

    /// Upper bound on (or exact value of) the spectral norm `‖L‖₂`.
    fn norm_bound(&self) -> f64;

    /// Maps a state integrated in this generator's frame at time `t` to the lab frame.
    fn to_lab_frame(&self, _t: f64, _rho: &mut CMatrix) {}

    /// Invariant sector in which states starting inside can be integrated
    /// on sparse coordinates.
    fn sector(&self) -> Option<&ZeroFrequencySector> {
        None
    }

    fn apply(&self, rho: &CMatrix) -> CMatrix {
        let d = self.dim();
        let mut out = CMatrix::zeros(d, d);
        self.apply_into(rho, &mut out);
        out
    }
}

/// Dense superoperator on column-major vectorised `d × d` matrices.
#[derive(Clone, Debug)]
pub struct Superoperator {
    dim: usize,
    matrix: CMatrix,
    norm: OnceLock<f64>,
}

impl PartialEq for Superoperator {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.matrix == other.matrix
    }
}

impl Superoperator {
    pub fn zeros(dim: usize) -> Self {
        Self::from_matrix(dim, CMatrix::zeros(dim * dim, dim * dim)).expect("square")
    }

    pub fn from_matrix(dim: usize, matrix: CMatrix) -> Result<Self> {
        if matrix.shape() != (dim * dim, dim * dim) {
            return Err(Error::domain(format!(
                "superoperator on dimension {dim} must be {0}x{0}, got {1:?}",
                dim * dim,
                matrix.shape()
            )));
        }
        Ok(Self { dim, matrix, norm: OnceLock::new() })
    }

    /// Tabulates a linear map column by column from its action on the matrix units `|i⟩⟨j|`.
    pub fn from_map(dim: usize, map: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let n = dim * dim;
        let mut matrix = CMatrix::zeros(n, n);
        let mut unit = CMatrix::zeros(dim, dim);
        for j in 0..dim {
            for i in 0..dim {
                unit[(i, j)] = Complex64::new(1.0, 0.0);
                let image = map(&unit);
                matrix.column_mut(i + dim * j).copy_from_slice(image.as_slice());
                unit[(i, j)] = ZERO;
            }
        }
        Self { dim, matrix, norm: OnceLock::new() }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn spectral_norm(&self) -> f64 {
        *self.norm.get_or_init(|| {
            self.matrix
                .clone()
                .singular_values()
                .iter()
                .fold(0.0_f64, |acc, s| acc.max(*s))
        })
    }

    /// Singular values in ascending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.matrix.clone().singular_values().iter().copied().collect();
        s.sort_by(f64::total_cmp);
        s
    }

    /// `max_k |Σ_i L[(i,i), k]|`: how far `vec(I)†` is from a left null vector.
    pub fn trace_preservation_error(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for k in 0..d * d {
            let s: Complex64 = (0..d).map(|i| self.matrix[(i + d * i, k)]).sum();
            worst = worst.max(s.norm());
        }
        worst
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::from_matrix(self.dim, self.matrix.scale(factor)).expect("same shape")
    }
}

impl std::ops::Add for &Superoperator {
    type Output = Superoperator;

    fn add(self, rhs: &Superoperator) -> Superoperator {
        assert_eq!(self.dim, rhs.dim, "superoperator dimensions differ");
        Superoperator::from_matrix(self.dim, &self.matrix + &rhs.matrix).expect("same shape")
    }
}

impl Generator for Superoperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, rho: &CMatrix, out: &mut CMatrix) {
        let v = DVector::from_column_slice(rho.as_slice());
        let w = &self.matrix * v;
        out.as_mut_slice().copy_from_slice(w.as_slice());
    }

    fn norm_bound(&self) -> f64 {
        self.spectral_norm()
    }
}

/// `ρ ↦ -i[H, ρ]`, i.e. `-i(I ⊗ H - Hᵀ ⊗ I)` on column-major vectors.
pub fn coherent_generator(h: &Operator) -> Result<Superoperator> {
    let err = h.hermiticity_error();
    if err > tolerances::HERMITIAN_INPUT {
        return Err(Error::domain(format!("Hamiltonian is not Hermitian: deviation {err:e}")));
    }
    let d = h.dim();
    let id = CMatrix::identity(d, d);
    let m = (kron(&id, h.matrix()) - kron(&h.matrix().transpose(), &id)) * MINUS_I;
    Superoperator::from_matrix(d, m)
}

/// `ρ ↦ p (τ ⊗_i Tr_i ρ - ρ)`, with `τ` re-inserted in slot `index`.
pub fn reset_dissipator(index: usize, tau: &DensityMatrix, rate: f64, dims: &[usize]) -> Result<Superoperator> {
    let layout = Layout::new(dims)?;
    let reset = Reset::new(&layout, index, tau, rate)?;
    let d = layout.total();
    Ok(Superoperator::from_map(d, |rho| {
        let mut out = CMatrix::zeros(d, d);
        reset.accumulate(&layout, rho, &mut out);
        out
    }))
}

/// One reset channel: qubit `index` is replaced by `tau` at rate `rate`.
#[derive(Clone, Debug, PartialEq)]
pub struct Reset {
    index: usize,
    tau: CMatrix,
    rate: f64,
}

impl Reset {
    pub fn new(layout: &Layout, index: usize, tau: &DensityMatrix, rate: f64) -> Result<Self> {
        match layout.dims().get(index) {
            None => {
                return Err(Error::domain(format!(
                    "subsystem index {index} out of range for {} subsystems",
                    layout.dims().len()
                )))
            }
            Some(2) => {}
            Some(d) => {
                return Err(Error::domain(format!(
                    "reset targets a qubit, but subsystem {index} has dimension {d}"
                )))
            }
        }
        if tau.dim() != 2 {
            return Err(Error::domain(format!("reset state must be 2x2, got dimension {}", tau.dim())));
        }
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::domain(format!("reset rate must be positive, got {rate}")));
        }
        Ok(Self { index, tau: tau.matrix().clone(), rate })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn tau(&self) -> &CMatrix {
        &self.tau
    }

    /// `out += p (τ ⊗ Tr_i ρ - ρ)`.
    fn accumulate(&self, layout: &Layout, rho: &CMatrix, out: &mut CMatrix) {
        let n = layout.total();
        let s = layout.stride(self.index);
        let p = self.rate;
        let tau = [[self.tau[(0, 0)] * p, self.tau[(0, 1)] * p], [self.tau[(1, 0)] * p, self.tau[(1, 1)] * p]];
        let src = rho.as_slice();
        let dst = out.as_mut_slice();
        for y in 0..n {
            let by = (y / s) & 1;
            let y0 = y - by * s;
            // column y0 holds the bit-0 block of Tr_i, column y0 + s the bit-1 block
            let (c0, c1) = (y0 * n, (y0 + s) * n);
            let col = y * n;
            for block in (0..n).step_by(2 * s) {
                let r0 = &src[c0 + block..c0 + block + s];
                let r1 = &src[c1 + block + s..c1 + block + 2 * s];
                for (bx, row) in tau.iter().enumerate() {
                    let t = row[by];
                    let base = col + block + bx * s;
                    let own = &src[base..base + s];
                    let seg = &mut dst[base..base + s];
                    if t == ZERO {
                        seg.iter_mut().zip(own).for_each(|(d, v)| *d -= v * p);
                    } else {
                        for (((d, v), a), b) in seg.iter_mut().zip(own).zip(r0).zip(r1) {
                            *d += t * (a + b) - v * p;
                        }
                    }
                }
            }
        }
    }
}

/// Structured generator: diagonal free Hamiltonian, sparse interaction and reset channels.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    layout: Layout,
    free: Vec<f64>,
    couplings: Vec<(usize, usize, Complex64)>,
    resets: Vec<Reset>,
    degenerate: bool,
    resonance: f64,
}

/// The generator restricted to populations and coherences between equal
/// free energies. The free evolution vanishes there, every stationary state
/// lies inside it, and a state that starts inside never leaves it.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroFrequencySector {
    dim: usize,
    /// Matrix positions `(row, column)` in column-major order.
    entries: Vec<(usize, usize)>,
    /// Column-major membership of every matrix position.
    member: Vec<bool>,
    /// Sparse columns: `columns[k]` lists `(row, value)` of `L(E_k)`.
    columns: Vec<Vec<(usize, Complex64)>>,
}

impl ZeroFrequencySector {
    /// Number of matrix entries in the sector.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    /// The sector block as a dense matrix.
    pub fn dense(&self) -> CMatrix {
        let m = self.len();
        let mut out = CMatrix::zeros(m, m);
        for (k, col) in self.columns.iter().enumerate() {
            for &(row, v) in col {
                out[(row, k)] += v;
            }
        }
        out
    }

    /// `out = L(v)` on sector coordinates.
    pub fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        out.fill(ZERO);
        for (col, x) in self.columns.iter().zip(v) {
            if *x == ZERO {
                continue;
            }
            for &(row, c) in col {
                out[row] += c * x;
            }
        }
    }

    /// Sector coordinates of `rho`, or `None` if it has weight outside.
    pub fn compress(&self, rho: &CMatrix) -> Option<Vec<Complex64>> {
        let outside = rho.iter().zip(&self.member).any(|(z, inside)| !inside && *z != ZERO);
        (rho.nrows() == self.dim && rho.ncols() == self.dim && !outside)
            .then(|| self.entries.iter().map(|&(x, y)| rho[(x, y)]).collect())
    }

    /// The `d × d` matrix with sector coordinates `v`.
    pub fn expand(&self, v: &[Complex64]) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (&(x, y), z) in self.entries.iter().zip(v) {
            out[(x, y)] = *z;
        }
        out
    }

    /// `Tr ρ` from sector coordinates.
    pub fn trace(&self, v: &[Complex64]) -> Complex64 {
        self.entries
            .iter()
            .zip(v)
            .filter(|((x, y), _)| x == y)
            .map(|(_, z)| *z)
            .sum()
    }
}

impl Liouvillian {
    /// `h0` must be diagonal; `h_int` may be any Hermitian operator.
    pub fn new(layout: Layout, h0: &Operator, h_int: &Operator, resets: Vec<Reset>) -> Result<Self> {
        let d = layout.total();
        if h0.dim() != d || h_int.dim() != d {
            return Err(Error::domain("Hamiltonian dimension does not match the layout"));
        }
        if !h0.off_diagonal_entries().is_empty() {
            return Err(Error::domain("free Hamiltonian must be diagonal in the product basis"));
        }
        for h in [h0, h_int] {
            let err = h.hermiticity_error();
            if err > tolerances::HERMITIAN_INPUT {
                return Err(Error::domain(format!("Hamiltonian is not Hermitian: deviation {err:e}")));
            }
        }
        let mut free = h0.diagonal();
        for (i, e) in free.iter_mut().enumerate() {
            *e += h_int.entry(i, i).re;
        }
        let couplings = h_int.off_diagonal_entries();
        let scale = free.iter().fold(1.0_f64, |a, e| a.max(e.abs()));
        let resonance = tolerances::HERMITIAN_OPERATOR * scale;
        let degenerate = couplings.iter().all(|&(i, j, _)| (free[i] - free[j]).abs() <= resonance);
        Ok(Self {
            layout,
            free,
            couplings,
            resets,
            degenerate,
            resonance,
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn resets(&self) -> &[Reset] {
        &self.resets
    }

    /// The full Hamiltonian `H0 + H_int`.
    pub fn hamiltonian(&self) -> Operator {
        let mut h = Operator::from_diagonal(&self.free).into_matrix();
        for &(i, j, v) in &self.couplings {
            h[(i, j)] = v;
        }
        Operator::new(h).expect("square")
    }

    /// Dense form, assembled as `coherent_generator(H) + Σ reset_dissipator`.
    pub fn superoperator(&self) -> Result<Superoperator> {
        let mut total = coherent_generator(&self.hamiltonian())?;
        for r in &self.resets {
            let tau = DensityMatrix::new(r.tau.clone())?;
            total = &total + &reset_dissipator(r.index, &tau, r.rate, self.layout.dims())?;
        }
        Ok(total)
    }

    /// `τ` on every reset qubit, when every subsystem is reset; the unique
    /// fixed point of the dissipative part.
    pub fn dissipative_fixed_point(&self) -> Option<DensityMatrix> {
        let dims = self.layout.dims();
        let mut factors = Vec::with_capacity(dims.len());
        for k in 0..dims.len() {
            let r = self.resets.iter().find(|r| r.index == k)?;
            factors.push(DensityMatrix::from_raw(r.tau.clone()));
        }
        Some(DensityMatrix::product(&factors.iter().collect::<Vec<_>>()))
    }

    /// Generator with the free evolution factored out. Requires every
    /// interaction term to connect degenerate free levels.
    pub fn interaction_frame(&self) -> Result<InteractionFrame<'_>> {
        if self.degenerate {
            Ok(InteractionFrame {
                inner: self,
                sector: self.zero_frequency_sector().ok(),
            })
        } else {
            Err(Error::domain("interaction couples non-degenerate levels; integrate in the lab frame"))
        }
    }

    /// Builds the [`ZeroFrequencySector`]; fails if the interaction couples
    /// non-degenerate levels or a reset target has coherences.
    pub fn zero_frequency_sector(&self) -> Result<ZeroFrequencySector> {
        if !self.degenerate {
            return Err(Error::domain("interaction couples non-degenerate levels"));
        }
        let d = self.layout.total();
        let mut position = vec![usize::MAX; d * d];
        let mut entries = Vec::new();
        for y in 0..d {
            for x in 0..d {
                if (self.free[x] - self.free[y]).abs() <= self.resonance {
                    position[x + d * y] = entries.len();
                    entries.push((x, y));
                }
            }
        }
        let leak = || Error::domain("generator mixes populations with oscillating coherences");
        let mut hc = vec![Vec::new(); d];
        for &(a, b, v) in &self.couplings {
            hc[b].push((a, v));
        }
        let mut columns = Vec::with_capacity(entries.len());
        for &(x, y) in &entries {
            let mut col: Vec<(usize, Complex64)> = Vec::new();
            let mut push = |i: usize, j: usize, v: Complex64| -> Result<()> {
                if v == ZERO {
                    return Ok(());
                }
                match position[i + d * j] {
                    usize::MAX => Err(leak()),
                    row => {
                        col.push((row, v));
                        Ok(())
                    }
                }
            };
            // -i (Hc E_xy - E_xy Hc); Hc is Hermitian, so its column x lists rows a with Hc[a, x]
            for &(a, v) in &hc[x] {
                push(a, y, MINUS_I * v)?;
            }
            for &(b, v) in &hc[y] {
                push(x, b, -MINUS_I * v.conj())?;
            }
            for r in &self.resets {
                let s = self.layout.stride(r.index);
                let (bx, by) = ((x / s) & 1, (y / s) & 1);
                push(x, y, Complex64::new(-r.rate, 0.0))?;
                if bx == by {
                    let (x0, y0) = (x - bx * s, y - by * s);
                    for b in 0..2 {
                        for b2 in 0..2 {
                            push(x0 + b * s, y0 + b2 * s, r.tau[(b, b2)] * r.rate)?;
                        }
                    }
                }
            }
            col.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, Complex64)> = Vec::with_capacity(col.len());
            for (row, v) in col {
                match merged.last_mut() {
                    Some(last) if last.0 == row => last.1 += v,
                    _ => merged.push((row, v)),
                }
            }
            columns.push(merged);
        }
        let member = position.iter().map(|p| *p != usize::MAX).collect();
        Ok(ZeroFrequencySector {
            dim: d,
            entries,
            member,
            columns,
        })
    }

    /// `-i[H0 + H_int, ρ]` alone.
    pub fn apply_hamiltonian(&self, rho: &CMatrix) -> CMatrix {
        let n = self.layout.total();
        let mut out = CMatrix::zeros(n, n);
        self.apply_coherent(rho, &mut out, true);
        out
    }

    fn apply_parts(&self, rho: &CMatrix, out: &mut CMatrix, include_free: bool) {
        self.apply_coherent(rho, out, include_free);
        for r in &self.resets {
            r.accumulate(&self.layout, rho, out);
        }
    }

    fn apply_coherent(&self, rho: &CMatrix, out: &mut CMatrix, include_free: bool) {
        let n = self.layout.total();
        if include_free {
            for y in 0..n {
                for x in 0..n {
                    out[(x, y)] = MINUS_I * (self.free[x] - self.free[y]) * rho[(x, y)];
                }
            }
        } else {
            out.fill(ZERO);
        }
        // -i (Hc ρ - ρ Hc), touching only the rows and columns a coupling addresses
        for &(a, b, v) in &self.couplings {
            let v = MINUS_I * v;
            for y in 0..n {
                out[(a, y)] += v * rho[(b, y)];
            }
            for x in 0..n {
                out[(x, b)] -= rho[(x, a)] * v;
            }
        }
    }

    fn coupling_norm_bound(&self) -> f64 {
        let mut row = vec![0.0; self.layout.total()];
        for &(a, _, v) in &self.couplings {
            row[a] += v.norm();
        }
        row.iter().fold(0.0_f64, |a, b| a.max(*b))
    }

    fn reset_norm_bound(&self) -> f64 {
        self.resets.iter().map(|r| r.rate * (1.0 + SQRT_2)).sum()
    }
}

impl Generator for Liouvillian {
    fn dim(&self) -> usize {
        self.layout.total()
    }

    fn apply_into(&self, rho: &CMatrix, out: &mut CMatrix) {
        self.apply_parts(rho, out, true);
    }

    fn norm_bound(&self) -> f64 {
        let (lo, hi) = self
            .free
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(*e), hi.max(*e)));
        (hi - lo) + 2.0 * self.coupling_norm_bound() + self.reset_norm_bound()
    }
}

/// The generator seen in the frame rotating with the free Hamiltonian.
#[derive(Clone, Debug)]
pub struct InteractionFrame<'a> {
    inner: &'a Liouvillian,
    sector: Option<ZeroFrequencySector>,
}

impl Generator for InteractionFrame<'_> {
    fn dim(&self) -> usize {
        self.inner.layout.total()
    }

    fn apply_into(&self, rho: &CMatrix, out: &mut CMatrix) {
        self.inner.apply_parts(rho, out, false);
    }

    fn norm_bound(&self) -> f64 {
        2.0 * self.inner.coupling_norm_bound() + self.inner.reset_norm_bound()
    }

    fn sector(&self) -> Option<&ZeroFrequencySector> {
        self.sector.as_ref()
    }

    fn to_lab_frame(&self, t: f64, rho: &mut CMatrix) {
        let free = &self.inner.free;
        let n = free.len();
        for y in 0..n {
            for x in 0..n {
                let w = free[x] - free[y];
                if w != 0.0 {
                    rho[(x, y)] *= Complex64::from_polar(1.0, -w * t);
                }
            }
        }
    }
}

/// `-i[H0 + H_int, ·] + Σ_{i=1..3} p_i(τ_i ⊗ Tr_i · - ·)` for the refrigerator.
pub fn assemble_fridge_liouvillian(spec: &FridgeSpec) -> Result<Liouvillian> {
    let layout = spec.layout();
    let h0 = build_free_hamiltonian_fridge(spec);
    let h_int = build_interaction_fridge(spec.coupling)?;
    let resets = spec
        .qubits()
        .iter()
        .enumerate()
        .map(|(k, q)| Reset::new(&layout, k, &q.thermal_state(), q.reset_rate))
        .collect::<Result<Vec<_>>>()?;
    Liouvillian::new(layout, &h0, &h_int, resets)
}

/// Engine generator: resets on both qubits, none on the weight.
pub fn assemble_engine_liouvillian(spec: &EngineSpec) -> Result<Liouvillian> {
    let layout = spec.layout();
    let (h0, h_int) = build_hamiltonians_engine(spec);
    let resets = vec![
        Reset::new(&layout, 0, &spec.qubit1.thermal_state(), spec.qubit1.reset_rate)?,
        Reset::new(&layout, 1, &spec.qubit2.thermal_state(), spec.qubit2.reset_rate)?,
    ];
    Liouvillian::new(layout, &h0, &h_int, resets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::thermal_qubit_state;
    use crate::state::ONE;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
        let a = CMatrix::from_fn(d, d, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        (&a + a.adjoint()).scale(0.5)
    }

    fn fridge() -> FridgeSpec {
        FridgeSpec::new(1.0, 1.0, [10.0, 5.0, 4.0], [1e-3, 2e-3, 3e-3], 0.01).unwrap()
    }

    #[test]
    fn coherent_generator_basics() {
        let zero = coherent_generator(&Operator::zeros(3)).unwrap();
        assert_eq!(zero.matrix().iter().filter(|z| **z != ZERO).count(), 0);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = Operator::new(random_hermitian(&mut rng, 4)).unwrap();
        let l = coherent_generator(&h).unwrap();
        assert!(crate::state::max_abs(&l.apply(&CMatrix::identity(4, 4))) < 1e-14);

        let mut bad = CMatrix::zeros(2, 2);
        bad[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(coherent_generator(&Operator::new(bad).unwrap()).is_err());
    }

    #[test]
    fn coherent_generator_matches_commutator() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = random_hermitian(&mut rng, 5);
        let rho = random_hermitian(&mut rng, 5);
        let l = coherent_generator(&Operator::new(h.clone()).unwrap()).unwrap();
        let direct = (&h * &rho - &rho * &h) * MINUS_I;
        assert!((l.apply(&rho) - direct).norm() < 1e-13);
    }

    #[test]
    fn reset_fixed_point_and_linearity() {
        let tau = thermal_qubit_state(1.0, 2.0).unwrap();
        let other = DensityMatrix::from_populations(&[0.1, 0.2, 0.7]).unwrap();
        let rho = DensityMatrix::product(&[&other, &tau]);
        let d = reset_dissipator(1, &tau, 0.3, &[3, 2]).unwrap();
        assert!(crate::state::max_abs(&d.apply(rho.matrix())) < 1e-16);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_hermitian(&mut rng, 6);
        let d2 = reset_dissipator(1, &tau, 0.6, &[3, 2]).unwrap();
        assert!((d2.apply(&x) - d.apply(&x).scale(2.0)).norm() < 1e-15);
    }

    #[test]
    fn reset_single_qubit_excited_decay() {
        let r = 0.2;
        let tau = DensityMatrix::from_populations(&[1.0 - r, r]).unwrap();
        let p = 0.7;
        let d = reset_dissipator(0, &tau, p, &[2]).unwrap();
        let excited = DensityMatrix::basis_state(2, 1).unwrap();
        let out = d.apply(excited.matrix());
        assert!((out[(1, 1)].re - p * (r - 1.0)).abs() < 1e-15);
        assert!((out[(0, 0)].re - p * (1.0 - r)).abs() < 1e-15);
    }

    #[test]
    fn reset_rejects_bad_arguments() {
        let tau = thermal_qubit_state(1.0, 1.0).unwrap();
        assert!(reset_dissipator(2, &tau, 0.1, &[2, 2]).is_err());
        assert!(reset_dissipator(0, &tau, 0.1, &[3, 2]).is_err());
        assert!(reset_dissipator(0, &tau, 0.0, &[2, 2]).is_err());
        let big = DensityMatrix::from_populations(&[0.5, 0.25, 0.25]).unwrap();
        assert!(reset_dissipator(0, &big, 0.1, &[2, 2]).is_err());
    }

    #[test]
    fn structured_and_dense_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let l = assemble_fridge_liouvillian(&fridge()).unwrap();
        let dense = l.superoperator().unwrap();
        let x = random_hermitian(&mut rng, 8);
        assert!((l.apply(&x) - dense.apply(&x)).norm() < 1e-14);

        let engine = EngineSpec::new(1.0, 0.5, [10.0, 5.0], [0.1, 0.2], 4, 1, 0.05).unwrap();
        let le = assemble_engine_liouvillian(&engine).unwrap();
        let dense = le.superoperator().unwrap();
        let x = random_hermitian(&mut rng, 16);
        assert!((le.apply(&x) - dense.apply(&x)).norm() < 1e-13);
        assert!(le.norm_bound() >= dense.spectral_norm());
    }

    #[test]
    fn sector_matches_structured_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let engine = EngineSpec::new(1.0, 0.5, [10.0, 5.0], [0.1, 0.2], 6, 2, 0.05).unwrap();
        for l in [assemble_fridge_liouvillian(&fridge()).unwrap(), assemble_engine_liouvillian(&engine).unwrap()] {
            let sector = l.zero_frequency_sector().unwrap();
            let frame = l.interaction_frame().unwrap();
            let d = l.dim();
            let mut x = CMatrix::zeros(d, d);
            for &(i, j) in sector.entries() {
                x[(i, j)] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let v = sector.compress(&x).unwrap();
            let mut out = vec![ZERO; v.len()];
            sector.apply_into(&v, &mut out);
            assert!((sector.expand(&out) - frame.apply(&x)).norm() < 1e-14);
            // free evolution vanishes inside the sector
            assert!((sector.expand(&out) - l.apply(&x)).norm() < 1e-12);
            assert!(sector.len() < d * d);
        }
        let l = assemble_fridge_liouvillian(&fridge()).unwrap();
        assert!(l.zero_frequency_sector().unwrap().compress(&CMatrix::from_element(8, 8, ONE)).is_none());
    }

    #[test]
    fn interaction_frame_reconstructs_lab_dynamics() {
        let l = assemble_fridge_liouvillian(&fridge()).unwrap();
        let frame = l.interaction_frame().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_hermitian(&mut rng, 8);
        // d/dt of U(t) ρ_I(t) U(t)† at t = 0 equals the lab generator
        let h = 1e-6;
        let mut ahead = x.clone();
        frame.to_lab_frame(h, &mut ahead);
        let mut behind = x.clone();
        frame.to_lab_frame(-h, &mut behind);
        let rotation = (ahead - behind).scale(0.5 / h);
        let total = rotation + frame.apply(&x);
        let err = (total - l.apply(&x)).norm();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn fridge_generator_invariants() {
        let l = assemble_fridge_liouvillian(&fridge()).unwrap();
        let dense = l.superoperator().unwrap();
        assert!(dense.trace_preservation_error() < 1e-12);
        assert!(l.norm_bound() >= dense.spectral_norm());

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_hermitian(&mut rng, 8);
        let b = random_hermitian(&mut rng, 8);
        let la = l.apply(&a);
        // Hermiticity preservation
        assert!(crate::state::hermiticity_error(&la) < 1e-12);
        // linearity
        let combo = a.scale(0.3) + b.scale(-1.7);
        let lhs = l.apply(&combo);
        let rhs = la.scale(0.3) + l.apply(&b).scale(-1.7);
        assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn uncoupled_and_equilibrium_fixed_points() {
        let uncoupled = FridgeSpec::new_relaxed(1.0, 1.0, [10.0, 5.0, 4.0], [1e-3; 3], 0.0).unwrap();
        let l = assemble_fridge_liouvillian(&uncoupled).unwrap();
        let rho = uncoupled.thermal_product();
        assert!(crate::state::max_abs(&l.apply(rho.matrix())) < 1e-12);

        let equal = FridgeSpec::new_relaxed(1.0, 2.0, [3.0; 3], [1e-3, 2e-3, 5e-3], 0.05).unwrap();
        let l = assemble_fridge_liouvillian(&equal).unwrap();
        assert!(crate::state::max_abs(&l.apply(equal.thermal_product().matrix())) < 1e-12);
        assert_eq!(l.dissipative_fixed_point().unwrap(), equal.thermal_product());
    }

    #[test]
    fn engine_has_no_dissipative_fixed_point() {
        let engine = EngineSpec::new(1.0, 0.5, [10.0, 5.0], [0.1, 0.2], 4, 1, 0.05).unwrap();
        let l = assemble_engine_liouvillian(&engine).unwrap();
        assert!(l.dissipative_fixed_point().is_none());
        assert!(l.superoperator().unwrap().trace_preservation_error() < 1e-12);
    }
}
