//! Dense operators, density matrices and tensor-product bookkeeping.
//!
//! Composite systems use the product basis with the first factor most
//! significant: for dimensions `[d0, d1, d2]` the basis index of
//! `|a b c⟩` is `a·d1·d2 + b·d2 + c`. The ground state of every factor is
//! index 0.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerances;

pub type CMatrix = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest elementwise deviation `max |M - M†|`.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(M + M†) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut values: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Trace norm of a Hermitian matrix divided by two.
pub fn half_trace_norm(m: &CMatrix) -> f64 {
    0.5 * hermitian_eigenvalues(m).iter().map(|v| v.abs()).sum::<f64>()
}

/// Subsystem dimensions of a tensor-product space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    dims: Vec<usize>,
}

impl Layout {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::domain(format!("invalid subsystem dimensions {dims:?}")));
        }
        Ok(Self { dims: dims.to_vec() })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Product of the dimensions after `index`.
    pub fn stride(&self, index: usize) -> usize {
        self.dims[index + 1..].iter().product()
    }

    /// Digit of subsystem `index` in the product-basis index `basis`.
    pub fn digit(&self, basis: usize, index: usize) -> usize {
        (basis / self.stride(index)) % self.dims[index]
    }

    /// Reduced state of a single subsystem.
    pub fn reduce(&self, rho: &CMatrix, index: usize) -> Result<CMatrix> {
        self.check(rho, index)?;
        let d = self.dims[index];
        let mut out = CMatrix::zeros(d, d);
        let n = self.total();
        for j in 0..n {
            let bj = self.digit(j, index);
            let rest_j = j - bj * self.stride(index);
            for bi in 0..d {
                let i = rest_j + bi * self.stride(index);
                out[(bi, bj)] += rho[(i, j)];
            }
        }
        Ok(out)
    }

    /// Excited-state population of a two-level subsystem.
    pub fn excited_population(&self, rho: &CMatrix, index: usize) -> Result<f64> {
        if self.dims.get(index) != Some(&2) {
            return Err(Error::domain(format!("subsystem {index} is not a qubit")));
        }
        let stride = self.stride(index);
        Ok((0..self.total())
            .filter(|&i| (i / stride) % 2 == 1)
            .map(|i| rho[(i, i)].re)
            .sum())
    }

    /// Partial trace over subsystem `index`; the result lives on the remaining factors.
    pub fn trace_out(&self, rho: &CMatrix, index: usize) -> Result<CMatrix> {
        self.check(rho, index)?;
        let d = self.dims[index];
        let stride = self.stride(index);
        let outer = self.total() / (d * stride);
        let m = outer * stride;
        let mut out = CMatrix::zeros(m, m);
        for hj in 0..outer {
            for lj in 0..stride {
                for hi in 0..outer {
                    for li in 0..stride {
                        let mut acc = ZERO;
                        for b in 0..d {
                            acc += rho[(hi * d * stride + b * stride + li, hj * d * stride + b * stride + lj)];
                        }
                        out[(hi * stride + li, hj * stride + lj)] = acc;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Inserts `factor` into slot `index` of an operator on the remaining factors.
    pub fn insert(&self, rest: &CMatrix, factor: &CMatrix, index: usize) -> Result<CMatrix> {
        let d = self.dims[index];
        let stride = self.stride(index);
        let outer = self.total() / (d * stride);
        if factor.shape() != (d, d) || rest.shape() != (outer * stride, outer * stride) {
            return Err(Error::domain("dimension mismatch in tensor insertion"));
        }
        let n = self.total();
        let mut out = CMatrix::zeros(n, n);
        for j in 0..n {
            let (hj, bj, lj) = (j / (d * stride), (j / stride) % d, j % stride);
            for i in 0..n {
                let (hi, bi, li) = (i / (d * stride), (i / stride) % d, i % stride);
                out[(i, j)] = factor[(bi, bj)] * rest[(hi * stride + li, hj * stride + lj)];
            }
        }
        Ok(out)
    }

    fn check(&self, rho: &CMatrix, index: usize) -> Result<()> {
        if index >= self.dims.len() {
            return Err(Error::domain(format!(
                "subsystem index {index} out of range for {} subsystems",
                self.dims.len()
            )));
        }
        let n = self.total();
        if rho.shape() != (n, n) {
            return Err(Error::domain(format!(
                "operator shape {:?} does not match layout {:?}",
                rho.shape(),
                self.dims
            )));
        }
        Ok(())
    }
}

/// A dense square complex matrix, typically a Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    matrix: CMatrix,
}

impl Operator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::domain(format!("operator must be square, got {:?}", matrix.shape())));
        }
        Ok(Self { matrix })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { matrix: CMatrix::zeros(dim, dim) }
    }

    pub fn from_diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self {
            matrix: CMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(values[i], 0.0) } else { ZERO }),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    /// Real parts of the diagonal.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.matrix)
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        Operator {
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        }
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    /// Off-diagonal entries with nonzero value, as `(row, col, value)`.
    pub fn off_diagonal_entries(&self) -> Vec<(usize, usize, Complex64)> {
        let n = self.dim();
        let mut out = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if i != j && self.matrix[(i, j)] != ZERO {
                    out.push((i, j, self.matrix[(i, j)]));
                }
            }
        }
        out
    }

    pub fn count_nonzero(&self) -> usize {
        self.matrix.iter().filter(|z| **z != ZERO).count()
    }
}

impl std::ops::Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        Operator { matrix: &self.matrix + &rhs.matrix }
    }
}

/// Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates against the default state tolerances.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerances(
            matrix,
            tolerances::STATE_HERMITIAN,
            tolerances::STATE_TRACE,
            tolerances::STATE_PSD,
        )
    }

    pub fn with_tolerances(matrix: CMatrix, hermitian: f64, trace: f64, psd: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::domain(format!("density matrix must be square, got {:?}", matrix.shape())));
        }
        let herm = hermiticity_error(&matrix);
        if herm > hermitian {
            return Err(Error::numerical(format!("density matrix not Hermitian: deviation {herm:e}")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > trace || tr.im.abs() > trace {
            return Err(Error::numerical(format!("density matrix trace {tr} differs from 1")));
        }
        let min_eig = hermitian_eigenvalues(&matrix)[0];
        if min_eig < psd {
            return Err(Error::numerical(format!(
                "density matrix not positive semidefinite: eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self { matrix })
    }

    pub(crate) fn from_raw(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    /// Pure state `|k⟩⟨k|` of a `dim`-level system.
    pub fn basis_state(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::domain(format!("basis index {k} out of range for dimension {dim}")));
        }
        let mut m = CMatrix::zeros(dim, dim);
        m[(k, k)] = ONE;
        Ok(Self { matrix: m })
    }

    /// Diagonal state with the given populations.
    pub fn from_populations(populations: &[f64]) -> Result<Self> {
        Self::new(Operator::from_diagonal(populations).into_matrix())
    }

    /// Tensor product in the given order.
    pub fn product(factors: &[&DensityMatrix]) -> Self {
        let mut acc = CMatrix::from_element(1, 1, ONE);
        for f in factors {
            acc = kron(&acc, &f.matrix);
        }
        Self { matrix: acc }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.matrix)[0]
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.matrix)
    }

    /// `½‖ρ - σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        half_trace_norm(&(&self.matrix - &other.matrix))
    }

    /// Reduced state of one subsystem.
    pub fn reduced(&self, layout: &Layout, index: usize) -> Result<DensityMatrix> {
        Ok(Self { matrix: layout.reduce(&self.matrix, index)? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn product_basis_ordering_is_big_endian() {
        let layout = Layout::new(&[2, 2, 2]).unwrap();
        // |101⟩ = 5
        assert_eq!(layout.digit(5, 0), 1);
        assert_eq!(layout.digit(5, 1), 0);
        assert_eq!(layout.digit(5, 2), 1);
        let layout = Layout::new(&[2, 2, 5]).unwrap();
        // |1,0,3⟩ = 1·10 + 0·5 + 3
        assert_eq!(layout.digit(13, 0), 1);
        assert_eq!(layout.digit(13, 2), 3);
    }

    #[test]
    fn partial_trace_of_product_recovers_factors() {
        let a = DensityMatrix::from_populations(&[0.7, 0.3]).unwrap();
        let b = DensityMatrix::new(CMatrix::from_row_slice(2, 2, &[c(0.6, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.4, 0.0)])).unwrap();
        let w = DensityMatrix::from_populations(&[0.2, 0.5, 0.3]).unwrap();
        let rho = DensityMatrix::product(&[&a, &b, &w]);
        let layout = Layout::new(&[2, 2, 3]).unwrap();
        assert!((layout.reduce(rho.matrix(), 0).unwrap() - a.matrix()).norm() < 1e-15);
        assert!((layout.reduce(rho.matrix(), 1).unwrap() - b.matrix()).norm() < 1e-15);
        assert!((layout.reduce(rho.matrix(), 2).unwrap() - w.matrix()).norm() < 1e-15);

        let rest = layout.trace_out(rho.matrix(), 1).unwrap();
        let expected = kron(a.matrix(), w.matrix());
        assert!((rest.clone() - expected).norm() < 1e-15);
        let back = layout.insert(&rest, b.matrix(), 1).unwrap();
        assert!((back - rho.matrix()).norm() < 1e-15);
        assert!((layout.excited_population(rho.matrix(), 1).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::from_populations(&[0.5, 0.6]).is_err());
        assert!(DensityMatrix::from_populations(&[1.2, -0.2]).is_err());
        let non_herm = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.2, 0.0), c(0.5, 0.0)]);
        assert!(DensityMatrix::new(non_herm).is_err());
        assert!(DensityMatrix::basis_state(3, 3).is_err());
    }

    #[test]
    fn trace_distance_of_orthogonal_states_is_one() {
        let a = DensityMatrix::basis_state(2, 0).unwrap();
        let b = DensityMatrix::basis_state(2, 1).unwrap();
        assert!((a.trace_distance(&b) - 1.0).abs() < 1e-15);
        assert_eq!(a.trace_distance(&a), 0.0);
    }

    #[test]
    fn layout_rejects_bad_index() {
        let layout = Layout::new(&[2, 2]).unwrap();
        let rho = CMatrix::identity(4, 4);
        assert!(layout.reduce(&rho, 2).is_err());
        assert!(layout.reduce(&CMatrix::identity(3, 3), 0).is_err());
    }
}
