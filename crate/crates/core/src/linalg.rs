//! Dense complex matrix kernel.
//!
//! Basis ordering is big-endian: qubit 1 is the most significant bit of a
//! computational-basis index, so `|x₁x₂…x_N⟩` maps to the integer whose binary
//! expansion reads `x₁x₂…x_N` left to right.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerance;

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// `|i⟩⟨j|` in dimension `dim`.
pub fn basis_op(dim: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(i, j)] = ONE;
    m
}

/// `|ψ⟩⟨ψ|` for an (unnormalized) ket.
pub fn outer(ket: &[Complex64]) -> CMatrix {
    let d = ket.len();
    CMatrix::from_fn(d, d, |i, j| ket[i] * ket[j].conj())
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Left-to-right Kronecker product of a list of factors.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    factors
        .into_iter()
        .fold(CMatrix::identity(1, 1), |acc, f| acc.kronecker(f))
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// `max |A − A†|`.
pub fn max_asymmetry(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(a: &CMatrix) -> bool {
    a.is_square() && max_asymmetry(a) <= tolerance::HERMITICITY * max_abs(a).max(f64::MIN_POSITIVE)
}

fn check_hermitian(a: &CMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    if !is_hermitian(a) {
        return Err(Error::NotHermitian {
            asymmetry: max_asymmetry(a),
        });
    }
    Ok(())
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm()
}

/// Real eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Result<Vec<f64>> {
    check_hermitian(h)?;
    let mut values: Vec<f64> = SymmetricEigen::new(h.clone()).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Hermitian eigendecomposition `h = V diag(values) V†` with ascending values.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> CMatrix {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&v| c(v, 0.0)),
        ));
        &self.vectors * d * self.vectors.adjoint()
    }
}

pub fn hermitian_eigen(h: &CMatrix) -> Result<HermitianEigen> {
    check_hermitian(h)?;
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(h.nrows(), order.len(), |i, k| eig.eigenvectors[(i, order[k])]);
    Ok(HermitianEigen { values, vectors })
}

/// Party `M` of a bipartition `M|M̄`, stored canonically so that it contains qubit 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BipartitionMask {
    n_qubits: usize,
    bits: u32,
}

impl BipartitionMask {
    /// Builds a mask from raw index bits (qubit `q` is bit `n − q`).
    pub fn new(n_qubits: usize, bits: u32) -> Result<Self> {
        if !(2..=16).contains(&n_qubits) {
            return Err(Error::InvalidMask { mask: bits, n_qubits });
        }
        let full = (1u32 << n_qubits) - 1;
        if bits == 0 || bits & !full != 0 || bits == full {
            return Err(Error::InvalidMask { mask: bits, n_qubits });
        }
        let top = 1u32 << (n_qubits - 1);
        let bits = if bits & top == 0 { full & !bits } else { bits };
        Ok(Self { n_qubits, bits })
    }

    /// Builds a mask from 1-based qubit labels.
    pub fn from_qubits(n_qubits: usize, qubits: &[usize]) -> Result<Self> {
        let mut bits = 0u32;
        for &q in qubits {
            if q == 0 || q > n_qubits {
                return Err(Error::InvalidMask { mask: bits, n_qubits });
            }
            bits |= 1 << (n_qubits - q);
        }
        Self::new(n_qubits, bits)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn contains(&self, qubit: usize) -> bool {
        qubit >= 1 && qubit <= self.n_qubits && self.bits & (1 << (self.n_qubits - qubit)) != 0
    }

    /// Label such as `AB|CD`.
    pub fn label(&self) -> String {
        let letters: Vec<char> = (0..self.n_qubits).map(|k| (b'A' + k as u8) as char).collect();
        let (inside, outside): (String, String) = (
            (1..=self.n_qubits).filter(|&q| self.contains(q)).map(|q| letters[q - 1]).collect(),
            (1..=self.n_qubits).filter(|&q| !self.contains(q)).map(|q| letters[q - 1]).collect(),
        );
        format!("{inside}|{outside}")
    }
}

/// The `2^{n−1} − 1` distinct bipartitions in ascending mask order.
pub fn all_bipartitions(n_qubits: usize) -> Vec<BipartitionMask> {
    if n_qubits < 2 {
        return Vec::new();
    }
    let top = 1u32 << (n_qubits - 1);
    (top..(1u32 << n_qubits) - 1)
        .map(|bits| BipartitionMask { n_qubits, bits })
        .collect()
}

/// Transposes the tensor indices of the qubits in `mask`. Exact involution.
pub fn partial_transpose_op(m: &CMatrix, mask: &BipartitionMask) -> Result<CMatrix> {
    let dim = 1usize << mask.n_qubits;
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: m.nrows(),
        });
    }
    let bits = mask.bits as usize;
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        let (ii, jj) = pt_index(i, j, bits);
        m[(ii, jj)]
    }))
}

#[inline]
pub(crate) fn pt_index(i: usize, j: usize, bits: usize) -> (usize, usize) {
    ((i & !bits) | (j & bits), (j & !bits) | (i & bits))
}

pub fn partial_transpose(rho: &DensityMatrix, mask: &BipartitionMask) -> Result<CMatrix> {
    if mask.n_qubits != rho.n_qubits {
        return Err(Error::MaskMismatch {
            mask: mask.n_qubits,
            state: rho.n_qubits,
        });
    }
    partial_transpose_op(&rho.matrix, mask)
}

/// Hermitian, unit-trace, positive semidefinite operator on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates hermiticity, trace and positivity.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(matrix)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Checks only the dimension. Used for outputs of trace- and
    /// positivity-preserving maps whose invariants are covered by tests.
    pub fn from_matrix_unchecked(matrix: CMatrix) -> Result<Self> {
        let dim = matrix.nrows();
        if !matrix.is_square() || !dim.is_power_of_two() || dim < 2 {
            return Err(Error::InvalidState(format!(
                "shape {}x{} is not a qubit register",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            matrix,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !is_hermitian(&self.matrix) {
            return Err(Error::InvalidState(format!(
                "not Hermitian (asymmetry {:e})",
                max_asymmetry(&self.matrix)
            )));
        }
        let tr = trace(&self.matrix);
        if (tr.re - 1.0).abs() > tolerance::TRACE || tr.im.abs() > tolerance::TRACE {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = self.min_eigenvalue();
        if min < -tolerance::PSD_SLACK {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// Pure state from a ket; the ket is normalized here.
    pub fn from_ket(ket: &[Complex64]) -> Result<Self> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite ket".into()));
        }
        let unit: Vec<Complex64> = ket.iter().map(|z| z / norm).collect();
        Self::from_matrix_unchecked(outer(&unit))
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        Self {
            n_qubits,
            matrix: identity(d) / c(d as f64, 0.0),
        }
    }

    /// Convex combination `Σ w_k ρ_k`; weights must be nonnegative and sum to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidState("empty mixture".into()))?;
        let dim = first.1.dim();
        let mut total = 0.0;
        let mut acc = CMatrix::zeros(dim, dim);
        for (w, rho) in parts {
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: rho.dim(),
                });
            }
            if *w < 0.0 || !w.is_finite() {
                return Err(Error::InvalidState(format!("negative mixture weight {w}")));
            }
            total += w;
            acc += &rho.matrix * c(*w, 0.0);
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState(format!("mixture weights sum to {total}")));
        }
        Self::from_matrix_unchecked(acc)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
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
        trace(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        trace_product(&self.matrix, &self.matrix).re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        // Hermiticity is an invariant of every constructor path.
        let mut values: Vec<f64> = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        values.sort_by(f64::total_cmp);
        values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// True when every entry is real to machine precision.
    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|z| z.im == 0.0)
    }

    /// `U ρ U†` for a unitary on the full register.
    pub fn conjugate_by(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.nrows(),
            });
        }
        Self::from_matrix_unchecked(u * &self.matrix * u.adjoint())
    }

    pub fn frobenius_distance(&self, other: &DensityMatrix) -> f64 {
        frobenius_distance(&self.matrix, &other.matrix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ket01(bits: &[usize], dim: usize) -> Vec<Complex64> {
        let mut v = vec![ZERO; dim];
        for &b in bits {
            v[b] = ONE;
        }
        v
    }

    #[test]
    fn kron_identity_and_pauli() {
        assert_eq!(kron(&identity(2), &identity(2)), identity(4));
        let zz = kron(&pauli_z(), &pauli_z());
        let expected = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, -ONE, -ONE, ONE]));
        assert_eq!(zz, expected);
    }

    #[test]
    fn kron_of_projectors_is_basis_projector() {
        let p0 = basis_op(2, 0, 0);
        let p1 = basis_op(2, 1, 1);
        assert_eq!(kron(&p0, &p1), basis_op(4, 1, 1));
    }

    #[test]
    fn pauli_spectra() {
        for p in [pauli_x(), pauli_z(), pauli_y()] {
            let ev = hermitian_eigenvalues(&p).unwrap();
            assert_abs_diff_eq!(ev[0], -1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(ev[1], 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn eigen_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[ONE, ONE, ZERO, ONE]);
        assert!(matches!(hermitian_eigenvalues(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn eigen_reconstruction() {
        let h = CMatrix::from_row_slice(3, 3, &[
            c(2.0, 0.0), c(0.5, 0.3), c(0.0, -1.0),
            c(0.5, -0.3), c(-1.0, 0.0), c(0.25, 0.0),
            c(0.0, 1.0), c(0.25, 0.0), c(0.5, 0.0),
        ]);
        let eig = hermitian_eigen(&h).unwrap();
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        assert!((eig.reconstruct() - &h).norm() <= 1e-10 * h.norm());
    }

    #[test]
    fn bipartition_counts_and_order() {
        assert_eq!(all_bipartitions(2).len(), 1);
        let three = all_bipartitions(3);
        let labels: Vec<String> = three.iter().map(|m| m.label()).collect();
        assert_eq!(labels, ["A|BC", "AC|B", "AB|C"]);
        assert_eq!(all_bipartitions(4).len(), 7);
    }

    #[test]
    fn mask_canonicalization() {
        let b = BipartitionMask::from_qubits(3, &[2]).unwrap();
        assert_eq!(b, BipartitionMask::from_qubits(3, &[1, 3]).unwrap());
        assert!(b.contains(1));
        assert!(BipartitionMask::new(3, 0).is_err());
        assert!(BipartitionMask::new(3, 0b111).is_err());
        assert!(BipartitionMask::new(3, 0b1000).is_err());
    }

    #[test]
    fn partial_transpose_of_maximally_mixed() {
        let rho = DensityMatrix::maximally_mixed(2);
        let m = BipartitionMask::from_qubits(2, &[1]).unwrap();
        assert_eq!(partial_transpose(&rho, &m).unwrap(), *rho.matrix());
    }

    #[test]
    fn partial_transpose_of_phi_plus() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut ket = ket01(&[0, 3], 4);
        ket.iter_mut().for_each(|z| *z *= s);
        let rho = DensityMatrix::from_ket(&ket).unwrap();
        let m = BipartitionMask::from_qubits(2, &[1]).unwrap();
        let pt = partial_transpose(&rho, &m).unwrap();
        let ev = hermitian_eigenvalues(&pt).unwrap();
        assert_abs_diff_eq!(ev[0], -0.5, epsilon = 1e-14);
        assert_eq!(partial_transpose_op(&pt, &m).unwrap(), *rho.matrix());
    }

    #[test]
    fn partial_transpose_mask_mismatch() {
        let rho = DensityMatrix::maximally_mixed(3);
        let m = BipartitionMask::from_qubits(2, &[1]).unwrap();
        assert!(matches!(partial_transpose(&rho, &m), Err(Error::MaskMismatch { .. })));
    }

    #[test]
    fn density_validation() {
        let bad = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.5, 0.0), c(-0.5, 0.0)]));
        assert!(DensityMatrix::new(bad).is_err());
        let unnormalized = identity(2);
        assert!(DensityMatrix::new(unnormalized).is_err());
        assert!(DensityMatrix::new(identity(2) * c(0.5, 0.0)).is_ok());
    }
}
