#![allow(dead_code)]

use num_complex::Complex64;
use qdephase::linalg::{CMatrix, DensityMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    let g = gaussian_matrix(rng, dim, dim);
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Full-rank random density matrix (Ginibre ensemble).
pub fn random_density(rng: &mut ChaCha8Rng, n_qubits: usize) -> DensityMatrix {
    let d = 1 << n_qubits;
    let g = gaussian_matrix(rng, d, d);
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr).unwrap()
}

pub fn random_unitary(rng: &mut ChaCha8Rng) -> CMatrix {
    let g = gaussian_matrix(rng, 2, 2);
    let qr = g.qr();
    qr.q()
}

pub fn local_unitary(rng: &mut ChaCha8Rng, n_qubits: usize) -> (Vec<CMatrix>, CMatrix) {
    let us: Vec<CMatrix> = (0..n_qubits).map(|_| random_unitary(rng)).collect();
    let full = qdephase::linalg::kron_all(&us);
    (us, full)
}
