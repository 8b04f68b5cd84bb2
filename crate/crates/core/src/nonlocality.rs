//! Ardehali Bell operator and genuine multipartite nonlocality.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, DensityMatrix};
use crate::tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Observable {
    X,
    Y,
    /// `(X + Y)/√2`
    A,
    /// `(X − Y)/√2`
    B,
    I,
}

impl Observable {
    pub fn matrix(self) -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Observable::X => linalg::pauli_x(),
            Observable::Y => linalg::pauli_y(),
            Observable::A => (linalg::pauli_x() + linalg::pauli_y()) * c(s, 0.0),
            Observable::B => (linalg::pauli_x() - linalg::pauli_y()) * c(s, 0.0),
            Observable::I => linalg::identity(2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BellTerm {
    pub coefficient: f64,
    pub factors: Vec<Observable>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BellOperator {
    n_qubits: usize,
    terms: Vec<BellTerm>,
}

impl BellOperator {
    pub fn new(n_qubits: usize, terms: Vec<BellTerm>) -> Result<Self> {
        if let Some(t) = terms.iter().find(|t| t.factors.len() != n_qubits) {
            return Err(Error::DimensionMismatch {
                expected: n_qubits,
                found: t.factors.len(),
            });
        }
        Ok(Self { n_qubits, terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[BellTerm] {
        &self.terms
    }

    pub fn materialize(&self) -> CMatrix {
        let dim = 1 << self.n_qubits;
        let mut out = CMatrix::zeros(dim, dim);
        for term in &self.terms {
            let factors: Vec<CMatrix> = term.factors.iter().map(|o| o.matrix()).collect();
            out += linalg::kron_all(&factors) * c(term.coefficient, 0.0);
        }
        out
    }
}

/// Distinct orderings of a multiset, in lexicographic order.
fn distinct_permutations(items: &[Observable]) -> Vec<Vec<Observable>> {
    fn go(rest: &mut Vec<Observable>, prefix: &mut Vec<Observable>, out: &mut Vec<Vec<Observable>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        let mut seen = Vec::new();
        for k in 0..rest.len() {
            if seen.contains(&rest[k]) {
                continue;
            }
            seen.push(rest[k]);
            let item = rest.remove(k);
            prefix.push(item);
            go(rest, prefix, out);
            prefix.pop();
            rest.insert(k, item);
        }
    }
    let mut rest = items.to_vec();
    rest.sort();
    let mut out = Vec::new();
    go(&mut rest, &mut Vec::new(), &mut out);
    out
}

/// Four-qubit Ardehali operator: classical bound 4, quantum maximum 8√2 on
/// `(|0000⟩ + |1111⟩)/√2`.
pub fn ardehali_operator() -> BellOperator {
    use Observable::{A, B, X, Y};
    let groups: [(f64, Observable, [Observable; 3]); 8] = [
        (1.0, A, [X, X, X]),
        (1.0, B, [X, X, X]),
        (-1.0, A, [X, Y, Y]),
        (-1.0, B, [X, Y, Y]),
        (-1.0, A, [X, X, Y]),
        (1.0, B, [X, X, Y]),
        (1.0, A, [Y, Y, Y]),
        (-1.0, B, [Y, Y, Y]),
    ];
    let mut terms = Vec::new();
    for (coefficient, first, rest) in groups {
        for perm in distinct_permutations(&rest) {
            let mut factors = vec![first];
            factors.extend(perm);
            terms.push(BellTerm { coefficient, factors });
        }
    }
    BellOperator::new(4, terms).expect("all terms have four factors")
}

/// `(U₁ ⊗ … ⊗ U_n) B (U₁ ⊗ … ⊗ U_n)†`, so that expectations on transformed
/// states match expectations of `B` on the originals.
pub fn transport_settings(op: &BellOperator, local_unitaries: &[CMatrix]) -> Result<CMatrix> {
    if local_unitaries.len() != op.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: op.n_qubits(),
            found: local_unitaries.len(),
        });
    }
    for (k, u) in local_unitaries.iter().enumerate() {
        if u.shape() != (2, 2) {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: u.nrows(),
            });
        }
        let deviation = linalg::max_abs(&(u * u.adjoint() - linalg::identity(2)));
        if deviation > tolerance::UNITARITY {
            return Err(Error::NotUnitary { qubit: k + 1, deviation });
        }
    }
    let u = linalg::kron_all(local_unitaries);
    Ok(&u * op.materialize() * u.adjoint())
}

/// `I ⊗ X ⊗ I ⊗ X`, carrying `|0000⟩ + |1111⟩` to `|0101⟩ + |1010⟩`.
pub fn ghz6_transport() -> Vec<CMatrix> {
    vec![linalg::identity(2), linalg::pauli_x(), linalg::identity(2), linalg::pauli_x()]
}

/// The Ardehali operator with settings adapted to `(|0101⟩ + |1010⟩)/√2`.
pub fn ghz6_operator() -> CMatrix {
    transport_settings(&ardehali_operator(), &ghz6_transport()).expect("Pauli X is unitary")
}

/// `Tr(ρ B)`.
pub fn bell_expectation(rho: &DensityMatrix, op: &CMatrix) -> Result<f64> {
    if op.shape() != (rho.dim(), rho.dim()) {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: op.nrows(),
        });
    }
    if !linalg::is_hermitian(op) {
        return Err(Error::NotHermitian {
            asymmetry: linalg::max_asymmetry(op),
        });
    }
    let value = linalg::trace_product(rho.matrix(), op);
    if value.im.abs() > tolerance::EXPECTATION_IMAG {
        return Err(Error::NotHermitian { asymmetry: value.im.abs() });
    }
    Ok(value.re)
}

/// `|⟨B⟩| > 2^{n−1}`.
pub fn genuine_nonlocality_test(value: f64, n_qubits: usize) -> bool {
    value.abs() > (1u64 << (n_qubits - 1)) as f64
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange { name, value })
    }
}

/// Smallest `β` for which `ρ_{α,β}(0)` violates the genuine-nonlocality bound.
pub fn nonlocality_threshold_beta(alpha: f64) -> Result<f64> {
    check_unit("alpha", alpha)?;
    Ok((4.0 * SQRT_2 + alpha) / (8.0 + alpha))
}

/// Closed-form `⟨B_A⟩(t) = (16β − α(1−β)(9 − 7e^{−2t}))/√2` for `ρ_{α,β}(t)`.
pub fn analytic_bell_expectation(alpha: f64, beta: f64, t: f64) -> Result<f64> {
    check_unit("alpha", alpha)?;
    check_unit("beta", beta)?;
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    Ok((16.0 * beta - alpha * (1.0 - beta) * (9.0 - 7.0 * (-2.0 * t).exp())) / SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SuddenDeath {
    Never,
    Immediate,
    At(f64),
}

pub const SUDDEN_DEATH_HORIZON: f64 = 50.0;
const ROOT_TOLERANCE: f64 = 1e-6;

/// First time the closed-form expectation drops to the four-qubit bound 8.
pub fn sudden_death_time(alpha: f64, beta: f64) -> Result<SuddenDeath> {
    let bound = 8.0;
    let f = |t: f64| analytic_bell_expectation(alpha, beta, t).map(|v| v - bound);
    if f(0.0)? <= 0.0 {
        return Ok(SuddenDeath::Immediate);
    }
    if f(SUDDEN_DEATH_HORIZON)? > 0.0 {
        return Ok(SuddenDeath::Never);
    }
    let (mut lo, mut hi) = (0.0, SUDDEN_DEATH_HORIZON);
    while hi - lo > ROOT_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(SuddenDeath::At(0.5 * (lo + hi)))
}
