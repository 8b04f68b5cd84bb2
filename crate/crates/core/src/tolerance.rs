//! Numerical tolerances shared by every module.
//!
//! Property tests and runtime validation read from here so that a single
//! edit retunes the whole crate.

/// Maximum `|A - A†|` relative to `max |A|` for a matrix to count as Hermitian.
pub const HERMITICITY: f64 = 1e-12;

/// Slack below zero tolerated on the smallest eigenvalue of a density matrix.
pub const PSD_SLACK: f64 = 1e-9;

/// Allowed deviation of a density-matrix trace from one.
pub const TRACE: f64 = 1e-10;

/// Norm deviation tolerated for a field orientation.
pub const UNIT_VECTOR: f64 = 1e-12;

/// Slack on the smallest eigenvalue of a Toeplitz dephasing matrix.
pub const TOEPLITZ_PSD: f64 = 1e-10;

/// Frobenius distance under which an evolved state counts as unchanged.
pub const DFS_STATE_CHANGE: f64 = 1e-9;

/// Default SDP duality-gap tolerance.
pub const SDP_GAP: f64 = 1e-7;

/// Default SDP feasibility (max elementwise residual) tolerance.
pub const SDP_FEASIBILITY: f64 = 1e-8;

/// Witness decomposition residual `‖W − (P + Qᵀᴹ)‖` accepted by the certificate check.
pub const WITNESS_DECOMPOSITION: f64 = 1e-7;

/// Slack on the `[0, 1]` eigenvalue window of the witness operators.
pub const WITNESS_SPECTRUM: f64 = 1e-8;

/// Default tolerance on `max_t |E(t) − E(0)|` for a time-invariance verdict.
pub const INVARIANCE: f64 = 1e-5;

/// Minimum state change for an invariant trajectory to count as nontrivial.
pub const NONTRIVIAL_STATE_CHANGE: f64 = 1e-6;

/// Largest quantum value of a genuine-negativity monotone on qubits, plus solver slack.
pub const MONOTONE_BOUND: f64 = 0.5 + 1e-7;

/// Largest residual imaginary part discarded from an expectation value.
pub const EXPECTATION_IMAG: f64 = 1e-10;

/// Unitarity check `‖U U† − I‖_max`.
pub const UNITARITY: f64 = 1e-10;
