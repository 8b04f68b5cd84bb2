//! Bipartite negativity and the genuine multipartite negativity.
//!
//! The genuine negativity is `E(ρ) = max(0, −min Tr(Wρ))` where the minimum
//! runs over fully decomposable witnesses: for every bipartition `M|M̄`,
//! `W = P_M + Q_M^{T_M}` with `0 ⪯ P_M ⪯ I` and `0 ⪯ Q_M ⪯ I`. For qubits
//! `E ≤ 1/2`. On two qubits it equals half the (doubled) negativity below.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;

use crate::channel::DephasingChannel;
use crate::error::{Error, Result};
use crate::linalg::{self, all_bipartitions, pt_index, BipartitionMask, CMatrix, DensityMatrix, ONE, ZERO};
use crate::parallel::{par_map, Execution};
use crate::sdp::{self, embed_entry, SdpDiagnostics, SdpOptions, SdpProblem, SdpStatus, SymEntry};
use crate::states::{evolved_family, ghz_enumeration, ghz_state, w_state, FamilyParams, GhzSpec, Sign};
use crate::tolerance;

/// `N = 2 Σ |λ⁻(ρ^{T_M})|`, so a Bell state scores 1.
pub fn negativity(rho: &DensityMatrix, mask: &BipartitionMask) -> Result<f64> {
    let pt = linalg::partial_transpose(rho, mask)?;
    let ev = linalg::hermitian_eigenvalues(&pt)?;
    Ok(2.0 * ev.iter().filter(|&&v| v < 0.0).map(|v| -v).sum::<f64>())
}

/// Negativity across every canonical bipartition, in `all_bipartitions` order.
pub fn negativities(rho: &DensityMatrix) -> Result<Vec<(BipartitionMask, f64)>> {
    all_bipartitions(rho.n_qubits())
        .into_iter()
        .map(|m| negativity(rho, &m).map(|n| (m, n)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum WitnessField {
    /// Real symmetric witnesses when the state is real, complex otherwise.
    #[default]
    Auto,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GenuineNegativityOptions {
    pub sdp: SdpOptions,
    pub field: WitnessField,
}

#[derive(Debug, Clone)]
pub struct BipartiteDecomposition {
    pub mask: BipartitionMask,
    pub p: CMatrix,
    pub q: CMatrix,
}

#[derive(Debug, Clone)]
pub struct GenuineNegativityResult {
    pub value: f64,
    /// `Tr(Wρ)` at the optimum; negative iff entanglement is detected.
    pub witness_expectation: f64,
    pub witness: CMatrix,
    pub decompositions: Vec<BipartiteDecomposition>,
    pub diagnostics: SdpDiagnostics,
    pub real_witness: bool,
}

/// Coordinates of a Hermitian `d × d` matrix.
#[derive(Debug, Clone, Copy)]
enum Basis {
    Diagonal(usize),
    /// `E_kl + E_lk`.
    Symmetric(usize, usize),
    /// `−i E_kl + i E_lk`.
    Antisymmetric(usize, usize),
}

impl Basis {
    fn all(d: usize, real: bool) -> Vec<Basis> {
        let mut out: Vec<Basis> = (0..d).map(Basis::Diagonal).collect();
        for k in 0..d {
            for l in k + 1..d {
                out.push(Basis::Symmetric(k, l));
                if !real {
                    out.push(Basis::Antisymmetric(k, l));
                }
            }
        }
        out
    }

    /// The upper-triangle-ish generating entry `(k, l, value)`; the rest is its Hermitian mirror.
    fn entry(self) -> (usize, usize, Complex64) {
        match self {
            Basis::Diagonal(k) => (k, k, ONE),
            Basis::Symmetric(k, l) => (k, l, ONE),
            Basis::Antisymmetric(k, l) => (k, l, Complex64::new(0.0, -1.0)),
        }
    }

    /// `Tr(E ρ)`.
    fn expectation(self, rho: &CMatrix) -> f64 {
        match self {
            Basis::Diagonal(k) => rho[(k, k)].re,
            Basis::Symmetric(k, l) => 2.0 * rho[(k, l)].re,
            Basis::Antisymmetric(k, l) => -2.0 * rho[(k, l)].im,
        }
    }

    fn accumulate(self, out: &mut CMatrix, weight: f64) {
        let (k, l, z) = self.entry();
        out[(k, l)] += z * weight;
        if k != l {
            out[(l, k)] += z.conj() * weight;
        }
    }

    /// Entries of the basis element (optionally partially transposed) as a
    /// real symmetric block: `d × d` in the real field, embedded `2d × 2d` otherwise.
    fn block_entries(self, d: usize, real: bool, pt_bits: Option<usize>) -> Vec<SymEntry> {
        let (k, l, z) = self.entry();
        let (k, l) = match pt_bits {
            Some(bits) => pt_index(k, l, bits),
            None => (k, l),
        };
        if real {
            vec![(k.min(l), k.max(l), z.re)]
        } else {
            let mut out = Vec::with_capacity(4);
            embed_entry(&mut out, d, k, l, z);
            out
        }
    }
}

fn hermitian_from(coords: &[f64], basis: &[Basis], d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    for (b, &w) in basis.iter().zip(coords) {
        b.accumulate(&mut m, w);
    }
    m
}

/// Builds the PPT-mixture witness program in the solver's dual form.
///
/// Dual variables are the coordinates of `W` and of every `P_M`; the four PSD
/// blocks per bipartition are `P`, `I − P`, `(W − P)^{T_M}` and `I − (W − P)^{T_M}`.
/// Maximizing `−Tr(Wρ)` gives the negated witness optimum directly.
fn witness_problem(rho: &DensityMatrix, masks: &[BipartitionMask], real: bool) -> (SdpProblem, Vec<Basis>) {
    let d = rho.dim();
    let basis = Basis::all(d, real);
    let block_dim = if real { d } else { 2 * d };
    let mut p = SdpProblem::new();
    let w_vars = p.add_variables("W", basis.len());
    for (v, b) in w_vars.clone().zip(&basis) {
        p.set_objective(v, -b.expectation(rho.matrix()));
    }
    for mask in masks {
        let label = mask.label();
        let bits = mask.bits() as usize;
        let p_vars = p.add_variables(format!("P[{label}]"), basis.len());
        let p_lo = p.add_block(format!("P[{label}]"), block_dim);
        let p_hi = p.add_block(format!("I-P[{label}]"), block_dim);
        let q_lo = p.add_block(format!("Q[{label}]"), block_dim);
        let q_hi = p.add_block(format!("I-Q[{label}]"), block_dim);
        for blk in [p_hi, q_hi] {
            for k in 0..block_dim {
                p.add_constant(blk, k, k, 1.0);
            }
        }
        for (k, b) in basis.iter().enumerate() {
            let (wv, pv) = (w_vars.start + k, p_vars.start + k);
            for (i, j, v) in b.block_entries(d, real, None) {
                // S = C − Σ y A: P block needs A = −E, I − P needs A = +E.
                p.add_coefficient(pv, p_lo, i, j, -v);
                p.add_coefficient(pv, p_hi, i, j, v);
            }
            for (i, j, v) in b.block_entries(d, real, Some(bits)) {
                p.add_coefficient(wv, q_lo, i, j, -v);
                p.add_coefficient(pv, q_lo, i, j, v);
                p.add_coefficient(wv, q_hi, i, j, v);
                p.add_coefficient(pv, q_hi, i, j, -v);
            }
        }
    }
    (p, basis)
}

pub fn genuine_negativity(rho: &DensityMatrix) -> Result<GenuineNegativityResult> {
    genuine_negativity_with(rho, &GenuineNegativityOptions::default())
}

pub fn genuine_negativity_with(rho: &DensityMatrix, options: &GenuineNegativityOptions) -> Result<GenuineNegativityResult> {
    let n = rho.n_qubits();
    if !(2..=4).contains(&n) {
        return Err(Error::Unsupported(format!("genuine negativity on {n} qubits (supported: 2 to 4)")));
    }
    let real = options.field == WitnessField::Auto && rho.is_real();
    let masks = all_bipartitions(n);
    let (problem, basis) = witness_problem(rho, &masks, real);
    let solution = sdp::solve(&problem, &options.sdp)?;
    if solution.status != SdpStatus::Optimal {
        return Err(Error::SolverFailed(Box::new(solution.diagnostics())));
    }
    let d = rho.dim();
    let groups = problem.groups();
    let witness = hermitian_from(solution.group_values(&groups[0]), &basis, d);
    let decompositions = masks
        .iter()
        .zip(&groups[1..])
        .map(|(mask, g)| {
            let p = hermitian_from(solution.group_values(g), &basis, d);
            let q = linalg::partial_transpose_op(&(&witness - &p), mask)?;
            Ok(BipartiteDecomposition { mask: *mask, p, q })
        })
        .collect::<Result<Vec<_>>>()?;
    let witness_expectation = linalg::trace_product(&witness, rho.matrix()).re;
    Ok(GenuineNegativityResult {
        value: (-witness_expectation).max(0.0),
        witness_expectation,
        witness,
        decompositions,
        diagnostics: solution.diagnostics(),
        real_witness: real,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessCheck {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub witness_expectation: f64,
    pub entanglement_detected: bool,
    pub checks: Vec<WitnessCheck>,
}

impl WitnessReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summary(&self) -> &'static str {
        if self.entanglement_detected {
            "genuine multipartite entanglement detected"
        } else {
            "no entanglement detected"
        }
    }
}

fn check(name: String, value: f64, tolerance: f64) -> WitnessCheck {
    WitnessCheck {
        passed: value <= tolerance,
        name,
        value,
        tolerance,
    }
}

/// Distance of the spectrum from `[0, 1]`.
fn unit_interval_violation(m: &CMatrix) -> Result<f64> {
    let ev = linalg::hermitian_eigenvalues(m)?;
    let lo = ev.first().copied().unwrap_or(0.0);
    let hi = ev.last().copied().unwrap_or(0.0);
    Ok((-lo).max(hi - 1.0).max(0.0))
}

/// Recomputes every certificate of a witness from its matrices alone.
pub fn verify_witness(result: &GenuineNegativityResult, rho: &DensityMatrix) -> WitnessReport {
    let mut checks = Vec::new();
    let tr = linalg::trace_product(&result.witness, rho.matrix());
    checks.push(check("Tr(W rho) imaginary part".into(), tr.im.abs(), tolerance::EXPECTATION_IMAG));
    checks.push(check(
        "reported value".into(),
        (result.value - (-tr.re).max(0.0)).abs(),
        tolerance::WITNESS_DECOMPOSITION,
    ));
    checks.push(check(
        "witness hermiticity".into(),
        linalg::max_asymmetry(&result.witness),
        tolerance::WITNESS_DECOMPOSITION,
    ));
    let masks = all_bipartitions(rho.n_qubits());
    let covered = masks.iter().all(|m| result.decompositions.iter().any(|d| d.mask == *m));
    checks.push(check("all bipartitions present".into(), if covered { 0.0 } else { 1.0 }, 0.0));
    for dec in &result.decompositions {
        let label = dec.mask.label();
        let residual = linalg::partial_transpose_op(&dec.q, &dec.mask)
            .map(|qt| linalg::max_abs(&(&result.witness - &dec.p - qt)))
            .unwrap_or(f64::INFINITY);
        checks.push(check(format!("decomposition {label}"), residual, tolerance::WITNESS_DECOMPOSITION));
        for (name, m) in [("P", &dec.p), ("Q", &dec.q)] {
            let violation = unit_interval_violation(m).unwrap_or(f64::INFINITY);
            checks.push(check(format!("{name} spectrum {label}"), violation, tolerance::WITNESS_SPECTRUM));
        }
    }
    WitnessReport {
        witness_expectation: tr.re,
        entanglement_detected: tr.re < -tolerance::WITNESS_DECOMPOSITION,
        checks,
    }
}

fn validate_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(&t) = times.iter().find(|t| !t.is_finite() || **t < 0.0) {
        return Err(Error::NegativeTime(t));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::UnsortedGrid);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Invariance {
    Invariant(f64),
    Decaying(Vec<f64>),
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub verdict: Invariance,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `max_t |E(t) − E(0)|`.
    pub max_deviation: f64,
    /// `max_t ‖ρ(t) − ρ(0)‖_F`.
    pub max_state_change: f64,
}

impl InvarianceReport {
    pub fn is_invariant(&self) -> bool {
        matches!(self.verdict, Invariance::Invariant(_))
    }

    /// Invariant while the state itself moves and carries some entanglement.
    pub fn is_nontrivial(&self, tol: f64) -> bool {
        self.is_invariant() && self.max_state_change > tolerance::NONTRIVIAL_STATE_CHANGE && self.values[0] > tol
    }

    fn build(times: &[f64], points: Vec<(f64, f64)>, tol: f64) -> Self {
        let (values, changes): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        let e0 = values[0];
        let max_deviation = values.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
        let max_state_change = changes.iter().copied().fold(0.0, f64::max);
        let verdict = if max_deviation <= tol {
            Invariance::Invariant(e0)
        } else {
            Invariance::Decaying(values.clone())
        };
        Self {
            verdict,
            times: times.to_vec(),
            values,
            max_deviation,
            max_state_change,
        }
    }
}

/// `E(ρ(t))` on a grid using the closed-form evolution of a named family.
pub fn detect_time_invariance(params: &FamilyParams, times: &[f64], tol: f64, exec: Execution) -> Result<InvarianceReport> {
    validate_grid(times)?;
    let rho0 = evolved_family(params, 0.0)?;
    let points = par_map(exec, times, |_, &t| -> Result<(f64, f64)> {
        let rho = evolved_family(params, t)?;
        Ok((genuine_negativity(&rho)?.value, rho.frobenius_distance(&rho0)))
    });
    Ok(InvarianceReport::build(times, points.into_iter().collect::<Result<_>>()?, tol))
}

/// Same as [`detect_time_invariance`] for an arbitrary initial state and channel.
pub fn detect_time_invariance_state(
    channel: &DephasingChannel,
    rho0: &DensityMatrix,
    times: &[f64],
    tol: f64,
    exec: Execution,
) -> Result<InvarianceReport> {
    validate_grid(times)?;
    let points = par_map(exec, times, |_, &t| -> Result<(f64, f64)> {
        let rho = channel.evolve(rho0, t)?;
        Ok((genuine_negativity(&rho)?.value, rho.frobenius_distance(rho0)))
    });
    Ok(InvarianceReport::build(times, points.into_iter().collect::<Result<_>>()?, tol))
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanConfig {
    pub n_qubits: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub times: Vec<f64>,
    pub tolerance: f64,
}

impl ScanConfig {
    pub fn new(n_qubits: usize, n_samples: usize, seed: u64) -> Self {
        Self {
            n_qubits,
            n_samples,
            seed,
            times: crate::linspace(0.0, 5.0, 26),
            tolerance: tolerance::INVARIANCE,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanComponent {
    pub label: String,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanSample {
    pub index: usize,
    pub components: Vec<ScanComponent>,
    pub initial_value: Option<f64>,
    pub max_deviation: Option<f64>,
    pub max_state_change: Option<f64>,
    pub invariant: bool,
    pub nontrivial_hit: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub n_qubits: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub times: Vec<f64>,
    pub samples_tested: usize,
    pub nontrivial_hits: Vec<usize>,
    pub failures: usize,
    pub samples: Vec<ScanSample>,
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn haar_ket(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

fn dirichlet(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

fn ghz_label(spec: &GhzSpec) -> String {
    let bits: String = (0..spec.n_qubits())
        .rev()
        .map(|k| if spec.pattern() >> k & 1 == 1 { '1' } else { '0' })
        .collect();
    let sign = if spec.sign() == Sign::Plus { '+' } else { '-' };
    format!("GHZ({bits}{sign})")
}

/// Three qubits: GHZ-type, W and Haar-random pure states mixed with Dirichlet weights.
fn three_qubit_sample(rng: &mut ChaCha8Rng) -> Result<(DensityMatrix, Vec<ScanComponent>)> {
    let ghz = ghz_enumeration(3);
    let spec = ghz[rng.random_range(0..ghz.len())];
    let haar = DensityMatrix::from_ket(&haar_ket(rng, 8))?;
    let weights = dirichlet(rng, 3);
    let ghz_rho = ghz_state(&spec);
    let w = w_state(3)?;
    let rho = DensityMatrix::mixture(&[(weights[0], &ghz_rho), (weights[1], &w), (weights[2], &haar)])?;
    let components = vec![
        ScanComponent { label: ghz_label(&spec), weight: weights[0] },
        ScanComponent { label: "W".into(), weight: weights[1] },
        ScanComponent { label: "haar".into(), weight: weights[2] },
    ];
    Ok((rho, components))
}

/// Four qubits, biased towards the decoherence-free subspace: a dominant
/// DFS GHZ state, a decaying GHZ state of another pattern, and white noise.
fn four_qubit_sample(rng: &mut ChaCha8Rng) -> Result<(DensityMatrix, Vec<ScanComponent>)> {
    let ghz = ghz_enumeration(4);
    let dfs: Vec<GhzSpec> = ghz.iter().copied().filter(GhzSpec::is_decoherence_free).collect();
    let lossy: Vec<GhzSpec> = ghz.iter().copied().filter(|g| !g.is_decoherence_free()).collect();
    let a = dfs[rng.random_range(0..dfs.len())];
    let b = lossy[rng.random_range(0..lossy.len())];
    let beta = rng.random_range(0.85..0.98);
    let alpha = rng.random_range(0.5..1.0);
    let weights = [beta, (1.0 - beta) * alpha, (1.0 - beta) * (1.0 - alpha)];
    let (ra, rb, mixed) = (ghz_state(&a), ghz_state(&b), DensityMatrix::maximally_mixed(4));
    let rho = DensityMatrix::mixture(&[(weights[0], &ra), (weights[1], &rb), (weights[2], &mixed)])?;
    let components = vec![
        ScanComponent { label: ghz_label(&a), weight: weights[0] },
        ScanComponent { label: ghz_label(&b), weight: weights[1] },
        ScanComponent { label: "identity".into(), weight: weights[2] },
    ];
    Ok((rho, components))
}

/// Random search for nontrivially time-invariant genuine entanglement under
/// the standard z-axis channel. Each sample derives its own generator from
/// `(seed, index)`, so results do not depend on scheduling.
pub fn random_invariance_scan(config: &ScanConfig, exec: Execution) -> Result<ScanReport> {
    if config.n_samples == 0 {
        return Err(Error::InvalidConfig("scan needs at least one sample".into()));
    }
    if !(3..=4).contains(&config.n_qubits) {
        return Err(Error::Unsupported(format!("invariance scan on {} qubits", config.n_qubits)));
    }
    validate_grid(&config.times)?;
    let channel = DephasingChannel::standard(config.n_qubits)?;
    let indices: Vec<usize> = (0..config.n_samples).collect();
    let samples = par_map(exec, &indices, |_, &index| {
        let mut rng = sample_rng(config.seed, index);
        let drawn = if config.n_qubits == 3 {
            three_qubit_sample(&mut rng)
        } else {
            four_qubit_sample(&mut rng)
        };
        let mut sample = ScanSample {
            index,
            components: Vec::new(),
            initial_value: None,
            max_deviation: None,
            max_state_change: None,
            invariant: false,
            nontrivial_hit: false,
            error: None,
        };
        let outcome = drawn.and_then(|(rho, components)| {
            sample.components = components;
            detect_time_invariance_state(&channel, &rho, &config.times, config.tolerance, Execution::Sequential)
        });
        match outcome {
            Ok(report) => {
                sample.initial_value = Some(report.values[0]);
                sample.max_deviation = Some(report.max_deviation);
                sample.max_state_change = Some(report.max_state_change);
                sample.invariant = report.is_invariant();
                sample.nontrivial_hit = report.is_nontrivial(config.tolerance);
            }
            Err(e) => sample.error = Some(e.to_string()),
        }
        sample
    });
    Ok(ScanReport {
        n_qubits: config.n_qubits,
        n_samples: config.n_samples,
        seed: config.seed,
        tolerance: config.tolerance,
        times: config.times.clone(),
        samples_tested: samples.iter().filter(|s| s.error.is_none()).count(),
        nontrivial_hits: samples.iter().filter(|s| s.nontrivial_hit).map(|s| s.index).collect(),
        failures: samples.iter().filter(|s| s.error.is_some()).count(),
        samples,
    })
}

/// Product of single-qubit pure states `cos θ|0⟩ + e^{iφ} sin θ|1⟩`.
pub fn product_state(angles: &[(f64, f64)]) -> Result<DensityMatrix> {
    let mut ket = vec![ONE];
    for &(theta, phi) in angles {
        let q = [Complex64::new(theta.cos(), 0.0), Complex64::from_polar(theta.sin(), phi)];
        ket = ket.iter().flat_map(|a| q.iter().map(move |b| a * b)).collect();
    }
    if ket.iter().all(|z| *z == ZERO) {
        return Err(Error::InvalidState("zero ket".into()));
    }
    DensityMatrix::from_ket(&ket)
}
