//! Acceptance criteria. Prints one PASS/FAIL line per criterion (with the
//! failing sub-checks underneath) and exits non-zero if any criterion fails.

use std::f64::consts::SQRT_2;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use qdephase::channel::{evolve_z_fastpath, DephasingChannel, FieldOrientation, SpectralDistribution};
use qdephase::entanglement::{
    genuine_negativity, negativity, random_invariance_scan, verify_witness, ScanConfig, ScanReport,
};
use qdephase::linalg::{self, partial_transpose, BipartitionMask, CMatrix, DensityMatrix};
use qdephase::nonlocality::{
    analytic_bell_expectation, ardehali_operator, bell_expectation, ghz6_operator, nonlocality_threshold_beta,
    sudden_death_time, SuddenDeath,
};
use qdephase::parallel::{par_map, Execution};
use qdephase::states::{
    closed_pt_spectrum_rho_ab, closed_spectrum_rho_alpha_beta, evolved_family, ghz_state, FamilyParams, GhzSpec,
};
use qdephase::{linspace, tolerance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const SEED: u64 = 42;

struct Outcome {
    checks: Vec<(String, bool)>,
}

impl Outcome {
    fn new() -> Self {
        Self { checks: Vec::new() }
    }

    fn check(&mut self, name: impl Into<String>, ok: bool) {
        self.checks.push((name.into(), ok));
    }

    fn within(&mut self, name: &str, elapsed: Duration, limit: Duration) {
        self.check(format!("{name}: runtime {elapsed:.1?} < {limit:?}"), elapsed < limit);
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }
}

/// Genuine negativity at one point together with its certificates.
struct Point {
    t: f64,
    value: f64,
    state_change: f64,
    optimal_gap: Option<f64>,
    certified: bool,
}

/// Shared across criteria 4–6 and re-examined by 8 and 9.
#[derive(Default)]
struct Ledger {
    points: Vec<(String, Point)>,
    scan_values: Vec<f64>,
}

fn evaluate(params: &FamilyParams, times: &[f64]) -> Vec<Point> {
    let rho0 = evolved_family(params, 0.0).expect("valid family");
    par_map(Execution::Parallel, times, |_, &t| {
        let rho = evolved_family(params, t).expect("valid family");
        let state_change = rho.frobenius_distance(&rho0);
        match genuine_negativity(&rho) {
            Ok(r) => Point {
                t,
                value: r.value,
                state_change,
                optimal_gap: Some(r.diagnostics.duality_gap),
                certified: verify_witness(&r, &rho).all_passed(),
            },
            Err(_) => Point {
                t,
                value: f64::NAN,
                state_change,
                optimal_gap: None,
                certified: false,
            },
        }
    })
}

fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

fn random_ket(rng: &mut ChaCha8Rng, dim: usize) -> Vec<num_complex::Complex64> {
    let v: Vec<_> = (0..dim)
        .map(|_| num_complex::Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

fn random_state(rng: &mut ChaCha8Rng, n_qubits: usize) -> DensityMatrix {
    let d = 1 << n_qubits;
    let mut m = CMatrix::zeros(d, d);
    for _ in 0..d {
        let w: f64 = rng.random_range(0.0..1.0);
        m += linalg::outer(&random_ket(rng, d)) * num_complex::Complex64::new(w, 0.0);
    }
    let tr = m.trace();
    DensityMatrix::new(m / tr).expect("mixture of pure states")
}

fn two_qubit_grid() -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for a in [0.5, 1.0] {
        for b in [0.7, 0.75, 0.9] {
            for t in [0.0, 0.5, 1.0, 3.0] {
                out.push((a, b, t));
            }
        }
    }
    out
}

fn criterion_1() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let mask = BipartitionMask::new(2, 0b10).unwrap();
    let mut worst: f64 = 0.0;
    let mut covered = 0;
    for (a, b, t) in two_qubit_grid() {
        if b > (1.0 + a) / (3.0 + a) {
            covered += 1;
            let rho = evolved_family(&FamilyParams::rho_ab(a, b), t).unwrap();
            let closed = ((3.0 + a) * b - 1.0 - a) / 2.0;
            worst = worst.max((negativity(&rho, &mask).unwrap() - closed).abs());
        }
    }
    o.check(format!("negativity matches closed form on {covered} points (max err {worst:.1e} <= 1e-8)"), worst <= 1e-8);
    o.within("two-qubit closed form", start.elapsed(), Duration::from_secs(1));
    o
}

fn criterion_2() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mask = BipartitionMask::new(2, 0b10).unwrap();
    let (mut worst_ab, mut worst_abt): (f64, f64) = (0.0, 0.0);
    for _ in 0..200 {
        let (a, b, t) = (rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0), rng.random_range(0.0..10.0));
        let rho = evolved_family(&FamilyParams::rho_ab(a, b), t).unwrap();
        let numeric = linalg::hermitian_eigenvalues(&partial_transpose(&rho, &mask).unwrap()).unwrap();
        let mut closed = closed_pt_spectrum_rho_ab(a, b, t).unwrap().to_vec();
        closed.sort_by(f64::total_cmp);
        worst_ab = numeric.iter().zip(&closed).fold(worst_ab, |m, (x, y)| m.max((x - y).abs()));

        let (alpha, beta) = (rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0));
        let rho = evolved_family(&FamilyParams::RhoAlphaBeta { alpha, beta }, t).unwrap();
        let numeric = rho.eigenvalues();
        let mut closed = closed_spectrum_rho_alpha_beta(alpha, beta, t).unwrap().to_vec();
        closed.sort_by(f64::total_cmp);
        worst_abt = numeric.iter().zip(&closed).fold(worst_abt, |m, (x, y)| m.max((x - y).abs()));
    }
    o.check(format!("two-qubit PT spectrum (max err {worst_ab:.1e} <= 1e-10)"), worst_ab <= 1e-10);
    o.check(format!("four-qubit spectrum (max err {worst_abt:.1e} <= 1e-10)"), worst_abt <= 1e-10);
    o.within("spectrum oracle", start.elapsed(), Duration::from_secs(5));
    o
}

fn criterion_3() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let (mut trace_err, mut min_eig, mut fast_err): (f64, f64, f64) = (0.0, f64::INFINITY, 0.0);
    for k in 0..100 {
        let n = 2 + k % 3;
        let rho = random_state(&mut rng, n);
        let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let orientation = FieldOrientation::normalized(v[0], v[1], v[2]).unwrap();
        let t = rng.random_range(0.0..=10.0);
        let ch = DephasingChannel::new(n, orientation, SpectralDistribution::StandardCauchy).unwrap();
        let out = ch.evolve(&rho, t).unwrap();
        trace_err = trace_err.max((out.trace() - linalg::ONE).norm());
        min_eig = min_eig.min(out.min_eigenvalue());
        let z = DephasingChannel::standard(n).unwrap().evolve(&rho, t).unwrap();
        let fast = evolve_z_fastpath(&rho, t, &SpectralDistribution::StandardCauchy).unwrap();
        fast_err = fast_err.max(linalg::max_abs(&(z.matrix() - fast.matrix())));
    }
    o.check(format!("trace error {trace_err:.1e} <= 1e-10"), trace_err <= 1e-10);
    o.check(format!("min eigenvalue {min_eig:.1e} >= -1e-9"), min_eig >= -1e-9);
    o.check(format!("z fast path vs projector sum {fast_err:.1e} <= 1e-10"), fast_err <= 1e-10);
    o.within("channel contract", start.elapsed(), Duration::from_secs(30));
    o
}

fn criterion_4(ledger: &mut Ledger) -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let times = linspace(0.0, 5.0, 26);
    for beta in [0.8, 0.85] {
        let points = evaluate(&FamilyParams::RhoAlphaBeta { alpha: 0.9, beta }, &times);
        let e0 = points[0].value;
        let dev = points.iter().map(|p| (p.value - e0).abs()).fold(0.0, f64::max);
        let change = points.iter().map(|p| p.state_change).fold(0.0, f64::max);
        o.check(format!("beta={beta}: max |E(t)-E(0)| = {dev:.2e} <= 1e-5"), dev <= 1e-5);
        o.check(format!("beta={beta}: max state change {change:.3e} >= 1e-3"), change >= 1e-3);
        ledger.points.extend(points.into_iter().map(|p| (format!("4 beta={beta}"), p)));
    }
    let points = evaluate(&FamilyParams::RhoAlphaBeta { alpha: 0.9, beta: 0.1 }, &times);
    let values: Vec<f64> = points.iter().map(|p| p.value).collect();
    let drop = values[0] - values[values.len() - 1];
    let plateau = points.iter().find(|p| p.value == 0.0).map(|p| p.t);
    o.check(
        format!(
            "beta=0.1: E strictly decreasing (first zero at t={})",
            plateau.map_or("none".into(), |t| format!("{t}"))
        ),
        strictly_decreasing(&values),
    );
    o.check(format!("beta=0.1: total drop {drop:.4} >= 0.01"), drop >= 0.01);
    ledger.points.extend(points.into_iter().map(|p| ("4 beta=0.1".to_string(), p)));
    o.within("four-qubit invariance", start.elapsed(), Duration::from_secs(600));
    o
}

fn criterion_5(ledger: &mut Ledger) -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let times = linspace(0.0, 5.0, 26);
    for eta in [0.9, 0.99] {
        let points = evaluate(&FamilyParams::RhoEta { eta }, &times);
        let values: Vec<f64> = points.iter().map(|p| p.value).collect();
        let rises = values.windows(2).filter(|w| w[1] >= w[0]).count();
        let dev = values.iter().map(|v| (v - values[0]).abs()).fold(0.0, f64::max);
        o.check(
            format!("eta={eta}: E strictly decreasing ({rises} non-decreasing steps of 25)"),
            strictly_decreasing(&values),
        );
        o.check(format!("eta={eta}: no invariance flag (max |dE| = {dev:.2e} > 1e-5)"), dev > tolerance::INVARIANCE);
        ledger.points.extend(points.into_iter().map(|p| (format!("5 eta={eta}"), p)));
    }
    o.within("three-qubit decay", start.elapsed(), Duration::from_secs(180));
    o
}

fn criterion_6(ledger: &mut Ledger) -> Outcome {
    let mut o = Outcome::new();
    let mask = BipartitionMask::new(2, 0b10).unwrap();
    let mut worst: f64 = 0.0;
    for (a, b, t) in two_qubit_grid() {
        let params = FamilyParams::rho_ab(a, b);
        let rho = evolved_family(&params, t).unwrap();
        let mut point = evaluate(&params, &[t]).remove(0);
        point.state_change = 0.0;
        worst = worst.max((2.0 * point.value - negativity(&rho, &mask).unwrap()).abs());
        ledger.points.push((format!("6 a={a} b={b}"), point));
    }
    o.check(format!("2E = N on the two-qubit grid (max err {worst:.1e} <= 1e-6)"), worst <= 1e-6);
    o
}

fn criterion_7() -> Outcome {
    let mut o = Outcome::new();
    let ghz = ghz_state(&GhzSpec::standard(4));
    let v = bell_expectation(&ghz, &ardehali_operator().materialize()).unwrap();
    o.check(format!("<B> on GHZ = {v:.12} vs 8*sqrt(2) within 1e-9"), (v - 8.0 * SQRT_2).abs() <= 1e-9);

    let op = ghz6_operator();
    let grid = linspace(0.0, 1.0, 10);
    let times = linspace(0.0, 5.0, 10);
    let mut worst: f64 = 0.0;
    for &alpha in &grid {
        for &beta in &grid {
            for &t in &times {
                let rho = evolved_family(&FamilyParams::RhoAlphaBeta { alpha, beta }, t).unwrap();
                let numeric = bell_expectation(&rho, &op).unwrap();
                worst = worst.max((numeric - analytic_bell_expectation(alpha, beta, t).unwrap()).abs());
            }
        }
    }
    o.check(format!("analytic vs numeric <B>(t) on 10x10x10 grid (max err {worst:.3e} <= 1e-8)"), worst <= 1e-8);

    match sudden_death_time(0.9, 0.8).unwrap() {
        SuddenDeath::At(t) => o.check(format!("sudden death (0.9, 0.8) at t={t:.6} vs 1.1216 within 1e-3"), (t - 1.1216).abs() <= 1e-3),
        other => o.check(format!("sudden death (0.9, 0.8) classified {other:?}"), false),
    }
    let never = sudden_death_time(0.9, 0.85).unwrap();
    o.check(format!("(0.9, 0.85) classified {never:?}"), never == SuddenDeath::Never);
    let beta = nonlocality_threshold_beta(0.9).unwrap();
    o.check(format!("threshold beta(0.9) = {beta:.7} vs 0.736725 within 1e-6"), (beta - 0.736725).abs() <= 1e-6);
    o
}

fn criterion_8(ledger: &Ledger) -> Outcome {
    let mut o = Outcome::new();
    let all = ledger.points.iter().map(|(_, p)| p.value).chain(ledger.scan_values.iter().copied());
    let (count, max) = all.fold((0usize, f64::NEG_INFINITY), |(n, m), v| (n + 1, m.max(v)));
    o.check(format!("max E over {count} values = {max:.9} <= 0.5 + 1e-7"), max <= tolerance::MONOTONE_BOUND);
    o
}

fn criterion_9(ledger: &Ledger) -> Outcome {
    let mut o = Outcome::new();
    let optimal: Vec<_> = ledger.points.iter().filter(|(_, p)| p.optimal_gap.is_some()).collect();
    let failed = ledger.points.len() - optimal.len();
    let worst_gap = optimal.iter().filter_map(|(_, p)| p.optimal_gap).fold(0.0, f64::max);
    let uncertified: Vec<_> = optimal.iter().filter(|(_, p)| !p.certified).map(|(s, p)| format!("{s} t={}", p.t)).collect();
    o.check(format!("{} optimal solves, {failed} solver failures", optimal.len()), failed == 0);
    o.check(format!("max duality gap {worst_gap:.2e} <= 1e-7"), worst_gap <= tolerance::SDP_GAP);
    o.check(format!("witness certificates re-verified ({} failures {:?})", uncertified.len(), uncertified), uncertified.is_empty());
    o
}

fn criterion_10(ledger: &mut Ledger) -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let config = ScanConfig::new(3, 100, SEED);
    let report = random_invariance_scan(&config, Execution::Parallel).unwrap();
    let json = serde_json::to_string(&report).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    ledger.scan_values.extend(report.samples.iter().filter_map(|s| s.initial_value));
    summarize_scan(&report);
    o.check(format!("{} samples tested, {} failures", report.samples_tested, report.failures), report.samples_tested == 100);
    o.check(
        format!("nontrivial invariance hits: {}", report.nontrivial_hits.len()),
        report.nontrivial_hits.is_empty(),
    );
    o.check("report is machine readable JSON", parsed["samples"].as_array().map(Vec::len) == Some(100));
    o.within("three-qubit scan", start.elapsed(), Duration::from_secs(1200));
    o
}

fn summarize_scan(report: &ScanReport) {
    let min_dev = report.samples.iter().filter_map(|s| s.max_deviation).fold(f64::INFINITY, f64::min);
    eprintln!("    scan: smallest max|dE| among samples = {min_dev:.3e}");
    for &i in &report.nontrivial_hits {
        eprintln!("    !!! nontrivial invariant sample {i}: {:?}", report.samples[i].components);
    }
}

fn main() -> ExitCode {
    // `cargo test` forwards harness flags; a name filter that matches nothing skips the suite.
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !filters.is_empty() && !filters.iter().any(|f| "acceptance".contains(f.as_str())) {
        return ExitCode::SUCCESS;
    }
    let mut ledger = Ledger::default();
    let mut failures = 0;
    let mut report = |id: usize, name: &str, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = run();
        let status = if outcome.passed() { "PASS" } else { "FAIL" };
        println!("[{status}] criterion {id:>2}: {name} ({:.1?})", start.elapsed());
        for (check, ok) in &outcome.checks {
            println!("         {} {check}", if *ok { "ok  " } else { "FAIL" });
        }
        if !outcome.passed() {
            failures += 1;
        }
    };
    report(1, "two-qubit closed-form negativity", &mut criterion_1);
    report(2, "closed-form spectra vs eigensolver", &mut criterion_2);
    report(3, "dephasing channel contract", &mut criterion_3);
    report(4, "four-qubit time-invariant genuine negativity", &mut || criterion_4(&mut ledger));
    report(5, "three-qubit decay without invariance", &mut || criterion_5(&mut ledger));
    report(6, "2E equals negativity on two qubits", &mut || criterion_6(&mut ledger));
    report(7, "nonlocality anchors", &mut criterion_7);
    report(10, "three-qubit random invariance scan", &mut || criterion_10(&mut ledger));
    report(8, "genuine negativity bounded by 1/2", &mut || criterion_8(&ledger));
    report(9, "SDP certificates", &mut || criterion_9(&ledger));
    println!("acceptance: {} of 10 criteria passed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
