mod common;

use nalgebra::DMatrix;
use qdephase::sdp::{solve, SdpOptions, SdpProblem, SdpStatus};
use rand::Rng;

/// minimize ⟨C, X⟩ s.t. trace(X) = 1, X ⪰ 0.
fn min_eigenvalue_problem(c: &DMatrix<f64>) -> SdpProblem {
    let n = c.nrows();
    let mut p = SdpProblem::new();
    let blk = p.add_block("X", n);
    for i in 0..n {
        for j in i..n {
            p.add_constant(blk, i, j, c[(i, j)]);
        }
    }
    let v = p.add_variables("trace", 1).start;
    for i in 0..n {
        p.add_coefficient(v, blk, i, i, 1.0);
    }
    p.set_objective(v, 1.0);
    p
}

/// Two blocks sharing one variable: maximizes `2y₀ + y₁` with
/// `y₀ ≤ λ_min(C₁)` and `y₀ + y₁ ≤ λ_min(C₂)`, optimum `λ_min(C₁) + λ_min(C₂)`.
fn coupled_problem(c1: &DMatrix<f64>, c2: &DMatrix<f64>) -> SdpProblem {
    let mut p = SdpProblem::new();
    let b1 = p.add_block("one", c1.nrows());
    let b2 = p.add_block("two", c2.nrows());
    for (blk, c) in [(b1, c1), (b2, c2)] {
        for i in 0..c.nrows() {
            for j in i..c.nrows() {
                p.add_constant(blk, i, j, c[(i, j)]);
            }
        }
    }
    let y0 = p.add_variables("shared", 1).start;
    let y1 = p.add_variables("second", 1).start;
    for i in 0..c1.nrows() {
        p.add_coefficient(y0, b1, i, i, 1.0);
    }
    for i in 0..c2.nrows() {
        p.add_coefficient(y0, b2, i, i, 1.0);
        p.add_coefficient(y1, b2, i, i, 1.0);
    }
    p.set_objective(y0, 2.0);
    p.set_objective(y1, 1.0);
    p
}

fn random_symmetric(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (&g + g.transpose()) * 0.5
}

fn lambda_min(c: &DMatrix<f64>) -> f64 {
    c.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

#[test]
fn fifty_random_eigenvalue_programs() {
    let mut rng = common::rng(2024);
    for k in 0..50 {
        let n = 2 + k % 7;
        let c = random_symmetric(&mut rng, n);
        let sol = solve(&min_eigenvalue_problem(&c), &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal, "case {k}");
        assert!((sol.objective_value - lambda_min(&c)).abs() <= 1e-6, "case {k}");
        assert!(sol.duality_gap <= 1e-7 && sol.max_residual <= 1e-8);
    }
}

#[test]
fn coupled_blocks_factor_through_groups() {
    let mut rng = common::rng(7);
    for _ in 0..10 {
        let c1 = random_symmetric(&mut rng, 3);
        let c2 = random_symmetric(&mut rng, 4);
        let sol = solve(&coupled_problem(&c1, &c2), &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        let want = lambda_min(&c1) + lambda_min(&c2);
        assert!((sol.dual_objective - want).abs() <= 1e-6);
        assert!((sol.objective_value - want).abs() <= 1e-6);
    }
}

#[test]
fn weak_duality_on_feasible_iterates() {
    let mut rng = common::rng(99);
    for _ in 0..10 {
        let c = random_symmetric(&mut rng, 5);
        let sol = solve(&min_eigenvalue_problem(&c), &SdpOptions::default()).unwrap();
        let feasible: Vec<_> = sol
            .history
            .iter()
            .filter(|r| r.primal_residual <= 1e-8 && r.dual_residual <= 1e-8)
            .collect();
        assert!(!feasible.is_empty());
        for r in feasible {
            assert!(r.primal_objective >= r.dual_objective - 1e-9, "{r:?}");
            assert!(r.complementarity >= 0.0);
        }
    }
}

#[test]
fn repeated_solves_are_bit_identical() {
    let mut rng = common::rng(3);
    let p = coupled_problem(&random_symmetric(&mut rng, 4), &random_symmetric(&mut rng, 3));
    let a = solve(&p, &SdpOptions::default()).unwrap();
    let b = solve(&p, &SdpOptions::default()).unwrap();
    assert_eq!(a.y, b.y);
    assert_eq!(a.x, b.x);
    assert_eq!(a.s, b.s);
    assert_eq!(a.objective_value.to_bits(), b.objective_value.to_bits());
}

#[test]
fn dump_and_load_preserve_the_solution() {
    let mut rng = common::rng(11);
    let p = coupled_problem(&random_symmetric(&mut rng, 3), &random_symmetric(&mut rng, 3));
    let text = p.to_text();
    assert!(text.lines().any(|l| l.starts_with("block one 3")));
    let q = SdpProblem::from_text(&text).unwrap();
    let a = solve(&p, &SdpOptions::default()).unwrap();
    let b = solve(&q, &SdpOptions::default()).unwrap();
    assert_eq!(a.y, b.y);
}
