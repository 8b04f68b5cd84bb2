//! Small dense semidefinite-programming solver.
//!
//! Problems are stored in the standard primal–dual pair
//!
//! ```text
//! (P)  minimize ⟨C, X⟩  s.t. ⟨A_i, X⟩ = b_i,  X ⪰ 0
//! (D)  maximize bᵀy     s.t. C − Σ_i y_i A_i = S ⪰ 0
//! ```
//!
//! where `X`, `S`, `C` and every `A_i` are block-diagonal real symmetric
//! matrices. The dual variables `y` are declared in named groups; two groups
//! are coupled in the Schur complement only if they touch a common block,
//! and the factorization exploits that sparsity (for the PPT-mixture witness
//! program the coupling graph is an arrow).
//!
//! The iteration is an infeasible primal–dual path-following method with the
//! HKM search direction and a Mehrotra predictor–corrector step.

use std::fmt::Write as _;
use std::ops::Range;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::tolerance;

type Matrix = DMatrix<f64>;

/// Upper-triangle entry `(row ≤ col, value)` of a symmetric matrix.
pub type SymEntry = (usize, usize, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct VariableGroup {
    pub name: String,
    pub range: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockInfo {
    pub name: String,
    pub dim: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SdpProblem {
    blocks: Vec<BlockInfo>,
    groups: Vec<VariableGroup>,
    constant: Vec<Vec<SymEntry>>,
    objective: Vec<f64>,
    /// Per dual variable: `(block, entries)` pairs.
    coefficients: Vec<Vec<(usize, Vec<SymEntry>)>>,
}

fn normalize_entry(i: usize, j: usize, v: f64) -> SymEntry {
    if i <= j {
        (i, j, v)
    } else {
        (j, i, v)
    }
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a PSD block and returns its index.
    pub fn add_block(&mut self, name: impl Into<String>, dim: usize) -> usize {
        self.blocks.push(BlockInfo { name: name.into(), dim });
        self.constant.push(Vec::new());
        self.blocks.len() - 1
    }

    /// Declares `count` dual variables as one named group.
    pub fn add_variables(&mut self, name: impl Into<String>, count: usize) -> Range<usize> {
        let start = self.objective.len();
        let range = start..start + count;
        self.objective.resize(start + count, 0.0);
        self.coefficients.resize(start + count, Vec::new());
        self.groups.push(VariableGroup {
            name: name.into(),
            range: range.clone(),
        });
        range
    }

    /// Adds `v` to entries `(i, j)` and `(j, i)` of `C` in `block`.
    pub fn add_constant(&mut self, block: usize, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            self.constant[block].push(normalize_entry(i, j, v));
        }
    }

    /// Adds `v` to entries `(i, j)` and `(j, i)` of `A_var` in `block`.
    pub fn add_coefficient(&mut self, var: usize, block: usize, i: usize, j: usize, v: f64) {
        if v == 0.0 {
            return;
        }
        let slots = &mut self.coefficients[var];
        let entry = normalize_entry(i, j, v);
        match slots.iter_mut().find(|(b, _)| *b == block) {
            Some((_, entries)) => entries.push(entry),
            None => slots.push((block, vec![entry])),
        }
    }

    pub fn set_objective(&mut self, var: usize, b: f64) {
        self.objective[var] = b;
    }

    pub fn blocks(&self) -> &[BlockInfo] {
        &self.blocks
    }

    pub fn groups(&self) -> &[VariableGroup] {
        &self.groups
    }

    pub fn n_variables(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn validate(&self) -> Result<()> {
        let check = |block: usize, entries: &[SymEntry]| -> Result<()> {
            let dim = self
                .blocks
                .get(block)
                .ok_or_else(|| Error::MalformedProblem(format!("reference to undeclared block {block}")))?
                .dim;
            if let Some(&(i, j, _)) = entries.iter().find(|&&(i, j, _)| i >= dim || j >= dim) {
                return Err(Error::MalformedProblem(format!(
                    "entry ({i}, {j}) outside block {block} of dimension {dim}"
                )));
            }
            if entries.iter().any(|e| !e.2.is_finite()) {
                return Err(Error::MalformedProblem("non-finite coefficient".into()));
            }
            Ok(())
        };
        for (b, entries) in self.constant.iter().enumerate() {
            check(b, entries)?;
        }
        for slots in &self.coefficients {
            for (b, entries) in slots {
                check(*b, entries)?;
            }
        }
        if self.blocks.is_empty() || self.objective.is_empty() {
            return Err(Error::MalformedProblem("no blocks or no variables".into()));
        }
        if self.objective.iter().any(|b| !b.is_finite()) {
            return Err(Error::MalformedProblem("non-finite objective".into()));
        }
        Ok(())
    }

    /// Line-oriented dump for debugging. Not a stable format.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# qdephase sdp v1\n");
        for b in &self.blocks {
            let _ = writeln!(out, "block {} {}", b.name.replace(char::is_whitespace, "_"), b.dim);
        }
        for g in &self.groups {
            let _ = writeln!(out, "group {} {}", g.name.replace(char::is_whitespace, "_"), g.range.len());
        }
        for (i, b) in self.objective.iter().enumerate() {
            if *b != 0.0 {
                let _ = writeln!(out, "b {i} {b:e}");
            }
        }
        for (blk, entries) in self.constant.iter().enumerate() {
            for (i, j, v) in entries {
                let _ = writeln!(out, "c {blk} {i} {j} {v:e}");
            }
        }
        for (var, slots) in self.coefficients.iter().enumerate() {
            for (blk, entries) in slots {
                for (i, j, v) in entries {
                    let _ = writeln!(out, "a {var} {blk} {i} {j} {v:e}");
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut p = Self::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::MalformedProblem(format!("line {}: {line:?}", lineno + 1));
            let num = |k: usize| -> Result<usize> { fields.get(k).and_then(|s| s.parse().ok()).ok_or_else(bad) };
            let real = |k: usize| -> Result<f64> { fields.get(k).and_then(|s| s.parse().ok()).ok_or_else(bad) };
            match fields[0] {
                "block" if fields.len() == 3 => {
                    p.add_block(fields[1], num(2)?);
                }
                "group" if fields.len() == 3 => {
                    p.add_variables(fields[1], num(2)?);
                }
                "b" if fields.len() == 3 => {
                    let var = num(1)?;
                    if var >= p.n_variables() {
                        return Err(bad());
                    }
                    p.set_objective(var, real(2)?);
                }
                "c" if fields.len() == 5 => {
                    let blk = num(1)?;
                    if blk >= p.blocks.len() {
                        return Err(bad());
                    }
                    p.add_constant(blk, num(2)?, num(3)?, real(4)?);
                }
                "a" if fields.len() == 6 => {
                    let var = num(1)?;
                    if var >= p.n_variables() {
                        return Err(bad());
                    }
                    p.add_coefficient(var, num(2)?, num(3)?, num(4)?, real(5)?);
                }
                _ => return Err(bad()),
            }
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    pub max_iterations: usize,
    pub gap_tolerance: f64,
    pub feasibility_tolerance: f64,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gap_tolerance: tolerance::SDP_GAP,
            feasibility_tolerance: tolerance::SDP_FEASIBILITY,
            step_fraction: 0.98,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `⟨X, S⟩`.
    pub complementarity: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdpDiagnostics {
    pub status: SdpStatus,
    pub iterations: usize,
    pub duality_gap: f64,
    pub max_residual: f64,
    pub message: String,
}

impl std::fmt::Display for SdpDiagnostics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{:?} after {} iterations (gap {:e}, residual {:e}): {}",
            self.status, self.iterations, self.duality_gap, self.max_residual, self.message
        )
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// `⟨C, X⟩`.
    pub objective_value: f64,
    /// `bᵀy`.
    pub dual_objective: f64,
    pub x: Vec<Matrix>,
    pub s: Vec<Matrix>,
    pub y: Vec<f64>,
    /// `max(⟨X, S⟩, |⟨C, X⟩ − bᵀy|)`.
    pub duality_gap: f64,
    /// Largest elementwise primal or dual equality residual.
    pub max_residual: f64,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub message: String,
}

impl SdpSolution {
    pub fn diagnostics(&self) -> SdpDiagnostics {
        SdpDiagnostics {
            status: self.status,
            iterations: self.iterations,
            duality_gap: self.duality_gap,
            max_residual: self.max_residual,
            message: self.message.clone(),
        }
    }

    pub fn group_values<'a>(&'a self, group: &VariableGroup) -> &'a [f64] {
        &self.y[group.range.clone()]
    }
}

/// `[[Re h, −Im h], [Im h, Re h]]`: PSD iff `h` is, with every eigenvalue doubled.
pub fn embed_hermitian(h: &CMatrix) -> Result<Matrix> {
    if !crate::linalg::is_hermitian(h) {
        return Err(Error::NotHermitian {
            asymmetry: crate::linalg::max_asymmetry(h),
        });
    }
    let n = h.nrows();
    Ok(Matrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    }))
}

/// Adds the real-symmetric embedding of complex entry `(i, j) = z` (and its
/// Hermitian mirror) to a list of upper-triangle entries of a `2d × 2d` block.
pub fn embed_entry(out: &mut Vec<SymEntry>, d: usize, i: usize, j: usize, z: num_complex::Complex64) {
    if i == j {
        if z.re != 0.0 {
            out.push((i, i, z.re));
            out.push((i + d, i + d, z.re));
        }
        return;
    }
    // z at (i, j) and conj(z) at (j, i).
    if z.re != 0.0 {
        out.push(normalize_entry(i, j, z.re));
        out.push(normalize_entry(i + d, j + d, z.re));
    }
    if z.im != 0.0 {
        // Upper-left/lower-right carry Re; the off-diagonal blocks carry ∓Im.
        out.push(normalize_entry(i, j + d, -z.im));
        out.push(normalize_entry(j, i + d, z.im));
    }
}

/// Full (both triangles) sparse entries.
fn expand(entries: &[SymEntry]) -> Vec<SymEntry> {
    let mut out = Vec::with_capacity(2 * entries.len());
    for &(i, j, v) in entries {
        out.push((i, j, v));
        if i != j {
            out.push((j, i, v));
        }
    }
    out
}

fn dense(dim: usize, entries: &[SymEntry]) -> Matrix {
    let mut m = Matrix::zeros(dim, dim);
    for &(i, j, v) in entries {
        m[(i, j)] += v;
        if i != j {
            m[(j, i)] += v;
        }
    }
    m
}

/// `⟨A, G⟩` for full sparse `A`.
fn sparse_dot(full: &[SymEntry], g: &Matrix) -> f64 {
    full.iter().map(|&(i, j, v)| v * g[(i, j)]).sum()
}

fn frob_dot(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn symmetrize(m: &mut Matrix) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Problem data rearranged per block for the iteration.
struct Prepared<'a> {
    problem: &'a SdpProblem,
    dims: Vec<usize>,
    c: Vec<Matrix>,
    /// Per block: `(var, full entries)`.
    by_block: Vec<Vec<(usize, Vec<SymEntry>)>>,
    adjacency: Vec<Vec<bool>>,
}

impl<'a> Prepared<'a> {
    fn new(problem: &'a SdpProblem) -> Self {
        let dims: Vec<usize> = problem.blocks.iter().map(|b| b.dim).collect();
        let c = problem
            .constant
            .iter()
            .zip(&dims)
            .map(|(e, &d)| dense(d, e))
            .collect();
        let mut by_block: Vec<Vec<(usize, Vec<SymEntry>)>> = vec![Vec::new(); dims.len()];
        for (var, slots) in problem.coefficients.iter().enumerate() {
            for (blk, entries) in slots {
                by_block[*blk].push((var, expand(entries)));
            }
        }
        let mut group_of = vec![0; problem.n_variables()];
        for (g, grp) in problem.groups.iter().enumerate() {
            for v in grp.range.clone() {
                group_of[v] = g;
            }
        }
        let n_groups = problem.groups.len();
        let mut adjacency = vec![vec![false; n_groups]; n_groups];
        for vars in &by_block {
            let mut touched: Vec<usize> = vars.iter().map(|(v, _)| group_of[*v]).collect();
            touched.sort_unstable();
            touched.dedup();
            for &g in &touched {
                for &h in &touched {
                    adjacency[g][h] = true;
                }
            }
        }
        Self {
            problem,
            dims,
            c,
            by_block,
            adjacency,
        }
    }

    /// `𝒜(G)_i = Σ_b ⟨A_i^b, G^b⟩`.
    fn apply(&self, g: &[Matrix]) -> Vec<f64> {
        let mut out = vec![0.0; self.problem.n_variables()];
        for (blk, vars) in self.by_block.iter().enumerate() {
            for (var, entries) in vars {
                out[*var] += sparse_dot(entries, &g[blk]);
            }
        }
        out
    }

    /// `𝒜*(y) = Σ_i y_i A_i`.
    fn adjoint(&self, y: &[f64]) -> Vec<Matrix> {
        self.dims
            .iter()
            .zip(&self.by_block)
            .map(|(&d, vars)| {
                let mut m = Matrix::zeros(d, d);
                for (var, entries) in vars {
                    let yv = y[*var];
                    if yv != 0.0 {
                        for &(i, j, v) in entries {
                            m[(i, j)] += yv * v;
                        }
                    }
                }
                m
            })
            .collect()
    }

    /// Schur complement `M_ij = Σ_b Tr(A_i X A_j Z)` with `Z = S⁻¹`.
    fn schur(&self, x: &[Matrix], z: &[Matrix]) -> Matrix {
        let m = self.problem.n_variables();
        let mut out = Matrix::zeros(m, m);
        for (blk, vars) in self.by_block.iter().enumerate() {
            let (xb, zb) = (&x[blk], &z[blk]);
            let d = self.dims[blk];
            let mut f = Matrix::zeros(d, d);
            for (a, (vi, ei)) in vars.iter().enumerate() {
                // F = Z A_i X, so that M_ij = Σ_{(r,s)} A_j[r,s] F[s,r].
                f.fill(0.0);
                for &(p, q, v) in ei {
                    let zcol = zb.column(p);
                    let xrow = xb.row(q);
                    for r in 0..d {
                        let xr = v * xrow[r];
                        if xr != 0.0 {
                            for s in 0..d {
                                f[(s, r)] += zcol[s] * xr;
                            }
                        }
                    }
                }
                for (vj, ej) in &vars[a..] {
                    let val: f64 = ej.iter().map(|&(r, s, w)| w * f[(s, r)]).sum();
                    out[(*vi, *vj)] += val;
                    if vi != vj {
                        out[(*vj, *vi)] += val;
                    }
                }
            }
        }
        out
    }
}

/// Block Cholesky of the Schur complement over the variable-group coupling graph.
struct GroupFactor {
    steps: Vec<FactorStep>,
}

struct FactorStep {
    group: usize,
    l: Cholesky<f64, Dyn>,
    coupling: Vec<(usize, Matrix)>,
}

fn cholesky_with_jitter(a: Matrix) -> Option<Cholesky<f64, Dyn>> {
    if let Some(ch) = Cholesky::new(a.clone()) {
        return Some(ch);
    }
    let scale = a.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut jitter = 1e-14 * scale;
    for _ in 0..8 {
        let mut shifted = a.clone();
        for k in 0..shifted.nrows() {
            shifted[(k, k)] += jitter;
        }
        if let Some(ch) = Cholesky::new(shifted) {
            return Some(ch);
        }
        jitter *= 100.0;
    }
    None
}

impl GroupFactor {
    fn new(m: &Matrix, groups: &[VariableGroup], adjacency: &[Vec<bool>]) -> Option<Self> {
        let n = groups.len();
        let mut blocks: Vec<Vec<Option<Matrix>>> = vec![vec![None; n]; n];
        for g in 0..n {
            for h in 0..n {
                if adjacency[g][h] || g == h {
                    let (rg, rh) = (&groups[g].range, &groups[h].range);
                    blocks[g][h] = Some(m.view((rg.start, rh.start), (rg.len(), rh.len())).into_owned());
                }
            }
        }
        let mut alive = vec![true; n];
        let mut steps = Vec::with_capacity(n);
        for _ in 0..n {
            // Minimum-degree group first; ties broken by index for determinism.
            let k = (0..n)
                .filter(|&g| alive[g])
                .min_by_key(|&g| ((0..n).filter(|&h| h != g && alive[h] && blocks[g][h].is_some()).count(), g))?;
            alive[k] = false;
            let l = cholesky_with_jitter(blocks[k][k].take()?)?;
            let nbrs: Vec<usize> = (0..n).filter(|&h| alive[h] && blocks[k][h].is_some()).collect();
            let mut coupling = Vec::with_capacity(nbrs.len());
            for &h in &nbrs {
                let akh = blocks[k][h].take()?;
                blocks[h][k] = None;
                let y = l.l_dirty().solve_lower_triangular(&akh)?;
                coupling.push((h, y));
            }
            for (h1, y1) in &coupling {
                for (h2, y2) in &coupling {
                    let update = y1.transpose() * y2;
                    match &mut blocks[*h1][*h2] {
                        Some(b) => *b -= update,
                        slot @ None => *slot = Some(-update),
                    }
                }
            }
            steps.push(FactorStep { group: k, l, coupling });
        }
        Some(Self { steps })
    }

    fn solve(&self, rhs: &[f64], groups: &[VariableGroup]) -> Vec<f64> {
        let mut r: Vec<DVector<f64>> = groups
            .iter()
            .map(|g| DVector::from_column_slice(&rhs[g.range.clone()]))
            .collect();
        let mut z: Vec<Option<DVector<f64>>> = vec![None; groups.len()];
        for step in &self.steps {
            let zk = step
                .l
                .l_dirty()
                .solve_lower_triangular(&r[step.group])
                .expect("Cholesky factor has a positive diagonal");
            for (h, y) in &step.coupling {
                r[*h] -= y.transpose() * &zk;
            }
            z[step.group] = Some(zk);
        }
        let mut x: Vec<Option<DVector<f64>>> = vec![None; groups.len()];
        for step in self.steps.iter().rev() {
            let mut v = z[step.group].take().expect("forward pass visited every group");
            for (h, y) in &step.coupling {
                v -= y * x[*h].as_ref().expect("neighbours are solved first");
            }
            let xk = step
                .l
                .l_dirty()
                .tr_solve_lower_triangular(&v)
                .expect("Cholesky factor has a positive diagonal");
            x[step.group] = Some(xk);
        }
        let mut out = vec![0.0; rhs.len()];
        for (g, grp) in groups.iter().enumerate() {
            out[grp.range.clone()].copy_from_slice(x[g].as_ref().expect("every group solved").as_slice());
        }
        out
    }
}

/// Largest `α` with `X + α ΔX ⪰ 0` (infinite if the direction never leaves the cone).
fn max_step(x: &Matrix, dx: &Matrix) -> Option<f64> {
    let ch = Cholesky::new(x.clone())?;
    let l = ch.l();
    let t = l.solve_lower_triangular(dx)?;
    let mut t = l.solve_lower_triangular(&t.transpose())?;
    symmetrize(&mut t);
    let min = t.symmetric_eigenvalues().iter().fold(f64::INFINITY, |m, &v| m.min(v));
    Some(if min < 0.0 { -1.0 / min } else { f64::INFINITY })
}

fn inverse_spd(s: &Matrix) -> Option<Matrix> {
    let mut inv = Cholesky::new(s.clone())?.inverse();
    symmetrize(&mut inv);
    Some(inv)
}

/// Primal infeasibility is declared when the dual objective has grown this far
/// beyond the scale of the data while the dual residual stays small.
const DIVERGENCE: f64 = 1e10;

pub fn solve(problem: &SdpProblem, options: &SdpOptions) -> Result<SdpSolution> {
    problem.validate()?;
    let prep = Prepared::new(problem);
    let b = problem.objective.clone();
    let n_total: usize = prep.dims.iter().sum();

    let data_scale = prep
        .c
        .iter()
        .map(max_abs)
        .chain(b.iter().map(|v| v.abs()))
        .fold(0.0f64, f64::max);
    let start = data_scale + 1.0;
    let mut x: Vec<Matrix> = prep.dims.iter().map(|&d| Matrix::identity(d, d) * start).collect();
    let mut s: Vec<Matrix> = x.clone();
    let mut y = vec![0.0; problem.n_variables()];

    let mut history = Vec::new();
    let mut status = SdpStatus::MaxIterations;
    let mut message = String::from("iteration limit reached");
    let mut stalled = 0;
    let mut iterations = 0;

    let primal_objective = |x: &[Matrix]| -> f64 { prep.c.iter().zip(x).map(|(c, x)| frob_dot(c, x)).sum() };
    let dual_objective = |y: &[f64]| -> f64 { b.iter().zip(y).map(|(b, y)| b * y).sum() };

    let (mut gap, mut residual);
    loop {
        let ax = prep.apply(&x);
        let rp: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let aty = prep.adjoint(&y);
        let rd: Vec<Matrix> = prep
            .c
            .iter()
            .zip(&s)
            .zip(&aty)
            .map(|((c, s), a)| c - s - a)
            .collect();
        let pobj = primal_objective(&x);
        let dobj = dual_objective(&y);
        let comp: f64 = x.iter().zip(&s).map(|(x, s)| frob_dot(x, s)).sum();
        let rp_max = rp.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let rd_max = rd.iter().map(max_abs).fold(0.0f64, f64::max);
        history.push(IterationRecord {
            primal_objective: pobj,
            dual_objective: dobj,
            complementarity: comp,
            primal_residual: rp_max,
            dual_residual: rd_max,
        });
        gap = comp.max((pobj - dobj).abs());
        residual = rp_max.max(rd_max);

        if !(gap.is_finite() && residual.is_finite()) {
            message = "numerical breakdown".into();
            break;
        }
        if gap <= options.gap_tolerance && residual <= options.feasibility_tolerance {
            status = SdpStatus::Optimal;
            message = "converged".into();
            break;
        }
        if dobj > DIVERGENCE * (1.0 + data_scale) && rd_max <= options.feasibility_tolerance * dobj.abs() {
            status = SdpStatus::Infeasible;
            message = "dual objective unbounded: primal infeasible".into();
            break;
        }
        if pobj < -DIVERGENCE * (1.0 + data_scale) && rp_max <= options.feasibility_tolerance * pobj.abs() {
            status = SdpStatus::Infeasible;
            message = "primal objective unbounded: dual infeasible".into();
            break;
        }
        if iterations >= options.max_iterations {
            break;
        }
        iterations += 1;

        let Some(z) = s.iter().map(inverse_spd).collect::<Option<Vec<_>>>() else {
            message = "dual slack lost definiteness".into();
            break;
        };
        let schur = prep.schur(&x, &z);
        let Some(factor) = GroupFactor::new(&schur, &problem.groups, &prep.adjacency) else {
            message = "Schur complement factorization failed".into();
            break;
        };
        let mu = comp / n_total as f64;
        // X R_d Z is shared by predictor and corrector.
        let xrz: Vec<Matrix> = x.iter().zip(&rd).zip(&z).map(|((x, r), z)| x * r * z).collect();

        let direction = |sigma_mu: f64, correction: Option<&[Matrix]>| -> (Vec<f64>, Vec<Matrix>, Vec<Matrix>) {
            // M Δy = b + 𝒜(X R_d Z − σμ Z + K)
            let g: Vec<Matrix> = (0..x.len())
                .map(|k| {
                    let mut g = &xrz[k] - &z[k] * sigma_mu;
                    if let Some(kc) = correction {
                        g += &kc[k];
                    }
                    g
                })
                .collect();
            let ag = prep.apply(&g);
            let rhs: Vec<f64> = b.iter().zip(&ag).map(|(b, a)| b + a).collect();
            let dy = factor.solve(&rhs, &problem.groups);
            let atdy = prep.adjoint(&dy);
            let ds: Vec<Matrix> = rd.iter().zip(&atdy).map(|(r, a)| r - a).collect();
            // ΔX = σμZ − X − K − X ΔS Z
            let dx: Vec<Matrix> = (0..x.len())
                .map(|k| {
                    let mut d = &z[k] * sigma_mu - &x[k] - &x[k] * &ds[k] * &z[k];
                    if let Some(kc) = correction {
                        d -= &kc[k];
                    }
                    symmetrize(&mut d);
                    d
                })
                .collect();
            (dy, dx, ds)
        };
        let step_to_boundary = |v: &[Matrix], dv: &[Matrix]| -> Option<f64> {
            v.iter()
                .zip(dv)
                .map(|(v, d)| max_step(v, d))
                .try_fold(f64::INFINITY, |m, a| Some(m.min(a?)))
        };

        let (_, dx_p, ds_p) = direction(0.0, None);
        let (Some(ap), Some(ad)) = (step_to_boundary(&x, &dx_p), step_to_boundary(&s, &ds_p)) else {
            message = "iterate left the cone".into();
            break;
        };
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let predicted: f64 = (0..x.len())
            .map(|k| frob_dot(&(&x[k] + &dx_p[k] * ap), &(&s[k] + &ds_p[k] * ad)))
            .sum();
        let sigma = (predicted / comp).clamp(0.0, 1.0).powi(3);
        let correction: Vec<Matrix> = (0..x.len()).map(|k| &dx_p[k] * &ds_p[k] * &z[k]).collect();
        let (dy, dx, ds) = direction(sigma * mu, Some(&correction));
        let (Some(ap), Some(ad)) = (step_to_boundary(&x, &dx), step_to_boundary(&s, &ds)) else {
            message = "iterate left the cone".into();
            break;
        };
        let ap = (options.step_fraction * ap).min(1.0);
        let ad = (options.step_fraction * ad).min(1.0);
        for k in 0..x.len() {
            x[k] += &dx[k] * ap;
            s[k] += &ds[k] * ad;
            symmetrize(&mut x[k]);
            symmetrize(&mut s[k]);
        }
        for (yv, d) in y.iter_mut().zip(&dy) {
            *yv += ad * d;
        }
        if ap < 1e-10 && ad < 1e-10 {
            stalled += 1;
            if stalled >= 3 {
                message = "step length collapsed".into();
                break;
            }
        } else {
            stalled = 0;
        }
    }

    Ok(SdpSolution {
        status,
        objective_value: primal_objective(&x),
        dual_objective: dual_objective(&y),
        x,
        s,
        y,
        duality_gap: gap,
        max_residual: residual,
        iterations,
        history,
        message,
    })
}
