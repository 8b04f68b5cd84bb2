//! Time sweeps over a grid and their CSV / JSON / gnuplot renderings.

use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::channel::{DephasingChannel, FieldOrientation, SpectralDistribution};
use crate::entanglement::{genuine_negativity, negativity, verify_witness, GenuineNegativityResult, WitnessReport};
use crate::error::{Error, Result};
use crate::linalg::{all_bipartitions, BipartitionMask, CMatrix, DensityMatrix};
use crate::nonlocality::{
    analytic_bell_expectation, ardehali_operator, bell_expectation, genuine_nonlocality_test, ghz6_operator,
    sudden_death_time, SuddenDeath,
};
use crate::parallel::{par_map, Execution};
use crate::states::{evolved_family_with, FamilyParams, ResolvedState};
use crate::tolerance;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl TimeGrid {
    pub fn new(start: f64, stop: f64, points: usize) -> Result<Self> {
        let grid = Self { start, stop, points };
        grid.validate()?;
        Ok(grid)
    }

    /// Parses `start:stop:points`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("time grid {text:?} is not start:stop:points"));
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let start = parts[0].trim().parse().map_err(|_| bad())?;
        let stop = parts[1].trim().parse().map_err(|_| bad())?;
        let points = parts[2].trim().parse().map_err(|_| bad())?;
        Self::new(start, stop, points)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.start.is_finite() || self.start < 0.0 || !self.stop.is_finite() || self.stop <= self.start || self.points < 2 {
            return Err(Error::InvalidConfig(format!(
                "time grid needs 0 <= start < stop and at least 2 points (got {}:{}:{})",
                self.start, self.stop, self.points
            )));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        crate::linspace(self.start, self.stop, self.points)
    }
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            start: 0.0,
            stop: 5.0,
            points: 101,
        }
    }
}

/// Produces `ρ(t)` for a configured source and channel. Named families under a
/// z-axis field use their closed form; everything else goes through the full
/// channel.
#[derive(Debug, Clone)]
pub struct Evolver {
    source: ResolvedState,
    orientation: FieldOrientation,
    spectrum: SpectralDistribution,
    initial: DensityMatrix,
    channel: Option<DephasingChannel>,
}

impl Evolver {
    pub fn new(source: ResolvedState, orientation: FieldOrientation, spectrum: SpectralDistribution) -> Result<Self> {
        if let ResolvedState::Family(p) = &source {
            p.validate()?;
        }
        spectrum.validate()?;
        let initial = source.initial()?;
        let closed_form = matches!(source, ResolvedState::Family(_)) && orientation.is_z_axis();
        let channel = if closed_form {
            None
        } else {
            Some(DephasingChannel::new(initial.n_qubits(), orientation, spectrum.clone())?)
        };
        Ok(Self {
            source,
            orientation,
            spectrum,
            initial,
            channel,
        })
    }

    pub fn initial(&self) -> &DensityMatrix {
        &self.initial
    }

    pub fn source(&self) -> &ResolvedState {
        &self.source
    }

    pub fn n_qubits(&self) -> usize {
        self.initial.n_qubits()
    }

    pub fn at(&self, t: f64) -> Result<DensityMatrix> {
        match (&self.channel, &self.source) {
            (None, ResolvedState::Family(p)) => evolved_family_with(p, t, &self.orientation, &self.spectrum),
            (Some(ch), _) => ch.evolve(&self.initial, t),
            (None, ResolvedState::Explicit(_)) => unreachable!("explicit states always carry a channel"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub source: ResolvedState,
    pub source_label: String,
    pub grid: TimeGrid,
    pub orientation: FieldOrientation,
    pub spectrum: SpectralDistribution,
    pub seed: u64,
    pub tolerance: f64,
    pub execution: Execution,
    pub deterministic: bool,
}

impl SweepConfig {
    pub fn for_family(params: FamilyParams, grid: TimeGrid) -> Self {
        Self {
            source_label: family_label(&params),
            source: ResolvedState::Family(params),
            grid,
            orientation: FieldOrientation::z_axis(),
            spectrum: SpectralDistribution::StandardCauchy,
            seed: 0,
            tolerance: tolerance::INVARIANCE,
            execution: Execution::Parallel,
            deterministic: true,
        }
    }

    pub fn evolver(&self) -> Result<Evolver> {
        Evolver::new(self.source.clone(), self.orientation, self.spectrum.clone())
    }
}

pub fn family_label(params: &FamilyParams) -> String {
    let mut s = params.name().to_string();
    for (k, v) in params.parameters() {
        let _ = write!(s, " {k}={v}");
    }
    s
}

pub fn describe_spectrum(spectrum: &SpectralDistribution) -> String {
    match spectrum {
        SpectralDistribution::StandardCauchy => "cauchy".into(),
        SpectralDistribution::Cauchy { center, scale } => format!("cauchy:{center},{scale}"),
        SpectralDistribution::Tabulated { samples } => format!("tabulated({} samples)", samples.len()),
    }
}

/// Full double precision: 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct EntanglementRow {
    pub t: f64,
    pub genuine_negativity: f64,
    pub negativities: Vec<f64>,
    pub state_change_norm: f64,
    pub duality_gap: f64,
    pub certificates_passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepFailure {
    pub t: f64,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntanglementSweep {
    pub masks: Vec<String>,
    pub rows: Vec<EntanglementRow>,
    /// First grid point whose computation failed; rows stop just before it.
    pub failure: Option<SweepFailure>,
    pub max_deviation: f64,
    pub invariant: bool,
}

fn entanglement_point(evolver: &Evolver, masks: &[BipartitionMask], t: f64) -> Result<EntanglementRow> {
    let rho = evolver.at(t)?;
    let gn = genuine_negativity(&rho)?;
    let report = verify_witness(&gn, &rho);
    let negativities = masks.iter().map(|m| negativity(&rho, m)).collect::<Result<Vec<_>>>()?;
    Ok(EntanglementRow {
        t,
        genuine_negativity: gn.value,
        negativities,
        state_change_norm: rho.frobenius_distance(evolver.initial()),
        duality_gap: gn.diagnostics.duality_gap,
        certificates_passed: report.all_passed(),
    })
}

/// Genuine negativity, per-bipartition negativity and state change on the grid.
/// Points run concurrently; rows come back in grid order.
pub fn run_entanglement_sweep(config: &SweepConfig) -> Result<EntanglementSweep> {
    config.grid.validate()?;
    let evolver = config.evolver()?;
    let masks = all_bipartitions(evolver.n_qubits());
    let times = config.grid.times();
    let results = par_map(config.execution, &times, |_, &t| entanglement_point(&evolver, &masks, t));
    let mut rows = Vec::with_capacity(times.len());
    let mut failure = None;
    for (t, r) in times.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                failure = Some(SweepFailure {
                    t: *t,
                    message: e.to_string(),
                });
                break;
            }
        }
    }
    let e0 = rows.first().map_or(0.0, |r| r.genuine_negativity);
    let max_deviation = rows.iter().map(|r| (r.genuine_negativity - e0).abs()).fold(0.0, f64::max);
    Ok(EntanglementSweep {
        masks: masks.iter().map(BipartitionMask::label).collect(),
        invariant: failure.is_none() && max_deviation <= config.tolerance,
        rows,
        failure,
        max_deviation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BellModel {
    /// `Tr(ρ(t) B)` on the evolved state.
    Numeric,
    /// Closed-form expectation for `ρ_{α,β}(t)`.
    Analytic,
}

#[derive(Debug, Clone, Serialize)]
pub struct BellRow {
    pub t: f64,
    pub bell_expectation: f64,
    pub genuinely_nonlocal: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BellSweep {
    pub model: BellModel,
    pub settings: &'static str,
    pub rows: Vec<BellRow>,
    pub failure: Option<SweepFailure>,
    /// Closed-form classification for `ρ_{α,β}`.
    pub sudden_death: Option<SuddenDeath>,
    /// First grid time at which the column is no longer above the bound.
    pub first_grid_crossing: Option<f64>,
}

/// Ardehali expectation along the grid. `ρ_{α,β}` is measured with settings
/// adapted to its DFS component; other four-qubit states use the plain operator.
pub fn run_bell_sweep(config: &SweepConfig, model: BellModel) -> Result<BellSweep> {
    config.grid.validate()?;
    let evolver = config.evolver()?;
    if evolver.n_qubits() != 4 {
        return Err(Error::InvalidConfig(format!(
            "Bell sweep needs a four-qubit state, got {} qubits",
            evolver.n_qubits()
        )));
    }
    let alpha_beta = match config.source {
        ResolvedState::Family(FamilyParams::RhoAlphaBeta { alpha, beta }) => Some((alpha, beta)),
        _ => None,
    };
    if model == BellModel::Analytic && alpha_beta.is_none() {
        return Err(Error::InvalidConfig("the analytic Bell model exists only for rho_alpha_beta".into()));
    }
    let (op, settings): (CMatrix, &'static str) = if alpha_beta.is_some() {
        (ghz6_operator(), "ghz6")
    } else {
        (ardehali_operator().materialize(), "standard")
    };
    let times = config.grid.times();
    let results = par_map(config.execution, &times, |_, &t| -> Result<f64> {
        match (model, alpha_beta) {
            (BellModel::Analytic, Some((a, b))) => analytic_bell_expectation(a, b, t),
            _ => bell_expectation(&evolver.at(t)?, &op),
        }
    });
    let mut rows = Vec::with_capacity(times.len());
    let mut failure = None;
    for (t, r) in times.iter().zip(results) {
        match r {
            Ok(v) => rows.push(BellRow {
                t: *t,
                bell_expectation: v,
                genuinely_nonlocal: genuine_nonlocality_test(v, 4),
            }),
            Err(e) => {
                failure = Some(SweepFailure {
                    t: *t,
                    message: e.to_string(),
                });
                break;
            }
        }
    }
    let sudden_death = alpha_beta.map(|(a, b)| sudden_death_time(a, b)).transpose()?;
    let first_grid_crossing = rows.iter().find(|r| !r.genuinely_nonlocal).map(|r| r.t);
    Ok(BellSweep {
        model,
        settings,
        rows,
        failure,
        sudden_death,
        first_grid_crossing,
    })
}

/// `# key=value` header block shared by every CSV.
#[derive(Debug, Clone)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(command: &str, config: &SweepConfig) -> Self {
        let [x, y, z] = config.orientation.components();
        let mut m = Self { entries: Vec::new() };
        m.push("generator", format!("qdephase {command}"));
        m.push("version", VERSION);
        m.push("state", &config.source_label);
        m.push("orientation", format!("{x},{y},{z}"));
        m.push("spectrum", describe_spectrum(&config.spectrum));
        m.push("grid", format!("{}:{}:{}", config.grid.start, config.grid.stop, config.grid.points));
        m.push("seed", config.seed);
        m.push("tol_invariance", format!("{:e}", config.tolerance));
        m.push("tol_sdp_gap", format!("{:e}", tolerance::SDP_GAP));
        m.push("tol_sdp_feasibility", format!("{:e}", tolerance::SDP_FEASIBILITY));
        m.push("tol_witness", format!("{:e}", tolerance::WITNESS_DECOMPOSITION));
        if !config.deterministic {
            let now = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
            m.push("timestamp_unix", now);
        }
        m
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
    }
}

pub fn entanglement_header(masks: &[String]) -> String {
    let mut cols = vec!["t".to_string(), "E".to_string()];
    cols.extend(masks.iter().map(|m| format!("N_{m}")));
    cols.push("state_change_norm".into());
    cols.join(",")
}

pub const BELL_HEADER: &str = "t,bell_expectation,is_genuinely_nonlocal";

fn failed_row(columns: usize) -> String {
    let mut s = String::from("FAILED");
    s.push_str(&",".repeat(columns - 1));
    s
}

pub fn entanglement_csv(sweep: &EntanglementSweep, meta: &Metadata) -> String {
    let mut out = meta.render();
    let header = entanglement_header(&sweep.masks);
    let columns = header.split(',').count();
    out.push_str(&header);
    out.push('\n');
    for r in &sweep.rows {
        let mut fields = vec![fmt_real(r.t), fmt_real(r.genuine_negativity)];
        fields.extend(r.negativities.iter().map(|&n| fmt_real(n)));
        fields.push(fmt_real(r.state_change_norm));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    match &sweep.failure {
        Some(f) => {
            let _ = writeln!(out, "# error at t={}: {}", fmt_real(f.t), f.message);
            out.push_str(&failed_row(columns));
            out.push('\n');
        }
        None => {
            let _ = writeln!(out, "# max_abs_delta_E={}", fmt_real(sweep.max_deviation));
            let _ = writeln!(out, "# invariant={}", sweep.invariant);
        }
    }
    out
}

pub fn describe_sudden_death(sd: &SuddenDeath) -> String {
    match sd {
        SuddenDeath::Never => "never".into(),
        SuddenDeath::Immediate => "immediate".into(),
        SuddenDeath::At(t) => format!("at:{}", fmt_real(*t)),
    }
}

pub fn bell_csv(sweep: &BellSweep, meta: &Metadata) -> String {
    let mut out = meta.render();
    let _ = writeln!(out, "# bell_model={:?}", sweep.model);
    let _ = writeln!(out, "# bell_settings={}", sweep.settings);
    out.push_str(BELL_HEADER);
    out.push('\n');
    for r in &sweep.rows {
        let _ = writeln!(out, "{},{},{}", fmt_real(r.t), fmt_real(r.bell_expectation), r.genuinely_nonlocal);
    }
    if let Some(f) = &sweep.failure {
        let _ = writeln!(out, "# error at t={}: {}", fmt_real(f.t), f.message);
        out.push_str(&failed_row(3));
        out.push('\n');
    }
    let sd = sweep.sudden_death.as_ref().map_or_else(|| "n/a".to_string(), describe_sudden_death);
    let _ = writeln!(out, "# sudden_death_time={sd}");
    let crossing = sweep.first_grid_crossing.map_or_else(|| "none".to_string(), fmt_real);
    let _ = writeln!(out, "# first_grid_crossing={crossing}");
    out
}

/// Row-major nested arrays of `[re, im]` pairs.
pub fn matrix_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect()))
            .collect(),
    )
}

pub fn state_json(rho: &DensityMatrix, t: f64) -> Value {
    json!({
        "n_qubits": rho.n_qubits(),
        "t": t,
        "trace": rho.trace().re,
        "min_eigenvalue": rho.min_eigenvalue(),
        "matrix": matrix_json(rho.matrix()),
    })
}

pub fn witness_json(result: &GenuineNegativityResult, report: &WitnessReport, t: f64) -> Value {
    json!({
        "t": t,
        "E": result.value,
        "witness_expectation": result.witness_expectation,
        "summary": report.summary(),
        "certificates_passed": report.all_passed(),
        "real_witness": result.real_witness,
        "solver": result.diagnostics,
        "checks": report.checks,
        "W": matrix_json(&result.witness),
        "bipartitions": result.decompositions.iter().map(|d| json!({
            "bipartition": d.mask.label(),
            "P": matrix_json(&d.p),
            "Q": matrix_json(&d.q),
        })).collect::<Vec<_>>(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Entanglement,
    Bell,
}

/// A gnuplot script plotting the columns of a sweep CSV against `Γt`.
pub fn gnuplot_script(csv_path: &str, kind: PlotKind, output: Option<&str>) -> String {
    let path = csv_path.replace('\'', "''");
    let mut s = String::new();
    if let Some(png) = output {
        let _ = writeln!(s, "set terminal pngcairo size 900,600");
        let _ = writeln!(s, "set output '{}'", png.replace('\'', "''"));
    }
    s.push_str("set datafile separator ','\n");
    s.push_str("set datafile commentschars '#'\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str("set xlabel 'Gamma t'\n");
    s.push_str("set grid\n");
    match kind {
        PlotKind::Entanglement => {
            s.push_str("set ylabel 'genuine negativity'\n");
            let _ = writeln!(s, "plot '{path}' using 1:2 with linespoints");
        }
        PlotKind::Bell => {
            s.push_str("set ylabel '<B_A>'\n");
            let _ = writeln!(
                s,
                "plot '{path}' using 1:2 with linespoints, 8 with lines dashtype 2 title 'genuine nonlocality bound'"
            );
        }
    }
    s
}
