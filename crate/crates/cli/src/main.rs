use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qdephase::channel::{FieldOrientation, SpectralDistribution};
use qdephase::entanglement::{genuine_negativity, random_invariance_scan, verify_witness, ScanConfig};
use qdephase::linalg::c;
use qdephase::parallel::with_jobs;
use qdephase::states::{FamilyParams, ResolvedState, StateConfig};
use qdephase::sweep::{
    bell_csv, entanglement_csv, gnuplot_script, run_bell_sweep, run_entanglement_sweep, state_json, witness_json,
    BellModel, Evolver, Metadata, PlotKind, SweepConfig, TimeGrid,
};
use qdephase::{tolerance, Error};
use serde_json::json;

/// Collective dephasing, genuine multipartite entanglement and Bell nonlocality.
#[derive(Parser)]
#[command(name = "qdephase", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a state and print the density matrix as JSON.
    Evolve {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        channel: ChannelArgs,
        /// Time in units of the dephasing rate.
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Genuine negativity and per-bipartition negativity over a time grid (CSV).
    SweepEntanglement {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Ardehali Bell expectation over a time grid (CSV).
    SweepBell {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Evaluate on the evolved state, or use the closed form for rho_alpha_beta.
        #[arg(long, value_enum, default_value = "numeric")]
        model: Model,
    },
    /// Random search for time-invariant genuine entanglement (JSON report).
    InvarianceScan {
        #[arg(long, default_value_t = 3)]
        n_qubits: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "0:5:26")]
        t_grid: String,
        #[arg(long, default_value_t = tolerance::INVARIANCE)]
        tol_invariance: f64,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Omit the timestamp so identical runs give identical bytes.
        #[arg(long)]
        deterministic: bool,
    },
    /// Optimal witness, its decomposition and certificate checks (JSON).
    Witness {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a gnuplot script that plots a sweep CSV.
    EmitPlotScript {
        #[arg(long)]
        csv: String,
        #[arg(long, value_enum, default_value = "entanglement")]
        kind: Kind,
        /// Render to this PNG instead of an interactive terminal.
        #[arg(long)]
        png: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Numeric,
    Analytic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Entanglement,
    Bell,
}

#[derive(Args)]
struct StateArgs {
    /// rho_a, rho_ab, rho_eta, rho_alpha or rho_alpha_beta.
    #[arg(long, conflicts_with = "state_json")]
    family: Option<String>,
    /// Family parameters, e.g. alpha=0.9,beta=0.85.
    #[arg(long, default_value = "")]
    params: String,
    /// JSON state description (family or explicit mixture of kets).
    #[arg(long)]
    state_json: Option<PathBuf>,
}

#[derive(Args)]
struct ChannelArgs {
    /// Field direction x,y,z (unit vector).
    #[arg(long, default_value = "0,0,1", allow_hyphen_values = true)]
    orientation: String,
    /// cauchy, cauchy:x0,scale or table:PATH (JSON list of [t, re, im]).
    #[arg(long, default_value = "cauchy")]
    spectrum: String,
}

#[derive(Args)]
struct SweepArgs {
    /// start:stop:points in units of the dephasing rate.
    #[arg(long, default_value = "0:5:101")]
    t_grid: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit the timestamp so identical runs give identical bytes.
    #[arg(long)]
    deterministic: bool,
    #[arg(long, default_value_t = tolerance::INVARIANCE)]
    tol_invariance: f64,
    #[arg(long)]
    jobs: Option<usize>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: if e.is_numerical() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn parse_params(text: &str) -> Result<BTreeMap<String, f64>, Failure> {
    let mut out = BTreeMap::new();
    for pair in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| config_error(format!("parameter {pair:?} is not key=value")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| config_error(format!("parameter {k} has non-numeric value {v:?}")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

fn resolve_state(args: &StateArgs) -> Result<(ResolvedState, String), Failure> {
    match (&args.family, &args.state_json) {
        (Some(family), None) => {
            let params = FamilyParams::from_name(family, &parse_params(&args.params)?)?;
            params.validate()?;
            Ok((ResolvedState::Family(params), qdephase::sweep::family_label(&params)))
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
            let state = StateConfig::from_json(&text)?.resolve()?;
            let label = match &state {
                ResolvedState::Family(p) => qdephase::sweep::family_label(p),
                ResolvedState::Explicit(_) => format!("json:{}", path.display()),
            };
            Ok((state, label))
        }
        _ => Err(config_error("give exactly one of --family or --state-json")),
    }
}

fn parse_orientation(text: &str) -> Result<FieldOrientation, Failure> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| config_error(format!("orientation {text:?} is not x,y,z")))?;
    match parts[..] {
        [x, y, z] => Ok(FieldOrientation::new(x, y, z)?),
        _ => Err(config_error(format!("orientation {text:?} needs three components"))),
    }
}

fn parse_spectrum(text: &str) -> Result<SpectralDistribution, Failure> {
    if text == "cauchy" {
        return Ok(SpectralDistribution::StandardCauchy);
    }
    if let Some(path) = text.strip_prefix("table:") {
        let raw = fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {path}: {e}")))?;
        let rows: Vec<[f64; 3]> =
            serde_json::from_str(&raw).map_err(|e| config_error(format!("spectrum table {path}: {e}")))?;
        return Ok(SpectralDistribution::tabulated(
            rows.into_iter().map(|[t, re, im]| (t, c(re, im))).collect(),
        )?);
    }
    if let Some(args) = text.strip_prefix("cauchy:") {
        let nums: Vec<f64> = args
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| config_error(format!("spectrum {text:?} is not cauchy:x0,scale")))?;
        return match nums[..] {
            [x0] => Ok(SpectralDistribution::cauchy(x0, 1.0)?),
            [x0, scale] => Ok(SpectralDistribution::cauchy(x0, scale)?),
            _ => Err(config_error(format!("spectrum {text:?} is not cauchy:x0,scale"))),
        };
    }
    Err(config_error(format!("unknown spectrum {text:?}")))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| config_error(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn check_time(t: f64) -> Result<(), Failure> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NegativeTime(t).into())
    }
}

fn sweep_config(state: &StateArgs, channel: &ChannelArgs, sweep: &SweepArgs) -> Result<SweepConfig, Failure> {
    let (source, source_label) = resolve_state(state)?;
    Ok(SweepConfig {
        source,
        source_label,
        grid: TimeGrid::parse(&sweep.t_grid)?,
        orientation: parse_orientation(&channel.orientation)?,
        spectrum: parse_spectrum(&channel.spectrum)?,
        seed: sweep.seed,
        tolerance: sweep.tol_invariance,
        execution: Default::default(),
        deterministic: sweep.deterministic,
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Evolve { state, channel, t, out } => {
            check_time(t)?;
            let (source, _) = resolve_state(&state)?;
            let evolver = Evolver::new(source, parse_orientation(&channel.orientation)?, parse_spectrum(&channel.spectrum)?)?;
            let rho = evolver.at(t)?;
            emit(&out, &pretty(&state_json(&rho, t)))
        }
        Command::SweepEntanglement { state, channel, sweep } => {
            let mut config = sweep_config(&state, &channel, &sweep)?;
            let result = with_jobs(sweep.jobs, |exec| {
                config.execution = exec;
                run_entanglement_sweep(&config)
            })?;
            let csv = entanglement_csv(&result, &Metadata::new("sweep-entanglement", &config));
            emit(&sweep.out, &csv)?;
            match result.failure {
                Some(f) => Err(Failure {
                    code: 3,
                    message: format!("sweep stopped at t={}: {}", f.t, f.message),
                }),
                None => Ok(()),
            }
        }
        Command::SweepBell {
            state,
            channel,
            sweep,
            model,
        } => {
            let mut config = sweep_config(&state, &channel, &sweep)?;
            let model = match model {
                Model::Numeric => BellModel::Numeric,
                Model::Analytic => BellModel::Analytic,
            };
            let result = with_jobs(sweep.jobs, |exec| {
                config.execution = exec;
                run_bell_sweep(&config, model)
            })?;
            emit(&sweep.out, &bell_csv(&result, &Metadata::new("sweep-bell", &config)))?;
            match result.failure {
                Some(f) => Err(Failure {
                    code: 3,
                    message: format!("sweep stopped at t={}: {}", f.t, f.message),
                }),
                None => Ok(()),
            }
        }
        Command::InvarianceScan {
            n_qubits,
            samples,
            seed,
            t_grid,
            tol_invariance,
            jobs,
            out,
            deterministic,
        } => {
            let mut config = ScanConfig::new(n_qubits, samples, seed);
            config.times = TimeGrid::parse(&t_grid)?.times();
            config.tolerance = tol_invariance;
            let report = with_jobs(jobs, |exec| random_invariance_scan(&config, exec))?;
            let hits = report.nontrivial_hits.len();
            if hits > 0 {
                eprintln!(
                    "NOTE: {hits} nontrivial time-invariant sample(s) found: {:?}",
                    report.nontrivial_hits
                );
            }
            let mut doc = json!({
                "generator": "qdephase invariance-scan",
                "version": qdephase::sweep::VERSION,
                "nontrivial_hit_count": hits,
                "report": report,
            });
            if !deterministic {
                let now = std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs());
                doc["timestamp_unix"] = json!(now);
            }
            emit(&out, &pretty(&doc))
        }
        Command::Witness { state, channel, t, out } => {
            check_time(t)?;
            let (source, _) = resolve_state(&state)?;
            let evolver = Evolver::new(source, parse_orientation(&channel.orientation)?, parse_spectrum(&channel.spectrum)?)?;
            let rho = evolver.at(t)?;
            let result = genuine_negativity(&rho)?;
            let report = verify_witness(&result, &rho);
            emit(&out, &pretty(&witness_json(&result, &report, t)))
        }
        Command::EmitPlotScript { csv, kind, png, out } => {
            let kind = match kind {
                Kind::Entanglement => PlotKind::Entanglement,
                Kind::Bell => PlotKind::Bell,
            };
            emit(&out, &gnuplot_script(&csv, kind, png.as_deref()))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
