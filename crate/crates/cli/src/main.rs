//! `cvqkd`: key-rate evaluation, parameter sweeps and decoherence-threshold
//! searches from a TOML/JSON configuration or an embedded preset.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cvqkd_core::attacks::cloner_variance;
use cvqkd_core::exec::configure_workers;
use cvqkd_core::optimize::find_tau_threshold;
use cvqkd_core::protocol::derived_noises;
use cvqkd_core::sweep::{evaluate_point, run_sweep, SweepSpec};
use cvqkd_core::{AttackClass, Execution, Regime};
use serde_json::{json, Value};

use config::{ConfigError, Needs, RunConfig};
use output::{Cell, Format};

const EXIT_CONFIG: u8 = 2;
const EXIT_ALL_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "cvqkd", version, about = "CV-QKD key rates under individual, coherent and hybrid attacks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Key-rate reports for a single operating point.
    Evaluate(Common),
    /// Sweep one variable over a grid (needs a `[sweep]` section).
    Sweep(Common),
    /// Memory transmissivities where the optimal attack class changes.
    Threshold(Common),
    /// Run an embedded figure preset as a sweep.
    Preset {
        name: PresetName,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Configuration file (TOML, or JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Embedded preset used as the base configuration.
    #[arg(long, value_enum)]
    preset: Option<PresetName>,
    /// Override a configuration entry, e.g. `--set model.xi=0.02`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, env = "CVQKD_WORKERS")]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
    #[arg(long, value_enum)]
    attack: Option<AttackArg>,
    /// Only reverse reconciliation is implemented.
    #[arg(long, value_enum)]
    reconciliation: Option<Reconciliation>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetName {
    Fig2,
    Fig3,
    #[value(name = "figA1", alias = "figa1")]
    FigA1,
}

impl PresetName {
    fn text(self) -> &'static str {
        match self {
            PresetName::Fig2 => include_str!("presets/fig2.toml"),
            PresetName::Fig3 => include_str!("presets/fig3.toml"),
            PresetName::FigA1 => include_str!("presets/figA1.toml"),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Asymptotic,
    Finite,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum AttackArg {
    Individual,
    Coherent,
    Hybrid,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum Reconciliation {
    Reverse,
    Direct,
}

enum Failure {
    Config(String),
    Io(io::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

/// Rows written and how many of them are flagged.
struct Outcome {
    rows: usize,
    flagged: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, preset, verb) = match cli.command {
        Command::Evaluate(c) => (c, None, Verb::Evaluate),
        Command::Sweep(c) => (c, None, Verb::Sweep),
        Command::Threshold(c) => (c, None, Verb::Threshold),
        Command::Preset { name, common } => (common, Some(name), Verb::Sweep),
    };
    match run(&common, preset, verb) {
        Ok(o) if o.rows > 0 && o.flagged == o.rows => {
            eprintln!("error: all {} points failed", o.rows);
            ExitCode::from(EXIT_ALL_FAILED)
        }
        Ok(o) => {
            if o.flagged > 0 {
                eprintln!("warning: {} of {} rows flagged", o.flagged, o.rows);
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Verb {
    Evaluate,
    Sweep,
    Threshold,
}

fn load(common: &Common, preset: Option<PresetName>, verb: Verb) -> Result<RunConfig, Failure> {
    let mut root = match (preset.or(common.preset), &common.config) {
        (Some(_), Some(_)) => return Err(Failure::Config("give either a preset or --config, not both".into())),
        (Some(p), None) => config::parse(p.text())?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            config::parse(&text)?
        }
        (None, None) => Value::Object(Default::default()),
    };
    for assignment in &common.overrides {
        config::apply_override(&mut root, assignment)?;
    }
    let reconciliation = match common.reconciliation {
        Some(Reconciliation::Reverse) => "reverse",
        Some(Reconciliation::Direct) => "direct",
        None => root.pointer("/run/reconciliation").and_then(Value::as_str).unwrap_or("reverse"),
    };
    match reconciliation {
        "reverse" => {}
        "direct" => {
            return Err(Failure::Config(
                "direct reconciliation is out of scope: only reverse reconciliation is implemented".into(),
            ))
        }
        other => return Err(Failure::Config(format!("invalid `run.reconciliation`: `{other}` (reverse)"))),
    }
    let needs = Needs {
        sweep: verb == Verb::Sweep,
        tau_supplied: verb == Verb::Threshold,
    };
    let mut cfg = config::resolve(&root, needs)?;
    match common.regime {
        Some(RegimeArg::Asymptotic) => cfg.regimes = vec![Regime::Asymptotic],
        Some(RegimeArg::Finite) => cfg.regimes = vec![Regime::Finite],
        Some(RegimeArg::Both) => cfg.regimes = Regime::ALL.to_vec(),
        None => {}
    }
    match common.attack {
        Some(AttackArg::Individual) => cfg.attacks = vec![AttackClass::Individual],
        Some(AttackArg::Coherent) => cfg.attacks = vec![AttackClass::Coherent],
        Some(AttackArg::Hybrid) => cfg.attacks = vec![AttackClass::Hybrid],
        Some(AttackArg::All) => cfg.attacks = AttackClass::ALL.to_vec(),
        None => {}
    }
    if cfg.regimes.is_empty() || cfg.attacks.is_empty() {
        return Err(Failure::Config("no attack classes or regimes selected".into()));
    }
    Ok(cfg)
}

fn run(common: &Common, preset: Option<PresetName>, verb: Verb) -> Result<Outcome, Failure> {
    let cfg = load(common, preset, verb)?;
    let exec = match common.workers {
        Some(0) => return Err(Failure::Config("--workers must be at least 1".into())),
        Some(1) => Execution::Sequential,
        Some(n) => {
            configure_workers(n);
            Execution::Parallel
        }
        None => Execution::Parallel,
    };
    let format = match common.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };

    let mut buf = Vec::new();
    let outcome = match verb {
        Verb::Evaluate => evaluate(&cfg, format, exec, &mut buf)?,
        Verb::Sweep => sweep(&cfg, format, exec, &mut buf)?,
        Verb::Threshold => threshold(&cfg, format, exec, &mut buf)?,
    };
    match &common.out {
        Some(path) => File::create(path)?.write_all(&buf)?,
        None => io::stdout().lock().write_all(&buf)?,
    }
    Ok(outcome)
}

fn evaluate(cfg: &RunConfig, format: Format, exec: Execution, out: &mut Vec<u8>) -> Result<Outcome, Failure> {
    let jobs: Vec<(AttackClass, Regime)> = cfg
        .attacks
        .iter()
        .flat_map(|&a| cfg.regimes.iter().map(move |&r| (a, r)))
        .collect();
    let results = exec.map(&jobs, |&(attack, regime)| {
        evaluate_point(&cfg.model, attack, regime, &cfg.budget, cfg.modulation, cfg.search, exec)
    });
    let flagged = results
        .iter()
        .filter(|r| !r.as_ref().is_ok_and(|k| k.rate.is_finite()))
        .count();

    match format {
        Format::Csv => {
            let rows: Vec<Vec<Cell>> = jobs
                .iter()
                .zip(&results)
                .map(|(&(attack, regime), r)| match r {
                    Ok(report) => output::report_cells("", None, report, None),
                    Err(e) => failed_row(attack, regime, &e.to_string()),
                })
                .collect();
            output::write_table(out, format, &output::ROW_HEADER, &rows)?;
        }
        Format::Json => {
            let noises = derived_noises(&cfg.model);
            let omega_e = cloner_variance(cfg.model.t, cfg.model.xi).ok();
            let reports: Vec<Value> = jobs
                .iter()
                .zip(&results)
                .map(|(&(attack, regime), r)| match r {
                    Ok(report) => serde_json::to_value(report).expect("report serializes"),
                    Err(e) => json!({"attack": attack, "regime": regime, "error": e.to_string()}),
                })
                .collect();
            let doc = json!({
                "model": cfg.model,
                "budget": cfg.budget,
                "cloner_variance": omega_e,
                "noises": noises,
                "reports": reports,
            });
            serde_json::to_writer_pretty(&mut *out, &output::round_json(doc)).map_err(io::Error::from)?;
            writeln!(out)?;
        }
    }
    Ok(Outcome {
        rows: jobs.len(),
        flagged,
    })
}

fn failed_row(attack: AttackClass, regime: Regime, error: &str) -> Vec<Cell> {
    let mut cells = vec![Cell::Empty; output::ROW_HEADER.len()];
    cells[2] = Cell::Text(attack.to_string());
    cells[3] = Cell::Text(regime.to_string());
    cells[11] = Cell::Bool(false);
    cells[15] = Cell::Text(format!("error: {error}"));
    cells
}

fn sweep(cfg: &RunConfig, format: Format, exec: Execution, out: &mut Vec<u8>) -> Result<Outcome, Failure> {
    let s = cfg.sweep.as_ref().ok_or_else(|| Failure::Config("missing required field `sweep`".into()))?;
    let spec = SweepSpec {
        variable: s.variable,
        start: s.start,
        stop: s.stop,
        step: s.step,
        model: cfg.model,
        budget: cfg.budget,
        attacks: cfg.attacks.clone(),
        regimes: cfg.regimes.clone(),
        modulation: cfg.modulation,
        search: cfg.search,
    };
    let rows = run_sweep(&spec, exec).map_err(|e| Failure::Config(format!("invalid `sweep`: {e}")))?;
    let flagged = rows.iter().filter(|r| !r.ok()).count();
    let cells: Vec<Vec<Cell>> = rows.iter().map(output::sweep_cells).collect();
    output::write_table(out, format, &output::ROW_HEADER, &cells)?;
    Ok(Outcome {
        rows: rows.len(),
        flagged,
    })
}

fn threshold(cfg: &RunConfig, format: Format, exec: Execution, out: &mut Vec<u8>) -> Result<Outcome, Failure> {
    let jobs: Vec<_> = cfg
        .regimes
        .iter()
        .flat_map(|&r| cfg.boundaries.iter().map(move |&b| (r, b)))
        .collect();
    let results = exec.map(&jobs, |&(regime, boundary)| {
        find_tau_threshold(
            &cfg.model,
            regime,
            boundary,
            &cfg.budget,
            cfg.modulation,
            cfg.search,
            cfg.threshold_tol,
            exec,
        )
        .map_err(|e| e.to_string())
    });
    let flagged = results.iter().filter(|r| r.is_err()).count();
    let cells: Vec<Vec<Cell>> = jobs
        .iter()
        .zip(&results)
        .map(|(&(regime, boundary), r)| output::threshold_cells(regime, boundary, r))
        .collect();
    output::write_table(out, format, &output::THRESHOLD_HEADER, &cells)?;
    Ok(Outcome {
        rows: jobs.len(),
        flagged,
    })
}
