//! Tabular output. Every number is rounded to 12 significant digits before
//! it is written, so CSV and JSON carry identical values.

use std::io::Write;

use cvqkd_core::optimize::{Boundary, OptimizationResult};
use cvqkd_core::sweep::SweepRow;
use cvqkd_core::{KeyRateReport, Regime};
use serde_json::{json, Map, Value};

pub const ROW_HEADER: [&str; 16] = [
    "variable",
    "value",
    "attack",
    "regime",
    "mu_star",
    "modulation",
    "i_ab",
    "eve_info",
    "delta_aep",
    "key_length",
    "rate",
    "feasible",
    "t_hat",
    "xi_hat",
    "v_hat",
    "status",
];

pub const THRESHOLD_HEADER: [&str; 7] = ["regime", "boundary", "tau", "bracket_width", "iterations", "mu_last", "status"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Rounds to 12 significant digits; `None` for non-finite input.
pub fn round12(x: f64) -> Option<f64> {
    if !x.is_finite() {
        return None;
    }
    Some(format!("{x:.11e}").parse().expect("formatted float parses"))
}

pub fn fmt12(x: f64) -> String {
    match round12(x) {
        None => String::new(),
        Some(0.0) => "0".into(),
        Some(r) if (1e-4..1e15).contains(&r.abs()) => format!("{r}"),
        Some(r) => format!("{r:e}"),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn num(x: Option<f64>) -> Cell {
        match x {
            Some(v) if v.is_finite() => Cell::Num(v),
            _ => Cell::Empty,
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt12(*x),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => round12(*x).map_or(Value::Null, |r| json!(r)),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

fn status(report: Option<&KeyRateReport>, error: Option<&str>) -> String {
    match (report, error) {
        (_, Some(e)) => format!("error: {e}"),
        (Some(r), None) if !r.rate.is_finite() => {
            format!("estimation_failed: {}", r.note.as_deref().unwrap_or(""))
        }
        _ => "ok".into(),
    }
}

pub fn report_cells(variable: &str, value: Option<f64>, report: &KeyRateReport, error: Option<&str>) -> Vec<Cell> {
    let est = report.estimated;
    vec![
        Cell::Text(variable.into()),
        Cell::num(value),
        Cell::Text(report.attack.to_string()),
        Cell::Text(report.regime.to_string()),
        Cell::num(Some(report.mu_star)),
        Cell::num(Some(report.modulation)),
        Cell::num(Some(report.i_ab)),
        Cell::num(Some(report.eve_info)),
        Cell::num(Some(report.delta_aep)),
        Cell::num(report.key_length),
        Cell::num(Some(report.rate)),
        Cell::Bool(report.feasible),
        Cell::num(est.map(|e| e.t)),
        Cell::num(est.map(|e| e.xi)),
        Cell::num(est.map(|e| e.v)),
        Cell::Text(status(Some(report), error)),
    ]
}

pub fn sweep_cells(row: &SweepRow) -> Vec<Cell> {
    match &row.report {
        Some(r) => report_cells(row.variable.as_str(), Some(row.value), r, row.error.as_deref()),
        None => {
            let mut cells = vec![Cell::Empty; ROW_HEADER.len()];
            cells[0] = Cell::Text(row.variable.as_str().into());
            cells[1] = Cell::num(Some(row.value));
            cells[2] = Cell::Text(row.attack.to_string());
            cells[3] = Cell::Text(row.regime.to_string());
            cells[11] = Cell::Bool(false);
            cells[15] = Cell::Text(status(None, row.error.as_deref()));
            cells
        }
    }
}

pub fn threshold_cells(regime: Regime, boundary: Boundary, result: &Result<OptimizationResult, String>) -> Vec<Cell> {
    let b = match boundary {
        Boundary::IndividualHybrid => "individual_hybrid",
        Boundary::HybridCoherent => "hybrid_coherent",
    };
    match result {
        Ok(r) => vec![
            Cell::Text(regime.to_string()),
            Cell::Text(b.into()),
            Cell::Num(r.argmax),
            Cell::Num(r.bracket_width),
            Cell::Num(r.iterations as f64),
            Cell::num(Some(r.value)),
            Cell::Text("ok".into()),
        ],
        Err(e) => vec![
            Cell::Text(regime.to_string()),
            Cell::Text(b.into()),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Text(format!("error: {e}")),
        ],
    }
}

pub fn write_table(out: &mut dyn Write, format: Format, header: &[&str], rows: &[Vec<Cell>]) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(header)?;
            for row in rows {
                w.write_record(row.iter().map(Cell::csv))?;
            }
            w.flush()
        }
        Format::Json => {
            let records: Vec<Value> = rows
                .iter()
                .map(|row| {
                    let mut m = Map::new();
                    for (k, c) in header.iter().zip(row) {
                        m.insert((*k).to_owned(), c.json());
                    }
                    Value::Object(m)
                })
                .collect();
            serde_json::to_writer_pretty(&mut *out, &records)?;
            writeln!(out)
        }
    }
}

/// Recursively rounds every number in a JSON tree.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) => n.as_f64().and_then(round12).map_or(Value::Null, |r| json!(r)),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}
