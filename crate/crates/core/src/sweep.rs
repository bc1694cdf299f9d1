//! One-dimensional parameter sweeps over the key-rate engine.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::finite_size::{AttackClass, KeyRateReport, Regime, SecurityBudget};
use crate::optimize::{rate_with_modulation, Modulation, ModulationSearch};
use crate::protocol::{MemoryParams, SystemModel};

/// Fibre loss in dB per kilometre.
pub const FIBRE_LOSS_DB_PER_KM: f64 = 0.2;

/// Transmissivity of `km` kilometres of fibre.
pub fn transmissivity_from_km(km: f64) -> f64 {
    10f64.powf(-FIBRE_LOSS_DB_PER_KM * km / 10.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Memory transmissivity, applied to both arms.
    Tau,
    DistanceKm,
    Xi,
    N,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::Tau => "tau",
            SweepVariable::DistanceKm => "distance_km",
            SweepVariable::Xi => "xi",
            SweepVariable::N => "n",
        }
    }

    /// Model and budget with this variable set to `value`.
    pub fn apply(self, model: &SystemModel, budget: &SecurityBudget, value: f64) -> (SystemModel, SecurityBudget) {
        let mut model = *model;
        let mut budget = *budget;
        match self {
            SweepVariable::Tau => {
                model.memory = MemoryParams {
                    tau1: value,
                    tau2: value,
                    ..model.memory
                }
            }
            SweepVariable::DistanceKm => model.t = transmissivity_from_km(value),
            SweepVariable::Xi => model.xi = value,
            SweepVariable::N => budget.n = value,
        }
        (model, budget)
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepVariable {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "tau" => Ok(SweepVariable::Tau),
            "distance_km" => Ok(SweepVariable::DistanceKm),
            "xi" => Ok(SweepVariable::Xi),
            "n" => Ok(SweepVariable::N),
            _ => Err(format!("unknown sweep variable `{s}` (tau, distance_km, xi, n)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub model: SystemModel,
    pub budget: SecurityBudget,
    pub attacks: Vec<AttackClass>,
    pub regimes: Vec<Regime>,
    pub modulation: Modulation,
    pub search: ModulationSearch,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::domain("step", self.step, "step > 0"));
        }
        if !(self.stop >= self.start) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::domain("stop", self.stop, "stop >= start"));
        }
        if self.attacks.is_empty() || self.regimes.is_empty() {
            return Err(Error::Shape("no attack classes or regimes selected".into()));
        }
        Ok(())
    }

    /// Grid values `start + k step` up to `stop` (inclusive within rounding).
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.start + k as f64 * self.step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub variable: SweepVariable,
    pub value: f64,
    pub attack: AttackClass,
    pub regime: Regime,
    /// `None` when the point failed; `error` then says why.
    pub report: Option<KeyRateReport>,
    pub error: Option<String>,
}

impl SweepRow {
    /// False for failed points and for estimation failures.
    pub fn ok(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.rate.is_finite())
    }
}

/// Single report with optional modulation optimization.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_point(
    model: &SystemModel,
    attack: AttackClass,
    regime: Regime,
    budget: &SecurityBudget,
    modulation: Modulation,
    search: ModulationSearch,
    exec: Execution,
) -> Result<KeyRateReport> {
    rate_with_modulation(model, attack, regime, budget, modulation, search, exec)
}

/// One row per grid value, attack class and regime, in that nesting order.
/// A failing point becomes a flagged row; the sweep continues.
pub fn run_sweep(spec: &SweepSpec, exec: Execution) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for value in spec.values() {
        for &attack in &spec.attacks {
            for &regime in &spec.regimes {
                jobs.push((value, attack, regime));
            }
        }
    }
    Ok(exec.map(&jobs, |&(value, attack, regime)| {
        let (model, budget) = spec.variable.apply(&spec.model, &spec.budget, value);
        let outcome = model
            .validate()
            .and_then(|_| budget.validate())
            .and_then(|_| evaluate_point(&model, attack, regime, &budget, spec.modulation, spec.search, exec));
        let (report, error) = match outcome {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        SweepRow {
            variable: spec.variable,
            value,
            attack,
            regime,
            report,
            error,
        }
    }))
}
