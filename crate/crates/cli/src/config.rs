//! Run configuration: TOML or JSON text, dotted-key overrides, and
//! resolution into engine types with field-level diagnostics.

use std::fmt;

use cvqkd_core::finite_size::{CollectiveEpsilon, DeFinettiParams};
use cvqkd_core::optimize::{Boundary, Modulation, ModulationSearch, TAU_TOL};
use cvqkd_core::sweep::{transmissivity_from_km, SweepVariable};
use cvqkd_core::{AttackClass, MemoryParams, Regime, SecurityBudget, SystemModel};
use serde_json::{Map, Value};

#[derive(Debug)]
pub enum ConfigError {
    Parse(String),
    Missing(String),
    Invalid { field: String, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse(msg) => write!(f, "cannot parse configuration: {msg}"),
            ConfigError::Missing(field) => write!(f, "missing required field `{field}`"),
            ConfigError::Invalid { field, message } => write!(f, "invalid `{field}`: {message}"),
        }
    }
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_owned(),
        message: message.into(),
    }
}

/// Parses TOML, or JSON when the text starts with `{`.
pub fn parse(text: &str) -> Result<Value, ConfigError> {
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(text).map_err(|e| ConfigError::Parse(format!("JSON: {e}")));
    }
    let table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(format!("TOML: {e}")))?;
    serde_json::to_value(table).map_err(|e| ConfigError::Parse(e.to_string()))
}

/// Applies `section.key=value`. The value is read as a TOML literal and
/// falls back to a bare string.
pub fn apply_override(config: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| invalid(assignment, "expected key=value"))?;
    let path = path.trim();
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(invalid(assignment, "empty key"));
    }
    let literal = format!("v = {}", raw.trim());
    let value = match toml::from_str::<toml::Table>(&literal) {
        Ok(mut t) => serde_json::to_value(t.remove("v").expect("key present"))
            .map_err(|e| invalid(path, e.to_string()))?,
        Err(_) => Value::String(raw.trim().to_owned()),
    };
    let mut node = config;
    let mut parts = path.split('.').peekable();
    while let Some(part) = parts.next() {
        if !node.is_object() {
            return Err(invalid(path, "parent is not a table"));
        }
        let map = node.as_object_mut().expect("object");
        if parts.peek().is_none() {
            map.insert(part.to_owned(), value);
            return Ok(());
        }
        node = map.entry(part).or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

struct Reader<'a> {
    root: &'a Value,
}

impl<'a> Reader<'a> {
    fn get(&self, path: &str) -> Option<&'a Value> {
        let mut node = self.root;
        for part in path.split('.') {
            node = node.get(part)?;
        }
        Some(node)
    }

    fn f64_opt(&self, path: &str) -> Result<Option<f64>, ConfigError> {
        match self.get(path) {
            None => Ok(None),
            Some(Value::Number(n)) => Ok(n.as_f64()),
            Some(Value::String(s)) => s
                .parse::<f64>()
                .map(Some)
                .map_err(|_| invalid(path, format!("`{s}` is not a number"))),
            Some(other) => Err(invalid(path, format!("expected a number, found {other}"))),
        }
    }

    fn f64(&self, path: &str) -> Result<f64, ConfigError> {
        self.f64_opt(path)?.ok_or_else(|| ConfigError::Missing(path.to_owned()))
    }

    fn str_opt(&self, path: &str) -> Result<Option<&'a str>, ConfigError> {
        match self.get(path) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(other) => Err(invalid(path, format!("expected a string, found {other}"))),
        }
    }

    fn bool_opt(&self, path: &str) -> Result<Option<bool>, ConfigError> {
        match self.get(path) {
            None => Ok(None),
            Some(Value::Bool(b)) => Ok(Some(*b)),
            Some(other) => Err(invalid(path, format!("expected true or false, found {other}"))),
        }
    }

    fn list<T: std::str::FromStr<Err = String>>(&self, path: &str) -> Result<Option<Vec<T>>, ConfigError> {
        let items: Vec<&str> = match self.get(path) {
            None => return Ok(None),
            Some(Value::String(s)) => vec![s.as_str()],
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| v.as_str().ok_or_else(|| invalid(path, "expected a list of strings")))
                .collect::<Result<_, _>>()?,
            Some(other) => Err(invalid(path, format!("expected a list, found {other}")))?,
        };
        items
            .into_iter()
            .map(|s| s.parse().map_err(|e: String| invalid(path, e)))
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSection {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: SystemModel,
    pub budget: SecurityBudget,
    pub attacks: Vec<AttackClass>,
    pub regimes: Vec<Regime>,
    pub modulation: Modulation,
    pub search: ModulationSearch,
    pub sweep: Option<SweepSection>,
    pub boundaries: Vec<Boundary>,
    pub threshold_tol: f64,
}

/// Which fields the verb will overwrite itself and so need not be given.
#[derive(Clone, Copy, Debug, Default)]
pub struct Needs {
    pub sweep: bool,
    pub tau_supplied: bool,
}

/// Resolves a parsed configuration into engine inputs.
pub fn resolve(root: &Value, needs: Needs) -> Result<RunConfig, ConfigError> {
    let r = Reader { root };

    let sweep = match r.get("sweep") {
        None if needs.sweep => return Err(ConfigError::Missing("sweep".into())),
        None => None,
        Some(_) => {
            let variable = r
                .str_opt("sweep.variable")?
                .ok_or_else(|| ConfigError::Missing("sweep.variable".into()))?
                .parse::<SweepVariable>()
                .map_err(|e| invalid("sweep.variable", e))?;
            let s = SweepSection {
                variable,
                start: r.f64("sweep.start")?,
                stop: r.f64("sweep.stop")?,
                step: r.f64("sweep.step")?,
            };
            if !(s.step > 0.0) {
                return Err(invalid("sweep.step", "must be positive"));
            }
            if !(s.stop >= s.start) {
                return Err(invalid("sweep.stop", "must not be below sweep.start"));
            }
            Some(s)
        }
    };
    let swept = |v: SweepVariable| needs.sweep && sweep.as_ref().is_some_and(|s| s.variable == v);

    let modulation = match r.str_opt("run.modulation")? {
        None | Some("optimize") => Modulation::Optimize,
        Some("fixed") => Modulation::Fixed,
        Some(other) => return Err(invalid("run.modulation", format!("`{other}` (expected optimize or fixed)"))),
    };
    let default_search = ModulationSearch::default();
    let search = ModulationSearch {
        lo: r.f64_opt("run.v_lo")?.unwrap_or(default_search.lo),
        hi: r.f64_opt("run.v_hi")?.unwrap_or(default_search.hi),
        tol: r.f64_opt("run.v_tol")?.unwrap_or(default_search.tol),
    };
    if !(search.lo > 1.0 && search.hi > search.lo) {
        return Err(invalid("run.v_lo", "need 1 < v_lo < v_hi"));
    }

    let v = match modulation {
        Modulation::Fixed => r.f64("model.v")?,
        Modulation::Optimize => r.f64_opt("model.v")?.unwrap_or(search.lo.max(2.0)),
    };
    let t = match (r.f64_opt("model.t")?, r.f64_opt("model.distance_km")?) {
        (Some(_), Some(_)) => return Err(invalid("model.distance_km", "give either model.t or model.distance_km")),
        (Some(t), None) => t,
        (None, Some(km)) => transmissivity_from_km(km),
        (None, None) if swept(SweepVariable::DistanceKm) => 1.0,
        (None, None) => return Err(ConfigError::Missing("model.t".into())),
    };
    let xi = if swept(SweepVariable::Xi) {
        r.f64_opt("model.xi")?.unwrap_or(0.0)
    } else {
        r.f64("model.xi")?
    };
    let eta = r.f64("model.eta")?;
    let v_el = r.f64("model.v_el")?;

    let tau_free = needs.tau_supplied || swept(SweepVariable::Tau);
    let tau = r.f64_opt("model.tau")?;
    let omega = r.f64_opt("model.omega")?.unwrap_or(1.0);
    let tau_default = if tau_free { Some(1.0) } else { None };
    let tau_field = |name: &str| -> Result<f64, ConfigError> {
        r.f64_opt(&format!("model.{name}"))?
            .or(tau)
            .or(tau_default)
            .ok_or_else(|| ConfigError::Missing("model.tau".into()))
    };
    let memory = MemoryParams {
        tau1: tau_field("tau1")?,
        tau2: tau_field("tau2")?,
        omega1: r.f64_opt("model.omega1")?.unwrap_or(omega),
        omega2: r.f64_opt("model.omega2")?.unwrap_or(omega),
    };
    let model = SystemModel::new(v, t, xi, eta, v_el, memory).map_err(|e| invalid("model", e.to_string()))?;

    let defaults = SecurityBudget::default();
    let collective_eps = match r.get("budget.collective_eps") {
        None => defaults.collective_eps,
        Some(Value::String(s)) if s == "de_finetti" => CollectiveEpsilon::DeFinetti,
        Some(_) => CollectiveEpsilon::Fixed(r.f64("budget.collective_eps")?),
    };
    let budget = SecurityBudget {
        n: r.f64_opt("budget.n")?.unwrap_or(defaults.n),
        d: r.f64_opt("budget.d")?.unwrap_or(defaults.d),
        beta: r.f64_opt("budget.beta")?.unwrap_or(defaults.beta),
        eps_tilde: r.f64_opt("budget.eps_tilde")?.unwrap_or(defaults.eps_tilde),
        collective_eps,
        de_finetti: DeFinettiParams {
            k: r.f64_opt("budget.k")?,
            d_a: r.f64_opt("budget.d_a")?,
            d_b: r.f64_opt("budget.d_b")?,
        },
        iab_on_estimate: r.bool_opt("budget.iab_on_estimate")?.unwrap_or(defaults.iab_on_estimate),
    };
    budget.validate().map_err(|e| invalid("budget", e.to_string()))?;

    let attacks = r.list::<AttackClass>("run.attacks")?.unwrap_or_else(|| AttackClass::ALL.to_vec());
    let regimes = r.list::<Regime>("run.regimes")?.unwrap_or_else(|| Regime::ALL.to_vec());
    let boundaries = match r.get("threshold.boundaries") {
        None => vec![Boundary::IndividualHybrid, Boundary::HybridCoherent],
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v.as_str() {
                Some("individual_hybrid") => Ok(Boundary::IndividualHybrid),
                Some("hybrid_coherent") => Ok(Boundary::HybridCoherent),
                _ => Err(invalid("threshold.boundaries", format!("{v} (individual_hybrid, hybrid_coherent)"))),
            })
            .collect::<Result<_, _>>()?,
        Some(other) => return Err(invalid("threshold.boundaries", format!("expected a list, found {other}"))),
    };
    let threshold_tol = r.f64_opt("threshold.tol")?.unwrap_or(TAU_TOL);
    if !(threshold_tol > 0.0) {
        return Err(invalid("threshold.tol", "must be positive"));
    }

    Ok(RunConfig {
        model,
        budget,
        attacks,
        regimes,
        modulation,
        search,
        sweep,
        boundaries,
        threshold_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[model]
t = 0.1
xi = 0.01
eta = 0.6
v_el = 0.015
tau = 0.4
"#;

    #[test]
    fn toml_and_json_agree() {
        let a = resolve(&parse(BASE).unwrap(), Needs::default()).unwrap();
        let json = r#"{"model": {"t": 0.1, "xi": 0.01, "eta": 0.6, "v_el": 0.015, "tau": 0.4}}"#;
        let b = resolve(&parse(json).unwrap(), Needs::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.model.memory, MemoryParams::symmetric(0.4, 1.0));
        assert_eq!(a.attacks.len(), 3);
        assert_eq!(a.budget, SecurityBudget::default());
    }

    #[test]
    fn overrides() {
        let mut v = parse(BASE).unwrap();
        apply_override(&mut v, "model.xi=0.02").unwrap();
        apply_override(&mut v, "run.attacks=[\"hybrid\"]").unwrap();
        apply_override(&mut v, "run.modulation=fixed").unwrap();
        apply_override(&mut v, "model.v=4").unwrap();
        apply_override(&mut v, "budget.n=1e7").unwrap();
        let c = resolve(&v, Needs::default()).unwrap();
        assert_eq!(c.model.xi, 0.02);
        assert_eq!(c.attacks, vec![AttackClass::Hybrid]);
        assert_eq!(c.modulation, Modulation::Fixed);
        assert_eq!(c.model.v, 4.0);
        assert_eq!(c.budget.n, 1e7);
        assert!(apply_override(&mut v, "novalue").is_err());
    }

    #[test]
    fn missing_fields_are_named() {
        let mut v = parse(BASE).unwrap();
        v["model"].as_object_mut().unwrap().remove("eta");
        match resolve(&v, Needs::default()) {
            Err(ConfigError::Missing(f)) => assert_eq!(f, "model.eta"),
            other => panic!("{other:?}"),
        }
        let mut v = parse(BASE).unwrap();
        apply_override(&mut v, "run.modulation=fixed").unwrap();
        assert!(matches!(resolve(&v, Needs::default()), Err(ConfigError::Missing(f)) if f == "model.v"));
        let v = parse("[model]\nt=0.1\nxi=0.01\neta=0.6\nv_el=0.01").unwrap();
        assert!(matches!(resolve(&v, Needs::default()), Err(ConfigError::Missing(f)) if f == "model.tau"));
        assert!(resolve(&v, Needs { sweep: false, tau_supplied: true }).is_ok());
    }

    #[test]
    fn bad_values() {
        let mut v = parse(BASE).unwrap();
        apply_override(&mut v, "model.eta=1.5").unwrap();
        assert!(matches!(resolve(&v, Needs::default()), Err(ConfigError::Invalid { .. })));
        assert!(matches!(parse("[model\n"), Err(ConfigError::Parse(_))));
    }
}
