//! Scalar searches: Eve's splitting ratio, Alice's modulation variance and
//! the memory transmissivities where the optimal attack class changes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::finite_size::{key_rate, AttackClass, KeyRateReport, Regime, SecurityBudget};
use crate::protocol::{MemoryParams, SystemModel};

pub const MU_GRID_STEP: f64 = 0.01;
pub const MU_TOL: f64 = 1e-6;
pub const V_BOUNDS: (f64, f64) = (1.001, 1e3);
pub const V_POINTS_PER_DECADE: f64 = 40.0;
/// Relative tolerance on the optimal modulation variance.
pub const V_TOL: f64 = 1e-4;
pub const TAU_TOL: f64 = 5e-4;
/// `mu*` within this distance of 0 or 1 counts as the endpoint class.
pub const ENDPOINT_MARGIN: f64 = 1e-4;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub argmax: f64,
    pub value: f64,
    pub iterations: usize,
    pub bracket_width: f64,
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<OptimizationResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut iterations = 2;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        iterations += 1;
        if iterations > 10_000 {
            return Err(Error::Numerical {
                operation: "golden-section search",
                diagnostics: format!("bracket [{a}, {b}] after {iterations} evaluations"),
            });
        }
    }
    let (argmax, value) = if fc >= fd { (c, fc) } else { (d, fd) };
    Ok(OptimizationResult {
        argmax,
        value,
        iterations,
        bracket_width: b - a,
    })
}

fn finite_or_neg_inf(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::NEG_INFINITY
    }
}

/// Maximizes `objective` over `mu` in `[0, 1]`: a grid of step 0.01 with
/// both endpoints, then golden-section refinement inside the neighbouring
/// cells of the best interior sample. An endpoint that beats every grid
/// sample is returned as exactly 0 or 1.
pub fn maximize_over_mu<F>(objective: F, tol: f64, exec: Execution) -> Result<OptimizationResult>
where
    F: Fn(f64) -> Result<f64> + Sync + Send,
{
    let steps = (1.0 / MU_GRID_STEP).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|k| k as f64 / steps as f64).collect();
    let values = exec.map(&grid, |&mu| objective(mu));
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (k, v) in values.into_iter().enumerate() {
        let v = v?;
        if v > best_value {
            best = k;
            best_value = v;
        }
    }
    if !best_value.is_finite() {
        return Err(Error::Infeasible { lo: 0.0, hi: 1.0 });
    }
    if best == 0 || best == steps {
        return Ok(OptimizationResult {
            argmax: grid[best],
            value: best_value,
            iterations: grid.len(),
            bracket_width: 0.0,
        });
    }
    let refined = golden_section_max(&objective, grid[best - 1], grid[best + 1], tol)?;
    let (argmax, value) = if refined.value >= best_value {
        (refined.argmax, refined.value)
    } else {
        (grid[best], best_value)
    };
    Ok(OptimizationResult {
        argmax,
        value,
        iterations: grid.len() + refined.iterations,
        bracket_width: refined.bracket_width,
    })
}

/// Maximizes a rate over the modulation variance: logarithmic grid (40 points
/// per decade) on `bounds`, then golden-section refinement in `ln V` to a
/// relative tolerance `tol`. Non-finite objective values count as infeasible.
pub fn optimize_modulation_variance<F>(
    objective: F,
    bounds: (f64, f64),
    tol: f64,
    exec: Execution,
) -> Result<OptimizationResult>
where
    F: Fn(f64) -> Result<f64> + Sync + Send,
{
    let (lo, hi) = bounds;
    if !(lo > 1.0 && hi > lo && hi.is_finite()) {
        return Err(Error::domain("V bounds", lo, "1 < V_lo < V_hi"));
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let points = (V_POINTS_PER_DECADE * (hi / lo).log10()).ceil() as usize + 1;
    let grid: Vec<f64> = (0..points)
        .map(|k| llo + (lhi - llo) * k as f64 / (points - 1) as f64)
        .collect();
    let values = exec.map(&grid, |&lv| objective(lv.exp()).map(finite_or_neg_inf));
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (k, v) in values.into_iter().enumerate() {
        let v = v?;
        if v > best_value {
            best = k;
            best_value = v;
        }
    }
    if best_value == f64::NEG_INFINITY {
        return Err(Error::Infeasible { lo, hi });
    }
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(points - 1)];
    let refined = golden_section_max(|lv| objective(lv.exp()).map(finite_or_neg_inf), a, b, tol)?;
    let (arg, value) = if refined.value >= best_value {
        (refined.argmax, refined.value)
    } else {
        (grid[best], best_value)
    };
    Ok(OptimizationResult {
        argmax: arg.exp(),
        value,
        iterations: points + refined.iterations,
        bracket_width: arg.exp() * refined.bracket_width,
    })
}

/// Search range for the modulation variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulationSearch {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
}

impl Default for ModulationSearch {
    fn default() -> Self {
        ModulationSearch {
            lo: V_BOUNDS.0,
            hi: V_BOUNDS.1,
            tol: V_TOL,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    /// Use the model's own `V`.
    Fixed,
    #[default]
    Optimize,
}

/// Key-rate report at the model's `V` or at the `V` maximizing this rate.
pub fn rate_with_modulation(
    model: &SystemModel,
    attack: AttackClass,
    regime: Regime,
    budget: &SecurityBudget,
    modulation: Modulation,
    search: ModulationSearch,
    exec: Execution,
) -> Result<KeyRateReport> {
    match modulation {
        Modulation::Fixed => key_rate(model, attack, regime, budget, exec),
        Modulation::Optimize => {
            let best = optimize_modulation_variance(
                |v| Ok(key_rate(&model.with_modulation(v), attack, regime, budget, exec)?.rate),
                (search.lo, search.hi),
                search.tol,
                exec,
            )?;
            key_rate(&model.with_modulation(best.argmax), attack, regime, budget, exec)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    IndividualHybrid,
    HybridCoherent,
}

impl Boundary {
    /// Whether `mu*` lies on the upper side of this boundary.
    pub fn upper(self, mu_star: f64) -> bool {
        match self {
            Boundary::IndividualHybrid => mu_star > ENDPOINT_MARGIN,
            Boundary::HybridCoherent => mu_star >= 1.0 - ENDPOINT_MARGIN,
        }
    }
}

/// Optimal splitting ratio of the hybrid attack at memory transmissivity `tau`.
pub fn hybrid_mu_star(
    template: &SystemModel,
    tau: f64,
    regime: Regime,
    budget: &SecurityBudget,
    modulation: Modulation,
    search: ModulationSearch,
    exec: Execution,
) -> Result<f64> {
    let memory = MemoryParams {
        tau1: tau,
        tau2: tau,
        ..template.memory
    };
    let model = template.with_memory(memory);
    let report = rate_with_modulation(&model, AttackClass::Hybrid, regime, budget, modulation, search, exec)?;
    if report.mu_star.is_nan() {
        return Err(Error::Estimation(format!(
            "no hybrid optimum at tau = {tau}: {}",
            report.note.unwrap_or_default()
        )));
    }
    Ok(report.mu_star)
}

/// Bisection for the memory transmissivity where the hybrid optimum crosses
/// `boundary`. `argmax` is the bracket midpoint; `value` is `mu*` at the
/// last evaluated `tau`.
#[allow(clippy::too_many_arguments)]
pub fn find_tau_threshold(
    template: &SystemModel,
    regime: Regime,
    boundary: Boundary,
    budget: &SecurityBudget,
    modulation: Modulation,
    search: ModulationSearch,
    tol: f64,
    exec: Execution,
) -> Result<OptimizationResult> {
    let mu_at = |tau: f64| hybrid_mu_star(template, tau, regime, budget, modulation, search, exec);
    let (mut lo, mut hi) = (0.0, 1.0);
    let ends = exec.map(&[lo, hi], |&tau| mu_at(tau));
    let mu_lo = ends[0].clone()?;
    let mu_hi = ends[1].clone()?;
    let (up_lo, up_hi) = (boundary.upper(mu_lo), boundary.upper(mu_hi));
    if up_lo == up_hi {
        return Err(Error::NoSignChange(format!(
            "{boundary:?}: mu* = {mu_lo} at tau = 0 and {mu_hi} at tau = 1"
        )));
    }
    let mut iterations = 2;
    let mut last = mu_hi;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        last = mu_at(mid)?;
        if boundary.upper(last) == up_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(OptimizationResult {
        argmax: 0.5 * (lo + hi),
        value: last,
        iterations,
        bracket_width: hi - lo,
    })
}
