//! Composable finite-size key length: epsilon budget, AEP penalty,
//! worst-case parameter estimation and the attack-class key-length rules.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::attacks::{eve_information, EveInformation};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gaussian::Quadrature;
use crate::optimize::{maximize_over_mu, MU_TOL};
use crate::protocol::{detector_dilated_state, mutual_info_ab, MemoryParams, SystemModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackClass {
    Individual,
    /// Collective attack with a perfect memory.
    Coherent,
    Hybrid,
}

impl AttackClass {
    pub const ALL: [AttackClass; 3] = [AttackClass::Individual, AttackClass::Coherent, AttackClass::Hybrid];

    pub fn as_str(self) -> &'static str {
        match self {
            AttackClass::Individual => "individual",
            AttackClass::Coherent => "coherent",
            AttackClass::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for AttackClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttackClass {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "individual" => Ok(AttackClass::Individual),
            "coherent" => Ok(AttackClass::Coherent),
            "hybrid" => Ok(AttackClass::Hybrid),
            _ => Err(format!("unknown attack class `{s}` (individual, coherent, hybrid)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Asymptotic,
    Finite,
}

impl Regime {
    pub const ALL: [Regime; 2] = [Regime::Asymptotic, Regime::Finite];

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Asymptotic => "asymptotic",
            Regime::Finite => "finite",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "asymptotic" => Ok(Regime::Asymptotic),
            "finite" => Ok(Regime::Finite),
            _ => Err(format!("unknown regime `{s}` (asymptotic, finite)")),
        }
    }
}

/// How the collective-attack parameter `eps` is chosen for the coherent and
/// hybrid classes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectiveEpsilon {
    Fixed(f64),
    /// Largest `eps` with `K^4 eps / 50 <= eps_tilde`.
    DeFinetti,
}

impl Default for CollectiveEpsilon {
    fn default() -> Self {
        CollectiveEpsilon::Fixed(1e-42)
    }
}

/// Energy-test settings. `None` selects `k = n` and `d_A = d_B = 2V`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DeFinettiParams {
    pub k: Option<f64>,
    pub d_a: Option<f64>,
    pub d_b: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SecurityBudget {
    /// Number of signal pairs; the key length counts `N = 2n` modes.
    pub n: f64,
    /// Discretization bits per symbol.
    pub d: f64,
    /// Reconciliation efficiency.
    pub beta: f64,
    pub eps_tilde: f64,
    pub collective_eps: CollectiveEpsilon,
    pub de_finetti: DeFinettiParams,
    /// Evaluate `beta I(A:B)` on the estimated rather than the true channel.
    pub iab_on_estimate: bool,
}

impl Default for SecurityBudget {
    fn default() -> Self {
        SecurityBudget {
            n: 1e9,
            d: 5.0,
            beta: 0.98,
            eps_tilde: 1e-6,
            collective_eps: CollectiveEpsilon::default(),
            de_finetti: DeFinettiParams::default(),
            iab_on_estimate: true,
        }
    }
}

impl SecurityBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.n >= 1.0) || !self.n.is_finite() {
            return Err(Error::domain("n", self.n, "n >= 1"));
        }
        if !(self.d >= 1.0) || !self.d.is_finite() {
            return Err(Error::domain("d", self.d, "d >= 1"));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::domain("beta", self.beta, "0 < beta <= 1"));
        }
        if !(self.eps_tilde > 0.0 && self.eps_tilde < 1.0) {
            return Err(Error::domain("eps_tilde", self.eps_tilde, "0 < eps_tilde < 1"));
        }
        if let CollectiveEpsilon::Fixed(eps) = self.collective_eps {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::domain("collective eps", eps, "0 < eps < 1"));
            }
        }
        Ok(())
    }

    /// `N = 2n`.
    pub fn modes(&self) -> f64 {
        2.0 * self.n
    }
}

/// `Delta_AEP` for `N` modes, `d` bits, smoothing `eps_sm` and security `eps`.
pub fn delta_aep(big_n: f64, d: f64, eps_sm: f64, eps: f64) -> f64 {
    let inner = (d + 1.0).powi(2)
        + 4.0 * (d + 1.0) * (2.0 / (eps_sm * eps_sm)).log2().sqrt()
        + 2.0 * (2.0 / (eps * eps * eps_sm)).log2();
    big_n.sqrt() * inner + 4.0 * eps_sm * d / eps
}

/// De Finetti reduction factor `K` for collective security `eps`.
pub fn de_finetti_factor(n: f64, d_a: f64, d_b: f64, k: f64, eps: f64) -> Result<f64> {
    let l = (8.0 / eps).ln();
    let denom = 1.0 - 2.0 * (l / (2.0 * k)).sqrt();
    if !(denom > 0.0) {
        return Err(Error::domain("k", k, "k > 2 ln(8/eps)"));
    }
    let body = n * (d_a + d_b) * (1.0 + 2.0 * (l / (2.0 * n)).sqrt() + l / n) / denom;
    Ok(body.max(1.0))
}

/// One attack class's split of the security parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpsilonBudget {
    pub eps: f64,
    pub eps_sm: f64,
    pub eps_bar: f64,
    pub eps_pe: f64,
    pub eps_cor: f64,
    /// Reduction factor and the coherent-attack parameter it implies
    /// (coherent and hybrid classes only).
    pub k_factor: Option<f64>,
    pub eps_tilde_implied: Option<f64>,
    /// Whether `K^4 eps / 50 <= eps_tilde`.
    pub consistent: Option<bool>,
}

/// Splits the security parameter for `attack`. `v` is the modulation
/// variance, used only for the default energy-test thresholds.
pub fn epsilon_budget(attack: AttackClass, budget: &SecurityBudget, v: f64) -> Result<EpsilonBudget> {
    budget.validate()?;
    let split = |eps: f64| -> Result<(f64, f64)> {
        let comp = eps / 10.0;
        let eps_sm = (eps - 3.0 * comp) / 2.0;
        if !(eps_sm > 0.0) {
            return Err(Error::InfeasibleSplit { eps_sm });
        }
        Ok((comp, eps_sm))
    };
    if attack == AttackClass::Individual {
        let eps = budget.eps_tilde;
        let (comp, eps_sm) = split(eps)?;
        return Ok(EpsilonBudget {
            eps,
            eps_sm,
            eps_bar: comp,
            eps_pe: comp,
            eps_cor: comp,
            k_factor: None,
            eps_tilde_implied: None,
            consistent: None,
        });
    }
    let df = budget.de_finetti;
    let k = df.k.unwrap_or(budget.n);
    let d_a = df.d_a.unwrap_or(2.0 * v);
    let d_b = df.d_b.unwrap_or(2.0 * v);
    let factor = |eps: f64| de_finetti_factor(budget.n, d_a, d_b, k, eps);
    let eps = match budget.collective_eps {
        CollectiveEpsilon::Fixed(eps) => eps,
        CollectiveEpsilon::DeFinetti => {
            let mut eps = budget.eps_tilde;
            for _ in 0..100 {
                let next = 50.0 * budget.eps_tilde / factor(eps)?.powi(4);
                if (next - eps).abs() <= 1e-14 * eps {
                    eps = next;
                    break;
                }
                eps = next;
            }
            eps.min(budget.eps_tilde)
        }
    };
    let (comp, eps_sm) = split(eps)?;
    let k_factor = factor(eps)?;
    let implied = k_factor.powi(4) * eps / 50.0;
    Ok(EpsilonBudget {
        eps,
        eps_sm,
        eps_bar: comp,
        eps_pe: comp,
        eps_cor: comp,
        k_factor: Some(k_factor),
        eps_tilde_implied: Some(implied),
        consistent: Some(implied <= budget.eps_tilde * (1.0 + 1e-9)),
    })
}

/// Per-component second moments of the rescaled heterodyne outcomes
/// (variances `V+1`, `V_B2+1`; correlation `sqrt(eta T (V^2-1))`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PeMoments {
    pub sigma_a2: f64,
    pub sigma_b2: f64,
    pub c_ab: f64,
}

pub fn pe_moments(model: &SystemModel) -> Result<PeMoments> {
    let s = detector_dilated_state(model)?;
    Ok(PeMoments {
        sigma_a2: s.variance("A", Quadrature::Q)? + 1.0,
        sigma_b2: s.variance("B2", Quadrature::Q)? + 1.0,
        c_ab: s.cross(&["A"], &["B2"])?[(0, 0)].abs(),
    })
}

/// Expected values and standard deviations of `|X|^2`, `|Y|^2`, `<X,Y>` over
/// `2n` components.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PeStatistics {
    pub norm_x2: f64,
    pub norm_y2: f64,
    pub inner_xy: f64,
    pub std_norm_x2: f64,
    pub std_norm_y2: f64,
    pub std_inner_xy: f64,
}

impl PeMoments {
    pub fn statistics(&self, n: f64) -> PeStatistics {
        let m = 2.0 * n;
        PeStatistics {
            norm_x2: m * self.sigma_a2,
            norm_y2: m * self.sigma_b2,
            inner_xy: m * self.c_ab,
            std_norm_x2: (2.0 * m).sqrt() * self.sigma_a2,
            std_norm_y2: (2.0 * m).sqrt() * self.sigma_b2,
            std_inner_xy: (m * (self.sigma_a2 * self.sigma_b2 + self.c_ab * self.c_ab)).sqrt(),
        }
    }
}

/// Channel parameters inferred from three-sigma adverse data moments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimatedChannel {
    pub t: f64,
    pub xi: f64,
    pub v: f64,
    pub sigma_a_max: f64,
    pub sigma_b_max: f64,
    pub sigma_c_min: f64,
}

impl EstimatedChannel {
    /// `model` with its modulation and channel replaced by the estimates.
    pub fn apply(&self, model: &SystemModel) -> Result<SystemModel> {
        let est = model.with_modulation(self.v).with_channel(self.t, self.xi);
        est.validate().map_err(|e| Error::Estimation(e.to_string()))?;
        Ok(est)
    }
}

pub fn pe_worstcase_channel(model: &SystemModel, n: f64, eps_pe: f64) -> Result<EstimatedChannel> {
    if !(n >= 1e3) {
        return Err(Error::domain("n", n, "n >= 1e3 for parameter estimation"));
    }
    if !(eps_pe > 0.0 && eps_pe < 1.0) {
        return Err(Error::domain("eps_pe", eps_pe, "0 < eps_pe < 1"));
    }
    let st = pe_moments(model)?.statistics(n);
    let x2 = st.norm_x2 + 3.0 * st.std_norm_x2;
    let y2 = st.norm_y2 + 3.0 * st.std_norm_y2;
    let xy = st.inner_xy - 3.0 * st.std_inner_xy;

    let widen = 1.0 + 2.0 * ((36.0 / eps_pe).ln() / n).sqrt();
    let sigma_a_max = widen * x2 / (2.0 * n) - 1.0;
    let sigma_b_max = widen * y2 / (2.0 * n) - 1.0;
    let sigma_c_min = xy / (2.0 * n) - 5.0 * ((8.0 / eps_pe).ln() / n.powi(3)).sqrt() * (x2 + y2);

    if !(sigma_c_min > 0.0) {
        return Err(Error::Estimation(format!("Sigma_c^min = {sigma_c_min:e} <= 0")));
    }
    let v = sigma_a_max;
    if !(v > 1.0) {
        return Err(Error::Estimation(format!("V_hat = {v} <= 1")));
    }
    // Bob's trusted detector is deconvolved before inverting the channel.
    let eta = model.eta;
    let v_b1 = (sigma_b_max - (1.0 - eta) - 2.0 * model.v_el) / eta;
    let t = sigma_c_min * sigma_c_min / (eta * (v * v - 1.0));
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Estimation(format!("T_hat = {t} outside (0, 1]")));
    }
    let xi = (v_b1 - 1.0) / t - (v - 1.0);
    if !(xi >= 0.0) {
        return Err(Error::Estimation(format!("xi_hat = {xi} < 0")));
    }
    Ok(EstimatedChannel {
        t,
        xi,
        v,
        sigma_a_max,
        sigma_b_max,
        sigma_c_min,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeyRateReport {
    pub attack: AttackClass,
    pub regime: Regime,
    pub mu_star: f64,
    pub modulation: f64,
    pub i_ab: f64,
    pub eve_info: f64,
    /// Zero in the asymptotic regime.
    pub delta_aep: f64,
    /// `None` in the asymptotic regime.
    pub key_length: Option<f64>,
    /// Bits per mode; `l / N` in the finite regime.
    pub rate: f64,
    pub feasible: bool,
    pub estimated: Option<EstimatedChannel>,
    pub note: Option<String>,
    pub detail: Option<EveInformation>,
}

impl KeyRateReport {
    /// Report for a point where parameter estimation gave no usable channel.
    pub fn estimation_failure(attack: AttackClass, model: &SystemModel, reason: String) -> Self {
        KeyRateReport {
            attack,
            regime: Regime::Finite,
            mu_star: f64::NAN,
            modulation: model.v,
            i_ab: f64::NAN,
            eve_info: f64::NAN,
            delta_aep: f64::NAN,
            key_length: None,
            rate: f64::NAN,
            feasible: false,
            estimated: None,
            note: Some(reason),
            detail: None,
        }
    }
}

/// Eve's information for `attack` on `model` and the splitting ratio used.
pub fn eve_information_for(
    model: &SystemModel,
    attack: AttackClass,
    exec: Execution,
) -> Result<EveInformation> {
    match attack {
        AttackClass::Individual => eve_information(model, 0.0),
        AttackClass::Coherent => eve_information(&model.with_memory(MemoryParams::perfect()), 1.0),
        AttackClass::Hybrid => {
            let best = maximize_over_mu(|mu| Ok(eve_information(model, mu)?.total), MU_TOL, exec)?;
            eve_information(model, best.argmax)
        }
    }
}

/// `beta I(A:B) - I_E` on the true channel.
pub fn asymptotic_key_rate(
    model: &SystemModel,
    attack: AttackClass,
    beta: f64,
    exec: Execution,
) -> Result<KeyRateReport> {
    model.validate()?;
    let eve = eve_information_for(model, attack, exec)?;
    let i_ab = mutual_info_ab(model);
    let rate = beta * i_ab - eve.total;
    Ok(KeyRateReport {
        attack,
        regime: Regime::Asymptotic,
        mu_star: eve.mu,
        modulation: model.v,
        i_ab,
        eve_info: eve.total,
        delta_aep: 0.0,
        key_length: None,
        rate,
        feasible: rate > 0.0,
        estimated: None,
        note: None,
        detail: Some(eve),
    })
}

/// `N (beta I - I_E) - Delta - 2 log2(1 / (2 eps_bar))`.
pub fn key_length_formula(big_n: f64, beta_i_ab: f64, eve_info: f64, delta: f64, eps_bar: f64) -> f64 {
    big_n * (beta_i_ab - eve_info) - delta - 2.0 * (1.0 / (2.0 * eps_bar)).log2()
}

struct Leg {
    estimated: EstimatedChannel,
    i_ab: f64,
    eve: EveInformation,
    delta: f64,
    length: f64,
}

fn finite_leg(
    model: &SystemModel,
    budget: &SecurityBudget,
    eps: &EpsilonBudget,
    eve_on: impl FnOnce(&SystemModel) -> Result<EveInformation>,
) -> Result<Leg> {
    let estimated = pe_worstcase_channel(model, budget.n, eps.eps_pe)?;
    let est_model = estimated.apply(model)?;
    let i_ab = if budget.iab_on_estimate {
        mutual_info_ab(&est_model)
    } else {
        mutual_info_ab(model)
    };
    let eve = eve_on(&est_model)?;
    let big_n = budget.modes();
    let delta = delta_aep(big_n, budget.d, eps.eps_sm, eps.eps);
    let length = key_length_formula(big_n, budget.beta * i_ab, eve.total, delta, eps.eps_bar);
    Ok(Leg {
        estimated,
        i_ab,
        eve,
        delta,
        length,
    })
}

/// Finite-size key length for `attack`. Estimation failures come back as an
/// infeasible report, not an error.
pub fn key_length(
    model: &SystemModel,
    attack: AttackClass,
    budget: &SecurityBudget,
    exec: Execution,
) -> Result<KeyRateReport> {
    model.validate()?;
    budget.validate()?;
    match finite_report(model, attack, budget, exec) {
        Err(Error::Estimation(reason)) => Ok(KeyRateReport::estimation_failure(attack, model, reason)),
        other => other,
    }
}

fn finite_report(
    model: &SystemModel,
    attack: AttackClass,
    budget: &SecurityBudget,
    exec: Execution,
) -> Result<KeyRateReport> {
    let big_n = budget.modes();
    let report = |leg: Leg, note: Option<String>| {
        let rate = leg.length / big_n;
        KeyRateReport {
            attack,
            regime: Regime::Finite,
            mu_star: leg.eve.mu,
            modulation: model.v,
            i_ab: leg.i_ab,
            eve_info: leg.eve.total,
            delta_aep: leg.delta,
            key_length: Some(leg.length),
            rate,
            feasible: leg.length > 0.0,
            estimated: Some(leg.estimated),
            note,
            detail: Some(leg.eve),
        }
    };
    let individual_eps = || epsilon_budget(AttackClass::Individual, budget, model.v);
    let collective_eps = || epsilon_budget(AttackClass::Coherent, budget, model.v);

    match attack {
        AttackClass::Individual => {
            let leg = finite_leg(model, budget, &individual_eps()?, |m| eve_information(m, 0.0))?;
            Ok(report(leg, None))
        }
        AttackClass::Coherent => {
            let leg = finite_leg(model, budget, &collective_eps()?, |m| {
                eve_information_for(m, AttackClass::Coherent, exec)
            })?;
            Ok(report(leg, None))
        }
        AttackClass::Hybrid => {
            let eps_c = collective_eps()?;
            let hybrid = finite_leg(model, budget, &eps_c, |m| {
                eve_information_for(m, AttackClass::Hybrid, exec)
            })?;
            let mu = hybrid.eve.mu;
            if mu == 1.0 {
                return Ok(report(hybrid, Some("mu* = 1: coherent bound".into())));
            }
            if mu > 0.0 {
                return Ok(report(hybrid, Some("0 < mu* < 1: loose bound".into())));
            }
            let coh = finite_leg(model, budget, &eps_c, |m| eve_information(m, 1.0))?;
            let ind = finite_leg(model, budget, &individual_eps()?, |m| eve_information(m, 0.0))?;
            let (mut leg, which) = if coh.length < ind.length {
                (coh, "coherent")
            } else {
                (ind, "individual")
            };
            // mu* stays the hybrid maximiser even when the coherent leg is the minimum.
            leg.eve.mu = 0.0;
            Ok(report(leg, Some(format!("mu* = 0: min(l_coh, l_ind) = l_{which}"))))
        }
    }
}

/// Rate in the given regime.
pub fn key_rate(
    model: &SystemModel,
    attack: AttackClass,
    regime: Regime,
    budget: &SecurityBudget,
    exec: Execution,
) -> Result<KeyRateReport> {
    match regime {
        Regime::Asymptotic => asymptotic_key_rate(model, attack, budget.beta, exec),
        Regime::Finite => key_length(model, attack, budget, exec),
    }
}
