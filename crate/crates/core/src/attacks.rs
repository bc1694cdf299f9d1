//! Eve's entangling-cloner hybrid attack.
//!
//! Eve replaces the channel by a beamsplitter of transmissivity `T` fed with
//! half of a TMSV of variance `omega_E`. Each of her two output modes is split
//! at transmissivity `mu`: the transmitted part goes through a decohering
//! memory (thermal-lossy channel `tau_i, omega_i`) and is measured
//! collectively (`E'1, E'2`); the reflected parts are combined on a balanced
//! beamsplitter and homodyned immediately (`q` on `E''1`, `p` on `E''2`).
//!
//! Two constructions of the covariance blocks are provided:
//! [`hybrid_bundle_closed_form`] writes every entry directly, and
//! [`hybrid_bundle_circuit`] simulates the optical circuit mode by mode.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, Quadrature};
use crate::protocol::{bob_detected_variance, SystemModel};

pub const MEMORY_1: &str = "E'1";
pub const MEMORY_2: &str = "E'2";
pub const INDIVIDUAL_1: &str = "E''1";
pub const INDIVIDUAL_2: &str = "E''2";
pub const BOB: &str = "B2";
/// Outputs of the balanced splitter that realises Bob's heterodyne.
pub const BOB_Q: &str = "B3";
pub const BOB_P: &str = "C";

const JOINT_MODES: [&str; 5] = [MEMORY_1, MEMORY_2, INDIVIDUAL_1, INDIVIDUAL_2, BOB];
const SPLIT_MODES: [&str; 6] = [MEMORY_1, MEMORY_2, INDIVIDUAL_1, INDIVIDUAL_2, BOB_Q, BOB_P];
const EVE_MODES: [&str; 4] = [MEMORY_1, MEMORY_2, INDIVIDUAL_1, INDIVIDUAL_2];

/// Variance of the cloner TMSV reproducing excess noise `xi` at transmissivity `t`.
pub fn cloner_variance(t: f64, xi: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::domain("T", t, "0 < T <= 1"));
    }
    if !(xi >= 0.0) {
        return Err(Error::domain("xi", xi, "xi >= 0"));
    }
    if t == 1.0 {
        return if xi == 0.0 {
            Ok(1.0)
        } else {
            Err(Error::UnrepresentableChannel { xi })
        };
    }
    Ok(1.0 + t * xi / (1.0 - t))
}

/// Covariance blocks of Eve's stored modes, her individually measured modes
/// and Bob's detected mode at one splitting ratio `mu`.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridBundle {
    pub mu: f64,
    /// `E'1, E'2` after the memory channels.
    pub memory: CovarianceMatrix,
    /// `E''1, E''2`.
    pub individual: CovarianceMatrix,
    /// 4x4 cross-covariance `sigma_{E', E''}`.
    pub memory_individual: DMatrix<f64>,
    /// 4x2 cross-covariance `sigma_{E', B2}`.
    pub memory_bob: DMatrix<f64>,
    /// 2x4 cross-covariance `sigma_{B2, E''}`.
    pub bob_individual: DMatrix<f64>,
    /// Variance of `B2`, `eta T (V + chi_t)`.
    pub bob_variance: f64,
}

impl HybridBundle {
    /// Joint state of `E'1, E'2, E''1, E''2, B2`.
    pub fn joint(&self) -> Result<CovarianceMatrix> {
        CovarianceMatrix::from_entries(JOINT_MODES, self.joint_entries())
    }

    fn joint_entries(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(10, 10);
        m.view_mut((0, 0), (4, 4)).copy_from(self.memory.entries());
        m.view_mut((4, 4), (4, 4)).copy_from(self.individual.entries());
        m.view_mut((8, 8), (2, 2))
            .copy_from(&(DMatrix::identity(2, 2) * self.bob_variance));
        m.view_mut((0, 4), (4, 4)).copy_from(&self.memory_individual);
        m.view_mut((4, 0), (4, 4))
            .copy_from(&self.memory_individual.transpose());
        m.view_mut((0, 8), (4, 2)).copy_from(&self.memory_bob);
        m.view_mut((8, 0), (2, 4)).copy_from(&self.memory_bob.transpose());
        m.view_mut((8, 4), (2, 4)).copy_from(&self.bob_individual);
        m.view_mut((4, 8), (4, 2))
            .copy_from(&self.bob_individual.transpose());
        m
    }

    /// Joint state with Bob's mode split on a balanced beamsplitter into
    /// `B3` (q measured) and `C` (p measured):
    /// `M_B3 = M_C = (V_B2+1)/2 I`, `sigma_{C,B3} = (1-V_B2)/2 I`,
    /// `sigma_{., B3} = -sigma_{., C} = sigma_{., B2}/sqrt 2`.
    pub fn joint_split_bob(&self) -> Result<CovarianceMatrix> {
        CovarianceMatrix::from_entries(SPLIT_MODES, self.joint_split_bob_entries())
    }

    fn joint_split_bob_entries(&self) -> DMatrix<f64> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let id = DMatrix::<f64>::identity(2, 2);
        let mut m = DMatrix::zeros(12, 12);
        m.view_mut((0, 0), (4, 4)).copy_from(self.memory.entries());
        m.view_mut((4, 4), (4, 4)).copy_from(self.individual.entries());
        m.view_mut((0, 4), (4, 4)).copy_from(&self.memory_individual);
        m.view_mut((4, 0), (4, 4))
            .copy_from(&self.memory_individual.transpose());
        let e_b3 = &self.memory_bob * r;
        m.view_mut((0, 8), (4, 2)).copy_from(&e_b3);
        m.view_mut((0, 10), (4, 2)).copy_from(&(-&e_b3));
        let i_b3 = self.bob_individual.transpose() * r;
        m.view_mut((4, 8), (4, 2)).copy_from(&i_b3);
        m.view_mut((4, 10), (4, 2)).copy_from(&(-&i_b3));
        let diag = &id * (0.5 * (self.bob_variance + 1.0));
        m.view_mut((8, 8), (2, 2)).copy_from(&diag);
        m.view_mut((10, 10), (2, 2)).copy_from(&diag);
        m.view_mut((8, 10), (2, 2))
            .copy_from(&(&id * (0.5 * (1.0 - self.bob_variance))));
        let upper = m.upper_triangle();
        &upper + upper.transpose() - DMatrix::from_diagonal(&upper.diagonal())
    }

    /// Joint state of `E'1, E'2, E''1, E''2`.
    pub fn eve_joint(&self) -> Result<CovarianceMatrix> {
        CovarianceMatrix::from_entries(EVE_MODES, self.eve_joint_entries())
    }

    fn eve_joint_entries(&self) -> DMatrix<f64> {
        self.joint_entries().view((0, 0), (8, 8)).into_owned()
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::domain("mu", mu, "0 <= mu <= 1"));
    }
    Ok(())
}

/// Every block written out entry by entry.
pub fn hybrid_bundle_closed_form(model: &SystemModel, mu: f64) -> Result<HybridBundle> {
    model.validate()?;
    check_mu(mu)?;
    let SystemModel {
        v, t, eta, memory, ..
    } = *model;
    let w_e = cloner_variance(t, model.xi)?;
    let (tau1, tau2) = (memory.tau1, memory.tau2);
    let (om1, om2) = (memory.omega1, memory.omega2);
    let sqrt2 = std::f64::consts::SQRT_2;

    // Eve's cloner outputs before splitting.
    let v_e1 = t * w_e + (1.0 - t) * v;
    let v_e2 = w_e;
    let c_e12 = t.sqrt() * (w_e * w_e - 1.0).sqrt();

    // Stored arm.
    let v_ec1 = mu * v_e1 + (1.0 - mu);
    let v_ec2 = mu * v_e2 + (1.0 - mu);
    let c_ec = mu * c_e12;
    let a1 = tau1 * v_ec1 + (1.0 - tau1) * om1;
    let a2 = tau2 * v_ec2 + (1.0 - tau2) * om2;
    let c12 = (tau1 * tau2).sqrt() * c_ec;
    let memory_cm = DMatrix::from_row_slice(
        4,
        4,
        &[
            a1, 0.0, c12, 0.0, //
            0.0, a1, 0.0, -c12, //
            c12, 0.0, a2, 0.0, //
            0.0, -c12, 0.0, a2,
        ],
    );

    // Individually measured arm.
    let v_ei1 = (1.0 - mu) * v_e1 + mu;
    let v_ei2 = (1.0 - mu) * v_e2 + mu;
    let c_ei = (1.0 - mu) * c_e12;
    let lo = 0.5 * (v_ei1 + v_ei2) - c_ei;
    let hi = 0.5 * (v_ei1 + v_ei2) + c_ei;
    let cc = 0.5 * (v_ei1 - v_ei2);
    let individual_cm = DMatrix::from_row_slice(
        4,
        4,
        &[
            lo, 0.0, cc, 0.0, //
            0.0, hi, 0.0, cc, //
            cc, 0.0, hi, 0.0, //
            0.0, cc, 0.0, lo,
        ],
    );

    // sigma_{E', E''}
    let k1 = (tau1 * (1.0 - mu) * mu).sqrt();
    let k2 = (tau2 * (1.0 - mu) * mu).sqrt();
    let c_i1_m1 = k1 * (1.0 - v_e1);
    let c_i2_m1 = -k1 * c_e12;
    let c_i1_m2 = -k2 * c_e12;
    let c_i2_m2 = k2 * (1.0 - v_e2);
    let q1q1 = (c_i1_m1 - c_i2_m1) / sqrt2; // = p1 p2
    let p1p1 = (c_i1_m1 + c_i2_m1) / sqrt2; // = q1 q2
    let q2q2 = (c_i1_m2 + c_i2_m2) / sqrt2; // = -p2 p1
    let p2p2 = (-c_i1_m2 + c_i2_m2) / sqrt2; // = -q2 q1
    let memory_individual = DMatrix::from_row_slice(
        4,
        4,
        &[
            q1q1, 0.0, p1p1, 0.0, //
            0.0, p1p1, 0.0, q1q1, //
            -p2p2, 0.0, q2q2, 0.0, //
            0.0, -q2q2, 0.0, p2p2,
        ],
    );

    // sigma_{E', B2}
    let e1b = (tau1 * mu * (1.0 - t) * t * eta).sqrt() * (w_e - v);
    let e2b = (tau2 * mu * (1.0 - t) * eta).sqrt() * (w_e * w_e - 1.0).sqrt();
    let memory_bob = DMatrix::from_row_slice(
        4,
        2,
        &[
            e1b, 0.0, //
            0.0, e1b, //
            e2b, 0.0, //
            0.0, -e2b,
        ],
    );

    // sigma_{B2, E''}
    let b_i1 = ((1.0 - mu) * (1.0 - t) * t * eta).sqrt() * (v - w_e);
    let b_i2 = -((1.0 - mu) * (1.0 - t) * eta).sqrt() * (w_e * w_e - 1.0).sqrt();
    let qb_q1 = (b_i1 - b_i2) / sqrt2; // = p_B p_2
    let pb_p1 = (b_i1 + b_i2) / sqrt2; // = q_B q_2
    let bob_individual = DMatrix::from_row_slice(
        2,
        4,
        &[
            qb_q1, 0.0, pb_p1, 0.0, //
            0.0, pb_p1, 0.0, qb_q1,
        ],
    );

    Ok(HybridBundle {
        mu,
        memory: CovarianceMatrix::from_entries([MEMORY_1, MEMORY_2], memory_cm)?,
        individual: CovarianceMatrix::from_entries([INDIVIDUAL_1, INDIVIDUAL_2], individual_cm)?,
        memory_individual,
        memory_bob,
        bob_individual,
        bob_variance: bob_detected_variance(model),
    })
}

/// Global pure state of the whole attack circuit. Modes:
/// `A, B2, F, G` (Alice, Bob, detector dilation),
/// `E'1, E'2, E''1, E''2` (Eve), `D1, R1, D2, R2` (memory environments and
/// their purifications).
pub fn hybrid_circuit_state(model: &SystemModel, mu: f64) -> Result<CovarianceMatrix> {
    model.validate()?;
    check_mu(mu)?;
    let w_e = cloner_variance(model.t, model.xi)?;
    let mem = model.memory;

    // Channel: Alice's B mixed with the cloner's E0.
    let s = CovarianceMatrix::tmsv(model.v, "A", "B")?
        .attach(&CovarianceMatrix::tmsv(w_e, "E0", "E2")?)?
        .beamsplitter("B", "E0", model.t)?
        .relabel("B", "B1")?
        .relabel("E0", "E1")?;

    // mu-splitters: transmitted -> stored, reflected -> individual.
    let s = s
        .attach(&CovarianceMatrix::vacuum("v1"))?
        .attach(&CovarianceMatrix::vacuum("v2"))?
        .beamsplitter("E1", "v1", mu)?
        .beamsplitter("E2", "v2", mu)?
        .relabel("E1", "Ec1")?
        .relabel("v1", "Ei1")?
        .relabel("E2", "Ec2")?
        .relabel("v2", "Ei2")?;

    // Memory decoherence, thermal environments purified by R1, R2.
    let s = s
        .attach(&CovarianceMatrix::tmsv(mem.omega1, "D1", "R1")?)?
        .attach(&CovarianceMatrix::tmsv(mem.omega2, "D2", "R2")?)?
        .beamsplitter("Ec1", "D1", mem.tau1)?
        .beamsplitter("Ec2", "D2", mem.tau2)?
        .relabel("Ec1", MEMORY_1)?
        .relabel("Ec2", MEMORY_2)?;

    // Balanced splitter on the individual arm: E''1 = (Ei1 - Ei2)/sqrt2,
    // E''2 = (Ei1 + Ei2)/sqrt2.
    let s = s
        .beamsplitter("Ei2", "Ei1", 0.5)?
        .relabel("Ei1", INDIVIDUAL_1)?
        .relabel("Ei2", INDIVIDUAL_2)?;

    // Bob's trusted detector.
    let noises = crate::protocol::derived_noises(model);
    let s = match noises.detector_v {
        None if model.v_el > 0.0 => {
            return Err(Error::UndefinedDetectorNoise { v_el: model.v_el })
        }
        None => s.attach(&CovarianceMatrix::tmsv(1.0, "F", "G")?)?,
        Some(nu) => s
            .attach(&CovarianceMatrix::tmsv(nu, "F", "G")?)?
            .beamsplitter("B1", "F", model.eta)?,
    };
    let s = s.relabel("B1", BOB)?;

    s.reduce(&[
        "A",
        BOB,
        "F",
        "G",
        MEMORY_1,
        MEMORY_2,
        INDIVIDUAL_1,
        INDIVIDUAL_2,
        "D1",
        "R1",
        "D2",
        "R2",
    ])
}

/// The same blocks as [`hybrid_bundle_closed_form`], read off the simulated
/// circuit after tracing out everything Eve cannot access.
pub fn hybrid_bundle_circuit(model: &SystemModel, mu: f64) -> Result<HybridBundle> {
    let global = hybrid_circuit_state(model, mu)?;
    let bob = global.reduce(&[BOB])?;
    Ok(HybridBundle {
        mu,
        memory: global.reduce(&[MEMORY_1, MEMORY_2])?,
        individual: global.reduce(&[INDIVIDUAL_1, INDIVIDUAL_2])?,
        memory_individual: global.cross(&[MEMORY_1, MEMORY_2], &[INDIVIDUAL_1, INDIVIDUAL_2])?,
        memory_bob: global.cross(&[MEMORY_1, MEMORY_2], &[BOB])?,
        bob_individual: global.cross(&[BOB], &[INDIVIDUAL_1, INDIVIDUAL_2])?,
        bob_variance: bob.variance(BOB, Quadrature::Q)?,
    })
}

/// Holevo information between the stored modes and everything else Eve and
/// Bob measure: `S(E') - S(E' | q E''1, p E''2, heterodyne B2)`.
pub fn chi_collective_part(bundle: &HybridBundle) -> Result<f64> {
    bundle.joint_split_bob()?;
    chi_collective_given(bundle, bundle.memory.entropy()?)
}

fn chi_collective_given(bundle: &HybridBundle, memory_entropy: f64) -> Result<f64> {
    let joint = CovarianceMatrix::from_entries_unchecked(&SPLIT_MODES, bundle.joint_split_bob_entries());
    let conditional = joint.condition_on_homodyne(&[
        (INDIVIDUAL_1, Quadrature::Q),
        (INDIVIDUAL_2, Quadrature::P),
        (BOB_Q, Quadrature::Q),
        (BOB_P, Quadrature::P),
    ])?;
    Ok(memory_entropy - conditional.entropy()?)
}

/// Shannon information Bob-Eve from the individual homodynes.
pub fn shannon_individual_part(bundle: &HybridBundle) -> Result<f64> {
    let v_b = bundle.bob_variance;
    let het = 0.5 * (v_b + 1.0);
    let ind = bundle.individual.entries();
    let cov_q = bundle.bob_individual[(0, 0)];
    let cov_p = bundle.bob_individual[(1, 3)];
    let cond_q = v_b - cov_q * cov_q / ind[(0, 0)];
    let cond_p = v_b - cov_p * cov_p / ind[(3, 3)];
    let q = 0.5 * (het / (0.5 * (cond_q + 1.0))).log2();
    let p = 0.5 * (het / (0.5 * (cond_p + 1.0))).log2();
    Ok(q + p)
}

/// Holevo information between Eve's stored and individually measured modes:
/// `S(E') - S(E' | q E''1, p E''2)`.
pub fn chi_cross_part(bundle: &HybridBundle) -> Result<f64> {
    bundle.eve_joint()?;
    chi_cross_given(bundle, bundle.memory.entropy()?)
}

fn chi_cross_given(bundle: &HybridBundle, memory_entropy: f64) -> Result<f64> {
    let joint = CovarianceMatrix::from_entries_unchecked(&EVE_MODES, bundle.eve_joint_entries());
    let conditional = joint.condition_on_homodyne(&[
        (INDIVIDUAL_1, Quadrature::Q),
        (INDIVIDUAL_2, Quadrature::P),
    ])?;
    Ok(memory_entropy - conditional.entropy()?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EveInformation {
    pub mu: f64,
    pub chi_collective: f64,
    pub shannon_individual: f64,
    pub chi_cross: f64,
    /// `chi_collective + shannon_individual - chi_cross`.
    pub total: f64,
}

/// Upper bound on Eve's information about Bob's data for splitting ratio `mu`.
pub fn eve_information(model: &SystemModel, mu: f64) -> Result<EveInformation> {
    let at = |source: Error| Error::AtMu {
        mu,
        source: Box::new(source),
    };
    let bundle = hybrid_bundle_closed_form(model, mu).map_err(at)?;
    let s_mem = bundle.memory.entropy().map_err(at)?;
    let chi_collective = chi_collective_given(&bundle, s_mem).map_err(at)?;
    let shannon_individual = shannon_individual_part(&bundle).map_err(at)?;
    let chi_cross = chi_cross_given(&bundle, s_mem).map_err(at)?;
    Ok(EveInformation {
        mu,
        chi_collective,
        shannon_individual,
        chi_cross,
        total: chi_collective + shannon_individual - chi_cross,
    })
}

/// Eve's information under the optimal individual attack (`mu = 0`).
pub fn individual_information(model: &SystemModel) -> Result<f64> {
    Ok(eve_information(model, 0.0)?.total)
}

/// Holevo bound of the collective attack with a perfect memory.
pub fn perfect_collective_information(model: &SystemModel) -> Result<f64> {
    let perfect = model.with_memory(crate::protocol::MemoryParams::perfect());
    Ok(eve_information(&perfect, 1.0)?.total)
}
