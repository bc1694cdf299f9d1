//! Physical model of the no-switching protocol: Alice's Gaussian source, the
//! thermal-lossy channel, and Bob's trusted noisy heterodyne detector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;

/// Decoherence of Eve's two memory arms, each a thermal-lossy channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryParams {
    pub tau1: f64,
    pub tau2: f64,
    pub omega1: f64,
    pub omega2: f64,
}

impl MemoryParams {
    /// Identical but independent memories.
    pub fn symmetric(tau: f64, omega: f64) -> Self {
        MemoryParams {
            tau1: tau,
            tau2: tau,
            omega1: omega,
            omega2: omega,
        }
    }

    /// Lossless, noiseless storage.
    pub fn perfect() -> Self {
        Self::symmetric(1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, tau) in [("tau1", self.tau1), ("tau2", self.tau2)] {
            if !(0.0..=1.0).contains(&tau) {
                return Err(Error::domain(name, tau, "0 <= tau <= 1"));
            }
        }
        for (name, omega) in [("omega1", self.omega1), ("omega2", self.omega2)] {
            if !(omega >= 1.0) || !omega.is_finite() {
                return Err(Error::domain(name, omega, "omega >= 1"));
            }
        }
        Ok(())
    }
}

/// All physical parameters of one protocol run, in shot-noise units.
///
/// `xi` is referred to the channel input.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    /// Source quadrature variance `V = V_A + 1`.
    pub v: f64,
    /// Channel transmissivity.
    pub t: f64,
    /// Excess noise.
    pub xi: f64,
    /// Detector efficiency.
    pub eta: f64,
    /// Electronic noise variance.
    pub v_el: f64,
    pub memory: MemoryParams,
}

impl SystemModel {
    pub fn new(v: f64, t: f64, xi: f64, eta: f64, v_el: f64, memory: MemoryParams) -> Result<Self> {
        let model = SystemModel {
            v,
            t,
            xi,
            eta,
            v_el,
            memory,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v >= 1.0) || !self.v.is_finite() {
            return Err(Error::domain("V", self.v, "V >= 1"));
        }
        if !(self.t > 0.0 && self.t <= 1.0) {
            return Err(Error::domain("T", self.t, "0 < T <= 1"));
        }
        if !(self.xi >= 0.0) || !self.xi.is_finite() {
            return Err(Error::domain("xi", self.xi, "xi >= 0"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::domain("eta", self.eta, "0 < eta <= 1"));
        }
        if !(self.v_el >= 0.0) || !self.v_el.is_finite() {
            return Err(Error::domain("v_el", self.v_el, "v_el >= 0"));
        }
        self.memory.validate()
    }

    pub fn with_modulation(mut self, v: f64) -> Self {
        self.v = v;
        self
    }

    pub fn with_channel(mut self, t: f64, xi: f64) -> Self {
        self.t = t;
        self.xi = xi;
        self
    }

    pub fn with_memory(mut self, memory: MemoryParams) -> Self {
        self.memory = memory;
        self
    }
}

/// Noise figures referred to the channel input.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DerivedNoises {
    pub chi_line: f64,
    pub chi_het: f64,
    pub chi_tot: f64,
    pub chi_d: f64,
    pub chi_t: f64,
    /// Variance of the TMSV purifying the electronic noise; `None` for `eta = 1`.
    pub detector_v: Option<f64>,
}

pub fn derived_noises(model: &SystemModel) -> DerivedNoises {
    let SystemModel { t, xi, eta, v_el, .. } = *model;
    let chi_line = xi + 1.0 / t - 1.0;
    let chi_het = (1.0 + (1.0 - eta) + 2.0 * v_el) / eta;
    let chi_d = ((1.0 - eta) + 2.0 * v_el) / eta;
    DerivedNoises {
        chi_line,
        chi_het,
        chi_tot: chi_line + chi_het / t,
        chi_d,
        chi_t: chi_line + chi_d / t,
        detector_v: (eta < 1.0).then(|| 1.0 + 2.0 * v_el / (1.0 - eta)),
    }
}

/// Variance of Bob's detected mode `B2` before the ideal heterodyne,
/// `eta T (V + chi_t)`.
pub fn bob_detected_variance(model: &SystemModel) -> f64 {
    let n = derived_noises(model);
    model.eta * model.t * (model.v + n.chi_t)
}

/// State of Alice's mode `A` and the channel output `B1`.
pub fn shared_state_cm(model: &SystemModel) -> Result<CovarianceMatrix> {
    model.validate()?;
    let n = derived_noises(model);
    let v = model.v;
    let c = model.t.sqrt() * (v * v - 1.0).sqrt();
    let b = model.t * (v + n.chi_line);
    let entries = nalgebra::DMatrix::from_row_slice(
        4,
        4,
        &[
            v, 0.0, c, 0.0, //
            0.0, v, 0.0, -c, //
            c, 0.0, b, 0.0, //
            0.0, -c, 0.0, b,
        ],
    );
    CovarianceMatrix::from_entries(["A", "B1"], entries)
}

/// Alice-Bob Shannon information per channel use (both quadratures),
/// `log2((V + chi_tot) / (1 + chi_tot))`.
pub fn mutual_info_ab(model: &SystemModel) -> f64 {
    let chi_tot = derived_noises(model).chi_tot;
    ((model.v + chi_tot) / (1.0 + chi_tot)).log2()
}

/// `A`, `B1` extended by the detector model: `B1` mixed at transmissivity
/// `eta` with half (`F`) of a TMSV of variance `v` whose other half is `G`.
/// Output modes `A, B2, F, G`.
pub fn detector_dilated_state(model: &SystemModel) -> Result<CovarianceMatrix> {
    let ab = shared_state_cm(model)?.relabel("B1", "B2")?;
    let noises = derived_noises(model);
    match noises.detector_v {
        None if model.v_el > 0.0 => Err(Error::UndefinedDetectorNoise { v_el: model.v_el }),
        // Identity detector.
        None => ab.attach(&CovarianceMatrix::tmsv(1.0, "F", "G")?),
        Some(nu) => ab
            .attach(&CovarianceMatrix::tmsv(nu, "F", "G")?)?
            .beamsplitter("B2", "F", model.eta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::Quadrature;
    use approx::assert_abs_diff_eq;

    fn fig2(v: f64) -> SystemModel {
        SystemModel::new(v, 0.1, 0.01, 0.6, 0.015, MemoryParams::symmetric(0.5, 1.0)).unwrap()
    }

    #[test]
    fn ideal_device_noises() {
        let m = SystemModel::new(3.0, 1.0, 0.0, 1.0, 0.0, MemoryParams::perfect()).unwrap();
        let n = derived_noises(&m);
        assert_abs_diff_eq!(n.chi_line, 0.0);
        assert_abs_diff_eq!(n.chi_het, 1.0);
        assert_abs_diff_eq!(n.chi_tot, 1.0);
        assert_eq!(n.detector_v, None);
    }

    #[test]
    fn fig2_noises() {
        let n = derived_noises(&fig2(3.0));
        assert_abs_diff_eq!(n.chi_line, 9.01, epsilon = 1e-12);
        // (1 + 0.4 + 0.03) / 0.6 and (0.4 + 0.03) / 0.6
        assert_abs_diff_eq!(n.chi_het, 1.43 / 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(n.chi_het, 2.383_333_333_333, epsilon = 1e-9);
        assert_abs_diff_eq!(n.chi_d, 0.716_666_666_667, epsilon = 1e-9);
        assert_abs_diff_eq!(n.detector_v.unwrap(), 1.0 + 0.03 / 0.4, epsilon = 1e-12);
    }

    #[test]
    fn shared_state_limits() {
        let id = SystemModel::new(3.0, 1.0, 0.0, 1.0, 0.0, MemoryParams::perfect()).unwrap();
        let tm = CovarianceMatrix::tmsv(3.0, "A", "B1").unwrap();
        assert_abs_diff_eq!(shared_state_cm(&id).unwrap().entries(), tm.entries(), epsilon = 1e-12);

        let m = fig2(1.0).with_channel(0.3, 0.05);
        let s = shared_state_cm(&m).unwrap();
        let b = 1.0 + 0.3 * 0.05;
        assert_abs_diff_eq!(s.variance("B1", Quadrature::Q).unwrap(), b, epsilon = 1e-12);
        assert_abs_diff_eq!(s.variance("A", Quadrature::P).unwrap(), 1.0, epsilon = 1e-12);

        let s = shared_state_cm(&fig2(3.0).with_channel(0.5, 0.01)).unwrap();
        assert_abs_diff_eq!(s.variance("B1", Quadrature::Q).unwrap(), 2.005, epsilon = 1e-12);
    }

    #[test]
    fn mutual_information_examples() {
        let id = SystemModel::new(3.0, 1.0, 0.0, 1.0, 0.0, MemoryParams::perfect()).unwrap();
        assert_abs_diff_eq!(mutual_info_ab(&id), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mutual_info_ab(&fig2(1.0)), 0.0, epsilon = 1e-15);
        let mut prev = 0.0;
        for v in [1.5, 2.0, 5.0, 50.0] {
            let i = mutual_info_ab(&fig2(v));
            assert!(i > prev);
            prev = i;
        }
    }

    #[test]
    fn dilated_state_bob_variance() {
        let m = fig2(3.0);
        let s = detector_dilated_state(&m).unwrap();
        let n = derived_noises(&m);
        assert_abs_diff_eq!(
            s.variance("B2", Quadrature::Q).unwrap(),
            0.6 * 0.1 * (3.0 + n.chi_t),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(s.entropy().unwrap(), shared_state_cm(&m).unwrap().entropy().unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn identity_detector_leaves_b1() {
        let m = SystemModel::new(4.0, 0.4, 0.02, 1.0, 0.0, MemoryParams::perfect()).unwrap();
        let s = detector_dilated_state(&m).unwrap();
        let b1 = shared_state_cm(&m).unwrap();
        assert_abs_diff_eq!(
            s.reduce(&["A", "B2"]).unwrap().entries(),
            b1.entries(),
            epsilon = 1e-14
        );
        let bad = SystemModel { v_el: 0.01, ..m };
        assert!(matches!(
            detector_dilated_state(&bad),
            Err(Error::UndefinedDetectorNoise { .. })
        ));
        // the closed form still works there
        assert!(mutual_info_ab(&bad).is_finite());
    }

    #[test]
    fn heterodyne_on_alice_reproduces_conditional_variance() {
        let m = fig2(3.0);
        let s = detector_dilated_state(&m).unwrap();
        let cond = s.condition_on_heterodyne("A").unwrap();
        let n = derived_noises(&m);
        // heterodyne outcome variance (V_B2|A + 1)/2 = eta T (1 + chi_tot)/2
        let het = (cond.variance("B2", Quadrature::Q).unwrap() + 1.0) / 2.0;
        assert_abs_diff_eq!(het, 0.6 * 0.1 * (1.0 + n.chi_tot) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn validation() {
        assert!(SystemModel::new(0.9, 0.1, 0.0, 0.5, 0.0, MemoryParams::perfect()).is_err());
        assert!(SystemModel::new(2.0, 0.0, 0.0, 0.5, 0.0, MemoryParams::perfect()).is_err());
        assert!(SystemModel::new(2.0, 0.5, -0.1, 0.5, 0.0, MemoryParams::perfect()).is_err());
        assert!(SystemModel::new(2.0, 0.5, 0.0, 1.5, 0.0, MemoryParams::perfect()).is_err());
        assert!(SystemModel::new(2.0, 0.5, 0.0, 0.5, 0.0, MemoryParams::symmetric(1.1, 1.0)).is_err());
        assert!(SystemModel::new(2.0, 0.5, 0.0, 0.5, 0.0, MemoryParams::symmetric(0.5, 0.9)).is_err());
    }
}
