//! Reference computations that avoid the attack module entirely. Used by the
//! test suites to check Eve's information in its limiting cases.

use crate::attacks::cloner_variance;
use crate::error::Result;
use crate::gaussian::{CovarianceMatrix, Quadrature};
use crate::protocol::{detector_dilated_state, shared_state_cm, SystemModel};

/// Holevo bound of the standard collective entangling-cloner attack, by
/// purification: Eve holds the purification of Alice and Bob's channel
/// output, so `chi = S(A B1) - S(A F G | heterodyne on B2)`.
pub fn collective_holevo_by_purification(model: &SystemModel) -> Result<f64> {
    let s_ab = shared_state_cm(model)?.entropy()?;
    let s_cond = detector_dilated_state(model)?
        .condition_on_heterodyne("B2")?
        .entropy()?;
    Ok(s_ab - s_cond)
}

/// Shannon information of the individual entangling-cloner attack: Eve
/// homodynes `q` of `(E1 - E2)/sqrt 2` and `p` of `(E1 + E2)/sqrt 2` and
/// Bob heterodynes. Conditional variances are read off the circuit as
/// linear functionals of the covariance matrix.
pub fn individual_shannon_direct(model: &SystemModel) -> Result<f64> {
    let w_e = cloner_variance(model.t, model.xi)?;
    let nu = 1.0 + 2.0 * model.v_el / (1.0 - model.eta);
    let mut s = CovarianceMatrix::tmsv(model.v, "A", "B")?
        .attach(&CovarianceMatrix::tmsv(w_e, "E1", "E2")?)?
        .beamsplitter("B", "E1", model.t)?;
    if model.eta < 1.0 {
        s = s
            .attach(&CovarianceMatrix::tmsv(nu, "F", "G")?)?
            .beamsplitter("B", "F", model.eta)?;
    }
    let m = s.entries();
    let b = s.index_of("B")?;
    let e1 = s.index_of("E1")?;
    let e2 = s.index_of("E2")?;
    let v_b = s.variance("B", Quadrature::Q)?;
    let mut bits = 0.0;
    for (quad, sign) in [(Quadrature::Q, -1.0), (Quadrature::P, 1.0)] {
        let o = match quad {
            Quadrature::Q => 0,
            Quadrature::P => 1,
        };
        let (i1, i2, ib) = (2 * e1 + o, 2 * e2 + o, 2 * b + o);
        let var_u = 0.5 * (m[(i1, i1)] + m[(i2, i2)] + 2.0 * sign * m[(i1, i2)]);
        let cov = (m[(ib, i1)] + sign * m[(ib, i2)]) / std::f64::consts::SQRT_2;
        let cond = v_b - cov * cov / var_u;
        bits += 0.5 * ((v_b + 1.0) / (cond + 1.0)).log2();
    }
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::eve_information;
    use crate::protocol::MemoryParams;

    #[test]
    fn limits_agree_with_attack_module() {
        let m = SystemModel::new(4.0, 0.3, 0.02, 0.7, 0.01, MemoryParams::perfect()).unwrap();
        let coll = eve_information(&m, 1.0).unwrap().total;
        assert!((coll - collective_holevo_by_purification(&m).unwrap()).abs() < 1e-9);
        let ind = eve_information(&m, 0.0).unwrap().total;
        assert!((ind - individual_shannon_direct(&m).unwrap()).abs() < 1e-9);
    }
}
