//! Zero-mean Gaussian states described by their covariance matrices.
//!
//! Units are shot-noise units (vacuum quadrature variance 1). Quadratures are
//! interleaved per mode, `(q1, p1, q2, p2, ...)`, and every mode carries a
//! label that survives all transforms so subsystems can be addressed by name.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen, SVD};

use crate::error::{Error, Result};

/// Relative asymmetry tolerated in a covariance matrix.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Symplectic eigenvalues in `[1 - PHYSICALITY_TOL, 1)` are clamped to 1.
pub const PHYSICALITY_TOL: f64 = 1e-7;
/// Singular values below `PINV_RCOND * sigma_max` are dropped by the pseudoinverse.
pub const PINV_RCOND: f64 = 1e-10;

const EIGEN_MAX_ITER: usize = 10_000;

/// `G(x) = (x+1) log2(x+1) - x log2(x)`, the entropy of a thermal mode with
/// mean photon number `x`.
pub fn g_function(x: f64) -> Result<f64> {
    if x.is_nan() || x < -1e-12 {
        return Err(Error::domain("x", x, "x >= 0"));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok((x + 1.0) * (x + 1.0).log2() - x * x.log2())
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mode(String);

impl Mode {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Mode {
    fn from(s: &str) -> Self {
        Mode(s.to_owned())
    }
}

impl From<String> for Mode {
    fn from(s: String) -> Self {
        Mode(s)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quadrature {
    Q,
    P,
}

impl Quadrature {
    fn offset(self) -> usize {
        match self {
            Quadrature::Q => 0,
            Quadrature::P => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticSpectrum {
    eigenvalues: Vec<f64>,
}

impl SymplecticSpectrum {
    /// Sorted ascending, one value per mode.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::INFINITY)
    }

    /// Von Neumann entropy in bits.
    pub fn entropy(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|&nu| g_function((nu - 1.0) / 2.0).unwrap_or(0.0))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    modes: Vec<Mode>,
    entries: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Builds a covariance matrix from raw entries, checking shape, label
    /// uniqueness, symmetry and physicality.
    pub fn from_entries<M: Into<Mode>>(
        modes: impl IntoIterator<Item = M>,
        entries: DMatrix<f64>,
    ) -> Result<Self> {
        let modes: Vec<Mode> = modes.into_iter().map(Into::into).collect();
        if entries.nrows() != entries.ncols() || entries.nrows() != 2 * modes.len() {
            return Err(Error::Shape(format!(
                "{}x{} entries for {} modes",
                entries.nrows(),
                entries.ncols(),
                modes.len()
            )));
        }
        if modes.is_empty() {
            return Err(Error::Shape("no modes".into()));
        }
        check_unique(&modes)?;
        let scale = entries.amax().max(f64::MIN_POSITIVE);
        let asymmetry = (&entries - entries.transpose()).amax() / scale;
        if asymmetry > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { asymmetry });
        }
        let entries = (&entries + entries.transpose()) * 0.5;
        let cm = CovarianceMatrix { modes, entries };
        cm.symplectic_eigenvalues()?;
        Ok(cm)
    }

    /// Like [`Self::from_entries`] but without the symmetry and spectrum
    /// checks, for matrices that are physical by construction. Any later
    /// spectrum or entropy evaluation still rejects unphysical input.
    pub(crate) fn from_entries_unchecked(modes: &[&str], entries: DMatrix<f64>) -> Self {
        debug_assert_eq!(entries.nrows(), 2 * modes.len());
        CovarianceMatrix {
            modes: modes.iter().map(|&m| Mode::from(m)).collect(),
            entries,
        }
    }

    pub fn vacuum(mode: impl Into<Mode>) -> Self {
        CovarianceMatrix {
            modes: vec![mode.into()],
            entries: DMatrix::identity(2, 2),
        }
    }

    /// Single-mode thermal state `diag(omega, omega)`.
    pub fn thermal(omega: f64, mode: impl Into<Mode>) -> Result<Self> {
        if !(omega >= 1.0) {
            return Err(Error::domain("omega", omega, "omega >= 1"));
        }
        Ok(CovarianceMatrix {
            modes: vec![mode.into()],
            entries: DMatrix::identity(2, 2) * omega,
        })
    }

    /// Two-mode squeezed vacuum `[V I, sqrt(V^2-1) Z; sqrt(V^2-1) Z, V I]`.
    pub fn tmsv(v: f64, first: impl Into<Mode>, second: impl Into<Mode>) -> Result<Self> {
        if !(v >= 1.0) {
            return Err(Error::domain("V", v, "V >= 1"));
        }
        let c = (v * v - 1.0).sqrt();
        let mut m = DMatrix::identity(4, 4) * v;
        m[(0, 2)] = c;
        m[(2, 0)] = c;
        m[(1, 3)] = -c;
        m[(3, 1)] = -c;
        let modes = vec![first.into(), second.into()];
        check_unique(&modes)?;
        Ok(CovarianceMatrix { modes, entries: m })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn index_of(&self, mode: &str) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m.as_str() == mode)
            .ok_or_else(|| Error::UnknownMode(mode.to_owned()))
    }

    /// Variance of one quadrature of one mode.
    pub fn variance(&self, mode: &str, quad: Quadrature) -> Result<f64> {
        let i = 2 * self.index_of(mode)? + quad.offset();
        Ok(self.entries[(i, i)])
    }

    /// Cross-covariance block between two lists of modes (rows, columns).
    pub fn cross(&self, rows: &[&str], cols: &[&str]) -> Result<DMatrix<f64>> {
        let ri = self.quadrature_indices(rows)?;
        let ci = self.quadrature_indices(cols)?;
        Ok(DMatrix::from_fn(ri.len(), ci.len(), |r, c| {
            self.entries[(ri[r], ci[c])]
        }))
    }

    /// Reduced state of the listed modes, in the listed order.
    pub fn reduce(&self, keep: &[&str]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::EmptyRemainder);
        }
        let entries = self.cross(keep, keep)?;
        let modes: Vec<Mode> = keep.iter().map(|&m| Mode::from(m)).collect();
        check_unique(&modes)?;
        Ok(CovarianceMatrix { modes, entries })
    }

    /// Partial trace over the listed modes.
    pub fn trace_out(&self, drop: &[&str]) -> Result<Self> {
        for d in drop {
            self.index_of(d)?;
        }
        let keep: Vec<&str> = self
            .modes
            .iter()
            .map(Mode::as_str)
            .filter(|m| !drop.contains(m))
            .collect();
        self.reduce(&keep)
    }

    /// Tensor product: block-diagonal concatenation.
    pub fn attach(&self, other: &CovarianceMatrix) -> Result<Self> {
        for m in &other.modes {
            if self.modes.contains(m) {
                return Err(Error::DuplicateMode(m.to_string()));
            }
        }
        let (a, b) = (self.dim(), other.dim());
        let mut entries = DMatrix::zeros(a + b, a + b);
        entries.view_mut((0, 0), (a, a)).copy_from(&self.entries);
        entries.view_mut((a, a), (b, b)).copy_from(&other.entries);
        let mut modes = self.modes.clone();
        modes.extend(other.modes.iter().cloned());
        Ok(CovarianceMatrix { modes, entries })
    }

    pub fn relabel(&self, from: &str, to: impl Into<Mode>) -> Result<Self> {
        let i = self.index_of(from)?;
        let to = to.into();
        if self.modes.iter().enumerate().any(|(k, m)| k != i && *m == to) {
            return Err(Error::DuplicateMode(to.to_string()));
        }
        let mut out = self.clone();
        out.modes[i] = to;
        Ok(out)
    }

    /// Beamsplitter of transmissivity `t` mixing `first` and `second`:
    /// `first -> sqrt(t) first + sqrt(1-t) second`,
    /// `second -> -sqrt(1-t) first + sqrt(t) second`, on both quadratures.
    /// Output modes keep the input labels.
    pub fn beamsplitter(&self, first: &str, second: &str, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::domain("T_bs", t, "0 <= T_bs <= 1"));
        }
        let i = self.index_of(first)?;
        let j = self.index_of(second)?;
        if i == j {
            return Err(Error::DuplicateMode(first.to_owned()));
        }
        let c = t.sqrt();
        let s = (1.0 - t).sqrt();
        let mut m = self.entries.clone();
        let n = m.nrows();
        for quad in 0..2 {
            let (a, b) = (2 * i + quad, 2 * j + quad);
            for k in 0..n {
                let (x, y) = (m[(a, k)], m[(b, k)]);
                m[(a, k)] = c * x + s * y;
                m[(b, k)] = -s * x + c * y;
            }
            for k in 0..n {
                let (x, y) = (m[(k, a)], m[(k, b)]);
                m[(k, a)] = c * x + s * y;
                m[(k, b)] = -s * x + c * y;
            }
        }
        Ok(CovarianceMatrix {
            modes: self.modes.clone(),
            entries: m,
        })
    }

    /// Symplectic spectrum, computed as the singular values of
    /// `M^{1/2} Omega M^{1/2}` (which equal the moduli of the eigenvalues of
    /// `i Omega M`), paired one per mode.
    pub fn symplectic_eigenvalues(&self) -> Result<SymplecticSpectrum> {
        let n = self.dim();
        let eig = SymmetricEigen::try_new(self.entries.clone(), f64::EPSILON, EIGEN_MAX_ITER)
            .ok_or_else(|| self.numerical("symmetric eigensolve"))?;
        let lmin = eig.eigenvalues.min();
        if !(lmin > 0.0) {
            return Err(Error::Unphysical {
                eigenvalue: 0.0,
                context: format!(
                    "matrix over [{}] is not positive definite (min eigenvalue {lmin:.3e})",
                    self.label_list()
                ),
            });
        }
        let sqrt_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
        let root = &eig.eigenvectors * sqrt_diag * eig.eigenvectors.transpose();
        let omega = symplectic_form(n / 2);
        let a = &root * omega * &root;
        let svd = SVD::try_new(a, false, false, f64::EPSILON, EIGEN_MAX_ITER)
            .ok_or_else(|| self.numerical("singular value decomposition"))?;
        let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
        sv.sort_by(f64::total_cmp);
        let mut eigenvalues = Vec::with_capacity(n / 2);
        for pair in sv.chunks(2) {
            let nu = 0.5 * (pair[0] + pair[1]);
            if nu < 1.0 - PHYSICALITY_TOL {
                return Err(Error::Unphysical {
                    eigenvalue: nu,
                    context: format!("modes [{}]", self.label_list()),
                });
            }
            eigenvalues.push(nu.max(1.0));
        }
        Ok(SymplecticSpectrum { eigenvalues })
    }

    /// Von Neumann entropy in bits.
    pub fn entropy(&self) -> Result<f64> {
        Ok(self.symplectic_eigenvalues()?.entropy())
    }

    /// State of the unmeasured modes after homodyne detection of the listed
    /// quadratures: `M_A - sigma (X M_B X)^MP sigma^T`, with `X` the projector
    /// onto the measured quadratures. Measured modes are removed.
    pub fn condition_on_homodyne(&self, measured: &[(&str, Quadrature)]) -> Result<Self> {
        let mut measured_modes: Vec<&str> = Vec::with_capacity(measured.len());
        for (m, _) in measured {
            self.index_of(m)?;
            if measured_modes.contains(m) {
                return Err(Error::DuplicateMode((*m).to_owned()));
            }
            measured_modes.push(m);
        }
        let kept: Vec<&str> = self
            .modes
            .iter()
            .map(Mode::as_str)
            .filter(|m| !measured_modes.contains(m))
            .collect();
        if kept.is_empty() {
            return Err(Error::EmptyRemainder);
        }
        let m_a = self.cross(&kept, &kept)?;
        let kept_idx = self.quadrature_indices(&kept)?;
        let mut meas_idx = Vec::with_capacity(measured.len());
        for (m, q) in measured {
            meas_idx.push(2 * self.index_of(m)? + q.offset());
        }
        // Only the measured quadratures survive the projector X, so the
        // pseudoinverse of X M_B X reduces to that of this submatrix.
        let sigma = DMatrix::from_fn(kept_idx.len(), meas_idx.len(), |r, c| {
            self.entries[(kept_idx[r], meas_idx[c])]
        });
        let m_b = DMatrix::from_fn(meas_idx.len(), meas_idx.len(), |r, c| {
            self.entries[(meas_idx[r], meas_idx[c])]
        });
        let pinv = pseudo_inverse(m_b)?;
        let entries = m_a - &sigma * pinv * sigma.transpose();
        let entries = (&entries + entries.transpose()) * 0.5;
        Ok(CovarianceMatrix {
            modes: kept.into_iter().map(Mode::from).collect(),
            entries,
        })
    }

    /// State of the other modes after heterodyne detection of `mode`:
    /// `M_A - sigma (M_B + I)^{-1} sigma^T`.
    pub fn condition_on_heterodyne(&self, mode: &str) -> Result<Self> {
        self.index_of(mode)?;
        let kept: Vec<&str> = self
            .modes
            .iter()
            .map(Mode::as_str)
            .filter(|m| *m != mode)
            .collect();
        if kept.is_empty() {
            return Err(Error::EmptyRemainder);
        }
        let m_a = self.cross(&kept, &kept)?;
        let sigma = self.cross(&kept, &[mode])?;
        let m_b = self.cross(&[mode], &[mode])? + DMatrix::identity(2, 2);
        let inv = m_b
            .try_inverse()
            .ok_or_else(|| self.numerical("heterodyne block inversion"))?;
        let entries = m_a - &sigma * inv * sigma.transpose();
        let entries = (&entries + entries.transpose()) * 0.5;
        Ok(CovarianceMatrix {
            modes: kept.into_iter().map(Mode::from).collect(),
            entries,
        })
    }

    /// Heterodyne detection realised physically: mix `mode` with vacuum on a
    /// balanced beamsplitter and measure conjugate quadratures on the two
    /// outputs. Agrees with [`Self::condition_on_heterodyne`].
    pub fn condition_on_heterodyne_by_dilation(&self, mode: &str) -> Result<Self> {
        let ancilla = format!("{mode}#vac");
        let dilated = self
            .attach(&CovarianceMatrix::vacuum(ancilla.as_str()))?
            .beamsplitter(mode, &ancilla, 0.5)?;
        dilated.condition_on_homodyne(&[(mode, Quadrature::Q), (&ancilla, Quadrature::P)])
    }

    fn quadrature_indices(&self, modes: &[&str]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(2 * modes.len());
        for m in modes {
            let i = self.index_of(m)?;
            out.push(2 * i);
            out.push(2 * i + 1);
        }
        Ok(out)
    }

    fn label_list(&self) -> String {
        self.modes
            .iter()
            .map(Mode::as_str)
            .collect::<Vec<_>>()
            .join(",")
    }

    fn numerical(&self, operation: &'static str) -> Error {
        Error::Numerical {
            operation,
            diagnostics: format!(
                "dim {}, max |entry| {:.3e}, frobenius norm {:.3e}",
                self.dim(),
                self.entries.amax(),
                self.entries.norm()
            ),
        }
    }
}

/// Block form `(+) (0 1; -1 0)` over `modes` modes.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Moore-Penrose pseudoinverse with relative cutoff [`PINV_RCOND`].
pub fn pseudo_inverse(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dim = m.nrows();
    let svd = SVD::try_new(m, true, true, f64::EPSILON, EIGEN_MAX_ITER).ok_or_else(|| {
        Error::Numerical {
            operation: "pseudoinverse SVD",
            diagnostics: format!("dim {dim}"),
        }
    })?;
    let cutoff = (PINV_RCOND * svd.singular_values.max()).max(f64::MIN_POSITIVE);
    svd.pseudo_inverse(cutoff).map_err(|e| Error::Numerical {
        operation: "pseudoinverse",
        diagnostics: e.to_string(),
    })
}

fn check_unique(modes: &[Mode]) -> Result<()> {
    for (i, m) in modes.iter().enumerate() {
        if modes[..i].contains(m) {
            return Err(Error::DuplicateMode(m.to_string()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn g_function_values() {
        assert_eq!(g_function(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(g_function(1.0).unwrap(), 2.0, epsilon = 1e-15);
        // 1.5 log2 1.5 - 0.5 log2 0.5
        let expected = 1.5 * 1.5f64.log2() + 0.5;
        assert_abs_diff_eq!(g_function(0.5).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(g_function(0.5).unwrap(), 1.377_443_751_081_734_4, epsilon = 1e-14);
        assert_eq!(g_function(-5e-13).unwrap(), 0.0);
        assert!(g_function(-1e-6).is_err());
    }

    #[test]
    fn g_function_concave_increasing() {
        let xs: Vec<f64> = (0..=10_000).map(|k| k as f64 * 0.01).collect();
        let g: Vec<f64> = xs.iter().map(|&x| g_function(x).unwrap()).collect();
        for w in g.windows(2) {
            assert!(w[1] > w[0]);
        }
        for w in g.windows(3) {
            assert!(w[0] + w[2] - 2.0 * w[1] <= 1e-12);
        }
    }

    #[test]
    fn tmsv_structure() {
        let vac = CovarianceMatrix::tmsv(1.0, "A", "B").unwrap();
        assert_eq!(vac.entries(), &DMatrix::identity(4, 4));
        let s = CovarianceMatrix::tmsv(3.0, "A", "B").unwrap();
        assert_abs_diff_eq!(s.entries()[(0, 2)], 8f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.entries()[(1, 3)], -(8f64.sqrt()), epsilon = 1e-15);
        let nu = s.symplectic_eigenvalues().unwrap();
        assert_abs_diff_eq!(nu.eigenvalues()[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(nu.eigenvalues()[1], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.entropy().unwrap(), 0.0, epsilon = 1e-9);
        assert!(CovarianceMatrix::tmsv(0.5, "A", "B").is_err());
        assert!(CovarianceMatrix::tmsv(2.0, "A", "A").is_err());
    }

    #[test]
    fn thermal_state() {
        let t = CovarianceMatrix::thermal(2.0, "D").unwrap();
        assert_abs_diff_eq!(t.symplectic_eigenvalues().unwrap().eigenvalues()[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.entropy().unwrap(), g_function(0.5).unwrap(), epsilon = 1e-12);
        assert_abs_diff_eq!(
            CovarianceMatrix::thermal(3.0, "D").unwrap().entropy().unwrap(),
            2.0,
            epsilon = 1e-12
        );
        assert!(CovarianceMatrix::thermal(0.99, "D").is_err());
    }

    #[test]
    fn two_mode_spectrum_entropy() {
        let s = CovarianceMatrix::thermal(1.5, "a")
            .unwrap()
            .attach(&CovarianceMatrix::thermal(2.0, "b").unwrap())
            .unwrap();
        let expected = g_function(0.25).unwrap() + g_function(0.5).unwrap();
        assert_abs_diff_eq!(s.entropy().unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn beamsplitter_limits() {
        let s = CovarianceMatrix::tmsv(3.0, "A", "B")
            .unwrap()
            .attach(&CovarianceMatrix::vacuum("V"))
            .unwrap();
        let same = s.beamsplitter("B", "V", 1.0).unwrap();
        assert_abs_diff_eq!(same.entries(), s.entries(), epsilon = 1e-15);
        let swapped = s.beamsplitter("B", "V", 0.0).unwrap();
        assert_abs_diff_eq!(swapped.variance("B", Quadrature::Q).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(swapped.variance("V", Quadrature::Q).unwrap(), 3.0, epsilon = 1e-15);
        let half = s.beamsplitter("B", "V", 0.5).unwrap();
        assert_abs_diff_eq!(half.variance("B", Quadrature::Q).unwrap(), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(half.variance("B", Quadrature::P).unwrap(), 2.0, epsilon = 1e-14);
        assert!(s.beamsplitter("B", "V", 1.2).is_err());
        assert!(s.beamsplitter("B", "B", 0.5).is_err());
    }

    #[test]
    fn beamsplitter_matches_full_matrix_product() {
        let s = CovarianceMatrix::tmsv(3.0, "A", "B")
            .unwrap()
            .attach(&CovarianceMatrix::thermal(1.7, "V").unwrap())
            .unwrap();
        let t: f64 = 0.3;
        let (c, sn) = (t.sqrt(), (1.0 - t).sqrt());
        let mut sym = DMatrix::<f64>::identity(6, 6);
        for quad in 0..2 {
            let (a, b) = (2 + quad, 4 + quad);
            sym[(a, a)] = c;
            sym[(a, b)] = sn;
            sym[(b, a)] = -sn;
            sym[(b, b)] = c;
        }
        let expected = &sym * s.entries() * sym.transpose();
        let got = s.beamsplitter("B", "V", t).unwrap();
        assert_abs_diff_eq!(got.entries(), &expected, epsilon = 1e-13);
    }

    #[test]
    fn attach_and_trace_out() {
        let a = CovarianceMatrix::tmsv(2.5, "A", "B").unwrap();
        let b = CovarianceMatrix::thermal(1.4, "C").unwrap();
        let ab = a.attach(&b).unwrap();
        assert_eq!(ab.dim(), 6);
        assert_abs_diff_eq!(
            ab.entropy().unwrap(),
            a.entropy().unwrap() + b.entropy().unwrap(),
            epsilon = 1e-9
        );
        let back = ab.trace_out(&["C"]).unwrap();
        assert_eq!(back, a);
        assert!(ab.attach(&CovarianceMatrix::vacuum("A")).is_err());
        let vv = CovarianceMatrix::vacuum("x")
            .attach(&CovarianceMatrix::vacuum("y"))
            .unwrap();
        assert_eq!(vv.entries(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn from_entries_validation() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = 0.1;
        assert!(matches!(
            CovarianceMatrix::from_entries(["a"], m),
            Err(Error::NotSymmetric { .. })
        ));
        let squeezed_too_much = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 1.0]));
        assert!(matches!(
            CovarianceMatrix::from_entries(["a"], squeezed_too_much),
            Err(Error::Unphysical { .. })
        ));
        // A pure squeezed state is physical.
        let sq = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 2.0]));
        assert!(CovarianceMatrix::from_entries(["a"], sq).is_ok());
        assert!(CovarianceMatrix::from_entries(["a", "a"], DMatrix::identity(4, 4)).is_err());
        assert!(CovarianceMatrix::from_entries(["a"], DMatrix::identity(4, 4)).is_err());
    }

    #[test]
    fn homodyne_on_tmsv() {
        let v = 3.0;
        let s = CovarianceMatrix::tmsv(v, "A", "B").unwrap();
        let c = s.condition_on_homodyne(&[("B", Quadrature::Q)]).unwrap();
        assert_eq!(c.modes(), &[Mode::from("A")]);
        assert_abs_diff_eq!(c.variance("A", Quadrature::Q).unwrap(), 1.0 / v, epsilon = 1e-12);
        assert_abs_diff_eq!(c.variance("A", Quadrature::P).unwrap(), v, epsilon = 1e-12);
    }

    #[test]
    fn conditioning_on_uncorrelated_ancilla_is_noop() {
        let s = CovarianceMatrix::tmsv(2.0, "A", "B")
            .unwrap()
            .attach(&CovarianceMatrix::thermal(3.0, "X").unwrap())
            .unwrap();
        let hom = s.condition_on_homodyne(&[("X", Quadrature::P)]).unwrap();
        assert_abs_diff_eq!(hom.entries(), s.reduce(&["A", "B"]).unwrap().entries(), epsilon = 1e-14);
        let het = s.condition_on_heterodyne("X").unwrap();
        assert_abs_diff_eq!(het.entries(), s.reduce(&["A", "B"]).unwrap().entries(), epsilon = 1e-14);
    }

    #[test]
    fn heterodyne_routes_agree_on_tmsv() {
        for v in [1.0, 1.5, 3.0, 20.0] {
            let s = CovarianceMatrix::tmsv(v, "A", "B").unwrap();
            let schur = s.condition_on_heterodyne("B").unwrap();
            let dilated = s.condition_on_heterodyne_by_dilation("B").unwrap();
            assert_abs_diff_eq!(schur.entries(), dilated.entries(), epsilon = 1e-9);
            // V - (V^2 - 1)/(V + 1) = 1: heterodyning half a TMSV leaves a coherent state.
            assert_abs_diff_eq!(schur.variance("A", Quadrature::Q).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn conditioning_errors() {
        let s = CovarianceMatrix::tmsv(2.0, "A", "B").unwrap();
        assert_eq!(
            s.condition_on_homodyne(&[("A", Quadrature::Q), ("B", Quadrature::P)]),
            Err(Error::EmptyRemainder)
        );
        assert!(s.condition_on_homodyne(&[("Z", Quadrature::Q)]).is_err());
        assert!(s.condition_on_homodyne(&[("B", Quadrature::Q), ("B", Quadrature::P)]).is_err());
        assert_eq!(
            CovarianceMatrix::vacuum("A").condition_on_heterodyne("A"),
            Err(Error::EmptyRemainder)
        );
    }
}
