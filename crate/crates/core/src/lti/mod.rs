//! Linear time-invariant systems `x' = A x + B u` and the dense primitives
//! every other module builds on.

mod expm;
mod signal;
mod simulate;

pub use expm::{expm, matrix_exponential};
pub use signal::{ControlSignal, FnControl, PiecewiseConstant, SampledControl};
pub use simulate::{simulate, Trajectory};

use nalgebra::{Complex, DMatrix};

use crate::error::{ReachError, Result};

/// State matrix `A` (n×n) and input matrix `B` (n×m).
#[derive(Clone, Debug, PartialEq)]
pub struct LtiSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl LtiSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(ReachError::Dimension(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.nrows() == 0 || b.ncols() == 0 {
            return Err(ReachError::Dimension(
                "state and input dimensions must be at least 1".into(),
            ));
        }
        if b.nrows() != a.nrows() {
            return Err(ReachError::Dimension(format!(
                "B has {} rows but A is {}x{}",
                b.nrows(),
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(ReachError::Domain("system matrices must be finite".into()));
        }
        Ok(Self { a, b })
    }

    /// Builds a system from row-major nested vectors.
    pub fn from_rows(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(a)?, matrix_from_rows(b)?)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// Same dynamics with the input matrix replaced.
    pub fn with_input_matrix(&self, b: DMatrix<f64>) -> Result<Self> {
        Self::new(self.a.clone(), b)
    }
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(ReachError::Dimension("matrix must be non-empty".into()));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(ReachError::Dimension("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub(crate) fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Returns `(e^{A h}, ∫_0^h e^{A s} B ds)` from one exponential of the
/// augmented matrix `[[A, B], [0, 0]] h`.
pub(crate) fn input_response(a: &DMatrix<f64>, b: &DMatrix<f64>, h: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let m = b.ncols();
    let mut aug = DMatrix::<f64>::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(a);
    aug.view_mut((0, n), (n, m)).copy_from(b);
    let e = matrix_exponential(&aug, h)?;
    Ok((
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, m)).into_owned(),
    ))
}

/// `∫_{t0}^{t1} e^{A (T - τ)} B dτ` in closed form.
///
/// The integral over `[t0, t1]` equals `e^{A (T - t1)} ∫_0^{t1 - t0} e^{A s} B ds`,
/// and the inner integral is read off the augmented exponential.
pub fn convolution_integral(sys: &LtiSystem, horizon: f64, t0: f64, t1: f64) -> Result<DMatrix<f64>> {
    if !(horizon.is_finite() && t0.is_finite() && t1.is_finite()) {
        return Err(ReachError::Domain("times must be finite".into()));
    }
    if t0 > t1 {
        return Err(ReachError::Interval { t0, t1 });
    }
    if t0 < 0.0 || t1 > horizon {
        return Err(ReachError::Domain(format!(
            "interval [{t0}, {t1}] not inside [0, {horizon}]"
        )));
    }
    let (_, integral) = input_response(sys.a(), sys.b(), t1 - t0)?;
    let shift = matrix_exponential(sys.a(), horizon - t1)?;
    Ok(shift * integral)
}

/// Eigenvalues of `A` with the planar real-distinct flag used by the
/// single-switch result.
#[derive(Clone, Debug)]
pub struct SpectrumClass {
    pub eigenvalues: Vec<Complex<f64>>,
    pub is_planar_real_distinct: bool,
}

/// `1e-8 · max(1, ‖A‖)` with the Frobenius norm.
pub fn default_separation_tolerance(a: &DMatrix<f64>) -> f64 {
    1e-8 * a.norm().max(1.0)
}

pub fn classify_spectrum(sys: &LtiSystem, tol: f64) -> Result<SpectrumClass> {
    let mut eigenvalues: Vec<Complex<f64>> = if sys.n() == 2 {
        // closed form keeps the 2x2 case free of iteration
        let a = sys.a();
        let tr = a.trace();
        let det = a.determinant();
        let disc = tr * tr / 4.0 - det;
        if disc >= 0.0 {
            let r = disc.sqrt();
            vec![Complex::new(tr / 2.0 - r, 0.0), Complex::new(tr / 2.0 + r, 0.0)]
        } else {
            let r = (-disc).sqrt();
            vec![Complex::new(tr / 2.0, -r), Complex::new(tr / 2.0, r)]
        }
    } else {
        sys.a()
            .clone()
            .try_schur(f64::EPSILON, 10_000)
            .ok_or_else(|| ReachError::Numeric("eigenvalue iteration did not converge".into()))?
            .complex_eigenvalues()
            .iter()
            .copied()
            .collect()
    };
    if eigenvalues.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(ReachError::Numeric("non-finite eigenvalue".into()));
    }
    eigenvalues.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    let is_planar_real_distinct = eigenvalues.len() == 2
        && eigenvalues.iter().all(|z| z.im.abs() <= tol)
        && (eigenvalues[0].re - eigenvalues[1].re).abs() > tol;
    Ok(SpectrumClass {
        eigenvalues,
        is_planar_real_distinct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> LtiSystem {
        LtiSystem::from_rows(&[vec![0.4, -0.3], vec![0.5, 1.7]], &[vec![1.0], vec![0.0]]).unwrap()
    }

    #[test]
    fn construction_checks_shapes() {
        assert!(LtiSystem::new(DMatrix::zeros(2, 3), DMatrix::zeros(2, 1)).is_err());
        assert!(LtiSystem::new(DMatrix::zeros(2, 2), DMatrix::zeros(3, 1)).is_err());
        assert!(LtiSystem::new(DMatrix::zeros(2, 2), DMatrix::zeros(2, 0)).is_err());
        let mut a = DMatrix::zeros(2, 2);
        a[(0, 0)] = f64::NAN;
        assert!(LtiSystem::new(a, DMatrix::zeros(2, 1)).is_err());
        assert!(LtiSystem::from_rows(&[vec![1.0, 2.0], vec![3.0]], &[vec![1.0], vec![1.0]]).is_err());
    }

    #[test]
    fn convolution_trivial_cases() {
        let sys = LtiSystem::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]], &[vec![1.0], vec![0.0]]).unwrap();
        let v = convolution_integral(&sys, 1.0, 0.0, 1.0).unwrap();
        assert!((v[(0, 0)] - 1.0).abs() < 1e-15 && v[(1, 0)].abs() < 1e-15);

        let sys = LtiSystem::new(DMatrix::zeros(2, 2), DMatrix::identity(2, 2)).unwrap();
        let v = convolution_integral(&sys, 1.0, 0.25, 0.75).unwrap();
        assert!((v - DMatrix::identity(2, 2) * 0.5).norm() < 1e-15);
    }

    #[test]
    fn convolution_rejects_bad_intervals() {
        let sys = example();
        assert!(matches!(
            convolution_integral(&sys, 1.0, 0.6, 0.4),
            Err(ReachError::Interval { .. })
        ));
        assert!(matches!(convolution_integral(&sys, 1.0, -0.1, 0.4), Err(ReachError::Domain(_))));
        assert!(matches!(convolution_integral(&sys, 1.0, 0.1, 1.4), Err(ReachError::Domain(_))));
    }

    #[test]
    fn convolution_matches_trapezoid_quadrature() {
        let sys = example();
        let closed = convolution_integral(&sys, 1.0, 0.0, 1.0).unwrap();
        // Composite trapezoid with Richardson extrapolation on the integrand
        // evaluated by a fresh exponential at each node.
        let trap = |nodes: usize| {
            let h = 1.0 / (nodes - 1) as f64;
            let mut acc = DMatrix::<f64>::zeros(2, 1);
            for k in 0..nodes {
                let tau = k as f64 * h;
                let w = if k == 0 || k == nodes - 1 { 0.5 } else { 1.0 };
                acc += matrix_exponential(sys.a(), 1.0 - tau).unwrap() * sys.b() * (w * h);
            }
            acc
        };
        let coarse = trap(2001);
        let fine = trap(4001);
        let extrapolated = (&fine * 4.0 - coarse) / 3.0;
        let rel = (&closed - &extrapolated).norm() / closed.norm();
        assert!(rel < 1e-8, "rel err {rel:e}");
    }

    #[test]
    fn spectrum_examples() {
        let s = classify_spectrum(&example(), 1e-8).unwrap();
        assert!(s.is_planar_real_distinct);
        assert!((s.eigenvalues[0].re - 0.53).abs() < 5e-3);
        assert!((s.eigenvalues[1].re - 1.57).abs() < 5e-3);

        let rot = LtiSystem::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]], &[vec![1.0], vec![0.0]]).unwrap();
        let s = classify_spectrum(&rot, 1e-8).unwrap();
        assert!(!s.is_planar_real_distinct);
        assert!((s.eigenvalues[0].im.abs() - 1.0).abs() < 1e-12);

        let ident = LtiSystem::new(DMatrix::identity(2, 2), DMatrix::identity(2, 1)).unwrap();
        let s = classify_spectrum(&ident, default_separation_tolerance(ident.a())).unwrap();
        assert!(!s.is_planar_real_distinct);
    }

    #[test]
    fn spectrum_of_larger_systems_is_never_planar() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -2.0, -3.0]));
        let sys = LtiSystem::new(a, DMatrix::from_element(3, 1, 1.0)).unwrap();
        let s = classify_spectrum(&sys, 1e-8).unwrap();
        assert_eq!(s.eigenvalues.len(), 3);
        assert!(!s.is_planar_real_distinct);
        assert!((s.eigenvalues[0].re + 3.0).abs() < 1e-12);
    }
}
