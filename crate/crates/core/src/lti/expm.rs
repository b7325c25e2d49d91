//! Matrix exponential by scaling and squaring with diagonal Padé approximants.
//!
//! The degree is chosen from the 1-norm of the argument following Higham,
//! "The Scaling and Squaring Method for the Matrix Exponential Revisited"
//! (SIAM J. Matrix Anal. Appl. 26(4), 2005): degrees 3, 5, 7 and 9 are used
//! for small norms and degree 13 with `s` squarings otherwise.

use nalgebra::DMatrix;

use crate::error::{ReachError, Result};

const THETA_3: f64 = 1.495_585_217_958_292e-2;
const THETA_5: f64 = 2.539_398_330_063_23e-1;
const THETA_7: f64 = 9.504_178_996_162_932e-1;
const THETA_9: f64 = 2.097_847_961_257_068;
const THETA_13: f64 = 5.371_920_351_148_152;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const PADE_9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|col| col.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^A` for a square real matrix.
pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(ReachError::Dimension(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(ReachError::Domain(
            "matrix exponential argument has non-finite entries".into(),
        ));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    if n == 1 {
        let v = a[(0, 0)].exp();
        return finite_or_range(DMatrix::from_element(1, 1, v), a[(0, 0)].abs());
    }

    let norm = one_norm(a);
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;

    let low = [
        (THETA_3, &PADE_3[..]),
        (THETA_5, &PADE_5[..]),
        (THETA_7, &PADE_7[..]),
        (THETA_9, &PADE_9[..]),
    ];
    for (theta, coeffs) in low {
        if norm <= theta {
            let (u, v) = low_degree_terms(a, &a2, &ident, coeffs);
            let result = pade_quotient(&u, &v)?;
            return finite_or_range(result, norm);
        }
    }

    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    if squarings > 1000 {
        return Err(ReachError::NumericRange { norm });
    }
    let scale = 2f64.powi(-squarings);
    let a_s = a * scale;
    let a2 = &a2 * (scale * scale);
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE_13;

    let inner_u = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u_poly = &a6 * inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1];
    let u = &a_s * u_poly;
    let inner_v = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];

    let mut result = pade_quotient(&u, &v)?;
    for _ in 0..squarings {
        result = &result * &result;
        if result.iter().any(|x| !x.is_finite()) {
            return Err(ReachError::NumericRange { norm });
        }
    }
    finite_or_range(result, norm)
}

/// `e^{A t}`; negative `t` is allowed.
pub fn matrix_exponential(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if !t.is_finite() {
        return Err(ReachError::Domain(format!("time {t} is not finite")));
    }
    expm(&(a * t))
}

fn low_degree_terms(
    a: &DMatrix<f64>,
    a2: &DMatrix<f64>,
    ident: &DMatrix<f64>,
    coeffs: &[f64],
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut odd = DMatrix::<f64>::zeros(n, n);
    let mut even = DMatrix::<f64>::zeros(n, n);
    let mut power = ident.clone();
    for (k, pair) in coeffs.chunks(2).enumerate() {
        if k > 0 {
            power = &power * a2;
        }
        even += &power * pair[0];
        if let Some(c) = pair.get(1) {
            odd += &power * *c;
        }
    }
    (a * odd, even)
}

fn pade_quotient(u: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let denom = v - u;
    let numer = v + u;
    denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| ReachError::Numeric("singular Padé denominator".into()))
}

fn finite_or_range(m: DMatrix<f64>, norm: f64) -> Result<DMatrix<f64>> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(m)
    } else {
        Err(ReachError::NumericRange { norm })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor(a: &DMatrix<f64>) -> DMatrix<f64> {
        // Plain series with squaring; only used on small-norm arguments.
        let n = a.nrows();
        let s = 8;
        let small = a / 2f64.powi(s);
        let mut term = DMatrix::<f64>::identity(n, n);
        let mut sum = term.clone();
        for k in 1..30 {
            term = &term * &small / k as f64;
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn zero_gives_identity() {
        let e = expm(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(e, DMatrix::identity(3, 3));
    }

    #[test]
    fn diagonal_matches_scalar_exponentials() {
        for t in [-3.0, -0.1, 0.5, 2.0, 7.5] {
            let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.3, -1.7, 2.2]));
            let e = matrix_exponential(&a, t).unwrap();
            for i in 0..3 {
                let want = (a[(i, i)] * t).exp();
                assert!((e[(i, i)] - want).abs() <= 1e-13 * want.max(1.0), "t={t} i={i}");
            }
            assert!(e[(0, 1)].abs() < 1e-15);
        }
    }

    #[test]
    fn every_pade_degree_agrees_with_series() {
        let base = DMatrix::from_row_slice(3, 3, &[0.2, -0.7, 0.1, 0.4, -0.3, 0.9, -0.5, 0.6, 0.05]);
        for scale in [1e-3, 0.1, 0.5, 1.5, 4.0, 20.0] {
            let a = &base * scale;
            let got = expm(&a).unwrap();
            let want = taylor(&a);
            let rel = (&got - &want).norm() / want.norm();
            assert!(rel < 1e-12, "scale {scale}: rel err {rel:e}");
        }
    }

    #[test]
    fn nilpotent_is_exact() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 0.0, 0.0]);
        let e = expm(&a).unwrap();
        assert!((e[(0, 1)] - 3.0).abs() < 1e-14);
        assert!((e[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_square_and_overflow() {
        assert!(matches!(expm(&DMatrix::zeros(2, 3)), Err(ReachError::Dimension(_))));
        let a = DMatrix::from_element(1, 1, 1000.0);
        assert!(matches!(expm(&a), Err(ReachError::NumericRange { .. })));
        let a = DMatrix::from_diagonal_element(2, 2, 900.0);
        assert!(matches!(expm(&a), Err(ReachError::NumericRange { .. })));
    }

    #[test]
    fn example_system_eigenvalues() {
        let a = DMatrix::from_row_slice(2, 2, &[0.4, -0.3, 0.5, 1.7]);
        let e = expm(&a).unwrap();
        let tr = e.trace();
        let det = e.determinant();
        let disc = (tr * tr - 4.0 * det).sqrt();
        let (l1, l2) = ((tr - disc) / 2.0, (tr + disc) / 2.0);
        assert!((l1 - 0.53f64.exp()).abs() < 1e-2);
        assert!((l2 - 1.57f64.exp()).abs() < 1e-2);
        // determinant identity det(e^A) = e^{tr A}
        assert!((det - a.trace().exp()).abs() < 1e-12 * det);
    }
}
