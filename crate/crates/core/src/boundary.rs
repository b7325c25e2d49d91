//! Magnitude-bounded reachable sets.
//!
//! Exposed points of the reachable set under box-bounded inputs are reached by
//! bang-bang inputs whose sign pattern follows the switching function
//! `ψ(t; c) = cᵀ e^{A (T - t)} B`. For planar single-input systems with real,
//! distinct eigenvalues each component of `ψ` changes sign at most once, and
//! the whole reachable set is the convex hull of two curves obtained by
//! sweeping the single switch time `η` over `[0, T]`:
//!
//! ```text
//! ξ1(η) = ū ∫_0^η e^{A(T-τ)} B dτ + u̲ ∫_η^T e^{A(T-τ)} B dτ
//! ξ2(η) = u̲ ∫_0^η e^{A(T-τ)} B dτ + ū ∫_η^T e^{A(T-τ)} B dτ
//! ```

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{ReachError, Result};
use crate::geometry::{convex_hull_of, Polytope};
use crate::lti::{
    classify_spectrum, convolution_integral, default_separation_tolerance, matrix_exponential,
    LtiSystem, PiecewiseConstant,
};

/// Per-channel input limits `u̲ <= u <= ū`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlBounds {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl ControlBounds {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(ReachError::Dimension(format!(
                "bounds have {} lower and {} upper entries",
                lower.len(),
                upper.len()
            )));
        }
        if lower.iter().chain(upper.iter()).any(|v| !v.is_finite()) {
            return Err(ReachError::Domain("input bounds must be finite".into()));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(ReachError::Domain("lower input bound exceeds upper bound".into()));
        }
        Ok(Self { lower, upper })
    }

    /// `-magnitude <= u_i <= magnitude` on every channel.
    pub fn symmetric(m: usize, magnitude: f64) -> Result<Self> {
        Self::new(DVector::from_element(m, -magnitude), DVector::from_element(m, magnitude))
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Whether the zero input is admissible.
    pub fn contains_zero(&self) -> bool {
        self.lower.iter().all(|&l| l <= 0.0) && self.upper.iter().all(|&u| u >= 0.0)
    }

    fn check(&self, sys: &LtiSystem) -> Result<()> {
        if self.dim() != sys.m() {
            return Err(ReachError::Dimension(format!(
                "bounds cover {} inputs, system has {}",
                self.dim(),
                sys.m()
            )));
        }
        Ok(())
    }
}

fn check_costate(sys: &LtiSystem, c: &DVector<f64>) -> Result<()> {
    if c.len() != sys.n() {
        return Err(ReachError::Dimension(format!(
            "direction has {} entries, state dimension is {}",
            c.len(),
            sys.n()
        )));
    }
    if c.iter().all(|&v| v == 0.0) || c.iter().any(|v| !v.is_finite()) {
        return Err(ReachError::Domain("direction must be finite and nonzero".into()));
    }
    Ok(())
}

/// `ψ(t; c) = cᵀ e^{A (T - t)} B` as an m-vector.
pub fn switching_function(sys: &LtiSystem, c: &DVector<f64>, horizon: f64, t: f64) -> Result<DVector<f64>> {
    check_costate(sys, c)?;
    if !(0.0..=horizon).contains(&t) {
        return Err(ReachError::Domain(format!("time {t} outside [0, {horizon}]")));
    }
    let e = matrix_exponential(sys.a(), horizon - t)?;
    Ok((c.transpose() * e * sys.b()).transpose())
}

/// `e^{A (T - t_k)} B` on a uniform grid, shared by every direction `c`.
///
/// The propagator is stepped by `e^{-A h}` and re-anchored with a fresh
/// exponential every `ANCHOR` nodes.
#[derive(Clone, Debug)]
pub struct SwitchingKernel {
    horizon: f64,
    times: Vec<f64>,
    responses: Vec<DMatrix<f64>>,
    b_norm: f64,
}

const ANCHOR: usize = 64;

impl SwitchingKernel {
    pub fn new(sys: &LtiSystem, horizon: f64, grid_points: usize) -> Result<Self> {
        if grid_points < 2 {
            return Err(ReachError::Domain("switching grid needs at least two points".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(ReachError::Domain(format!("horizon {horizon} must be positive")));
        }
        let last = (grid_points - 1) as f64;
        let times: Vec<f64> = (0..grid_points).map(|k| horizon * k as f64 / last).collect();
        let step = matrix_exponential(sys.a(), -horizon / last)?;
        let mut responses = Vec::with_capacity(grid_points);
        let mut current = DMatrix::zeros(sys.n(), sys.m());
        for (k, &t) in times.iter().enumerate() {
            if k % ANCHOR == 0 {
                current = matrix_exponential(sys.a(), horizon - t)? * sys.b();
            } else {
                current = &step * &current;
            }
            responses.push(current.clone());
        }
        Ok(Self {
            horizon,
            times,
            responses,
            b_norm: sys.b().norm(),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// ψ at every grid node.
    pub fn evaluate(&self, c: &DVector<f64>) -> Vec<DVector<f64>> {
        self.responses.iter().map(|r| (c.transpose() * r).transpose()).collect()
    }

    pub fn count(&self, c: &DVector<f64>) -> SwitchReport {
        let psi = self.evaluate(c);
        let m = psi[0].len();
        let zero_tol = 1e-12 * c.norm() * self.b_norm;
        let mut sign_changes = vec![0usize; m];
        let mut identically_zero = vec![false; m];
        for i in 0..m {
            let peak = psi.iter().map(|v| v[i].abs()).fold(0.0, f64::max);
            if peak < zero_tol || peak == 0.0 {
                identically_zero[i] = true;
                continue;
            }
            let mut last_sign = 0.0;
            for v in &psi {
                let s = if v[i] > 0.0 {
                    1.0
                } else if v[i] < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                if s != 0.0 {
                    if last_sign != 0.0 && s != last_sign {
                        sign_changes[i] += 1;
                    }
                    last_sign = s;
                }
            }
        }
        SwitchReport {
            sign_changes,
            identically_zero,
        }
    }
}

/// Sign changes of each component of ψ on a sampled grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwitchReport {
    pub sign_changes: Vec<usize>,
    pub identically_zero: Vec<bool>,
}

impl SwitchReport {
    pub fn max_changes(&self) -> usize {
        self.sign_changes.iter().copied().max().unwrap_or(0)
    }
}

/// Strict sign changes of every ψ component on a uniform grid.
pub fn switch_count(sys: &LtiSystem, c: &DVector<f64>, horizon: f64, grid_points: usize) -> Result<SwitchReport> {
    check_costate(sys, c)?;
    if grid_points < 100 {
        return Err(ReachError::Domain(format!(
            "switch counting needs at least 100 grid points, got {grid_points}"
        )));
    }
    Ok(SwitchingKernel::new(sys, horizon, grid_points)?.count(c))
}

/// Bracket-scan resolution used by [`bang_bang_control`].
pub const DEFAULT_SCAN_POINTS: usize = 2001;

/// Bang-bang input for direction `c`: `u_i = ū_i` where `ψ_i >= 0`, else `u̲_i`.
pub fn bang_bang_control(
    sys: &LtiSystem,
    bounds: &ControlBounds,
    c: &DVector<f64>,
    horizon: f64,
) -> Result<PiecewiseConstant> {
    bang_bang_control_with(sys, bounds, c, horizon, DEFAULT_SCAN_POINTS)
}

/// [`bang_bang_control`] with an explicit bracket-scan size. Each sign change
/// found on the scan is refined by bisection to near machine precision.
pub fn bang_bang_control_with(
    sys: &LtiSystem,
    bounds: &ControlBounds,
    c: &DVector<f64>,
    horizon: f64,
    scan_points: usize,
) -> Result<PiecewiseConstant> {
    check_costate(sys, c)?;
    bounds.check(sys)?;
    let kernel = SwitchingKernel::new(sys, horizon, scan_points.max(2))?;
    let psi = kernel.evaluate(c);
    let times = kernel.times();
    let m = sys.m();
    let upper_on = |v: f64| v >= 0.0;

    let mut switches: Vec<f64> = Vec::new();
    for i in 0..m {
        for k in 0..times.len() - 1 {
            if upper_on(psi[k][i]) != upper_on(psi[k + 1][i]) {
                let (mut lo, mut hi) = (times[k], times[k + 1]);
                let lo_state = upper_on(psi[k][i]);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let v = switching_function(sys, c, horizon, mid)?[i];
                    if upper_on(v) == lo_state {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                switches.push(hi);
            }
        }
    }
    switches.sort_by(f64::total_cmp);
    switches.dedup_by(|b, a| (*b - *a).abs() <= 4.0 * f64::EPSILON * horizon);

    let mut edges = vec![0.0];
    edges.extend(&switches);
    edges.push(horizon);
    let mut values = Vec::with_capacity(edges.len() - 1);
    for w in edges.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let v = switching_function(sys, c, horizon, mid)?;
        values.push(DVector::from_fn(m, |i, _| {
            if upper_on(v[i]) {
                bounds.upper[i]
            } else {
                bounds.lower[i]
            }
        }));
    }
    // merge pieces that ended up equal (switches of different channels may coincide)
    let mut bps = Vec::new();
    let mut vals = vec![values[0].clone()];
    for (k, v) in values.into_iter().enumerate().skip(1) {
        if &v != vals.last().unwrap() {
            bps.push(switches[k - 1]);
            vals.push(v);
        }
    }
    PiecewiseConstant::new(bps, vals)
}

/// Sampled boundary curves `G1 = ξ1([0, T])` and `G2 = ξ2([0, T])`.
#[derive(Clone, Debug)]
pub struct BoundaryCurve {
    pub horizon: f64,
    pub etas: Vec<f64>,
    pub g1: Vec<DVector<f64>>,
    pub g2: Vec<DVector<f64>>,
    /// False when the system is outside the planar real-distinct class; the
    /// curves are still computed but the hull is no longer guaranteed to be
    /// the reachable set.
    pub exact: bool,
    pub warning: Option<String>,
}

impl BoundaryCurve {
    /// Both curves as one point list (G1 then G2).
    pub fn points(&self) -> Vec<DVector<f64>> {
        self.g1.iter().chain(self.g2.iter()).cloned().collect()
    }

    /// One-switch input producing `g1[k]` (`from_upper = true`) or `g2[k]`.
    pub fn switching_input(&self, bounds: &ControlBounds, k: usize, from_upper: bool) -> Result<PiecewiseConstant> {
        let (first, second) = if from_upper {
            (bounds.upper().clone(), bounds.lower().clone())
        } else {
            (bounds.lower().clone(), bounds.upper().clone())
        };
        let eta = self.etas[k];
        if eta <= 0.0 {
            Ok(PiecewiseConstant::constant(second))
        } else if eta >= self.horizon {
            Ok(PiecewiseConstant::constant(first))
        } else {
            PiecewiseConstant::new(vec![eta], vec![first, second])
        }
    }

    /// CSV with columns `curve, eta, x1, ..., xn`: one row per point, G1 rows then G2 rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.g1.first().map_or(0, |v| v.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["curve".to_string(), "eta".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        w.write_record(&header)?;
        for (label, curve) in [("g1", &self.g1), ("g2", &self.g2)] {
            for (eta, x) in self.etas.iter().zip(curve) {
                let mut row = vec![label.to_string(), eta.to_string()];
                row.extend(x.iter().map(|v| v.to_string()));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Default number of switch times sampled on `[0, T]`.
pub const DEFAULT_N_ETA: usize = 400;

/// Boundary curves of the reachable set for single-input systems.
pub fn boundary_curve(sys: &LtiSystem, bounds: &ControlBounds, horizon: f64, n_eta: usize) -> Result<BoundaryCurve> {
    if sys.m() != 1 {
        return Err(ReachError::Unsupported(format!(
            "boundary curves need a single input, system has {}",
            sys.m()
        )));
    }
    bounds.check(sys)?;
    if n_eta < 2 {
        return Err(ReachError::Domain("need at least two switch times".into()));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(ReachError::Domain(format!("horizon {horizon} must be positive")));
    }
    let spectrum = classify_spectrum(sys, default_separation_tolerance(sys.a()))?;
    let (exact, warning) = if spectrum.is_planar_real_distinct {
        (true, None)
    } else {
        (
            false,
            Some("system is not planar with real distinct eigenvalues; curves are best-effort".to_string()),
        )
    };

    let (lo, hi) = (bounds.lower[0], bounds.upper[0]);
    let last = (n_eta - 1) as f64;
    let etas: Vec<f64> = (0..n_eta)
        .map(|k| if k == n_eta - 1 { horizon } else { horizon * k as f64 / last })
        .collect();
    let mut g1 = Vec::with_capacity(n_eta);
    let mut g2 = Vec::with_capacity(n_eta);
    for &eta in &etas {
        let before = convolution_integral(sys, horizon, 0.0, eta)?.column(0).into_owned();
        let after = convolution_integral(sys, horizon, eta, horizon)?.column(0).into_owned();
        g1.push(&before * hi + &after * lo);
        g2.push(&before * lo + &after * hi);
    }
    Ok(BoundaryCurve {
        horizon,
        etas,
        g1,
        g2,
        exact,
        warning,
    })
}

/// Convex hull of `G1 ∪ G2` for planar systems.
pub fn reach_hull_planar(curve: &BoundaryCurve) -> Result<Polytope> {
    if curve.g1.first().map_or(0, |v| v.len()) != 2 {
        return Err(ReachError::Dimension("planar hull needs a 2-dimensional state".into()));
    }
    convex_hull_of(&curve.points(), 2)
}
