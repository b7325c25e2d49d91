//! `L^p`-bounded reachability through costate-parameterized optimal controls.
//!
//! For even `p` the stationary control of the Hamiltonian is
//! `u(t) = root_{p-1}(-Bᵀ e^{-Aᵀ t} λ0)` taken element-wise. Every costate
//! `λ0` therefore produces one boundary candidate: the endpoint `x_f(λ0)` of
//! the least-cost input reaching it, together with that cost
//! `∫‖u‖_p^p dt`.  Sampling a costate grid maps out the reachable set; the
//! costate-norm radius from [`prop2_bound`] selects a subset of costates whose
//! controls are certified to meet the budget without evaluating their cost.
//!
//! All integrals over `[0, T]` share one composite Simpson rule, held by
//! [`LpKernel`].

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ReachError, Result};
use crate::geometry::{convex_hull_of, Polytope};
use crate::lti::{matrix_exponential, ControlSignal, LtiSystem};
use crate::quad::simpson_rule;

/// Default number of Simpson nodes on `[0, T]`.
pub const DEFAULT_NODES: usize = 2001;

/// Additive slack on the reachability label.
pub const REACH_SLACK: f64 = 1e-12;

fn default_budget() -> f64 {
    1.0
}

fn default_nodes() -> usize {
    DEFAULT_NODES
}

/// Exponent, budget and horizon of an `L^p` input bound `‖u‖_{L^p} <= budget`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSpec {
    pub p: u32,
    #[serde(default = "default_budget")]
    pub budget: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
}

impl LpSpec {
    pub fn new(p: u32, budget: f64, horizon: f64) -> Result<Self> {
        let spec = Self {
            p,
            budget,
            horizon,
            nodes: DEFAULT_NODES,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_nodes(mut self, nodes: usize) -> Result<Self> {
        self.nodes = nodes;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 || self.p % 2 != 0 {
            return Err(ReachError::Unsupported(format!("p = {} must be an even integer >= 2", self.p)));
        }
        if !(self.budget > 0.0 && self.budget.is_finite()) {
            return Err(ReachError::Domain(format!("budget {} must be positive", self.budget)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(ReachError::Domain(format!("horizon {} must be positive", self.horizon)));
        }
        if self.nodes < 3 || self.nodes % 2 == 0 {
            return Err(ReachError::Domain(format!("Simpson node count {} must be odd and >= 3", self.nodes)));
        }
        Ok(())
    }

    /// `p / (p - 1)`.
    pub fn q(&self) -> f64 {
        let p = f64::from(self.p);
        p / (p - 1.0)
    }

    /// `budget^p`, the bound on the sampled cost `∫‖u‖_p^p`.
    pub fn cost_bound(&self) -> f64 {
        self.budget.powi(self.p as i32)
    }
}

/// Sign-preserving real root of odd order `k`.
pub fn signed_root(x: f64, k: u32) -> f64 {
    match k {
        1 => x,
        3 => x.cbrt(),
        _ => x.signum() * x.abs().powf(1.0 / f64::from(k)),
    }
}

/// `Σ_i |λ_i|^q`.
pub fn q_norm_q(lambda0: &DVector<f64>, q: f64) -> f64 {
    lambda0.iter().map(|v| v.abs().powf(q)).sum()
}

/// Simpson nodes with `F_k = e^{-A t_k} B` and `R_k = e^{A (T - t_k)} B`.
#[derive(Clone, Debug)]
pub struct LpKernel {
    spec: LpSpec,
    times: Vec<f64>,
    weights: Vec<f64>,
    forward: Vec<DMatrix<f64>>,
    response: Vec<DMatrix<f64>>,
}

const REANCHOR: usize = 64;

impl LpKernel {
    pub fn new(sys: &LtiSystem, spec: &LpSpec) -> Result<Self> {
        spec.validate()?;
        let (times, weights) = simpson_rule(spec.horizon, spec.nodes)?;
        let h = times[1] - times[0];
        let step = matrix_exponential(sys.a(), -h)?;
        let mut forward = Vec::with_capacity(times.len());
        let mut current = sys.b().clone();
        for (k, &t) in times.iter().enumerate() {
            if k > 0 {
                current = if k % REANCHOR == 0 {
                    matrix_exponential(sys.a(), -t)? * sys.b()
                } else {
                    &step * &current
                };
            }
            forward.push(current.clone());
        }
        let lift = matrix_exponential(sys.a(), spec.horizon)?;
        let response = forward.iter().map(|f| &lift * f).collect();
        if forward.iter().any(|f| f.iter().any(|v| !v.is_finite())) {
            return Err(ReachError::NumericRange { norm: f64::INFINITY });
        }
        Ok(Self {
            spec: spec.clone(),
            times,
            weights,
            forward,
            response,
        })
    }

    pub fn spec(&self) -> &LpSpec {
        &self.spec
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n(&self) -> usize {
        self.forward[0].nrows()
    }

    pub fn m(&self) -> usize {
        self.forward[0].ncols()
    }

    /// Control values at every node.
    pub fn control(&self, lambda0: &DVector<f64>) -> Vec<DVector<f64>> {
        let k = self.spec.p - 1;
        self.forward
            .iter()
            .map(|f| (f.tr_mul(lambda0)).map(|g| signed_root(-g, k)))
            .collect()
    }

    /// Endpoint and `∫‖u‖_p^p` of the control generated by `lambda0`.
    pub fn endpoint_and_cost(&self, lambda0: &DVector<f64>) -> (DVector<f64>, f64) {
        let p = self.spec.p as i32;
        let k = self.spec.p - 1;
        let mut x = DVector::<f64>::zeros(self.n());
        let mut cost = 0.0;
        for ((f, r), &w) in self.forward.iter().zip(&self.response).zip(&self.weights) {
            let u = f.tr_mul(lambda0).map(|g| signed_root(-g, k));
            x.gemv(w, r, &u, 1.0);
            cost += w * u.iter().map(|v| v.powi(p)).sum::<f64>();
        }
        (x, cost)
    }

    /// Costate-norm radius `R`; see [`prop2_bound`].
    pub fn prop2_radius(&self) -> f64 {
        let p = f64::from(self.spec.p);
        let q = self.spec.q();
        let integral: f64 = self
            .forward
            .iter()
            .zip(&self.weights)
            .map(|(f, &w)| {
                let pnorm = f.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p);
                w * pnorm.powf(q)
            })
            .sum();
        1.0 / (self.m() as f64 * integral)
    }

    pub fn sample(&self, lambda0: &DVector<f64>, radius: f64) -> CostateSample {
        let (endpoint, cost_p) = self.endpoint_and_cost(lambda0);
        let bound = self.spec.cost_bound();
        CostateSample {
            lambda0: lambda0.clone(),
            endpoint,
            cost_p,
            reachable: cost_p <= bound + REACH_SLACK,
            within_prop2_bound: q_norm_q(lambda0, self.spec.q()) <= radius * bound,
        }
    }
}

/// Optimal control `root_{p-1}(-Bᵀ e^{-Aᵀ t} λ0)` for one costate.
#[derive(Clone, Debug)]
pub struct LpOptimalControl {
    neg_a_t: DMatrix<f64>,
    b_t: DMatrix<f64>,
    lambda0: DVector<f64>,
    root: u32,
    kernel: LpKernel,
}

impl LpOptimalControl {
    pub fn lambda0(&self) -> &DVector<f64> {
        &self.lambda0
    }

    /// Uniform time grid of the kernel's Simpson rule.
    pub fn times(&self) -> &[f64] {
        self.kernel.times()
    }

    /// Control values on [`Self::times`].
    pub fn sample(&self) -> Vec<DVector<f64>> {
        self.kernel.control(&self.lambda0)
    }

    /// Endpoint and cost by Simpson quadrature.
    pub fn endpoint_and_cost(&self) -> (DVector<f64>, f64) {
        self.kernel.endpoint_and_cost(&self.lambda0)
    }
}

impl ControlSignal for LpOptimalControl {
    fn dim(&self) -> usize {
        self.b_t.nrows()
    }

    fn value(&self, t: f64) -> DVector<f64> {
        let costate = matrix_exponential(&self.neg_a_t, t).expect("exponential of a finite matrix") * &self.lambda0;
        (&self.b_t * costate).map(|g| signed_root(-g, self.root))
    }
}

pub fn lp_optimal_control(sys: &LtiSystem, lambda0: &DVector<f64>, spec: &LpSpec) -> Result<LpOptimalControl> {
    check_costate(sys.n(), lambda0)?;
    Ok(LpOptimalControl {
        neg_a_t: -sys.a().transpose(),
        b_t: sys.b().transpose(),
        lambda0: lambda0.clone(),
        root: spec.p - 1,
        kernel: LpKernel::new(sys, spec)?,
    })
}

fn check_costate(n: usize, lambda0: &DVector<f64>) -> Result<()> {
    if lambda0.len() != n {
        return Err(ReachError::Dimension(format!(
            "costate has {} entries, state dimension is {n}",
            lambda0.len()
        )));
    }
    if lambda0.iter().any(|v| !v.is_finite()) {
        return Err(ReachError::Domain("costate must be finite".into()));
    }
    Ok(())
}

/// Costate-norm radius `R = (m ∫_0^T ‖vec(e^{-Aτ} B)‖_p^q dτ)^{-1}`.
///
/// Hölder's inequality gives `∫‖u‖_p^p <= ‖λ0‖_q^q / R`, so every costate with
/// `‖λ0‖_q^q <= R · budget^p` generates an admissible control.  The bound is
/// evaluated with the same quadrature as the sampled costs and so holds for
/// them exactly, not only up to quadrature error.
pub fn prop2_bound(sys: &LtiSystem, spec: &LpSpec) -> Result<f64> {
    Ok(LpKernel::new(sys, spec)?.prop2_radius())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CostateSample {
    pub lambda0: DVector<f64>,
    pub endpoint: DVector<f64>,
    pub cost_p: f64,
    pub reachable: bool,
    pub within_prop2_bound: bool,
}

/// Samples in grid order with the hull of the reachable endpoints.
#[derive(Clone, Debug)]
pub struct LpReachCloud {
    pub spec: LpSpec,
    pub samples: Vec<CostateSample>,
    /// `None` when no endpoint is reachable or the state dimension exceeds 4.
    pub hull: Option<Polytope>,
}

impl LpReachCloud {
    pub fn reachable_endpoints(&self) -> Vec<DVector<f64>> {
        self.samples.iter().filter(|s| s.reachable).map(|s| s.endpoint.clone()).collect()
    }

    pub fn reachable_count(&self) -> usize {
        self.samples.iter().filter(|s| s.reachable).count()
    }

    /// Reachable sample whose endpoint is closest to `xf`.
    pub fn nearest_sample(&self, xf: &DVector<f64>) -> Option<&CostateSample> {
        self.samples
            .iter()
            .filter(|s| s.reachable && s.endpoint.len() == xf.len())
            .min_by(|a, b| (&a.endpoint - xf).norm().total_cmp(&(&b.endpoint - xf).norm()))
    }

    pub fn volume(&self) -> f64 {
        self.hull.as_ref().map_or(0.0, |h| h.volume)
    }

    /// One row per sample: `lambda0_i`, `endpoint_i`, `cost_p`, `reachable`,
    /// `within_prop2_bound`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.samples.first().map_or(0, |s| s.lambda0.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=n).map(|i| format!("lambda0_{i}")).collect();
        header.extend((1..=n).map(|i| format!("endpoint_{i}")));
        header.extend(["cost_p", "reachable", "within_prop2_bound"].map(String::from));
        w.write_record(&header)?;
        for s in &self.samples {
            let mut row: Vec<String> = s.lambda0.iter().chain(s.endpoint.iter()).map(|v| v.to_string()).collect();
            row.push(s.cost_p.to_string());
            row.push(s.reachable.to_string());
            row.push(s.within_prop2_bound.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn hull_of_reachable(samples: &[CostateSample], n: usize) -> Result<Option<Polytope>> {
    let pts: Vec<DVector<f64>> = samples.iter().filter(|s| s.reachable).map(|s| s.endpoint.clone()).collect();
    if pts.is_empty() || !(2..=4).contains(&n) {
        return Ok(None);
    }
    convex_hull_of(&pts, n).map(Some)
}

fn check_grid(n: usize, grid: &[DVector<f64>]) -> Result<()> {
    grid.iter().try_for_each(|l| check_costate(n, l))
}

/// Samples every costate of `grid` in parallel.
pub fn sample_reach(sys: &LtiSystem, spec: &LpSpec, grid: &[DVector<f64>]) -> Result<LpReachCloud> {
    if grid.is_empty() {
        return Err(ReachError::Domain("costate grid is empty".into()));
    }
    let kernel = LpKernel::new(sys, spec)?;
    sample_with_kernel(&kernel, grid)
}

pub fn sample_with_kernel(kernel: &LpKernel, grid: &[DVector<f64>]) -> Result<LpReachCloud> {
    check_grid(kernel.n(), grid)?;
    let radius = kernel.prop2_radius();
    let samples: Vec<CostateSample> = grid.par_iter().map(|l| kernel.sample(l, radius)).collect();
    if samples.iter().any(|s| !s.cost_p.is_finite() || s.endpoint.iter().any(|v| !v.is_finite())) {
        return Err(ReachError::Numeric("non-finite sample endpoint or cost".into()));
    }
    let hull = hull_of_reachable(&samples, kernel.n())?;
    Ok(LpReachCloud {
        spec: kernel.spec().clone(),
        samples,
        hull,
    })
}

/// Samples only the costates inside the certified radius; an empty result is valid.
pub fn inner_approx(sys: &LtiSystem, spec: &LpSpec, grid: &[DVector<f64>]) -> Result<LpReachCloud> {
    let kernel = LpKernel::new(sys, spec)?;
    check_grid(kernel.n(), grid)?;
    let limit = kernel.prop2_radius() * spec.cost_bound();
    let q = spec.q();
    let kept: Vec<DVector<f64>> = grid.iter().filter(|l| q_norm_q(l, q) <= limit).cloned().collect();
    if kept.is_empty() {
        return Ok(LpReachCloud {
            spec: spec.clone(),
            samples: Vec::new(),
            hull: None,
        });
    }
    let cloud = sample_with_kernel(&kernel, &kept)?;
    if let Some(bad) = cloud.samples.iter().find(|s| !s.reachable) {
        return Err(ReachError::Numeric(format!(
            "certified costate produced cost {} above the budget",
            bad.cost_p
        )));
    }
    Ok(cloud)
}

/// Rescales each direction along its ray so its cost equals `(1 - 1e-9) · budget^p`.
///
/// Cost is homogeneous of degree `q` in the costate, so the scaling is exact.
/// Directions generating a zero control are dropped.
pub fn budget_normalized_grid(sys: &LtiSystem, spec: &LpSpec, directions: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    let kernel = LpKernel::new(sys, spec)?;
    check_grid(kernel.n(), directions)?;
    let target = (1.0 - 1e-9) * spec.cost_bound();
    let q = spec.q();
    Ok(directions
        .par_iter()
        .filter_map(|d| {
            let (_, cost) = kernel.endpoint_and_cost(d);
            (cost > 0.0).then(|| d * (target / cost).powf(1.0 / q))
        })
        .collect())
}

const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = u64::from(base);
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

fn splitmix(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `count` deterministic unit vectors in `R^n`.
///
/// `n = 2` gives equally spaced angles `2π(k + φ)/count` with `φ = 0` for seed
/// 0 (so the axes are included when `count` is a multiple of 4).  Higher
/// dimensions map Halton points through Box–Muller; the seed shifts the
/// sequence start.
pub fn unit_directions(n: usize, count: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
    if !(1..=2 * PRIMES.len()).contains(&n) {
        return Err(ReachError::Unsupported(format!("costate grids support dimensions 1 to {}", 2 * PRIMES.len())));
    }
    if count == 0 {
        return Err(ReachError::Domain("direction count must be at least 1".into()));
    }
    if n == 1 {
        return Ok((0..count).map(|k| DVector::from_element(1, if k % 2 == 0 { 1.0 } else { -1.0 })).collect());
    }
    if n == 2 {
        let phase = if seed == 0 { 0.0 } else { (splitmix(seed) >> 11) as f64 / (1u64 << 53) as f64 };
        return Ok((0..count)
            .map(|k| {
                let th = std::f64::consts::TAU * (k as f64 + phase) / count as f64;
                DVector::from_vec(vec![th.cos(), th.sin()])
            })
            .collect());
    }
    let start = if seed == 0 { 0 } else { splitmix(seed) % (1 << 20) };
    let pairs = n.div_ceil(2);
    let mut out = Vec::with_capacity(count);
    let mut i = start;
    while out.len() < count {
        i += 1;
        let mut v = Vec::with_capacity(2 * pairs);
        for j in 0..pairs {
            let u1 = radical_inverse(i, PRIMES[2 * j]);
            let u2 = radical_inverse(i, PRIMES[2 * j + 1]);
            let r = (-2.0 * u1.ln()).sqrt();
            let th = std::f64::consts::TAU * u2;
            v.push(r * th.cos());
            v.push(r * th.sin());
        }
        v.truncate(n);
        let d = DVector::from_vec(v);
        let norm = d.norm();
        if norm > 1e-12 {
            out.push(d / norm);
        }
    }
    Ok(out)
}

/// Radius shells of unit directions plus the `2^n` corners `(±r, …, ±r)` of each shell.
pub fn costate_grid(n: usize, magnitudes: &[f64], directions: usize) -> Result<Vec<DVector<f64>>> {
    costate_grid_seeded(n, magnitudes, directions, 0)
}

pub fn costate_grid_seeded(n: usize, magnitudes: &[f64], directions: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
    if magnitudes.is_empty() {
        return Err(ReachError::Domain("at least one grid radius is required".into()));
    }
    if magnitudes.iter().any(|r| !(*r > 0.0 && r.is_finite())) || magnitudes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ReachError::Domain("grid radii must be positive and strictly ascending".into()));
    }
    if n > 12 {
        return Err(ReachError::Unsupported(format!("costate grid corners for n = {n} are too many")));
    }
    let dirs = unit_directions(n, directions, seed)?;
    let quantum = 1e-12 * magnitudes[magnitudes.len() - 1];
    let mut seen = std::collections::HashSet::new();
    let mut grid = Vec::new();
    for &r in magnitudes {
        let corners = (0..1usize << n).map(|mask| {
            DVector::from_iterator(n, (0..n).map(|i| if mask >> i & 1 == 1 { -r } else { r }))
        });
        for v in dirs.iter().map(|d| d * r).chain(corners) {
            let key: Vec<i64> = v.iter().map(|x| (x / quantum).round() as i64).collect();
            if seen.insert(key) {
                grid.push(v);
            }
        }
    }
    Ok(grid)
}
