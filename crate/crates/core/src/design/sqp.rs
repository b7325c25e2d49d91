//! Sequential quadratic programming for small box-constrained problems with
//! inequality constraints `c_i(x) >= 0`.
//!
//! Each iteration solves an elastic QP
//!
//! ```text
//! min  ½ dᵀ H d + ∇fᵀ d + ρ t + ½ ε t²
//! s.t. c + J d + t >= 0,  t >= 0,  l - x <= d <= u - x
//! ```
//!
//! by a primal active-set method started from the always-feasible point
//! `d = 0, t = max(0, -min c)`. `H` is a damped BFGS approximation of the
//! Lagrangian Hessian and steps are accepted by backtracking on the ℓ1 merit
//! function `f + μ Σ max(0, -c_i)`. Gradients are central finite differences
//! (one-sided where a central stencil would leave the box).

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ReachError, Result};

/// Objective and constraints of a box-constrained nonlinear program.
pub trait NonlinearProgram: Sync {
    fn lower(&self) -> Vec<f64>;
    fn upper(&self) -> Vec<f64>;
    fn num_constraints(&self) -> usize;
    /// `(f(x), c(x))`; `c_i >= 0` is feasible.
    fn evaluate(&self, x: &[f64]) -> Result<(f64, Vec<f64>)>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SqpOptions {
    pub max_iterations: usize,
    pub kkt_tolerance: f64,
    pub feasibility_tolerance: f64,
    pub progress_tolerance: f64,
    pub stall_iterations: usize,
    pub fd_relative_step: f64,
}

impl Default for SqpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            kkt_tolerance: 1e-6,
            feasibility_tolerance: 1e-6,
            progress_tolerance: 1e-10,
            stall_iterations: 3,
            fd_relative_step: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SqpIterate {
    pub x: Vec<f64>,
    pub objective: f64,
    pub constraints: Vec<f64>,
    pub violation: f64,
    pub kkt: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SqpOutcome {
    pub x: Vec<f64>,
    pub objective: f64,
    pub constraints: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<SqpIterate>,
}

fn violation(c: &[f64]) -> f64 {
    c.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max)
}

fn l1_violation(c: &[f64]) -> f64 {
    c.iter().map(|v| (-v).max(0.0)).sum()
}

/// Finite-difference step `h · max(1, |x|)`.
pub fn fd_step(x: f64, relative: f64) -> f64 {
    relative * x.abs().max(1.0)
}

/// Jacobian of `(f, c)` by central differences, one-sided at the box.
///
/// Stencil points are evaluated in parallel; the result is independent of
/// scheduling.
pub fn finite_difference_jacobian(
    prob: &dyn NonlinearProgram,
    x: &[f64],
    relative: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (lo, hi) = (prob.lower(), prob.upper());
    let n = x.len();
    let m = prob.num_constraints();
    let stencils: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..n)
        .map(|i| {
            let h = fd_step(x[i], relative);
            let (mut a, mut b) = (x.to_vec(), x.to_vec());
            let (up, down) = (x[i] + h <= hi[i], x[i] - h >= lo[i]);
            match (up, down) {
                (true, true) => {
                    a[i] += h;
                    b[i] -= h;
                    (a, b, 2.0 * h)
                }
                (true, false) => {
                    a[i] += h;
                    (a, b, h)
                }
                _ => {
                    b[i] -= h;
                    (a, b, h)
                }
            }
        })
        .collect();
    let evals: Vec<Result<((f64, Vec<f64>), (f64, Vec<f64>))>> = stencils
        .par_iter()
        .map(|(a, b, _)| Ok((prob.evaluate(a)?, prob.evaluate(b)?)))
        .collect();
    let mut grad = DVector::zeros(n);
    let mut jac = DMatrix::zeros(m, n);
    for (i, (e, (_, _, width))) in evals.into_iter().zip(&stencils).enumerate() {
        let ((fa, ca), (fb, cb)) = e?;
        grad[i] = (fa - fb) / width;
        for j in 0..m {
            jac[(j, i)] = (ca[j] - cb[j]) / width;
        }
    }
    Ok((grad, jac))
}

/// Solution of `min ½ xᵀ H x + gᵀ x` s.t. `G x >= h` with its multipliers.
struct QpSolution {
    x: DVector<f64>,
    lambda: DVector<f64>,
}

/// Primal active-set method for a strictly convex QP from a feasible start.
fn active_set_qp(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    gm: &DMatrix<f64>,
    hv: &DVector<f64>,
    start: DVector<f64>,
) -> Result<QpSolution> {
    let n = g.len();
    let nc = gm.nrows();
    let mut x = start;
    let mut work: Vec<usize> = Vec::new();
    let tol = 1e-12;
    // set after an unblocked full step: x is the working-set minimizer
    let mut at_minimizer = false;
    for _ in 0..(20 * (n + nc) + 50) {
        let k = work.len();
        let mut kkt = DMatrix::zeros(n + k, n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(h);
        for (r, &i) in work.iter().enumerate() {
            for c in 0..n {
                kkt[(n + r, c)] = gm[(i, c)];
                kkt[(c, n + r)] = -gm[(i, c)];
            }
        }
        let mut rhs = DVector::zeros(n + k);
        let grad = h * &x + g;
        rhs.rows_mut(0, n).copy_from(&(-&grad));
        let sol = kkt
            .lu()
            .solve(&rhs)
            .ok_or_else(|| ReachError::Numeric("singular QP working-set system".into()))?;
        let p = sol.rows(0, n).into_owned();
        let scale = 1.0 + x.amax();
        if at_minimizer || p.amax() <= 1e-13 * scale {
            at_minimizer = false;
            let mults = sol.rows(n, k).into_owned();
            match (0..k).min_by(|&a, &b| mults[a].total_cmp(&mults[b])) {
                Some(j) if mults[j] < -tol => {
                    work.remove(j);
                }
                _ => {
                    let mut lambda = DVector::zeros(nc);
                    for (r, &i) in work.iter().enumerate() {
                        lambda[i] = mults[r];
                    }
                    return Ok(QpSolution { x, lambda });
                }
            }
            continue;
        }
        let mut alpha = 1.0;
        let mut blocking = None;
        for i in (0..nc).filter(|i| !work.contains(i)) {
            let ap = gm.row(i).dot(&p.transpose());
            if ap < -tol * p.norm() * gm.row(i).norm() {
                let slack = gm.row(i).dot(&x.transpose()) - hv[i];
                let a = (slack.max(0.0)) / -ap;
                if a < alpha {
                    alpha = a;
                    blocking = Some(i);
                }
            }
        }
        x += &p * alpha;
        match blocking {
            Some(i) => work.push(i),
            None => at_minimizer = true,
        }
    }
    Err(ReachError::Numeric("QP active-set iteration limit".into()))
}

/// Damped BFGS update keeping `B` positive definite.
fn damped_bfgs(b: &mut DMatrix<f64>, s: &DVector<f64>, y: &DVector<f64>) {
    let bs = &*b * s;
    let sbs = s.dot(&bs);
    if sbs <= 1e-300 {
        return;
    }
    let sy = s.dot(y);
    let theta = if sy >= 0.2 * sbs { 1.0 } else { 0.8 * sbs / (sbs - sy) };
    let r = y * theta + &bs * (1.0 - theta);
    let sr = s.dot(&r);
    if sr <= 1e-300 {
        return;
    }
    *b += &r * r.transpose() / sr - &bs * bs.transpose() / sbs;
}

const ELASTIC_PENALTY: f64 = 1e4;
const ELASTIC_CURVATURE: f64 = 1.0;

struct Step {
    d: DVector<f64>,
    lambda: DVector<f64>,
    elastic: f64,
}

fn solve_subproblem(
    hess: &DMatrix<f64>,
    grad: &DVector<f64>,
    c: &[f64],
    jac: &DMatrix<f64>,
    x: &[f64],
    lo: &[f64],
    hi: &[f64],
) -> Result<Step> {
    let n = grad.len();
    let m = c.len();
    let nv = n + 1;
    let mut h = DMatrix::zeros(nv, nv);
    h.view_mut((0, 0), (n, n)).copy_from(hess);
    h[(n, n)] = ELASTIC_CURVATURE;
    let mut g = DVector::zeros(nv);
    g.rows_mut(0, n).copy_from(grad);
    g[n] = ELASTIC_PENALTY;
    // rows: nonlinear constraints, t >= 0, d >= lo - x, -d >= x - hi
    let nc = m + 1 + 2 * n;
    let mut gm = DMatrix::zeros(nc, nv);
    let mut hv = DVector::zeros(nc);
    for j in 0..m {
        for i in 0..n {
            gm[(j, i)] = jac[(j, i)];
        }
        gm[(j, n)] = 1.0;
        hv[j] = -c[j];
    }
    gm[(m, n)] = 1.0;
    for i in 0..n {
        gm[(m + 1 + i, i)] = 1.0;
        hv[m + 1 + i] = lo[i] - x[i];
        gm[(m + 1 + n + i, i)] = -1.0;
        hv[m + 1 + n + i] = x[i] - hi[i];
    }
    let mut start = DVector::zeros(nv);
    start[n] = c.iter().map(|v| -v).fold(0.0, f64::max);
    let sol = active_set_qp(&h, &g, &gm, &hv, start)?;
    Ok(Step {
        d: sol.x.rows(0, n).into_owned(),
        lambda: sol.lambda.rows(0, m).into_owned(),
        elastic: sol.x[n],
    })
}

fn clip(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

/// Local SQP solve of `prob` from `x0` (clipped into the box).
pub fn minimize(prob: &dyn NonlinearProgram, x0: &[f64], opts: &SqpOptions) -> Result<SqpOutcome> {
    let (lo, hi) = (prob.lower(), prob.upper());
    if lo.len() != x0.len() || hi.len() != x0.len() {
        return Err(ReachError::Dimension("bounds and start point differ in length".into()));
    }
    if lo.iter().zip(&hi).any(|(l, h)| !(l <= h)) {
        return Err(ReachError::Domain("lower bound exceeds upper bound".into()));
    }
    let n = x0.len();
    let mut x = x0.to_vec();
    clip(&mut x, &lo, &hi);
    let (mut f, mut c) = prob.evaluate(&x)?;
    let mut hess = DMatrix::<f64>::identity(n, n);
    let mut mu = 1.0;
    let mut history = Vec::new();
    let mut lambda = DVector::zeros(c.len());
    let mut stall = 0;
    let mut converged = false;
    let mut best: Option<(Vec<f64>, f64, Vec<f64>)> = None;
    let mut iterations = 0;
    let (mut grad, mut jac) = finite_difference_jacobian(prob, &x, opts.fd_relative_step)?;

    for it in 0..=opts.max_iterations {
        let step = solve_subproblem(&hess, &grad, &c, &jac, &x, &lo, &hi)?;
        lambda = step.lambda.clone();
        let viol = violation(&c);
        let stationarity = (&hess * &step.d).amax();
        let complementarity = c.iter().zip(lambda.iter()).map(|(ci, li)| (ci * li).abs()).fold(0.0, f64::max);
        let kkt = stationarity.max(viol).max(complementarity).max(step.elastic);
        history.push(SqpIterate {
            x: x.clone(),
            objective: f,
            constraints: c.clone(),
            violation: viol,
            kkt,
        });
        if viol <= opts.feasibility_tolerance && best.as_ref().is_none_or(|b| f < b.1) {
            best = Some((x.clone(), f, c.clone()));
        }
        iterations = it;
        if kkt <= opts.kkt_tolerance || step.d.amax() <= 1e-14 * (1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs()))) {
            converged = viol <= opts.feasibility_tolerance;
            break;
        }
        if it == opts.max_iterations {
            break;
        }

        mu = f64::max(mu, 1.5 * lambda.amax() + 1e-3);
        let merit = |f: f64, c: &[f64]| f + mu * l1_violation(c);
        let m0 = merit(f, &c);
        let slope = grad.dot(&step.d) - mu * l1_violation(&c);
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha >= 1e-10 {
            let mut trial: Vec<f64> = x.iter().zip(step.d.iter()).map(|(xi, di)| xi + alpha * di).collect();
            clip(&mut trial, &lo, &hi);
            match prob.evaluate(&trial) {
                Ok((ft, ct)) => {
                    let mt = merit(ft, &ct);
                    let ok = if slope < 0.0 { mt <= m0 + 1e-4 * alpha * slope } else { mt < m0 };
                    if ok {
                        accepted = Some((trial, ft, ct));
                        break;
                    }
                }
                Err(e) => log::warn!("iterate rejected, model evaluation failed: {e}"),
            }
            alpha *= 0.5;
        }
        let Some((xn, fn_, cn)) = accepted else {
            log::debug!("line search failed at iteration {it}; stopping");
            converged = viol <= opts.feasibility_tolerance && kkt <= 100.0 * opts.kkt_tolerance;
            break;
        };
        let (gn, jn) = finite_difference_jacobian(prob, &xn, opts.fd_relative_step)?;
        let s = DVector::from_iterator(n, xn.iter().zip(&x).map(|(a, b)| a - b));
        let y = (&gn - jn.tr_mul(&lambda)) - (&grad - jac.tr_mul(&lambda));
        damped_bfgs(&mut hess, &s, &y);

        let progress = (f - fn_).abs();
        stall = if progress <= opts.progress_tolerance { stall + 1 } else { 0 };
        x = xn;
        f = fn_;
        c = cn;
        grad = gn;
        jac = jn;
        if stall >= opts.stall_iterations && violation(&c) <= opts.feasibility_tolerance {
            history.push(SqpIterate {
                x: x.clone(),
                objective: f,
                constraints: c.clone(),
                violation: violation(&c),
                kkt: f64::NAN,
            });
            iterations = it + 1;
            converged = true;
            break;
        }
    }
    if !converged {
        if let Some((bx, bf, bc)) = best {
            if violation(&c) > opts.feasibility_tolerance || bf < f {
                x = bx;
                f = bf;
                c = bc;
            }
        }
    }
    Ok(SqpOutcome {
        x,
        objective: f,
        constraints: c,
        multipliers: lambda.iter().copied().collect(),
        iterations,
        converged,
        history,
    })
}
