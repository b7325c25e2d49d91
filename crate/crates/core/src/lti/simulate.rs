use nalgebra::{DMatrix, DVector};

use super::{ControlSignal, LtiSystem};
use crate::error::{ReachError, Result};

/// States and inputs on an ascending time grid from `0` to `T`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub controls: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory has at least one state")
    }
}

/// Uniform grid of `steps` intervals with the signal's breakpoints inserted.
fn integration_grid(horizon: f64, steps: usize, breakpoints: &[f64]) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=steps)
        .map(|k| horizon * k as f64 / steps as f64)
        .collect();
    grid.extend(breakpoints.iter().copied().filter(|&t| t > 0.0 && t < horizon));
    grid.sort_by(f64::total_cmp);
    let min_gap = 1e-14 * horizon;
    let mut out: Vec<f64> = Vec::with_capacity(grid.len());
    for t in grid {
        match out.last() {
            Some(&prev) if t - prev <= min_gap => {
                // keep the exact endpoint when a breakpoint crowds it
                if t == horizon {
                    *out.last_mut().unwrap() = t;
                }
            }
            _ => out.push(t),
        }
    }
    out
}

/// Classical fixed-step RK4 from `x(0) = 0`.
///
/// Switch times of the signal become grid nodes, so piecewise-constant inputs
/// are integrated without straddling a jump.
pub fn simulate(sys: &LtiSystem, u: &dyn ControlSignal, horizon: f64, steps: usize) -> Result<Trajectory> {
    if steps == 0 {
        return Err(ReachError::Domain("need at least one integration step".into()));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(ReachError::Domain(format!("horizon {horizon} must be positive")));
    }
    if u.dim() != sys.m() {
        return Err(ReachError::Dimension(format!(
            "control has {} channels, system expects {}",
            u.dim(),
            sys.m()
        )));
    }
    let times = integration_grid(horizon, steps, &u.breakpoints());
    let a: &DMatrix<f64> = sys.a();
    let b: &DMatrix<f64> = sys.b();
    let rhs = |x: &DVector<f64>, v: &DVector<f64>| a * x + b * v;

    let mut states = Vec::with_capacity(times.len());
    let mut controls = Vec::with_capacity(times.len());
    let mut x = DVector::<f64>::zeros(sys.n());
    states.push(x.clone());
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let h = t1 - t0;
        let tm = t0 + 0.5 * h;
        let u0 = u.value_on(t0, t0, t1);
        let um = u.value_on(tm, t0, t1);
        let u1 = u.value_on(t1, t0, t1);
        let k1 = rhs(&x, &u0);
        let k2 = rhs(&(&x + &k1 * (0.5 * h)), &um);
        let k3 = rhs(&(&x + &k2 * (0.5 * h)), &um);
        let k4 = rhs(&(&x + &k3 * h), &u1);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        controls.push(u0);
        states.push(x.clone());
    }
    let n_times = times.len();
    controls.push(u.value_on(horizon, times[n_times - 2], horizon));
    Ok(Trajectory {
        times,
        states,
        controls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{convolution_integral, FnControl, PiecewiseConstant};

    fn example() -> LtiSystem {
        LtiSystem::from_rows(&[vec![0.4, -0.3], vec![0.5, 1.7]], &[vec![1.0], vec![0.0]]).unwrap()
    }

    #[test]
    fn zero_input_stays_at_origin() {
        let traj = simulate(&example(), &PiecewiseConstant::constant(DVector::zeros(1)), 1.0, 50).unwrap();
        assert_eq!(traj.final_state().norm(), 0.0);
        assert_eq!(traj.times.len(), traj.states.len());
        assert_eq!(traj.times.len(), traj.controls.len());
        assert_eq!(traj.times[0], 0.0);
        assert_eq!(*traj.times.last().unwrap(), 1.0);
    }

    #[test]
    fn integrator_reaches_one() {
        let sys = LtiSystem::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]], &[vec![1.0], vec![0.0]]).unwrap();
        let traj = simulate(&sys, &PiecewiseConstant::constant(DVector::from_element(1, 1.0)), 1.0, 7).unwrap();
        assert!((traj.final_state()[0] - 1.0).abs() < 1e-14);
        assert_eq!(traj.final_state()[1], 0.0);
    }

    #[test]
    fn constant_input_matches_closed_form() {
        let sys = example();
        let traj = simulate(&sys, &PiecewiseConstant::constant(DVector::from_element(1, 1.0)), 1.0, 10_000).unwrap();
        let closed = convolution_integral(&sys, 1.0, 0.0, 1.0).unwrap().column(0).into_owned();
        assert!((traj.final_state() - closed).norm() < 1e-8);
    }

    #[test]
    fn switch_times_become_nodes() {
        let sys = example();
        let switch = 0.123_456_789;
        let u = PiecewiseConstant::new(
            vec![switch],
            vec![DVector::from_element(1, 1.0), DVector::from_element(1, -1.0)],
        )
        .unwrap();
        let traj = simulate(&sys, &u, 1.0, 100).unwrap();
        assert!(traj.times.contains(&switch));
        let closed = convolution_integral(&sys, 1.0, 0.0, switch).unwrap()
            - convolution_integral(&sys, 1.0, switch, 1.0).unwrap();
        assert!((traj.final_state() - closed.column(0)).norm() < 1e-8);
    }

    #[test]
    fn rk4_error_decays_at_fourth_order() {
        let sys = example();
        let u = FnControl::new(1, |t: f64| DVector::from_element(1, (3.0 * t).sin()));
        let reference = simulate(&sys, &u, 1.0, 4096).unwrap().final_state().clone();
        let e1 = (simulate(&sys, &u, 1.0, 16).unwrap().final_state() - &reference).norm();
        let e2 = (simulate(&sys, &u, 1.0, 32).unwrap().final_state() - &reference).norm();
        let rate = (e1 / e2).log2();
        assert!(rate > 3.7 && rate < 4.3, "observed order {rate}");
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let u = PiecewiseConstant::constant(DVector::zeros(2));
        assert!(matches!(simulate(&example(), &u, 1.0, 10), Err(ReachError::Dimension(_))));
        let u = PiecewiseConstant::constant(DVector::zeros(1));
        assert!(simulate(&example(), &u, 1.0, 0).is_err());
    }
}
