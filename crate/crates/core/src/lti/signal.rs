use nalgebra::DVector;

use crate::error::{ReachError, Result};

/// An input signal `u: [0, T] → R^m`.
pub trait ControlSignal: Sync {
    /// Input dimension `m`.
    fn dim(&self) -> usize;

    fn value(&self, t: f64) -> DVector<f64>;

    /// Value at `t` for a point inside the integration segment `[lo, hi]`.
    /// Signals with jumps use the segment to select the piece, so a segment
    /// ending on a switch time never sees the next piece.
    fn value_on(&self, t: f64, _lo: f64, _hi: f64) -> DVector<f64> {
        self.value(t)
    }

    /// Discontinuity times that an integrator should land on.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Piecewise-constant signal: `values[k]` holds on `[breakpoints[k-1], breakpoints[k])`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseConstant {
    breakpoints: Vec<f64>,
    values: Vec<DVector<f64>>,
}

impl PiecewiseConstant {
    pub fn new(breakpoints: Vec<f64>, values: Vec<DVector<f64>>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(ReachError::Dimension(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                values.len()
            )));
        }
        let m = values[0].len();
        if values.iter().any(|v| v.len() != m) {
            return Err(ReachError::Dimension("inconsistent control dimension".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) || breakpoints.iter().any(|t| !t.is_finite()) {
            return Err(ReachError::Domain("breakpoints must be finite and strictly increasing".into()));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn constant(value: DVector<f64>) -> Self {
        Self {
            breakpoints: Vec::new(),
            values: vec![value],
        }
    }

    pub fn switch_times(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    fn piece(&self, t: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= t)
    }
}

impl ControlSignal for PiecewiseConstant {
    fn dim(&self) -> usize {
        self.values[0].len()
    }

    fn value(&self, t: f64) -> DVector<f64> {
        self.values[self.piece(t)].clone()
    }

    fn value_on(&self, _t: f64, lo: f64, hi: f64) -> DVector<f64> {
        self.values[self.piece(0.5 * (lo + hi))].clone()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }
}

/// Samples on a uniform grid over `[0, T]`, linearly interpolated.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledControl {
    horizon: f64,
    samples: Vec<DVector<f64>>,
}

impl SampledControl {
    pub fn new(horizon: f64, samples: Vec<DVector<f64>>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(ReachError::Domain("need at least two samples".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(ReachError::Domain(format!("horizon {horizon} must be positive")));
        }
        let m = samples[0].len();
        if samples.iter().any(|s| s.len() != m) {
            return Err(ReachError::Dimension("inconsistent control dimension".into()));
        }
        Ok(Self { horizon, samples })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn samples(&self) -> &[DVector<f64>] {
        &self.samples
    }

    /// Grid times matching `samples`.
    pub fn times(&self) -> Vec<f64> {
        let last = (self.samples.len() - 1) as f64;
        (0..self.samples.len())
            .map(|k| self.horizon * k as f64 / last)
            .collect()
    }
}

impl ControlSignal for SampledControl {
    fn dim(&self) -> usize {
        self.samples[0].len()
    }

    fn value(&self, t: f64) -> DVector<f64> {
        let last = self.samples.len() - 1;
        let s = (t / self.horizon).clamp(0.0, 1.0) * last as f64;
        let k = (s.floor() as usize).min(last - 1);
        let frac = s - k as f64;
        &self.samples[k] * (1.0 - frac) + &self.samples[k + 1] * frac
    }
}

/// Wraps a closure as a signal.
pub struct FnControl<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(f64) -> DVector<f64> + Sync> FnControl<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(f64) -> DVector<f64> + Sync> ControlSignal for FnControl<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, t: f64) -> DVector<f64> {
        (self.f)(t)
    }
}
