//! Composite Simpson rule on a uniform grid.

use crate::error::{ReachError, Result};

/// Uniform nodes and composite Simpson weights on `[0, horizon]`.
/// `nodes` must be odd and at least 3.
pub fn simpson_rule(horizon: f64, nodes: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if nodes < 3 || nodes % 2 == 0 {
        return Err(ReachError::Domain(format!(
            "Simpson rule needs an odd node count >= 3, got {nodes}"
        )));
    }
    let intervals = nodes - 1;
    let h = horizon / intervals as f64;
    let times = (0..nodes).map(|k| horizon * k as f64 / intervals as f64).collect();
    let weights = (0..nodes)
        .map(|k| {
            let c = if k == 0 || k == intervals {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect();
    Ok((times, weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_cubics() {
        let (t, w) = simpson_rule(2.0, 5).unwrap();
        let integral: f64 = t.iter().zip(&w).map(|(t, w)| w * (t * t * t - t + 1.0)).sum();
        assert!((integral - 4.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_even_counts() {
        assert!(simpson_rule(1.0, 2000).is_err());
        assert!(simpson_rule(1.0, 1).is_err());
    }
}
