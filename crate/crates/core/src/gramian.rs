//! Energy-bounded reachability through the reachability Gramian
//!
//! `W(T) = ∫_0^T e^{A(T-τ)} B Bᵀ e^{Aᵀ(T-τ)} dτ`.
//!
//! With inputs satisfying `‖u‖²_{L2} <= c` the reachable set is the ellipsoid
//! `{x : xᵀ W⁻¹ x <= c}`, whose principal semi-axes are `√(c λ_i) v_i`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{ReachError, Result};
use crate::lti::{matrix_exponential, ControlSignal, LtiSystem};

/// Symmetric Gramian with its eigenpairs sorted by descending eigenvalue.
#[derive(Clone, Debug)]
pub struct Gramian {
    pub w: DMatrix<f64>,
    pub horizon: f64,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<DVector<f64>>,
}

/// Closed-form Gramian from the 2n×2n exponential of `[[-A, B Bᵀ], [0, Aᵀ]] T`.
pub fn reachability_gramian(sys: &LtiSystem, horizon: f64) -> Result<Gramian> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(ReachError::Domain(format!("Gramian horizon {horizon} must be positive")));
    }
    let n = sys.n();
    let mut aug = DMatrix::<f64>::zeros(2 * n, 2 * n);
    aug.view_mut((0, 0), (n, n)).copy_from(&(-sys.a()));
    aug.view_mut((0, n), (n, n)).copy_from(&(sys.b() * sys.b().transpose()));
    aug.view_mut((n, n), (n, n)).copy_from(&sys.a().transpose());
    let e = matrix_exponential(&aug, horizon)?;
    let f12 = e.view((0, n), (n, n));
    let f22 = e.view((n, n), (n, n));
    let w = f22.transpose() * f12;
    Gramian::from_matrix((&w + w.transpose()) * 0.5, horizon)
}

impl Gramian {
    pub fn from_matrix(w: DMatrix<f64>, horizon: f64) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite()) {
            return Err(ReachError::Numeric("Gramian has non-finite entries".into()));
        }
        let eig = SymmetricEigen::new(w.clone());
        let mut order: Vec<usize> = (0..w.nrows()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let eigenvectors = order
            .iter()
            .map(|&i| {
                let v = eig.eigenvectors.column(i).into_owned();
                // fix the sign so the largest-magnitude entry is positive
                let k = v.iamax();
                if v[k] < 0.0 {
                    -v
                } else {
                    v
                }
            })
            .collect();
        Ok(Self {
            w,
            horizon,
            eigenvalues,
            eigenvectors,
        })
    }

    /// `trace(W)`.
    pub fn trace(&self) -> f64 {
        self.w.trace()
    }

    pub fn eigen_sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// Whether the smallest eigenvalue exceeds `SINGULAR_RATIO` times the largest.
    pub fn is_nonsingular(&self) -> bool {
        self.max_eigenvalue() > 0.0 && self.min_eigenvalue() > SINGULAR_RATIO * self.max_eigenvalue()
    }
}

/// `trace(W)`.
pub fn gramian_trace(g: &Gramian) -> f64 {
    g.trace()
}

/// Eigenvalue ratio below which `W` is treated as singular.
pub const SINGULAR_RATIO: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EllipsoidAxis {
    pub length: f64,
    pub direction: Vec<f64>,
}

/// Energy ellipsoid `{x : xᵀ W⁻¹ x <= c}`, exported as `{T, c, axes}`.
#[derive(Clone, Debug, Serialize)]
pub struct Ellipsoid {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub c: f64,
    pub axes: Vec<EllipsoidAxis>,
}

impl Ellipsoid {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ellipsoid serializes")
    }
}

/// Semi-axes `(√(c λ_i), v_i)` in descending length, `c` bounding `‖u‖²_{L2}`.
pub fn ellipsoid_axes(g: &Gramian, budget: f64) -> Result<Vec<EllipsoidAxis>> {
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(ReachError::Domain(format!("energy budget {budget} must be positive")));
    }
    Ok(g.eigenvalues
        .iter()
        .zip(&g.eigenvectors)
        .map(|(&l, v)| EllipsoidAxis {
            length: (budget * l.max(0.0)).sqrt(),
            direction: v.iter().copied().collect(),
        })
        .collect())
}

pub fn ellipsoid(g: &Gramian, budget: f64) -> Result<Ellipsoid> {
    Ok(Ellipsoid {
        horizon: g.horizon,
        c: budget,
        axes: ellipsoid_axes(g, budget)?,
    })
}

/// `u(t) = Bᵀ e^{Aᵀ (T - t)} W⁻¹ x_f`, the least-energy input reaching `x_f`.
#[derive(Clone, Debug)]
pub struct MinEnergyControl {
    a_t: DMatrix<f64>,
    b_t: DMatrix<f64>,
    horizon: f64,
    weight: DVector<f64>,
    /// `x_fᵀ W⁻¹ x_f`, the squared L2 norm of the input.
    pub cost: f64,
    /// Set when `W` was singular and the pseudo-inverse was used.
    pub pseudo_inverse: bool,
}

impl MinEnergyControl {
    /// `W⁻¹ x_f` (or its pseudo-inverse counterpart).
    pub fn weight(&self) -> &DVector<f64> {
        &self.weight
    }
}

impl ControlSignal for MinEnergyControl {
    fn dim(&self) -> usize {
        self.b_t.nrows()
    }

    fn value(&self, t: f64) -> DVector<f64> {
        let e = matrix_exponential(&self.a_t, self.horizon - t).expect("exponential of a finite matrix");
        &self.b_t * (e * &self.weight)
    }
}

pub fn min_energy_control(sys: &LtiSystem, horizon: f64, xf: &DVector<f64>) -> Result<MinEnergyControl> {
    if xf.len() != sys.n() {
        return Err(ReachError::Dimension(format!(
            "target has {} entries, state dimension is {}",
            xf.len(),
            sys.n()
        )));
    }
    if xf.iter().any(|v| !v.is_finite()) {
        return Err(ReachError::Domain("target state must be finite".into()));
    }
    let g = reachability_gramian(sys, horizon)?;
    let (weight, pseudo_inverse) = if g.is_nonsingular() {
        let chol = g.w.clone().cholesky();
        let w = match chol {
            Some(c) => c.solve(xf),
            None => g
                .w
                .clone()
                .lu()
                .solve(xf)
                .ok_or_else(|| ReachError::Numeric("Gramian solve failed".into()))?,
        };
        (w, false)
    } else {
        let cutoff = SINGULAR_RATIO * g.max_eigenvalue().max(0.0);
        let mut w = DVector::<f64>::zeros(sys.n());
        let mut projected = DVector::<f64>::zeros(sys.n());
        for (&l, v) in g.eigenvalues.iter().zip(&g.eigenvectors) {
            if l > cutoff && l > 0.0 {
                let c = v.dot(xf);
                w += v * (c / l);
                projected += v * c;
            }
        }
        let residual = (&projected - xf).norm();
        if residual > 1e-8 * xf.norm() {
            return Err(ReachError::Unreachable { residual });
        }
        (w, true)
    };
    let cost = xf.dot(&weight);
    Ok(MinEnergyControl {
        a_t: sys.a().transpose(),
        b_t: sys.b().transpose(),
        horizon,
        weight,
        cost,
        pseudo_inverse,
    })
}
