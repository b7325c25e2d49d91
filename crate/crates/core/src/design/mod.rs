//! Design optimization with reachability constraints.
//!
//! A [`ModelBuilder`] maps named design variables to an [`LtiSystem`]; a
//! [`DesignProblem`] pairs it with a box, a linear objective and constraints
//! on reachability metrics measured relative to a baseline design, and
//! [`optimize`] solves it with the SQP method from [`sqp`].

pub mod aircraft;
pub mod sqp;

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ReachError, Result};
use crate::geometry::convex_hull_of;
use crate::gramian::reachability_gramian;
use crate::lp::{budget_normalized_grid, sample_with_kernel, LpKernel, LpSpec};
use crate::lti::LtiSystem;

pub use aircraft::{
    assemble_longitudinal, longitudinal_model, LongitudinalModel, ScalingExponents, StabilityDerivatives,
    SurrogateTable, TrimPoint,
};
pub use sqp::{NonlinearProgram, SqpOptions};

/// Named scalar design variables, ordered by name.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DesignVariables(BTreeMap<String, f64>);

impl DesignVariables {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        Self(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<f64> {
        self.get(name)
            .ok_or_else(|| ReachError::Config(format!("design variable `{name}` is missing")))
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.0.insert(name.to_string(), value);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Maps design variables to a linear model.
pub trait ModelBuilder: Send + Sync {
    fn build(&self, dv: &DesignVariables) -> Result<LtiSystem>;
}

/// Fixed `A` with `B = B₀ + Σ_k θ_k B_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticModel {
    a: DMatrix<f64>,
    b0: DMatrix<f64>,
    terms: Vec<(String, DMatrix<f64>)>,
}

impl SyntheticModel {
    pub fn new(a: DMatrix<f64>, b0: DMatrix<f64>, terms: Vec<(String, DMatrix<f64>)>) -> Result<Self> {
        LtiSystem::new(a.clone(), b0.clone())?;
        if let Some((name, _)) = terms.iter().find(|(_, t)| t.shape() != b0.shape()) {
            return Err(ReachError::Dimension(format!("input term `{name}` does not match the shape of B")));
        }
        Ok(Self { a, b0, terms })
    }

    /// `A = diag(-rates)` with `B = Σ θ_k B_k`.
    pub fn diagonal(rates: &[f64], terms: Vec<(String, DMatrix<f64>)>) -> Result<Self> {
        let n = rates.len();
        let m = terms.first().map_or(1, |(_, t)| t.ncols());
        let a = DMatrix::from_diagonal(&DVector::from_iterator(n, rates.iter().map(|r| -r)));
        Self::new(a, DMatrix::zeros(n, m), terms)
    }

    pub fn variable_names(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(|(k, _)| k.as_str())
    }
}

impl ModelBuilder for SyntheticModel {
    fn build(&self, dv: &DesignVariables) -> Result<LtiSystem> {
        let mut b = self.b0.clone();
        for (name, term) in &self.terms {
            b += term * dv.require(name)?;
        }
        LtiSystem::new(self.a.clone(), b)
    }
}

/// Linear objective; `Sum` adds every design variable.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    Sum,
    Linear(BTreeMap<String, f64>),
}

impl Objective {
    pub fn value(&self, dv: &DesignVariables) -> Result<f64> {
        match self {
            Objective::Sum => Ok(dv.iter().map(|(_, v)| v).sum()),
            Objective::Linear(w) => w.iter().map(|(k, c)| Ok(c * dv.require(k)?)).sum(),
        }
    }
}

/// Costates used by a volume constraint.
#[derive(Clone, Debug, PartialEq)]
pub enum VolumeGrid {
    /// The same costates at every design.
    Fixed(Vec<DVector<f64>>),
    /// Fixed directions, each rescaled onto the budget at every design.
    Normalized(Vec<DVector<f64>>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    /// `trace W(T) >= factor · trace W_baseline(T)`.
    GramianTrace { factor: f64, horizon: f64 },
    /// `vol(hull of reachable endpoints) >= factor · baseline volume`.
    LpVolume {
        spec: LpSpec,
        factor: f64,
        grid: VolumeGrid,
        /// State coordinates kept before hulling; all when `None`.
        projection: Option<Vec<usize>>,
    },
    /// `λ_max(W) / λ_min(W) <= max_ratio`.
    Eccentricity { max_ratio: f64, horizon: f64 },
}

impl Constraint {
    fn validate(&self) -> Result<()> {
        match self {
            Constraint::GramianTrace { factor, horizon } => {
                positive("constraint factor", *factor)?;
                positive("Gramian horizon", *horizon)
            }
            Constraint::LpVolume {
                spec,
                factor,
                grid,
                projection,
            } => {
                spec.validate()?;
                positive("constraint factor", *factor)?;
                let g = match grid {
                    VolumeGrid::Fixed(g) | VolumeGrid::Normalized(g) => g,
                };
                if g.is_empty() {
                    return Err(ReachError::Domain("volume constraint grid is empty".into()));
                }
                if let Some(p) = projection {
                    if !(2..=4).contains(&p.len()) {
                        return Err(ReachError::Unsupported("projection must keep 2 to 4 coordinates".into()));
                    }
                }
                Ok(())
            }
            Constraint::Eccentricity { max_ratio, horizon } => {
                positive("eccentricity bound", *max_ratio)?;
                positive("Gramian horizon", *horizon)
            }
        }
    }
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ReachError::Domain(format!("{what} {v} must be positive")))
    }
}

/// `trace W(T)` of `sys`.
pub fn gramian_trace_metric(sys: &LtiSystem, horizon: f64) -> Result<f64> {
    Ok(reachability_gramian(sys, horizon)?.trace())
}

/// Volume of the hull of reachable costate endpoints; `(volume, degenerate)`.
pub fn lp_volume_metric(
    sys: &LtiSystem,
    spec: &LpSpec,
    grid: &VolumeGrid,
    projection: Option<&[usize]>,
) -> Result<(f64, bool)> {
    let costates = match grid {
        VolumeGrid::Fixed(g) => g.clone(),
        VolumeGrid::Normalized(dirs) => budget_normalized_grid(sys, spec, dirs)?,
    };
    let cloud = sample_with_kernel(&LpKernel::new(sys, spec)?, &costates)?;
    let coords: Vec<usize> = match projection {
        Some(p) => {
            if let Some(&bad) = p.iter().find(|&&i| i >= sys.n()) {
                return Err(ReachError::Dimension(format!("projection index {bad} exceeds state dimension")));
            }
            p.to_vec()
        }
        None => (0..sys.n()).collect(),
    };
    let pts: Vec<DVector<f64>> = cloud
        .samples
        .iter()
        .filter(|s| s.reachable)
        .map(|s| DVector::from_iterator(coords.len(), coords.iter().map(|&i| s.endpoint[i])))
        .collect();
    if pts.len() <= coords.len() {
        return Ok((0.0, true));
    }
    let hull = convex_hull_of(&pts, coords.len())?;
    Ok((hull.volume, hull.degenerate))
}

fn eccentricity_metric(sys: &LtiSystem, horizon: f64) -> Result<f64> {
    let g = reachability_gramian(sys, horizon)?;
    let lo = g.min_eigenvalue();
    Ok(if lo > 0.0 { g.max_eigenvalue() / lo } else { f64::INFINITY })
}

/// Box-constrained design problem with constraints relative to a baseline.
#[derive(Clone)]
pub struct DesignProblem {
    model: Arc<dyn ModelBuilder>,
    names: Vec<String>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: Objective,
    constraints: Vec<Constraint>,
    baseline: DesignVariables,
    references: Vec<f64>,
}

impl std::fmt::Debug for DesignProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DesignProblem")
            .field("names", &self.names)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("objective", &self.objective)
            .field("constraints", &self.constraints)
            .field("baseline", &self.baseline)
            .field("references", &self.references)
            .finish_non_exhaustive()
    }
}

impl DesignProblem {
    /// Bounds are `(name, lower, upper)`; variables are ordered as given.
    pub fn new(
        model: Arc<dyn ModelBuilder>,
        baseline: DesignVariables,
        bounds: &[(&str, f64, f64)],
        objective: Objective,
        constraints: Vec<Constraint>,
    ) -> Result<Self> {
        if bounds.is_empty() {
            return Err(ReachError::Config("a design problem needs at least one variable".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &(name, lo, hi) in bounds {
            if !seen.insert(name) {
                return Err(ReachError::Config(format!("design variable `{name}` is bounded twice")));
            }
            if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
                return Err(ReachError::Domain(format!("bounds of `{name}` are invalid: [{lo}, {hi}]")));
            }
            let v = baseline.require(name)?;
            if !(lo..=hi).contains(&v) {
                return Err(ReachError::Domain(format!("baseline `{name}` = {v} lies outside [{lo}, {hi}]")));
            }
        }
        constraints.iter().try_for_each(Constraint::validate)?;
        let mut problem = Self {
            model,
            names: bounds.iter().map(|b| b.0.to_string()).collect(),
            lower: bounds.iter().map(|b| b.1).collect(),
            upper: bounds.iter().map(|b| b.2).collect(),
            objective,
            constraints,
            baseline,
            references: Vec::new(),
        };
        let sys = problem.model.build(&problem.baseline)?;
        problem.references = problem
            .constraints
            .iter()
            .map(|c| problem.metric(c, &sys).map(|(v, _)| v))
            .collect::<Result<_>>()?;
        Ok(problem)
    }

    /// Wing problem: objective `b + c_bar`, each variable within ±50 % of the baseline.
    pub fn wing(model: LongitudinalModel, constraints: Vec<Constraint>) -> Result<Self> {
        let baseline = model.table.reference_design();
        let (b0, c0) = (model.table.b0, model.table.c_bar0);
        Self::new(
            Arc::new(model),
            baseline,
            &[("b", 0.5 * b0, 1.5 * b0), ("c_bar", 0.5 * c0, 1.5 * c0)],
            Objective::Sum,
            constraints,
        )
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn baseline(&self) -> &DesignVariables {
        &self.baseline
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn model(&self) -> &dyn ModelBuilder {
        self.model.as_ref()
    }

    /// Baseline metric of each constraint (trace, volume or, for
    /// eccentricity, the baseline ratio).
    pub fn references(&self) -> &[f64] {
        &self.references
    }

    pub fn baseline_vector(&self) -> Vec<f64> {
        self.names.iter().map(|n| self.baseline.get(n).unwrap()).collect()
    }

    /// Design variables for the optimizer vector `x`, keeping unlisted baseline values.
    pub fn variables(&self, x: &[f64]) -> DesignVariables {
        let mut dv = self.baseline.clone();
        for (n, v) in self.names.iter().zip(x) {
            dv.set(n, *v);
        }
        dv
    }

    fn metric(&self, c: &Constraint, sys: &LtiSystem) -> Result<(f64, bool)> {
        match c {
            Constraint::GramianTrace { horizon, .. } => Ok((gramian_trace_metric(sys, *horizon)?, false)),
            Constraint::LpVolume {
                spec, grid, projection, ..
            } => lp_volume_metric(sys, spec, grid, projection.as_deref()),
            Constraint::Eccentricity { horizon, .. } => Ok((eccentricity_metric(sys, *horizon)?, false)),
        }
    }

    fn residual(&self, k: usize, sys: &LtiSystem) -> Result<f64> {
        let c = &self.constraints[k];
        let (value, degenerate) = self.metric(c, sys)?;
        if degenerate {
            log::warn!("constraint {k}: reachable hull is degenerate, volume taken as 0");
        }
        Ok(match c {
            Constraint::GramianTrace { factor, .. } | Constraint::LpVolume { factor, .. } => {
                value - factor * self.references[k]
            }
            Constraint::Eccentricity { max_ratio, .. } => max_ratio - value,
        })
    }

    /// Residual per constraint; non-negative is feasible.
    pub fn residuals(&self, dv: &DesignVariables) -> Result<Vec<f64>> {
        let sys = self.model.build(dv)?;
        (0..self.constraints.len()).map(|k| self.residual(k, &sys)).collect()
    }

    fn scale(&self, k: usize) -> f64 {
        match &self.constraints[k] {
            Constraint::Eccentricity { max_ratio, .. } => *max_ratio,
            _ => self.references[k].abs().max(f64::MIN_POSITIVE),
        }
    }
}

/// `trace W(dv) - factor · trace W(baseline)` for the first trace constraint.
pub fn constraint_gramian_trace(problem: &DesignProblem, dv: &DesignVariables) -> Result<f64> {
    first_of(problem, dv, |c| matches!(c, Constraint::GramianTrace { .. }))
}

/// `vol(dv) - factor · vol(baseline)` for the first volume constraint.
pub fn constraint_lp_volume(problem: &DesignProblem, dv: &DesignVariables) -> Result<f64> {
    first_of(problem, dv, |c| matches!(c, Constraint::LpVolume { .. }))
}

fn first_of(problem: &DesignProblem, dv: &DesignVariables, pick: impl Fn(&Constraint) -> bool) -> Result<f64> {
    let k = problem
        .constraints
        .iter()
        .position(pick)
        .ok_or_else(|| ReachError::Config("problem has no constraint of the requested kind".into()))?;
    problem.residual(k, &problem.model.build(dv)?)
}

impl NonlinearProgram for DesignProblem {
    fn lower(&self) -> Vec<f64> {
        self.lower.clone()
    }

    fn upper(&self) -> Vec<f64> {
        self.upper.clone()
    }

    fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Constraints are divided by the baseline metric so tolerances are relative.
    fn evaluate(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let dv = self.variables(x);
        let f = self.objective.value(&dv)?;
        let r = self.residuals(&dv)?;
        Ok((f, r.iter().enumerate().map(|(k, v)| v / self.scale(k)).collect()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistoryEntry {
    pub variables: DesignVariables,
    pub objective: f64,
    pub residuals: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OptResult {
    pub optimum: DesignVariables,
    pub objective_value: f64,
    pub constraint_residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<HistoryEntry>,
}

impl OptResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

/// Local SQP solve started from the baseline.
pub fn optimize(problem: &DesignProblem, options: &SqpOptions) -> Result<OptResult> {
    let out = sqp::minimize(problem, &problem.baseline_vector(), options)?;
    let unscale = |c: &[f64]| -> Vec<f64> { c.iter().enumerate().map(|(k, v)| v * problem.scale(k)).collect() };
    Ok(OptResult {
        optimum: problem.variables(&out.x),
        objective_value: out.objective,
        constraint_residuals: unscale(&out.constraints),
        iterations: out.iterations,
        converged: out.converged,
        history: out
            .history
            .iter()
            .map(|h| HistoryEntry {
                variables: problem.variables(&h.x),
                objective: h.objective,
                residuals: unscale(&h.constraints),
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::unit_directions;

    fn theta_model() -> SyntheticModel {
        SyntheticModel::diagonal(&[1.0, 2.0], vec![("theta".into(), DMatrix::from_column_slice(2, 1, &[1.0, 1.0]))])
            .unwrap()
    }

    fn closed_form_trace(theta: f64) -> f64 {
        theta * theta * ((1.0 - (-2.0f64).exp()) / 2.0 + (1.0 - (-4.0f64).exp()) / 4.0)
    }

    fn theta_problem(factor: f64) -> DesignProblem {
        DesignProblem::new(
            Arc::new(theta_model()),
            DesignVariables::from_pairs([("theta", 1.0)]),
            &[("theta", 0.1, 3.0)],
            Objective::Sum,
            vec![Constraint::GramianTrace { factor, horizon: 1.0 }],
        )
        .unwrap()
    }

    #[test]
    fn trace_residual_identities() {
        let p = theta_problem(1.0);
        assert_eq!(constraint_gramian_trace(&p, p.baseline()).unwrap(), 0.0);
        let p = theta_problem(1.1);
        let r = constraint_gramian_trace(&p, p.baseline()).unwrap();
        assert!((r + 0.1 * p.references()[0]).abs() < 1e-14);
        assert!((p.references()[0] - closed_form_trace(1.0)).abs() < 1e-12);
        let mut last = f64::NEG_INFINITY;
        for k in 1..30 {
            let theta = 0.1 * k as f64;
            let r = constraint_gramian_trace(&p, &DesignVariables::from_pairs([("theta", theta)])).unwrap();
            assert!((r - (closed_form_trace(theta) - 1.1 * closed_form_trace(1.0))).abs() < 1e-12);
            assert!(r > last);
            last = r;
        }
    }

    #[test]
    fn trace_constraint_becomes_active() {
        let p = theta_problem(1.1);
        let out = optimize(&p, &SqpOptions::default()).unwrap();
        assert!(out.converged);
        let theta = out.optimum.get("theta").unwrap();
        assert!((theta - 1.1f64.sqrt()).abs() < 1e-6, "theta {theta}");
        let r = out.constraint_residuals[0] / p.references()[0];
        assert!((-1e-6..=1e-4).contains(&r), "relative residual {r}");
    }

    #[test]
    fn feasible_baseline_is_not_worsened() {
        let p = theta_problem(1.0);
        let out = optimize(&p, &SqpOptions::default()).unwrap();
        assert!(out.objective_value <= 1.0 + 1e-12);
        assert!(out.constraint_residuals[0] >= -1e-6 * p.references()[0]);
    }

    #[test]
    fn problem_validation() {
        let model: Arc<dyn ModelBuilder> = Arc::new(theta_model());
        let dv = DesignVariables::from_pairs([("theta", 1.0)]);
        let trace = vec![Constraint::GramianTrace { factor: 1.1, horizon: 1.0 }];
        assert!(DesignProblem::new(model.clone(), dv.clone(), &[("theta", 2.0, 3.0)], Objective::Sum, trace.clone()).is_err());
        assert!(DesignProblem::new(model.clone(), dv.clone(), &[("phi", 0.0, 3.0)], Objective::Sum, trace).is_err());
        let bad = vec![Constraint::GramianTrace { factor: 0.0, horizon: 1.0 }];
        assert!(DesignProblem::new(model, dv, &[("theta", 0.0, 3.0)], Objective::Sum, bad).is_err());
    }

    fn planar_volume_problem(factor: f64, grid: VolumeGrid) -> DesignProblem {
        let a = DMatrix::from_row_slice(2, 2, &[0.4, -0.3, 0.5, 1.7]);
        let terms = vec![
            ("b1".to_string(), DMatrix::from_column_slice(2, 1, &[1.0, 0.0])),
            ("b2".to_string(), DMatrix::from_column_slice(2, 1, &[0.0, 1.0])),
        ];
        let model = SyntheticModel::new(a, DMatrix::zeros(2, 1), terms).unwrap();
        DesignProblem::new(
            Arc::new(model),
            DesignVariables::from_pairs([("b1", 1.0), ("b2", 0.0)]),
            &[("b1", 0.5, 1.5), ("b2", -0.5, 0.5)],
            Objective::Sum,
            vec![Constraint::LpVolume {
                spec: LpSpec::new(6, 1.0, 1.0).unwrap(),
                factor,
                grid,
                projection: None,
            }],
        )
        .unwrap()
    }

    #[test]
    fn volume_scales_with_input_gain() {
        let dirs = unit_directions(2, 96, 0).unwrap();
        let p = planar_volume_problem(1.0, VolumeGrid::Normalized(dirs));
        assert_eq!(constraint_lp_volume(&p, p.baseline()).unwrap(), 0.0);
        let base = p.references()[0];
        for alpha in [1.2, 1.5] {
            let dv = DesignVariables::from_pairs([("b1", alpha), ("b2", 0.0)]);
            let r = constraint_lp_volume(&p, &dv).unwrap();
            assert!(((r + base) / base - alpha * alpha).abs() < 1e-9, "alpha {alpha}");
        }
    }

    #[test]
    fn volume_residual_is_continuous() {
        let dirs = unit_directions(2, 96, 0).unwrap();
        let p = planar_volume_problem(1.1, VolumeGrid::Normalized(dirs));
        let base = p.references()[0];
        let r0 = constraint_lp_volume(&p, p.baseline()).unwrap();
        for (d1, d2) in [(1e-3, 0.0), (-1e-3, 0.0), (0.0, 1e-3), (0.0, -1e-3)] {
            let dv = DesignVariables::from_pairs([("b1", 1.0 + d1), ("b2", d2)]);
            let r = constraint_lp_volume(&p, &dv).unwrap();
            assert!((r - r0).abs() <= 1e-2 * base, "jump {}", (r - r0).abs() / base);
        }
    }

    #[test]
    fn volume_constraint_becomes_active() {
        let dirs = unit_directions(2, 64, 0).unwrap();
        let p = planar_volume_problem(1.1, VolumeGrid::Normalized(dirs));
        let out = optimize(&p, &SqpOptions::default()).unwrap();
        assert!(out.converged);
        let r = out.constraint_residuals[0] / p.references()[0];
        assert!((-1e-6..=1e-4).contains(&r), "relative residual {r}");
        assert!(out.objective_value < 1.0 + 0.5);
    }

    #[test]
    fn eccentricity_hook() {
        let p = DesignProblem::new(
            Arc::new(theta_model()),
            DesignVariables::from_pairs([("theta", 1.0)]),
            &[("theta", 0.1, 3.0)],
            Objective::Sum,
            vec![Constraint::Eccentricity { max_ratio: 1e12, horizon: 1.0 }],
        )
        .unwrap();
        let r = p.residuals(p.baseline()).unwrap()[0];
        assert!(r > 0.0 && r < 1e12);
    }

    #[test]
    fn wing_problem_baseline() {
        let p = DesignProblem::wing(
            LongitudinalModel::default(),
            vec![Constraint::GramianTrace { factor: 1.0, horizon: 1.0 }],
        )
        .unwrap();
        assert_eq!(p.names(), &["b".to_string(), "c_bar".to_string()]);
        assert_eq!(constraint_gramian_trace(&p, p.baseline()).unwrap(), 0.0);
        assert!(p.references()[0] > 0.0);
    }
}
