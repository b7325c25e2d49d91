//! Linear longitudinal flight model and a surrogate dependence of its
//! stability derivatives on wing geometry.
//!
//! States are `(v_T, α, q, θ)`, inputs `(δ_th, δ_e)`. The derivative scaling
//! in [`SurrogateTable`] is a documented stand-in, not an aerodynamic
//! database: each derivative follows `D = D₀ (S/S₀)^{e_S} (c̄/c̄₀)^{e_c}` with
//! wing area `S = b c̄`.

use nalgebra::{DMatrix, Matrix4, Matrix4x2};
use serde::{Deserialize, Serialize};

use super::{DesignVariables, ModelBuilder};
use crate::error::{ReachError, Result};
use crate::lti::LtiSystem;

pub const STANDARD_GRAVITY: f64 = 9.80665;
pub const KNOT: f64 = 1852.0 / 3600.0;
pub const FOOT: f64 = 0.3048;

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

/// Linearization point in SI units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrimPoint {
    pub alpha0: f64,
    #[serde(rename = "V0")]
    pub v0: f64,
    pub h0: f64,
    #[serde(default)]
    pub q0: f64,
    #[serde(default)]
    pub gamma0: f64,
    #[serde(default = "default_gravity")]
    pub g: f64,
}

impl TrimPoint {
    pub fn new(alpha0: f64, v0: f64, h0: f64, q0: f64, gamma0: f64) -> Result<Self> {
        let trim = Self {
            alpha0,
            v0,
            h0,
            q0,
            gamma0,
            g: STANDARD_GRAVITY,
        };
        trim.validate()?;
        Ok(trim)
    }

    /// Angles in degrees, airspeed in knots, altitude in feet.
    pub fn from_aviation_units(alpha0_deg: f64, v0_knots: f64, h0_ft: f64, q0: f64, gamma0_deg: f64) -> Result<Self> {
        Self::new(
            alpha0_deg.to_radians(),
            v0_knots * KNOT,
            h0_ft * FOOT,
            q0,
            gamma0_deg.to_radians(),
        )
    }

    /// Low-altitude steady flight: 12°, 150 kn, 5000 ft, level.
    pub fn low_altitude_cruise() -> Self {
        Self::from_aviation_units(12.0, 150.0, 5000.0, 0.0, 0.0).expect("valid trim")
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.alpha0, self.v0, self.h0, self.q0, self.gamma0, self.g]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(ReachError::Domain("trim values must be finite".into()));
        }
        if self.v0 <= 0.0 {
            return Err(ReachError::Domain(format!("trim airspeed {} must be positive", self.v0)));
        }
        if self.alpha0.abs() >= std::f64::consts::FRAC_PI_2 || self.gamma0.abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(ReachError::Domain("trim angles must lie strictly inside (-90°, 90°)".into()));
        }
        Ok(())
    }
}

/// Dimensional stability and control derivatives.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StabilityDerivatives {
    #[serde(rename = "X_V")]
    pub x_v: f64,
    #[serde(rename = "X_alpha")]
    pub x_alpha: f64,
    #[serde(rename = "Z_V")]
    pub z_v: f64,
    #[serde(rename = "Z_alpha")]
    pub z_alpha: f64,
    #[serde(rename = "Z_q")]
    pub z_q: f64,
    #[serde(rename = "M_V")]
    pub m_v: f64,
    #[serde(rename = "M_alpha")]
    pub m_alpha: f64,
    #[serde(rename = "M_q")]
    pub m_q: f64,
    #[serde(rename = "X_dth")]
    pub x_dth: f64,
    #[serde(rename = "X_de")]
    pub x_de: f64,
    #[serde(rename = "Z_de")]
    pub z_de: f64,
    #[serde(rename = "M_dth")]
    pub m_dth: f64,
    #[serde(rename = "M_de")]
    pub m_de: f64,
}

impl StabilityDerivatives {
    /// Surrogate fighter-class values at the reference geometry.
    pub fn surrogate_baseline() -> Self {
        Self {
            x_v: -0.015,
            x_alpha: 4.0,
            z_v: -0.25,
            z_alpha: -90.0,
            z_q: -2.0,
            m_v: 0.0005,
            m_alpha: -2.5,
            m_q: -0.9,
            x_dth: 5.0,
            x_de: 0.5,
            z_de: -15.0,
            m_dth: 0.0,
            m_de: -8.0,
        }
    }

    fn map_with(&self, e: &ScalingExponents, f: impl Fn((f64, f64)) -> f64) -> Self {
        Self {
            x_v: self.x_v * f(e.x_v),
            x_alpha: self.x_alpha * f(e.x_alpha),
            z_v: self.z_v * f(e.z_v),
            z_alpha: self.z_alpha * f(e.z_alpha),
            z_q: self.z_q * f(e.z_q),
            m_v: self.m_v * f(e.m_v),
            m_alpha: self.m_alpha * f(e.m_alpha),
            m_q: self.m_q * f(e.m_q),
            x_dth: self.x_dth * f(e.x_dth),
            x_de: self.x_de * f(e.x_de),
            z_de: self.z_de * f(e.z_de),
            m_dth: self.m_dth * f(e.m_dth),
            m_de: self.m_de * f(e.m_de),
        }
    }
}

/// `(e_S, e_c)` per derivative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingExponents {
    #[serde(rename = "X_V")]
    pub x_v: (f64, f64),
    #[serde(rename = "X_alpha")]
    pub x_alpha: (f64, f64),
    #[serde(rename = "Z_V")]
    pub z_v: (f64, f64),
    #[serde(rename = "Z_alpha")]
    pub z_alpha: (f64, f64),
    #[serde(rename = "Z_q")]
    pub z_q: (f64, f64),
    #[serde(rename = "M_V")]
    pub m_v: (f64, f64),
    #[serde(rename = "M_alpha")]
    pub m_alpha: (f64, f64),
    #[serde(rename = "M_q")]
    pub m_q: (f64, f64),
    #[serde(rename = "X_dth")]
    pub x_dth: (f64, f64),
    #[serde(rename = "X_de")]
    pub x_de: (f64, f64),
    #[serde(rename = "Z_de")]
    pub z_de: (f64, f64),
    #[serde(rename = "M_dth")]
    pub m_dth: (f64, f64),
    #[serde(rename = "M_de")]
    pub m_de: (f64, f64),
}

impl Default for ScalingExponents {
    /// Aerodynamic forces scale with area, pitch moments with area times
    /// chord; throttle effectiveness is independent of the wing.
    fn default() -> Self {
        let force = (1.0, 0.0);
        let moment = (1.0, 1.0);
        let engine = (0.0, 0.0);
        Self {
            x_v: force,
            x_alpha: force,
            z_v: force,
            z_alpha: force,
            z_q: force,
            m_v: moment,
            m_alpha: moment,
            m_q: moment,
            x_dth: engine,
            x_de: force,
            z_de: force,
            m_dth: engine,
            m_de: moment,
        }
    }
}

/// Reference geometry, derivatives there and their scaling exponents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateTable {
    pub b0: f64,
    pub c_bar0: f64,
    pub baseline: StabilityDerivatives,
    #[serde(default)]
    pub exponents: ScalingExponents,
}

impl Default for SurrogateTable {
    fn default() -> Self {
        Self {
            b0: 9.144,
            c_bar0: 3.45,
            baseline: StabilityDerivatives::surrogate_baseline(),
            exponents: ScalingExponents::default(),
        }
    }
}

impl SurrogateTable {
    pub fn reference_design(&self) -> DesignVariables {
        DesignVariables::from_pairs([("b", self.b0), ("c_bar", self.c_bar0)])
    }

    /// Derivatives at wingspan `b` and chord `c_bar`.
    pub fn derivatives_at(&self, b: f64, c_bar: f64) -> Result<StabilityDerivatives> {
        if !(b > 0.0 && c_bar > 0.0 && b.is_finite() && c_bar.is_finite()) {
            return Err(ReachError::Domain(format!("wing geometry b = {b}, c_bar = {c_bar} must be positive")));
        }
        let area = b * c_bar / (self.b0 * self.c_bar0);
        let chord = c_bar / self.c_bar0;
        Ok(self
            .baseline
            .map_with(&self.exponents, |(es, ec)| area.powf(es) * chord.powf(ec)))
    }
}

/// `A` and `B` of the longitudinal model for given derivatives.
pub fn assemble_longitudinal(trim: &TrimPoint, d: &StabilityDerivatives) -> Result<LtiSystem> {
    trim.validate()?;
    let (g, v0) = (trim.g, trim.v0);
    #[rustfmt::skip]
    let a = Matrix4::new(
        d.x_v,       d.x_alpha,       0.0,               -g * trim.gamma0.cos(),
        d.z_v / v0,  d.z_alpha / v0,  1.0 + d.z_q / v0,  -g * trim.gamma0.sin() / v0,
        d.m_v,       d.m_alpha,       d.m_q,             0.0,
        0.0,         0.0,             1.0,               0.0,
    );
    #[rustfmt::skip]
    let b = Matrix4x2::new(
        d.x_dth * trim.alpha0.cos(),   d.x_de,
        -d.x_dth * trim.alpha0.sin(),  d.z_de / v0,
        d.m_dth,                       d.m_de,
        0.0,                           0.0,
    );
    LtiSystem::new(DMatrix::from_iterator(4, 4, a.iter().copied()), DMatrix::from_iterator(4, 2, b.iter().copied()))
}

/// Longitudinal model at the design `{b, c_bar}`.
pub fn longitudinal_model(dv: &DesignVariables, trim: &TrimPoint, table: &SurrogateTable) -> Result<LtiSystem> {
    let b = dv.require("b")?;
    let c_bar = dv.require("c_bar")?;
    assemble_longitudinal(trim, &table.derivatives_at(b, c_bar)?)
}

/// Wing-geometry model builder over [`longitudinal_model`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LongitudinalModel {
    pub trim: TrimPoint,
    pub table: SurrogateTable,
}

impl Default for LongitudinalModel {
    fn default() -> Self {
        Self {
            trim: TrimPoint::low_altitude_cruise(),
            table: SurrogateTable::default(),
        }
    }
}

impl ModelBuilder for LongitudinalModel {
    fn build(&self, dv: &DesignVariables) -> Result<LtiSystem> {
        longitudinal_model(dv, &self.trim, &self.table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::classify_spectrum;

    #[test]
    fn unit_conversion() {
        let t = TrimPoint::low_altitude_cruise();
        assert!((t.v0 - 77.1666).abs() < 1e-3);
        assert!((t.h0 - 1524.0).abs() < 1e-9);
        assert!((t.alpha0 - 12f64.to_radians()).abs() < 1e-15);
        assert!(TrimPoint::new(0.1, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(TrimPoint::new(1.6, 10.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn zeroed_derivatives_leave_kinematics() {
        let trim = TrimPoint::low_altitude_cruise();
        let sys = assemble_longitudinal(&trim, &StabilityDerivatives::default()).unwrap();
        let mut expected = DMatrix::zeros(4, 4);
        expected[(0, 3)] = -trim.g;
        expected[(1, 2)] = 1.0;
        expected[(3, 2)] = 1.0;
        assert_eq!(sys.a(), &expected);
        assert_eq!(sys.b(), &DMatrix::zeros(4, 2));
        assert_eq!(sys.a()[(1, 3)], 0.0);
    }

    #[test]
    fn climb_angle_enters_gravity_terms() {
        let trim = TrimPoint::new(0.2, 80.0, 0.0, 0.0, 0.1).unwrap();
        let sys = assemble_longitudinal(&trim, &StabilityDerivatives::default()).unwrap();
        assert!((sys.a()[(0, 3)] + trim.g * 0.1f64.cos()).abs() < 1e-15);
        assert!((sys.a()[(1, 3)] + trim.g * 0.1f64.sin() / 80.0).abs() < 1e-15);
    }

    #[test]
    fn surrogate_baseline_short_period_is_stable() {
        let model = LongitudinalModel::default();
        let sys = model.build(&model.table.reference_design()).unwrap();
        let spec = classify_spectrum(&sys, 1e-9).unwrap();
        let pair: Vec<_> = spec.eigenvalues.iter().filter(|z| z.im.abs() > 1e-6).collect();
        assert!(!pair.is_empty());
        assert!(pair.iter().any(|z| z.re < -0.5 && z.im.abs() > 1.0));
    }

    #[test]
    fn scaling_is_identity_at_reference() {
        let table = SurrogateTable::default();
        assert_eq!(table.derivatives_at(9.144, 3.45).unwrap(), table.baseline);
        let d = table.derivatives_at(2.0 * 9.144, 3.45).unwrap();
        assert!((d.z_alpha - 2.0 * table.baseline.z_alpha).abs() < 1e-12);
        assert_eq!(d.x_dth, table.baseline.x_dth);
        let d = table.derivatives_at(9.144, 2.0 * 3.45).unwrap();
        assert!((d.m_alpha - 4.0 * table.baseline.m_alpha).abs() < 1e-12);
    }
}
