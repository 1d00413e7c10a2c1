use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Slope of the smooth Coulomb friction term `cf * tanh(k * qd)`.
pub const FRICTION_SMOOTHING: f64 = 100.0;

/// Physical parameters of the two-link pendulum.
///
/// Inertias are taken about the joint axes. Defaults carry the 0.5 kg
/// attached masses and the 0.2 m / 0.3 m links of the competition hardware;
/// the remaining values are nominal placeholders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    pub r1: f64,
    pub r2: f64,
    #[serde(rename = "I1")]
    pub i1: f64,
    #[serde(rename = "I2")]
    pub i2: f64,
    pub b1: f64,
    pub b2: f64,
    pub cf1: f64,
    pub cf2: f64,
    pub g: f64,
    pub tau_limit1: f64,
    pub tau_limit2: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            m1: 0.5,
            m2: 0.5,
            l1: 0.2,
            l2: 0.3,
            r1: 0.15,
            r2: 0.225,
            i1: 0.013,
            i2: 0.028,
            b1: 0.001,
            b2: 0.001,
            cf1: 0.01,
            cf2: 0.01,
            g: 9.81,
            tau_limit1: 6.0,
            tau_limit2: 6.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let all = ParamField::ALL.iter().map(|f| (f, f.get(self)));
        for (field, v) in all {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{field} is not finite")));
            }
        }
        let positive = [
            ("m1", self.m1),
            ("m2", self.m2),
            ("l1", self.l1),
            ("l2", self.l2),
            ("r1", self.r1),
            ("r2", self.r2),
            ("I1", self.i1),
            ("I2", self.i2),
        ];
        for (name, v) in positive {
            if v <= 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.r1 > self.l1 || self.r2 > self.l2 {
            return Err(Error::InvalidParams(
                "center of mass must lie on the link (r <= l)".into(),
            ));
        }
        let non_negative = [
            ("b1", self.b1),
            ("b2", self.b2),
            ("cf1", self.cf1),
            ("cf2", self.cf2),
            ("tau_limit1", self.tau_limit1),
            ("tau_limit2", self.tau_limit2),
        ];
        for (name, v) in non_negative {
            if v < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn tau_limits(&self) -> [f64; 2] {
        [self.tau_limit1, self.tau_limit2]
    }

    pub fn with(mut self, field: ParamField, value: f64) -> Self {
        field.set(&mut self, value);
        self
    }
}

/// Addressable scalar fields of [`ModelParams`]. Serialized by field name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "&'static str", try_from = "String")]
pub enum ParamField {
    M1,
    M2,
    L1,
    L2,
    R1,
    R2,
    I1,
    I2,
    B1,
    B2,
    Cf1,
    Cf2,
    G,
    TauLimit1,
    TauLimit2,
}

impl ParamField {
    pub const ALL: [ParamField; 15] = [
        ParamField::M1,
        ParamField::M2,
        ParamField::L1,
        ParamField::L2,
        ParamField::R1,
        ParamField::R2,
        ParamField::I1,
        ParamField::I2,
        ParamField::B1,
        ParamField::B2,
        ParamField::Cf1,
        ParamField::Cf2,
        ParamField::G,
        ParamField::TauLimit1,
        ParamField::TauLimit2,
    ];

    /// Independent physical parameters varied by the model-inaccuracy sweep.
    pub const INDEPENDENT: [ParamField; 10] = [
        ParamField::M1,
        ParamField::M2,
        ParamField::L1,
        ParamField::L2,
        ParamField::R1,
        ParamField::R2,
        ParamField::I1,
        ParamField::I2,
        ParamField::B1,
        ParamField::B2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamField::M1 => "m1",
            ParamField::M2 => "m2",
            ParamField::L1 => "l1",
            ParamField::L2 => "l2",
            ParamField::R1 => "r1",
            ParamField::R2 => "r2",
            ParamField::I1 => "I1",
            ParamField::I2 => "I2",
            ParamField::B1 => "b1",
            ParamField::B2 => "b2",
            ParamField::Cf1 => "cf1",
            ParamField::Cf2 => "cf2",
            ParamField::G => "g",
            ParamField::TauLimit1 => "tau_limit1",
            ParamField::TauLimit2 => "tau_limit2",
        }
    }

    pub fn get(self, p: &ModelParams) -> f64 {
        match self {
            ParamField::M1 => p.m1,
            ParamField::M2 => p.m2,
            ParamField::L1 => p.l1,
            ParamField::L2 => p.l2,
            ParamField::R1 => p.r1,
            ParamField::R2 => p.r2,
            ParamField::I1 => p.i1,
            ParamField::I2 => p.i2,
            ParamField::B1 => p.b1,
            ParamField::B2 => p.b2,
            ParamField::Cf1 => p.cf1,
            ParamField::Cf2 => p.cf2,
            ParamField::G => p.g,
            ParamField::TauLimit1 => p.tau_limit1,
            ParamField::TauLimit2 => p.tau_limit2,
        }
    }

    pub fn set(self, p: &mut ModelParams, v: f64) {
        let slot = match self {
            ParamField::M1 => &mut p.m1,
            ParamField::M2 => &mut p.m2,
            ParamField::L1 => &mut p.l1,
            ParamField::L2 => &mut p.l2,
            ParamField::R1 => &mut p.r1,
            ParamField::R2 => &mut p.r2,
            ParamField::I1 => &mut p.i1,
            ParamField::I2 => &mut p.i2,
            ParamField::B1 => &mut p.b1,
            ParamField::B2 => &mut p.b2,
            ParamField::Cf1 => &mut p.cf1,
            ParamField::Cf2 => &mut p.cf2,
            ParamField::G => &mut p.g,
            ParamField::TauLimit1 => &mut p.tau_limit1,
            ParamField::TauLimit2 => &mut p.tau_limit2,
        };
        *slot = v;
    }
}

impl fmt::Display for ParamField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<ParamField> for &'static str {
    fn from(f: ParamField) -> Self {
        f.name()
    }
}

impl TryFrom<String> for ParamField {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for ParamField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParamField::ALL
            .iter()
            .copied()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model parameter `{s}`")))
    }
}

/// Joint-space state. `q1` is measured from the downward vertical, `q2`
/// relative to link 1.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub q1: f64,
    pub q2: f64,
    pub qd1: f64,
    pub qd2: f64,
}

impl State {
    pub const HANGING: State = State::new(0.0, 0.0, 0.0, 0.0);
    pub const UPRIGHT: State = State::new(PI, 0.0, 0.0, 0.0);

    pub const fn new(q1: f64, q2: f64, qd1: f64, qd2: f64) -> Self {
        Self { q1, q2, qd1, qd2 }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.q1, self.q2, self.qd1, self.qd2]
    }

    pub fn velocities(&self) -> [f64; 2] {
        [self.qd1, self.qd2]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_finite(self) -> Result<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(Error::Diverged(self.to_array()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RobotKind {
    /// Actuated at the elbow (joint 2).
    Acrobot,
    /// Actuated at the shoulder (joint 1).
    Pendubot,
}

impl RobotKind {
    pub fn active_joint(self) -> usize {
        match self {
            RobotKind::Acrobot => 1,
            RobotKind::Pendubot => 0,
        }
    }

    pub fn passive_joint(self) -> usize {
        1 - self.active_joint()
    }
}

impl fmt::Display for RobotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RobotKind::Acrobot => "acrobot",
            RobotKind::Pendubot => "pendubot",
        })
    }
}

impl FromStr for RobotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "acrobot" => Ok(RobotKind::Acrobot),
            "pendubot" => Ok(RobotKind::Pendubot),
            other => Err(Error::InvalidArgument(format!("unknown robot `{other}`"))),
        }
    }
}

/// Mass matrix `M(q)`; symmetric and positive definite for valid parameters.
pub fn mass_matrix(p: &ModelParams, q2: f64) -> [[f64; 2]; 2] {
    let c2 = q2.cos();
    let coupling = p.m2 * p.l1 * p.r2 * c2;
    let m11 = p.i1 + p.i2 + p.m2 * p.l1 * p.l1 + 2.0 * coupling;
    let m12 = p.i2 + coupling;
    [[m11, m12], [m12, p.i2]]
}

/// Joint accelerations from the manipulator equation
/// `M(q) qdd + C(q, qd) qd + G(q) + F(qd) = tau`.
pub fn forward_dynamics(p: &ModelParams, s: &State, tau: [f64; 2]) -> Result<[f64; 2]> {
    let s = s.check_finite()?;
    let [[m11, m12], [_, m22]] = mass_matrix(p, s.q2);

    let h = p.m2 * p.l1 * p.r2 * s.q2.sin();
    let coriolis = [
        -2.0 * h * s.qd1 * s.qd2 - h * s.qd2 * s.qd2,
        h * s.qd1 * s.qd1,
    ];

    let s12 = (s.q1 + s.q2).sin();
    let gravity = [
        p.g * (p.m1 * p.r1 + p.m2 * p.l1) * s.q1.sin() + p.m2 * p.g * p.r2 * s12,
        p.m2 * p.g * p.r2 * s12,
    ];

    let friction = [
        p.b1 * s.qd1 + p.cf1 * (FRICTION_SMOOTHING * s.qd1).tanh(),
        p.b2 * s.qd2 + p.cf2 * (FRICTION_SMOOTHING * s.qd2).tanh(),
    ];

    let rhs = [
        tau[0] - coriolis[0] - gravity[0] - friction[0],
        tau[1] - coriolis[1] - gravity[1] - friction[1],
    ];

    let det = m11 * m22 - m12 * m12;
    let qdd = [
        (m22 * rhs[0] - m12 * rhs[1]) / det,
        (m11 * rhs[1] - m12 * rhs[0]) / det,
    ];
    if qdd.iter().all(|v| v.is_finite()) {
        Ok(qdd)
    } else {
        Err(Error::Diverged(s.to_array()))
    }
}

/// Height of the end effector above the base (positive up).
pub fn end_effector_height(p: &ModelParams, s: &State) -> f64 {
    -p.l1 * s.q1.cos() - p.l2 * (s.q1 + s.q2).cos()
}

fn potential_energy(p: &ModelParams, q1: f64, q2: f64) -> f64 {
    -p.g * ((p.m1 * p.r1 + p.m2 * p.l1) * q1.cos() + p.m2 * p.r2 * (q1 + q2).cos())
}

/// Kinetic plus potential energy, zero potential at the base height.
pub fn mechanical_energy(p: &ModelParams, s: &State) -> f64 {
    let [[m11, m12], [_, m22]] = mass_matrix(p, s.q2);
    let kinetic = 0.5 * (m11 * s.qd1 * s.qd1 + 2.0 * m12 * s.qd1 * s.qd2 + m22 * s.qd2 * s.qd2);
    kinetic + potential_energy(p, s.q1, s.q2)
}

/// Energy of the upright equilibrium at rest.
pub fn upright_energy(p: &ModelParams) -> f64 {
    potential_energy(p, PI, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibria_have_zero_acceleration() {
        let p = ModelParams::default();
        let a = forward_dynamics(&p, &State::HANGING, [0.0, 0.0]).unwrap();
        assert_eq!(a, [0.0, 0.0]);
        let a = forward_dynamics(&p, &State::UPRIGHT, [0.0, 0.0]).unwrap();
        assert!(a[0].abs() < 1e-12 && a[1].abs() < 1e-12, "{a:?}");
    }

    #[test]
    fn heights() {
        let p = ModelParams::default();
        assert_eq!(end_effector_height(&p, &State::HANGING), -0.5);
        assert!((end_effector_height(&p, &State::UPRIGHT) - 0.5).abs() < 1e-15);
        let horizontal = State::new(PI / 2.0, 0.0, 0.0, 0.0);
        assert!(end_effector_height(&p, &horizontal).abs() < 1e-15);
    }

    #[test]
    fn non_finite_state_is_divergence() {
        let p = ModelParams::default();
        let s = State::new(f64::NAN, 0.0, 0.0, 0.0);
        assert!(matches!(
            forward_dynamics(&p, &s, [0.0; 2]),
            Err(Error::Diverged(_))
        ));
    }

    #[test]
    fn defaults_are_valid() {
        ModelParams::default().validate().unwrap();
        let bad = ModelParams::default().with(ParamField::R2, 0.4);
        assert!(bad.validate().is_err());
        let bad = ModelParams::default().with(ParamField::B1, -1.0);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn param_field_roundtrip() {
        let mut p = ModelParams::default();
        for (i, f) in ParamField::ALL.iter().enumerate() {
            f.set(&mut p, i as f64 + 0.5);
            assert_eq!(f.get(&p), i as f64 + 0.5);
            assert_eq!(f.name().parse::<ParamField>().unwrap(), *f);
        }
    }

    #[test]
    fn json_uses_field_names() {
        let json = serde_json::to_value(ModelParams::default()).unwrap();
        for f in ParamField::ALL {
            assert!(json.get(f.name()).is_some(), "{f}");
        }
    }
}
