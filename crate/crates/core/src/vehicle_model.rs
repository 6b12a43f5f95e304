//! Ground-truth vehicle model: attitude/velocity kinematics driven by
//! gyroscope and accelerometer signals, the inertial velocity measurement,
//! and the lifted form of the kinematics on the symmetry group.
//!
//! Conventions: `R` maps body-frame vectors to the inertial frame, so the
//! velocity kinematics read `v̇ = R a + g` with `a` the body-frame specific
//! acceleration and `g` the inertial gravity vector. Gravity is used exactly
//! as configured (the built-in scenarios use `g = (0, 0, 9.81)`); there is no
//! NED/ENU switching.

use serde::{Deserialize, Serialize};

use crate::lie_groups::{skew, GroupElement, Matrix3, Matrix4, Rotation, TangentElement, Vector3};

/// True vehicle state `(R, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SystemState {
    pub rot: Rotation,
    pub vel: Vector3,
}

impl SystemState {
    pub fn new(rot: Rotation, vel: Vector3) -> Self {
        Self { rot, vel }
    }

    pub fn as_group(&self) -> GroupElement {
        GroupElement::new(self.rot, self.vel)
    }
}

impl From<GroupElement> for SystemState {
    fn from(x: GroupElement) -> Self {
        Self::new(x.rot, x.vec)
    }
}

/// Time derivative of a [`SystemState`] in ambient coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemTangent {
    pub rot_dot: Matrix3,
    pub vel_dot: Vector3,
}

/// One IMU reading: body angular velocity (rad/s) and body specific
/// acceleration (m/s²).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ImuSample {
    pub t: f64,
    pub omega: Vector3,
    pub accel: Vector3,
}

impl ImuSample {
    /// The input as a Lie-algebra element `U = (Ω, a)`.
    pub fn as_tangent(&self) -> TangentElement {
        TangentElement::new(self.omega, self.accel)
    }
}

/// One sinusoidal component `amplitude · sin(frequency · t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SineTerm {
    pub amplitude: f64,
    /// Angular frequency in rad/s.
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Scalar signal `offset + Σ terms`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSignal {
    #[serde(default)]
    pub offset: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<SineTerm>,
}

impl AxisSignal {
    pub fn constant(offset: f64) -> Self {
        Self { offset, terms: Vec::new() }
    }

    pub fn sine(amplitude: f64, frequency: f64) -> Self {
        Self { offset: 0.0, terms: vec![SineTerm { amplitude, frequency, phase: 0.0 }] }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().fold(self.offset, |acc, s| acc + s.amplitude * (s.frequency * t + s.phase).sin())
    }

    fn is_finite(&self) -> bool {
        self.offset.is_finite()
            && self.terms.iter().all(|s| s.amplitude.is_finite() && s.frequency.is_finite() && s.phase.is_finite())
    }
}

/// Three independent axis signals forming a vector-valued signal of time.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VectorSignal(pub [AxisSignal; 3]);

impl VectorSignal {
    pub fn constant(v: Vector3) -> Self {
        Self([AxisSignal::constant(v.x), AxisSignal::constant(v.y), AxisSignal::constant(v.z)])
    }

    pub fn eval(&self, t: f64) -> Vector3 {
        Vector3::new(self.0[0].eval(t), self.0[1].eval(t), self.0[2].eval(t))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(AxisSignal::is_finite)
    }
}

/// Analytic IMU inputs plus the constant gravity vector.
///
/// Signals are closed-form functions of time so integrators can evaluate
/// them at any stage time without interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSignal {
    pub omega: VectorSignal,
    pub accel: VectorSignal,
    pub gravity: Vector3,
}

impl InputSignal {
    pub fn imu(&self, t: f64) -> ImuSample {
        ImuSample { t, omega: self.omega.eval(t), accel: self.accel.eval(t) }
    }

    pub fn is_finite(&self) -> bool {
        self.omega.is_finite() && self.accel.is_finite() && self.gravity.iter().all(|x| x.is_finite())
    }

    /// `Ω(t) = (0, 0, 1)`, `a(t) = (5 sin 5t, 0, −9.81)`, `g = (0, 0, 9.81)`.
    pub fn paper2022() -> Self {
        Self {
            omega: VectorSignal::constant(Vector3::new(0.0, 0.0, 1.0)),
            accel: VectorSignal([AxisSignal::sine(5.0, 5.0), AxisSignal::constant(0.0), AxisSignal::constant(-9.81)]),
            gravity: Vector3::new(0.0, 0.0, 9.81),
        }
    }
}

/// `(Ṙ, v̇) = (R Ω×, R a + g)`.
pub fn system_derivative(s: &SystemState, u: &ImuSample, gravity: &Vector3) -> SystemTangent {
    SystemTangent { rot_dot: s.rot.matrix() * skew(&u.omega), vel_dot: s.rot * u.accel + gravity }
}

/// Inertial velocity measurement `h(R, v) = v`. Noise free.
pub fn measure(s: &SystemState) -> Vector3 {
    s.vel
}

/// `Ẋ = X U + G X` in homogeneous 4×4 form.
pub fn lifted_derivative(x: &GroupElement, u: &TangentElement, g: &TangentElement) -> Matrix4 {
    let xm = x.to_homogeneous();
    xm * u.to_homogeneous() + g.to_homogeneous() * xm
}

/// Splits a homogeneous algebra-shaped matrix into its `(3×3, 3×1)` blocks.
pub fn homogeneous_blocks(m: &Matrix4) -> (Matrix3, Vector3) {
    (m.fixed_view::<3, 3>(0, 0).into_owned(), m.fixed_view::<3, 1>(0, 3).into_owned())
}

/// Inputs and initial truth state of the reference simulation:
/// `R(0) = I`, `v(0) = 0`.
pub fn reference_scenario() -> (InputSignal, SystemState) {
    (InputSignal::paper2022(), SystemState::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_groups::exp_so3;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn free_fall_derivative() {
        let s = SystemState::default();
        let u = ImuSample::default();
        let d = system_derivative(&s, &u, &Vector3::new(0.0, 0.0, 9.81));
        assert_eq!(d.rot_dot, Matrix3::zeros());
        assert_eq!(d.vel_dot, Vector3::new(0.0, 0.0, 9.81));
    }

    #[test]
    fn pure_rotation_derivative() {
        let s = SystemState::default();
        let u = ImuSample { t: 0.0, omega: Vector3::z(), accel: Vector3::zeros() };
        let d = system_derivative(&s, &u, &Vector3::zeros());
        assert_eq!(d.rot_dot, skew(&Vector3::z()));
        assert_eq!(d.vel_dot, Vector3::zeros());
    }

    #[test]
    fn reference_scenario_hovers_at_start() {
        let (inputs, s0) = reference_scenario();
        let u = inputs.imu(0.0);
        assert_eq!(u.omega, Vector3::new(0.0, 0.0, 1.0));
        let d = system_derivative(&s0, &u, &inputs.gravity);
        assert_relative_eq!(d.vel_dot, Vector3::zeros(), epsilon = 1e-15);
    }

    #[test]
    fn reference_signals() {
        let inputs = InputSignal::paper2022();
        assert_eq!(inputs.imu(7.3).omega, Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(inputs.imu(0.0).accel, Vector3::new(0.0, 0.0, -9.81));
        assert_relative_eq!(inputs.imu(PI / 10.0).accel, Vector3::new(5.0, 0.0, -9.81), epsilon = 1e-14);
        assert_eq!(inputs.gravity, Vector3::new(0.0, 0.0, 9.81));
    }

    #[test]
    fn measurement_is_velocity() {
        let s = SystemState::new(exp_so3(&Vector3::new(0.3, 0.1, -0.2)), Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(measure(&s), Vector3::new(1.0, 2.0, 3.0));
        let s = SystemState::new(exp_so3(&Vector3::new(1.0, 0.0, 0.0)), Vector3::zeros());
        assert_eq!(measure(&s), Vector3::zeros());

        // One Euler step of free fall from rest.
        let g = Vector3::new(0.0, 0.0, 9.81);
        let s = SystemState::default();
        let d = system_derivative(&s, &ImuSample::default(), &g);
        let next = SystemState::new(s.rot, s.vel + 0.1 * d.vel_dot);
        assert_relative_eq!(measure(&next), Vector3::new(0.0, 0.0, 0.981), epsilon = 1e-15);
    }

    #[test]
    fn lifted_derivative_examples() {
        let zero = lifted_derivative(&GroupElement::identity(), &TangentElement::zero(), &TangentElement::zero());
        assert_eq!(zero, Matrix4::zeros());

        let omega = Vector3::new(0.2, -0.7, 1.1);
        let a = Vector3::new(3.0, -1.0, -9.0);
        let g = Vector3::new(0.0, 0.0, 9.81);
        let m = lifted_derivative(
            &GroupElement::identity(),
            &TangentElement::new(omega, a),
            &TangentElement::translation(g),
        );
        let (rot, vel) = homogeneous_blocks(&m);
        assert_eq!(rot, skew(&omega));
        assert_relative_eq!(vel, a + g, epsilon = 1e-15);
        assert_eq!(m.row(3).iter().copied().fold(0.0, f64::max), 0.0);
    }

    #[test]
    fn input_signal_json_shape() {
        let json = r#"{
            "omega": [{"offset": 0.0}, {}, {"offset": 1.0}],
            "accel": [{"terms": [{"amplitude": 5.0, "frequency": 5.0}]}, {}, {"offset": -9.81}],
            "gravity": [0.0, 0.0, 9.81]
        }"#;
        let parsed: InputSignal = serde_json::from_str(json).unwrap();
        assert_eq!(parsed, InputSignal::paper2022());
        assert!(serde_json::from_str::<InputSignal>(
            r#"{"omega": [{}, {}], "accel": [{}, {}, {}], "gravity": [0,0,0]}"#
        )
        .is_err());
    }
}
