//! The equivariant velocity-aided attitude observer.
//!
//! The observer carries an attitude estimate `R̂`, a velocity estimate `v̂`
//! and a three-dimensional auxiliary state `z`. With truth `(R, v)` the error
//! coordinates are
//!
//! ```text
//! R_E = R R̂ᵀ,    v_E = v − z − R_E (v̂ − z)
//! ```
//!
//! and under the correction terms of [`correction_terms`] they evolve as
//! `Ṙ_E = −R_E Ω_Δ×` and `v̇_E = −k v_E`, independently of the IMU signals.
//!
//! The auxiliary virtual state is stored as the vector `z` alone; its
//! rotational part is fixed at the identity and never integrated.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lie_groups::{nearest_rotation, skew, Matrix3, Rotation, Vector3};
use crate::vehicle_model::{system_derivative, ImuSample, SystemState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GainsError {
    #[error("gain {name} must be finite and positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("lyapunov weight alpha = {alpha} must exceed c/(2k) = {bound}")]
    AlphaTooSmall { alpha: f64, bound: f64 },
}

/// Observer gains.
///
/// `alpha` weights the velocity part of the Lyapunov function and is only
/// used by the analysis functions; the observer dynamics never read it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GainsRepr", into = "GainsRepr")]
pub struct Gains {
    k: f64,
    c: f64,
    alpha: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GainsRepr {
    k: f64,
    c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
}

impl TryFrom<GainsRepr> for Gains {
    type Error = GainsError;

    fn try_from(r: GainsRepr) -> Result<Self, Self::Error> {
        let g = Gains::new(r.k, r.c)?;
        match r.alpha {
            Some(a) => g.with_alpha(a),
            None => Ok(g),
        }
    }
}

impl From<Gains> for GainsRepr {
    fn from(g: Gains) -> Self {
        GainsRepr { k: g.k, c: g.c, alpha: Some(g.alpha) }
    }
}

impl Gains {
    /// Builds gains with the default Lyapunov weight `alpha = c/k`.
    pub fn new(k: f64, c: f64) -> Result<Self, GainsError> {
        for (name, value) in [("k", k), ("c", c)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(GainsError::NotPositive { name, value });
            }
        }
        Ok(Self { k, c, alpha: c / k })
    }

    pub fn with_alpha(self, alpha: f64) -> Result<Self, GainsError> {
        let bound = self.alpha_lower_bound();
        if !(alpha.is_finite() && alpha > bound) {
            return Err(GainsError::AlphaTooSmall { alpha, bound });
        }
        Ok(Self { alpha, ..self })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `c / (2k)`; `alpha` must be strictly greater.
    pub fn alpha_lower_bound(&self) -> f64 {
        self.c / (2.0 * self.k)
    }
}

impl Default for Gains {
    /// `k = 5`, `c = 1`, as in the reference simulation.
    fn default() -> Self {
        Self { k: 5.0, c: 1.0, alpha: 0.2 }
    }
}

/// Internal observer state `(R̂, v̂, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObserverState {
    pub rhat: Rotation,
    pub vhat: Vector3,
    pub z: Vector3,
}

impl ObserverState {
    pub fn new(rhat: Rotation, vhat: Vector3, z: Vector3) -> Self {
        Self { rhat, vhat, z }
    }

    /// Observer initialised on the truth, with `z = v`.
    pub fn aligned_with(truth: &SystemState) -> Self {
        Self::new(truth.rot, truth.vel, truth.vel)
    }
}

/// Correction terms `(Ω_Δ, u_Δ, u_Γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Correction {
    pub omega_delta: Vector3,
    pub u_delta: Vector3,
    pub u_gamma: Vector3,
}

/// Error coordinates `(R_E, v_E)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorState {
    pub rot: Rotation,
    pub vel: Vector3,
}

impl ErrorState {
    pub fn new(rot: Rotation, vel: Vector3) -> Self {
        Self { rot, vel }
    }

    pub fn identity() -> Self {
        Self::default()
    }
}

/// Time derivative of an [`ObserverState`], together with the correction
/// that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverTangent {
    pub rhat_dot: Matrix3,
    pub vhat_dot: Vector3,
    pub z_dot: Vector3,
    pub correction: Correction,
}

/// Time derivative of an [`ErrorState`] in ambient coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorTangent {
    pub rot_dot: Matrix3,
    pub vel_dot: Vector3,
}

/// ```text
/// Ω_Δ = c (v̂ − z) × (v − z)
/// u_Δ = k (v − v̂) − c ((v̂ − z) × (v − z)) × z
/// u_Γ = k (v − z)
/// ```
pub fn correction_terms(obs: &ObserverState, v_meas: &Vector3, gains: &Gains) -> Correction {
    let Gains { k, c, .. } = *gains;
    let innovation = (obs.vhat - obs.z).cross(&(v_meas - obs.z));
    let omega_delta = c * innovation;
    Correction {
        omega_delta,
        u_delta: k * (v_meas - obs.vhat) - omega_delta.cross(&obs.z),
        u_gamma: k * (v_meas - obs.z),
    }
}

/// Observer vector field:
///
/// ```text
/// dR̂/dt = R̂ Ω× + Ω_Δ× R̂
/// dv̂/dt = R̂ a + g + Ω_Δ × v̂ + u_Δ
/// dz/dt = g + u_Γ
/// ```
pub fn observer_derivative(
    obs: &ObserverState,
    imu: &ImuSample,
    v_meas: &Vector3,
    gravity: &Vector3,
    gains: &Gains,
) -> ObserverTangent {
    let corr = correction_terms(obs, v_meas, gains);
    let rhat = obs.rhat.matrix();
    ObserverTangent {
        rhat_dot: rhat * skew(&imu.omega) + skew(&corr.omega_delta) * rhat,
        vhat_dot: rhat * imu.accel + gravity + corr.omega_delta.cross(&obs.vhat) + corr.u_delta,
        z_dot: gravity + corr.u_gamma,
        correction: corr,
    }
}

/// Error coordinates of an observer against the truth. `R R̂ᵀ` is projected
/// back onto SO(3) before use so integration drift does not leak into traces
/// and norms.
pub fn error_state(truth: &SystemState, obs: &ObserverState) -> ErrorState {
    let raw = truth.rot.matrix() * obs.rhat.matrix().transpose();
    let rot = nearest_rotation(&raw).unwrap_or_else(|_| Rotation::from_matrix_unchecked(raw));
    let vel = truth.vel - obs.z - rot * (obs.vhat - obs.z);
    ErrorState::new(rot, vel)
}

/// Inverse of [`error_state`] for a fixed truth and auxiliary state:
/// `R̂ = R_Eᵀ R`, `v̂ = z + R_Eᵀ (v − z − v_E)`.
pub fn observer_from_error(truth: &SystemState, err: &ErrorState, z: Vector3) -> ObserverState {
    let rt = err.rot.transpose();
    ObserverState::new(rt * truth.rot, z + rt * (truth.vel - z - err.vel), z)
}

/// Error derivative obtained by differentiating the error definition along
/// the joint truth/observer vector fields.
pub fn error_derivative(
    truth: &SystemState,
    obs: &ObserverState,
    imu: &ImuSample,
    gravity: &Vector3,
    gains: &Gains,
) -> ErrorTangent {
    let sys = system_derivative(truth, imu, gravity);
    let od = observer_derivative(obs, imu, &truth.vel, gravity, gains);
    let r = truth.rot.matrix();
    let rhat = obs.rhat.matrix();
    let re = r * rhat.transpose();
    let re_dot = sys.rot_dot * rhat.transpose() + r * od.rhat_dot.transpose();
    ErrorTangent {
        rot_dot: re_dot,
        vel_dot: sys.vel_dot - od.z_dot - re_dot * (obs.vhat - obs.z) - re * (od.vhat_dot - od.z_dot),
    }
}

/// `Λ = ½‖R_E − I‖² + (α/2)‖v_E‖²`.
pub fn lyapunov(err: &ErrorState, gains: &Gains) -> f64 {
    0.5 * (err.rot.matrix() - Matrix3::identity()).norm_squared() + 0.5 * gains.alpha() * err.vel.norm_squared()
}

/// Exact rate of change of [`lyapunov`] along the closed loop:
///
/// ```text
/// dΛ/dt = −(c/2)‖(R_E² − I) w‖² − kα‖v_E‖² − c v_Eᵀ (R_E² − I) w,   w = v − z
/// ```
pub fn lyapunov_derivative_exact(err: &ErrorState, v_meas: &Vector3, z: &Vector3, gains: &Gains) -> f64 {
    let w = v_meas - z;
    let re = err.rot.matrix();
    let sq_minus_i = re * re - Matrix3::identity();
    let a = sq_minus_i * w;
    -0.5 * gains.c() * a.norm_squared()
        - gains.k() * gains.alpha() * err.vel.norm_squared()
        - gains.c() * err.vel.dot(&a)
}

/// Upper bound `−(c/2)(‖(R_E² − I) w‖ − ‖v_E‖)²` on
/// [`lyapunov_derivative_exact`], valid whenever `α ≥ c/(2k)`.
pub fn lyapunov_derivative_bound(err: &ErrorState, v_meas: &Vector3, z: &Vector3, gains: &Gains) -> f64 {
    let w = v_meas - z;
    let re = err.rot.matrix();
    let a = ((re * re - Matrix3::identity()) * w).norm();
    -0.5 * gains.c() * (a - err.vel.norm()).powi(2)
}
