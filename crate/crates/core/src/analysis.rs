//! Numerical checks of the observer's convergence theory.
//!
//! * Persistence-of-excitation metrics: windowed Gram integrals and their
//!   second eigenvalue, the direction-resolved `|b × x|` profile, and the
//!   effect of the first-order filter `ẋ = a − kx` on excitation.
//! * The unstable equilibrium set `{(Q, 0) : tr Q = −1}` and the escape curve
//!   `Q(s) = Q exp(s ω×)` along the `+1` eigenvector of `Q`.
//! * Synchrony of the uncorrected observer in the full group form.
//! * Classification of a finished run into a convergence basin.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lie_groups::{
    exp_so3, nearest_rotation, symmetric_eigenvalues, GroupElement, Matrix3, Matrix4, Rotation, TangentElement, Vector3,
};
use crate::observer::{correction_terms, error_state, ErrorState, Gains, ObserverState};
use crate::trajectory::TrajectoryRecord;
use crate::vehicle_model::InputSignal;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("invalid PE configuration: {0}")]
    InvalidConfig(String),
    #[error("window {window} s is longer than the sampled horizon {horizon} s")]
    WindowTooLong { window: f64, horizon: f64 },
    #[error("signal has no samples")]
    EmptySignal,
    #[error("error state is not on the unstable set (|R ω − ω| = {residual:e}, tr = {trace})")]
    NotUnstableEquilibrium { residual: f64, trace: f64 },
    #[error("trajectory record is empty")]
    EmptyRecord,
}

/// Sliding-window settings for excitation metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PEConfig {
    /// Window length in seconds.
    pub window: f64,
    /// Uniform spacing of the samples in seconds.
    pub sample_dt: f64,
}

impl PEConfig {
    pub fn new(window: f64, sample_dt: f64) -> Result<Self, AnalysisError> {
        let cfg = Self { window, sample_dt };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        if !(self.sample_dt.is_finite() && self.sample_dt > 0.0) {
            return Err(AnalysisError::InvalidConfig(format!("sample_dt must be positive, got {}", self.sample_dt)));
        }
        if !(self.window.is_finite() && self.window >= 10.0 * self.sample_dt * (1.0 - 1e-9)) {
            return Err(AnalysisError::InvalidConfig(format!(
                "window {} must span at least 10 samples of {}",
                self.window, self.sample_dt
            )));
        }
        Ok(())
    }

    /// Window length in whole sample intervals.
    fn window_steps(&self) -> usize {
        (self.window / self.sample_dt).round() as usize
    }

    fn check_horizon(&self, len: usize) -> Result<usize, AnalysisError> {
        self.validate()?;
        if len == 0 {
            return Err(AnalysisError::EmptySignal);
        }
        let steps = self.window_steps();
        if steps + 1 > len {
            return Err(AnalysisError::WindowTooLong {
                window: self.window,
                horizon: (len - 1) as f64 * self.sample_dt,
            });
        }
        Ok(steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PEWindow {
    pub t_start: f64,
    pub lambda2: f64,
}

/// Second Gram eigenvalue for every window start; `min_lambda2` is the
/// minimum over `per_window`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PEReport {
    pub window: f64,
    pub min_lambda2: f64,
    pub per_window: Vec<PEWindow>,
}

/// Spectrum of one Gram integral, with the quantities that tie the `λ₂`
/// form of excitation to the `|b × x|` form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GramSpectrum {
    /// `λ₁ ≥ λ₂ ≥ λ₃` of `∫ x xᵀ`.
    pub eigenvalues: [f64; 3],
    pub trace: f64,
    /// Smallest eigenvalue of `∫ (‖x‖² I − x xᵀ)`.
    pub complement_min: f64,
}

/// Trapezoidal `∫ x xᵀ dτ` over uniformly spaced samples.
pub fn gram_matrix(samples: &[Vector3], dt: f64) -> Matrix3 {
    let n = samples.len();
    if n < 2 {
        return Matrix3::zeros();
    }
    let mut g = Matrix3::zeros();
    for (i, x) in samples.iter().enumerate() {
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        g += w * x * x.transpose();
    }
    g * dt
}

/// Trapezoidal `∫ (‖x‖² I − x xᵀ) dτ`, i.e. the integral of `(x×)ᵀ(x×)`.
pub fn complement_gram_matrix(samples: &[Vector3], dt: f64) -> Matrix3 {
    let n = samples.len();
    if n < 2 {
        return Matrix3::zeros();
    }
    let mut g = Matrix3::zeros();
    for (i, x) in samples.iter().enumerate() {
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        g += w * (x.norm_squared() * Matrix3::identity() - x * x.transpose());
    }
    g * dt
}

pub fn gram_spectrum(samples: &[Vector3], dt: f64) -> GramSpectrum {
    let g = gram_matrix(samples, dt);
    GramSpectrum {
        eigenvalues: symmetric_eigenvalues(&g),
        trace: g.trace(),
        complement_min: symmetric_eigenvalues(&complement_gram_matrix(samples, dt))[2],
    }
}

/// Second-largest eigenvalue of the windowed Gram integral for every window
/// start (one per sample), and its minimum.
pub fn gram_lambda2(samples: &[Vector3], config: &PEConfig) -> Result<PEReport, AnalysisError> {
    let steps = config.check_horizon(samples.len())?;
    let per_window: Vec<PEWindow> = (0..samples.len() - steps)
        .map(|start| {
            let g = gram_matrix(&samples[start..=start + steps], config.sample_dt);
            PEWindow { t_start: start as f64 * config.sample_dt, lambda2: symmetric_eigenvalues(&g)[1].max(0.0) }
        })
        .collect();
    let min_lambda2 = per_window.iter().map(|w| w.lambda2).fold(f64::INFINITY, f64::min);
    Ok(PEReport { window: steps as f64 * config.sample_dt, min_lambda2, per_window })
}

/// Direction-resolved excitation profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalProfile {
    pub directions: Vec<Vector3>,
    /// For each direction `b`: the minimum over window starts of the maximum
    /// over the window of `|b × x(τ)|`.
    pub profile: Vec<f64>,
    /// Minimum of `profile` over all directions; an estimate of the
    /// excitation level `μ`.
    pub mu: f64,
}

/// [`pe_directional_profile`] on the 162-point geodesic sphere grid.
pub fn pe_directional_check(samples: &[Vector3], config: &PEConfig) -> Result<DirectionalProfile, AnalysisError> {
    pe_directional_profile(samples, config, &sphere_grid())
}

pub fn pe_directional_profile(
    samples: &[Vector3],
    config: &PEConfig,
    directions: &[Vector3],
) -> Result<DirectionalProfile, AnalysisError> {
    let steps = config.check_horizon(samples.len())?;
    let profile: Vec<f64> = directions
        .iter()
        .map(|b| {
            let values: Vec<f64> = samples.iter().map(|x| b.cross(x).norm()).collect();
            sliding_max(&values, steps + 1).into_iter().fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mu = profile.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DirectionalProfile { directions: directions.to_vec(), profile, mu })
}

/// Maximum of every length-`width` window (monotone deque).
fn sliding_max(values: &[f64], width: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len() + 1 - width);
    let mut deque: VecDeque<usize> = VecDeque::new();
    for (i, &v) in values.iter().enumerate() {
        while deque.back().is_some_and(|&j| values[j] <= v) {
            deque.pop_back();
        }
        deque.push_back(i);
        if deque[0] + width <= i {
            deque.pop_front();
        }
        if i + 1 >= width {
            out.push(values[deque[0]]);
        }
    }
    out
}

/// Runs `ẋ = a − k x`, `x(0) = 0`, over the sampled signal with RK4 (linear
/// interpolation at half steps) and reports the excitation of `x`.
pub fn filtered_pe_check(a_samples: &[Vector3], k: f64, config: &PEConfig) -> Result<PEReport, AnalysisError> {
    if !(k.is_finite() && k > 0.0) {
        return Err(AnalysisError::InvalidConfig(format!("filter gain k must be positive, got {k}")));
    }
    let filtered = first_order_filter(a_samples, k, config.sample_dt);
    gram_lambda2(&filtered, config)
}

/// Samples of `x` for `ẋ = a − k x`, `x(0) = 0`.
pub fn first_order_filter(a_samples: &[Vector3], k: f64, dt: f64) -> Vec<Vector3> {
    let mut out = Vec::with_capacity(a_samples.len());
    let mut x = Vector3::zeros();
    for (i, a0) in a_samples.iter().enumerate() {
        out.push(x);
        let Some(a1) = a_samples.get(i + 1) else { break };
        let am = 0.5 * (a0 + a1);
        let f = |x: Vector3, a: &Vector3| a - k * x;
        let k1 = f(x, a0);
        let k2 = f(x + 0.5 * dt * k1, &am);
        let k3 = f(x + 0.5 * dt * k2, &am);
        let k4 = f(x + dt * k3, a1);
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    out
}

/// 162 unit vectors: an icosahedron with vertices at `±e₃`, subdivided
/// twice and projected to the sphere. Order is deterministic.
pub fn sphere_grid() -> Vec<Vector3> {
    let z = 1.0 / 5f64.sqrt();
    let r = 2.0 * z;
    let mut verts = vec![Vector3::z()];
    for i in 0..5 {
        let a = 2.0 * PI * i as f64 / 5.0;
        verts.push(Vector3::new(r * a.cos(), r * a.sin(), z));
    }
    for i in 0..5 {
        let a = 2.0 * PI * (i as f64 + 0.5) / 5.0;
        verts.push(Vector3::new(r * a.cos(), r * a.sin(), -z));
    }
    verts.push(-Vector3::z());

    let mut faces = Vec::new();
    for i in 0..5 {
        let (u0, u1) = (1 + i, 1 + (i + 1) % 5);
        let (l0, l1) = (6 + i, 6 + (i + 1) % 5);
        faces.push([0, u0, u1]);
        faces.push([u0, l0, u1]);
        faces.push([l0, l1, u1]);
        faces.push([11, l1, l0]);
    }

    for _ in 0..2 {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mid = [0usize; 3];
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mid[e] = *midpoints.entry(key).or_insert_with(|| {
                    verts.push((verts[a] + verts[b]).normalize());
                    verts.len() - 1
                });
            }
            next.push([f[0], mid[0], mid[2]]);
            next.push([f[1], mid[1], mid[0]]);
            next.push([f[2], mid[2], mid[1]]);
            next.push(mid);
        }
        faces = next;
    }
    verts
}

/// `(U D Uᵀ, 0)` with `D = diag(1, −1, −1)`.
pub fn unstable_equilibrium(u: &Rotation) -> ErrorState {
    let d = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0));
    let q = u.matrix() * d * u.matrix().transpose();
    ErrorState::new(Rotation::from_matrix_unchecked(q), Vector3::zeros())
}

/// Unit `+1` eigenvector of a rotation by π, read from `(Q + I)/2 = ω ωᵀ`.
pub fn unstable_axis(q: &Rotation) -> Result<Vector3, AnalysisError> {
    let m = q.matrix();
    let p = 0.5 * (m + Matrix3::identity());
    let j = (0..3).max_by(|&a, &b| p[(a, a)].total_cmp(&p[(b, b)])).unwrap_or(0);
    let trace = q.trace();
    let omega = if p[(j, j)] > 0.0 { p.column(j) / p[(j, j)].sqrt() } else { Vector3::zeros() };
    let residual = (m * omega - omega).norm();
    if !(residual <= 1e-9 && (trace + 1.0).abs() <= 1e-9 && (omega.norm() - 1.0).abs() <= 1e-9) {
        return Err(AnalysisError::NotUnstableEquilibrium { residual, trace });
    }
    Ok(omega)
}

/// `(Q exp(s ω×), 0)` where `ω` is the `+1` eigenvector of `Q = R_E`.
pub fn perturbation_curve(eq: &ErrorState, s: f64) -> Result<ErrorState, AnalysisError> {
    let omega = unstable_axis(&eq.rot)?;
    Ok(ErrorState::new(eq.rot * exp_so3(&(s * omega)), Vector3::zeros()))
}

/// Whether the synchrony run applies the observer corrections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SynchronyMode {
    /// `Δ = Γ = 0`: the error must stay constant.
    ZeroCorrection,
    /// Corrections from [`correction_terms`], with `Γ = (0, u_Γ)`.
    Corrected(Gains),
}

/// Jointly integrates the truth `Ẋ = XU + GX`, the observer
/// `X̂' = X̂U + GX̂ + ΔX̂` and the auxiliary state `Ẑ' = GẐ + ẐΓ` in full
/// homogeneous form with RK4, returning `max_t ‖Ē(t) − Ē(0)‖_F` for
/// `Ē = Ẑ⁻¹ X X̂⁻¹ Ẑ`.
pub fn synchrony_residual(
    inputs: &InputSignal,
    x0: &GroupElement,
    xhat0: &GroupElement,
    zhat0: &GroupElement,
    horizon: f64,
    step: f64,
    mode: SynchronyMode,
) -> f64 {
    let gravity = TangentElement::translation(inputs.gravity).to_homogeneous();
    let field = |t: f64, s: &[Matrix4; 3]| -> [Matrix4; 3] {
        let imu = inputs.imu(t);
        let u = imu.as_tangent().to_homogeneous();
        let [x, xhat, zhat] = s;
        let (delta, gamma) = match mode {
            SynchronyMode::ZeroCorrection => (Matrix4::zeros(), Matrix4::zeros()),
            SynchronyMode::Corrected(gains) => {
                let obs = ObserverState::new(
                    Rotation::from_matrix_unchecked(xhat.fixed_view::<3, 3>(0, 0).into_owned()),
                    xhat.fixed_view::<3, 1>(0, 3).into_owned(),
                    zhat.fixed_view::<3, 1>(0, 3).into_owned(),
                );
                let v = x.fixed_view::<3, 1>(0, 3).into_owned();
                let c = correction_terms(&obs, &v, &gains);
                (
                    TangentElement::new(c.omega_delta, c.u_delta).to_homogeneous(),
                    TangentElement::translation(c.u_gamma).to_homogeneous(),
                )
            }
        };
        [x * u + gravity * x, xhat * u + gravity * xhat + delta * xhat, gravity * zhat + zhat * gamma]
    };
    let ebar = |s: &[Matrix4; 3]| -> Option<Matrix4> {
        let zinv = s[2].try_inverse()?;
        let xhinv = s[1].try_inverse()?;
        Some(zinv * s[0] * xhinv * s[2])
    };

    let mut state = [x0.to_homogeneous(), xhat0.to_homogeneous(), zhat0.to_homogeneous()];
    let Some(e0) = ebar(&state) else { return f64::INFINITY };
    let steps = (horizon / step + 1e-9).floor() as usize;
    let mut worst = 0.0f64;
    for i in 0..steps {
        let t = i as f64 * step;
        let add = |s: &[Matrix4; 3], d: &[Matrix4; 3], h: f64| [s[0] + d[0] * h, s[1] + d[1] * h, s[2] + d[2] * h];
        let k1 = field(t, &state);
        let k2 = field(t + 0.5 * step, &add(&state, &k1, 0.5 * step));
        let k3 = field(t + 0.5 * step, &add(&state, &k2, 0.5 * step));
        let k4 = field(t + step, &add(&state, &k3, step));
        for j in 0..3 {
            state[j] += (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (step / 6.0);
        }
        match ebar(&state) {
            Some(e) if e.iter().all(|x| x.is_finite()) => worst = worst.max((e - e0).norm()),
            _ => return f64::INFINITY,
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basin {
    StableIdentity,
    NearUnstableSet,
    Diverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Attitude tolerance in radians.
    pub attitude: f64,
    /// Tolerance on `‖v_E‖` in m/s.
    pub velocity: f64,
    /// Tolerance on `|tr R_E + 1|`.
    pub trace: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { attitude: 1f64.to_radians(), velocity: 1e-3, trace: 1e-2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceVerdict {
    pub terminal_attitude_error: f64,
    pub terminal_velocity_error: f64,
    pub basin: Basin,
}

/// Classifies a single error state.
pub fn classify_error(err: &ErrorState, thresholds: &Thresholds) -> ConvergenceVerdict {
    let attitude = crate::lie_groups::attitude_angle(&err.rot);
    let velocity = err.vel.norm();
    let basin = if !(attitude.is_finite() && velocity.is_finite()) || velocity >= thresholds.velocity {
        Basin::Diverged
    } else if attitude < thresholds.attitude {
        Basin::StableIdentity
    } else if (err.rot.trace() + 1.0).abs() < thresholds.trace {
        Basin::NearUnstableSet
    } else {
        Basin::Diverged
    };
    ConvergenceVerdict { terminal_attitude_error: attitude, terminal_velocity_error: velocity, basin }
}

/// Classifies the final row of a run.
pub fn classify_convergence(
    record: &TrajectoryRecord,
    thresholds: &Thresholds,
) -> Result<ConvergenceVerdict, AnalysisError> {
    let last = record.last().ok_or(AnalysisError::EmptyRecord)?;
    Ok(classify_error(&error_state(&last.truth, &last.observer), thresholds))
}

/// Random rotation helper shared by the Monte Carlo sampler: rotation about
/// `axis` by `angle`, projected to remove roundoff.
pub(crate) fn axis_angle(axis: &Vector3, angle: f64) -> Rotation {
    let r = exp_so3(&(angle * axis.normalize()));
    nearest_rotation(r.matrix()).unwrap_or(r)
}
