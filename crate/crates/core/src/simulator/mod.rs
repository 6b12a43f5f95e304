//! Closed-loop simulation: joint integration of the truth and the observer,
//! trajectory logging, and seeded Monte Carlo studies.

pub mod cli;
pub mod rng;
pub mod scenario;

use std::f64::consts::PI;
use std::ops::{Add, Mul};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{axis_angle, classify_convergence, sphere_grid, Basin, ConvergenceVerdict, Thresholds};
use crate::lie_groups::{attitude_angle, exp_so3, nearest_rotation, Matrix3, Rotation, Vector3, INVARIANT_TOL};
use crate::observer::{error_state, lyapunov, observer_derivative, Gains, ObserverState};
use crate::trajectory::{TrajectoryRecord, TrajectoryRow};
use crate::vehicle_model::{system_derivative, InputSignal, SystemState};

pub use rng::CounterRng;
pub use scenario::{ConfigError, Integrator, Scenario};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("non-finite state at row {row} (t = {t}): {field}")]
    NonFinite { row: usize, t: f64, field: &'static str },
    #[error("rotation `{field}` left SO(3) at row {row} (t = {t}, defect {defect:e})")]
    OffManifold { row: usize, t: f64, field: &'static str, defect: f64 },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// Truth and observer advanced together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopState {
    pub truth: SystemState,
    pub observer: ObserverState,
}

impl ClosedLoopState {
    pub fn new(truth: SystemState, observer: ObserverState) -> Self {
        Self { truth, observer }
    }
}

/// Ambient-coordinate copy of the closed-loop state used by the integrators.
#[derive(Debug, Clone, Copy)]
struct Flat {
    r: Matrix3,
    v: Vector3,
    rh: Matrix3,
    vh: Vector3,
    z: Vector3,
}

impl Add for Flat {
    type Output = Flat;

    fn add(self, o: Flat) -> Flat {
        Flat { r: self.r + o.r, v: self.v + o.v, rh: self.rh + o.rh, vh: self.vh + o.vh, z: self.z + o.z }
    }
}

impl Mul<f64> for Flat {
    type Output = Flat;

    fn mul(self, h: f64) -> Flat {
        Flat { r: self.r * h, v: self.v * h, rh: self.rh * h, vh: self.vh * h, z: self.z * h }
    }
}

impl Flat {
    fn from_state(s: &ClosedLoopState) -> Self {
        Flat {
            r: *s.truth.rot.matrix(),
            v: s.truth.vel,
            rh: *s.observer.rhat.matrix(),
            vh: s.observer.vhat,
            z: s.observer.z,
        }
    }

    fn into_state(self) -> ClosedLoopState {
        ClosedLoopState {
            truth: SystemState::new(project(self.r), self.v),
            observer: ObserverState::new(project(self.rh), self.vh, self.z),
        }
    }

    /// Reads the flat state without projecting rotations.
    fn as_state_unchecked(&self) -> ClosedLoopState {
        ClosedLoopState {
            truth: SystemState::new(Rotation::from_matrix_unchecked(self.r), self.v),
            observer: ObserverState::new(Rotation::from_matrix_unchecked(self.rh), self.vh, self.z),
        }
    }
}

fn project(m: Matrix3) -> Rotation {
    nearest_rotation(&m).unwrap_or_else(|_| Rotation::from_matrix_unchecked(m))
}

fn field(inputs: &InputSignal, gains: &Gains, t: f64, s: &Flat) -> Flat {
    let state = s.as_state_unchecked();
    let imu = inputs.imu(t);
    let sys = system_derivative(&state.truth, &imu, &inputs.gravity);
    let obs = observer_derivative(&state.observer, &imu, &state.truth.vel, &inputs.gravity, gains);
    Flat { r: sys.rot_dot, v: sys.vel_dot, rh: obs.rhat_dot, vh: obs.vhat_dot, z: obs.z_dot }
}

/// Advances truth and observer from `t` to `t + dt` with the scenario's
/// integrator.
///
/// * `euler`: one explicit step on the ambient matrices, then both rotations
///   are projected back onto SO(3).
/// * `rk4`: classic Runge–Kutta on the ambient matrices, then projection.
/// * `geometric_euler`: `R ← R exp(dt Ω)`, `R̂ ← exp(dt Ω_Δ) R̂ exp(dt Ω)`,
///   Euler for the vectors; rotations stay on SO(3) without projection.
pub fn step(state: &ClosedLoopState, t: f64, scenario: &Scenario) -> ClosedLoopState {
    let (inputs, gains, dt) = (&scenario.inputs, &scenario.gains, scenario.dt);
    match scenario.integrator {
        Integrator::Euler => {
            let s = Flat::from_state(state);
            (s + field(inputs, gains, t, &s) * dt).into_state()
        }
        Integrator::Rk4 => {
            let s = Flat::from_state(state);
            let k1 = field(inputs, gains, t, &s);
            let k2 = field(inputs, gains, t + 0.5 * dt, &(s + k1 * (0.5 * dt)));
            let k3 = field(inputs, gains, t + 0.5 * dt, &(s + k2 * (0.5 * dt)));
            let k4 = field(inputs, gains, t + dt, &(s + k3 * dt));
            (s + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)).into_state()
        }
        Integrator::GeometricEuler => {
            let imu = inputs.imu(t);
            let truth = &state.truth;
            let obs = &state.observer;
            let sys = system_derivative(truth, &imu, &inputs.gravity);
            let od = observer_derivative(obs, &imu, &truth.vel, &inputs.gravity, gains);
            let body = exp_so3(&(dt * imu.omega));
            ClosedLoopState {
                truth: SystemState::new(truth.rot * body, truth.vel + dt * sys.vel_dot),
                observer: ObserverState::new(
                    exp_so3(&(dt * od.correction.omega_delta)) * obs.rhat * body,
                    obs.vhat + dt * od.vhat_dot,
                    obs.z + dt * od.z_dot,
                ),
            }
        }
    }
}

/// Logged quantities for one closed-loop state.
pub fn make_row(t: f64, state: &ClosedLoopState, gains: &Gains) -> TrajectoryRow {
    let err = error_state(&state.truth, &state.observer);
    TrajectoryRow {
        t,
        truth: state.truth,
        observer: state.observer,
        attitude_error: attitude_angle(&err.rot),
        velocity_error: (state.truth.vel - state.observer.vhat).norm(),
        lyapunov: lyapunov(&err, gains),
    }
}

fn first_non_finite(row: &TrajectoryRow) -> Option<&'static str> {
    let finite_m = |m: &Matrix3| m.iter().all(|x| x.is_finite());
    let finite_v = |v: &Vector3| v.iter().all(|x| x.is_finite());
    if !finite_m(row.truth.rot.matrix()) {
        Some("R")
    } else if !finite_v(&row.truth.vel) {
        Some("v")
    } else if !finite_m(row.observer.rhat.matrix()) {
        Some("Rh")
    } else if !finite_v(&row.observer.vhat) {
        Some("vh")
    } else if !finite_v(&row.observer.z) {
        Some("z")
    } else if !row.lyapunov.is_finite() {
        Some("lyap")
    } else {
        None
    }
}

/// Full closed-loop rollout with `floor(horizon/dt) + 1` rows at
/// `t = i · dt`. Aborts at the first row that is non-finite or whose
/// rotations could not be kept on SO(3).
pub fn run(scenario: &Scenario) -> Result<TrajectoryRecord, SimError> {
    scenario.validate().map_err(|e| SimError::Invalid(e.to_string()))?;
    let steps = scenario.steps();
    let mut rows = Vec::with_capacity(steps + 1);
    let mut state = ClosedLoopState::new(scenario.truth0, scenario.observer0);
    for i in 0..=steps {
        let t = i as f64 * scenario.dt;
        let row = make_row(t, &state, &scenario.gains);
        if let Some(field) = first_non_finite(&row) {
            return Err(SimError::NonFinite { row: i, t, field });
        }
        for (field, rot) in [("R", &row.truth.rot), ("Rh", &row.observer.rhat)] {
            let defect = rot.orthogonality_defect();
            if defect > INVARIANT_TOL || rot.matrix().determinant() <= 0.0 {
                return Err(SimError::OffManifold { row: i, t, field, defect });
            }
        }
        rows.push(row);
        if i < steps {
            state = step(&state, t, scenario);
        }
    }
    Ok(TrajectoryRecord { rows })
}

/// Sampling of initial observer errors for Monte Carlo studies.
///
/// Run `i` consumes draws `8i .. 8i + 4` of a [`CounterRng`] keyed by
/// `seed`: draw 0 picks the rotation axis from the 162-point sphere grid,
/// draw 1 the angle `max_angle · (1 − u) ∈ (0, max_angle]`, draws 2–4 the
/// velocity offset `velocity_range · (2u − 1)` per axis. The initial
/// attitude error is `R_E(0) = exp(angle · axis)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub runs: usize,
    pub seed: u64,
    pub max_angle: f64,
    pub velocity_range: f64,
    pub thresholds: Thresholds,
}

impl MonteCarloConfig {
    pub fn new(runs: usize, seed: u64) -> Self {
        Self { runs, seed, max_angle: PI - 0.05, velocity_range: 5.0, thresholds: Thresholds::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloRun {
    pub index: usize,
    pub axis: Vector3,
    pub initial_attitude_error: f64,
    pub velocity_offset: Vector3,
    pub verdict: ConvergenceVerdict,
}

/// Initial observer state for Monte Carlo run `index`.
pub fn sample_initial_observer(
    base: &Scenario,
    config: &MonteCarloConfig,
    index: usize,
) -> (Vector3, f64, Vector3, ObserverState) {
    let rng = CounterRng::new(config.seed);
    let c = 8 * index as u64;
    let grid = sphere_grid();
    let axis = grid[((rng.f64_at(c) * grid.len() as f64) as usize).min(grid.len() - 1)];
    let angle = config.max_angle * (1.0 - rng.f64_at(c + 1));
    let offset = Vector3::new(
        config.velocity_range * (2.0 * rng.f64_at(c + 2) - 1.0),
        config.velocity_range * (2.0 * rng.f64_at(c + 3) - 1.0),
        config.velocity_range * (2.0 * rng.f64_at(c + 4) - 1.0),
    );
    let err_rot = axis_angle(&axis, angle);
    let obs = ObserverState::new(err_rot.transpose() * base.truth0.rot, base.truth0.vel + offset, base.observer0.z);
    (axis, angle, offset, obs)
}

/// Runs `config.runs` randomised initialisations of `base` in parallel.
/// Results are ordered by run index and depend only on `base` and `config`.
/// A run that produces non-finite values is reported as diverged.
pub fn monte_carlo(base: &Scenario, config: &MonteCarloConfig) -> Result<Vec<MonteCarloRun>, SimError> {
    base.validate().map_err(|e| SimError::Invalid(e.to_string()))?;
    if config.runs == 0 {
        return Err(SimError::Invalid("monte carlo needs at least one run".into()));
    }
    let mut out: Vec<MonteCarloRun> = (0..config.runs)
        .into_par_iter()
        .map(|index| {
            let (axis, angle, offset, obs) = sample_initial_observer(base, config, index);
            let scenario = Scenario { observer0: obs, ..base.clone() };
            let verdict = match run(&scenario) {
                Ok(record) => classify_convergence(&record, &config.thresholds).expect("run produces rows"),
                Err(_) => ConvergenceVerdict {
                    terminal_attitude_error: f64::NAN,
                    terminal_velocity_error: f64::NAN,
                    basin: Basin::Diverged,
                },
            };
            MonteCarloRun { index, axis, initial_attitude_error: angle, velocity_offset: offset, verdict }
        })
        .collect();
    out.sort_by_key(|r| r.index);
    Ok(out)
}
