//! Equivariant velocity-aided attitude observer.
//!
//! The vehicle state is an attitude `R ∈ SO(3)` and inertial velocity `v`,
//! driven by gyro and accelerometer signals and observed through a velocity
//! measurement. The observer keeps `(R̂, v̂, z)` with a three-dimensional
//! auxiliary state `z`; its error converges to the identity from almost all
//! initial conditions.
//!
//! * [`lie_groups`]: SO(3) and the SE(3)-shaped symmetry group.
//! * [`vehicle_model`]: kinematics, inputs and measurement.
//! * [`observer`]: gains, observer dynamics, error state and Lyapunov function.
//! * [`analysis`]: excitation metrics, the unstable set, synchrony and
//!   convergence verdicts.
//! * [`simulator`]: closed-loop integration, Monte Carlo and the `vaa` CLI.
//! * [`trajectory`] and [`report`]: the CSV and JSON output formats.

pub mod analysis;
pub mod lie_groups;
pub mod observer;
pub mod report;
pub mod simulator;
pub mod trajectory;
pub mod vehicle_model;
