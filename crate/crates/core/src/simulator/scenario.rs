//! Scenario definitions and the versioned JSON scenario format.
//!
//! ```json
//! {
//!   "schema": "v1",
//!   "name": "example",
//!   "inputs": { "builtin": "paper2022" },
//!   "truth": { "rotation": "identity", "velocity": [0, 0, 0] },
//!   "observer": { "rotation": { "exp": [2, -1, 1.5] }, "velocity": [3, -2, 2], "z": [0, 0, 0] },
//!   "gains": { "k": 5, "c": 1 },
//!   "horizon": 15,
//!   "dt": 0.1,
//!   "integrator": "euler"
//! }
//! ```
//!
//! `inputs` is either `{"builtin": <name>}` or `{"signals": {...}}` with
//! per-axis `offset` plus sine `terms`. Rotations are `"identity"`,
//! `{"exp": [wx, wy, wz]}` or `{"matrix": [[..], [..], [..]]}` (rows).
//! `truth`, `gains` and `integrator` are optional and default to the
//! identity at rest, `k = 5, c = 1`, and `euler`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lie_groups::{exp_so3, Matrix3, Rotation, Vector3};
use crate::observer::{Gains, ObserverState};
use crate::vehicle_model::{InputSignal, SystemState};

pub const SCHEMA_VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: line {line}, column {column}: {message}")]
    Json { path: String, line: usize, column: usize, message: String },
    #[error("field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
    #[error("unknown built-in {kind} `{name}` (available: {available})")]
    UnknownBuiltin { kind: &'static str, name: String, available: String },
    #[error("cannot read scenario `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Explicit Euler on the ambient matrices, then projection onto SO(3).
    #[default]
    Euler,
    /// Classic fourth-order Runge–Kutta, then projection onto SO(3).
    Rk4,
    /// Euler for vectors, exponential-map updates for rotations.
    GeometricEuler,
}

impl Integrator {
    pub fn order(&self) -> u32 {
        match self {
            Integrator::Euler | Integrator::GeometricEuler => 1,
            Integrator::Rk4 => 4,
        }
    }
}

/// A fully resolved closed-loop simulation setup.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub inputs: InputSignal,
    pub truth0: SystemState,
    pub observer0: ObserverState,
    pub gains: Gains,
    pub horizon: f64,
    pub dt: f64,
    pub integrator: Integrator,
}

pub const BUILTINS: &[(&str, &str)] = &[
    ("paper2022", "reference run: Euler, dt = 0.1 s, 15 s, attitude error above 150 degrees"),
    ("paper2022-rk4", "reference initial condition with RK4, dt = 1e-3 s, 15 s"),
    ("paper2022-geometric", "reference initial condition with geometric Euler, dt = 0.1 s, 15 s"),
    ("paper2022-long", "reference inputs with RK4, dt = 0.01 s, 30 s (Monte Carlo base)"),
    ("aligned", "reference inputs with the observer initialised on the truth"),
];

impl Scenario {
    /// Reference setup: `R̂(0) = exp((2, −1, 1.5)×)`, `v̂(0) = (3, −2, 2)`,
    /// `z(0) = 0`, `k = 5`, `c = 1`, Euler at 0.1 s over 15 s.
    pub fn paper2022() -> Self {
        Self {
            name: "paper2022".into(),
            inputs: InputSignal::paper2022(),
            truth0: SystemState::default(),
            observer0: ObserverState::new(
                exp_so3(&Vector3::new(2.0, -1.0, 1.5)),
                Vector3::new(3.0, -2.0, 2.0),
                Vector3::zeros(),
            ),
            gains: Gains::default(),
            horizon: 15.0,
            dt: 0.1,
            integrator: Integrator::Euler,
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        let base = Self::paper2022();
        let s = match name {
            "paper2022" => base,
            "paper2022-rk4" => Self { integrator: Integrator::Rk4, dt: 1e-3, ..base },
            "paper2022-geometric" => Self { integrator: Integrator::GeometricEuler, ..base },
            "paper2022-long" => Self { integrator: Integrator::Rk4, dt: 0.01, horizon: 30.0, ..base },
            "aligned" => Self { observer0: ObserverState::aligned_with(&base.truth0), ..base },
            _ => return None,
        };
        Some(Self { name: name.to_string(), ..s })
    }

    /// Resolves a CLI scenario argument: built-in names take precedence over
    /// file paths.
    pub fn load(arg: &str) -> Result<Self, ConfigError> {
        if let Some(s) = Self::builtin(arg) {
            return Ok(s);
        }
        let text = std::fs::read_to_string(Path::new(arg))
            .map_err(|source| ConfigError::Io { path: arg.to_string(), source })?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let (line, column) = (inner.line(), inner.column());
            let full = inner.to_string();
            let suffix = format!(" at line {line} column {column}");
            let message = full.strip_suffix(&suffix).unwrap_or(&full).to_string();
            ConfigError::Json { path, line, column, message }
        })?;
        file.resolve()
    }

    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            schema: SCHEMA_VERSION.to_string(),
            name: self.name.clone(),
            inputs: InputSpec::Signals(self.inputs.clone()),
            truth: TruthSpec {
                rotation: RotationSpec::Matrix(rows(self.truth0.rot.matrix())),
                velocity: self.truth0.vel.into(),
            },
            observer: ObserverSpec {
                rotation: RotationSpec::Matrix(rows(self.observer0.rhat.matrix())),
                velocity: self.observer0.vhat.into(),
                z: self.observer0.z.into(),
            },
            gains: self.gains,
            horizon: self.horizon,
            dt: self.dt,
            integrator: self.integrator,
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scenario serialization is infallible")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", format!("must be finite and positive, got {}", self.dt)));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return Err(invalid(
                "horizon",
                format!("must be finite and at least dt = {}, got {}", self.dt, self.horizon),
            ));
        }
        if self.horizon / self.dt > 1e8 {
            return Err(invalid("horizon", "more than 1e8 steps requested".into()));
        }
        if !self.inputs.is_finite() {
            return Err(invalid("inputs", "signal coefficients must be finite".into()));
        }
        let finite = |v: &Vector3| v.iter().all(|x| x.is_finite());
        if !finite(&self.truth0.vel) {
            return Err(invalid("truth.velocity", "must be finite".into()));
        }
        if !finite(&self.observer0.vhat) {
            return Err(invalid("observer.velocity", "must be finite".into()));
        }
        if !finite(&self.observer0.z) {
            return Err(invalid("observer.z", "must be finite".into()));
        }
        Ok(())
    }

    /// Number of integration steps; the trajectory has one more row.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt + 1e-9).floor() as usize
    }
}

fn invalid(field: &'static str, message: String) -> ConfigError {
    ConfigError::Invalid { field, message }
}

fn rows(m: &Matrix3) -> [[f64; 3]; 3] {
    [[m[(0, 0)], m[(0, 1)], m[(0, 2)]], [m[(1, 0)], m[(1, 1)], m[(1, 2)]], [m[(2, 0)], m[(2, 1)], m[(2, 2)]]]
}

/// On-disk scenario, schema v1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema: String,
    pub name: String,
    pub inputs: InputSpec,
    #[serde(default)]
    pub truth: TruthSpec,
    pub observer: ObserverSpec,
    #[serde(default)]
    pub gains: Gains,
    pub horizon: f64,
    pub dt: f64,
    #[serde(default)]
    pub integrator: Integrator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSpec {
    Builtin(String),
    Signals(InputSignal),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationSpec {
    Identity,
    Exp([f64; 3]),
    Matrix([[f64; 3]; 3]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSpec {
    pub rotation: RotationSpec,
    #[serde(default)]
    pub velocity: [f64; 3],
}

impl Default for TruthSpec {
    fn default() -> Self {
        Self { rotation: RotationSpec::Identity, velocity: [0.0; 3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSpec {
    pub rotation: RotationSpec,
    pub velocity: [f64; 3],
    #[serde(default)]
    pub z: [f64; 3],
}

impl RotationSpec {
    fn resolve(&self, field: &'static str) -> Result<Rotation, ConfigError> {
        match self {
            RotationSpec::Identity => Ok(Rotation::identity()),
            RotationSpec::Exp(w) => {
                if w.iter().all(|x| x.is_finite()) {
                    Ok(exp_so3(&Vector3::from(*w)))
                } else {
                    Err(invalid(field, "exponential coordinates must be finite".into()))
                }
            }
            RotationSpec::Matrix(r) => {
                let m = Matrix3::from_fn(|i, j| r[i][j]);
                Rotation::new(m).map_err(|e| invalid(field, e.to_string()))
            }
        }
    }
}

pub fn builtin_inputs(name: &str) -> Option<InputSignal> {
    match name {
        "paper2022" => Some(InputSignal::paper2022()),
        _ => None,
    }
}

impl ScenarioFile {
    pub fn resolve(self) -> Result<Scenario, ConfigError> {
        if self.schema != SCHEMA_VERSION {
            return Err(invalid("schema", format!("expected `{SCHEMA_VERSION}`, found `{}`", self.schema)));
        }
        let inputs = match self.inputs {
            InputSpec::Builtin(name) => builtin_inputs(&name).ok_or_else(|| ConfigError::UnknownBuiltin {
                kind: "input signal",
                name,
                available: "paper2022".into(),
            })?,
            InputSpec::Signals(s) => s,
        };
        let scenario = Scenario {
            name: self.name,
            inputs,
            truth0: SystemState::new(self.truth.rotation.resolve("truth.rotation")?, self.truth.velocity.into()),
            observer0: ObserverState::new(
                self.observer.rotation.resolve("observer.rotation")?,
                self.observer.velocity.into(),
                self.observer.z.into(),
            ),
            gains: self.gains,
            horizon: self.horizon,
            dt: self.dt,
            integrator: self.integrator,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const PAPER_JSON: &str = r#"{
        "schema": "v1",
        "name": "paper2022",
        "inputs": {"builtin": "paper2022"},
        "observer": {"rotation": {"exp": [2, -1, 1.5]}, "velocity": [3, -2, 2]},
        "horizon": 15,
        "dt": 0.1
    }"#;

    #[test]
    fn json_with_defaults_matches_builtin() {
        let s = Scenario::from_json_str(PAPER_JSON).unwrap();
        assert_eq!(s, Scenario::paper2022());
        assert_eq!(s.steps(), 150);
    }

    #[test]
    fn round_trip_through_file_format() {
        for (name, _) in BUILTINS {
            let s = Scenario::builtin(name).unwrap();
            let back = Scenario::from_json_str(&s.to_json_string()).unwrap();
            assert_eq!(back.inputs, s.inputs);
            assert_relative_eq!(*back.observer0.rhat.matrix(), *s.observer0.rhat.matrix(), epsilon = 0.0);
            assert_eq!(back.gains, s.gains);
            assert_eq!(back.integrator, s.integrator);
        }
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = Scenario::from_json_str("{\n  \"schema\": \"v1\",\n  \"name\": 3\n}").unwrap_err();
        match err {
            ConfigError::Json { path, line, .. } => {
                assert_eq!(path, "name");
                assert_eq!(line, 3);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn invalid_fields_are_named() {
        let bad_dt = PAPER_JSON.replace("\"dt\": 0.1", "\"dt\": -0.1");
        assert!(matches!(Scenario::from_json_str(&bad_dt), Err(ConfigError::Invalid { field: "dt", .. })));

        let bad_rot = PAPER_JSON.replace("{\"exp\": [2, -1, 1.5]}", "{\"matrix\": [[2,0,0],[0,1,0],[0,0,1]]}");
        assert!(matches!(
            Scenario::from_json_str(&bad_rot),
            Err(ConfigError::Invalid { field: "observer.rotation", .. })
        ));

        let bad_gain = PAPER_JSON.replace("\"horizon\"", "\"gains\": {\"k\": 0, \"c\": 1}, \"horizon\"");
        let err = Scenario::from_json_str(&bad_gain).unwrap_err();
        assert!(matches!(err, ConfigError::Json { ref path, .. } if path == "gains"), "{err}");

        let bad_schema = PAPER_JSON.replace("\"v1\"", "\"v2\"");
        assert!(matches!(Scenario::from_json_str(&bad_schema), Err(ConfigError::Invalid { field: "schema", .. })));

        let unknown = PAPER_JSON.replace("{\"builtin\": \"paper2022\"}", "{\"builtin\": \"nope\"}");
        assert!(matches!(Scenario::from_json_str(&unknown), Err(ConfigError::UnknownBuiltin { .. })));

        let short = PAPER_JSON.replace("\"horizon\": 15", "\"horizon\": 0.01");
        assert!(matches!(Scenario::from_json_str(&short), Err(ConfigError::Invalid { field: "horizon", .. })));
    }

    #[test]
    fn builtins_resolve_and_validate() {
        for (name, _) in BUILTINS {
            let s = Scenario::builtin(name).unwrap();
            assert_eq!(s.name, *name);
            s.validate().unwrap();
        }
        assert!(Scenario::builtin("missing").is_none());
        assert_eq!(Scenario::builtin("paper2022-long").unwrap().steps(), 3000);
    }

    #[test]
    fn load_prefers_builtins() {
        assert_eq!(Scenario::load("paper2022").unwrap(), Scenario::paper2022());
        assert!(matches!(Scenario::load("/nonexistent/file.json"), Err(ConfigError::Io { .. })));
    }
}
