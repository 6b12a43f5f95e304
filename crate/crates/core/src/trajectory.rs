//! Time-indexed closed-loop logs and their CSV encoding.
//!
//! File layout (schema v1):
//!
//! ```text
//! # vaa-trajectory v1
//! t,R00,R01,...,R22,vx,vy,vz,Rh00,...,Rh22,vhx,vhy,vhz,zx,zy,zz,att_err,vel_err,lyap
//! 0,1,0,0,...
//! ```
//!
//! Rotations are flattened row-major. `att_err` is the rotation angle of
//! `R R̂ᵀ` in radians, `vel_err` is `‖v − v̂‖` in m/s and `lyap` is the
//! Lyapunov value of the error state.

use std::fmt::Write as _;
use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lie_groups::{Matrix3, Rotation, Vector3};
use crate::observer::ObserverState;
use crate::vehicle_model::SystemState;

pub const SCHEMA_LINE: &str = "# vaa-trajectory v1";

pub const COLUMNS: [&str; 31] = [
    "t", "R00", "R01", "R02", "R10", "R11", "R12", "R20", "R21", "R22", "vx", "vy", "vz", "Rh00", "Rh01", "Rh02",
    "Rh10", "Rh11", "Rh12", "Rh20", "Rh21", "Rh22", "vhx", "vhy", "vhz", "zx", "zy", "zz", "att_err", "vel_err",
    "lyap",
];

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing or unsupported schema line, expected `{SCHEMA_LINE}`, found `{found}`")]
    Schema { found: String },
    #[error("header mismatch at column {index}: expected `{expected}`, found `{found}`")]
    Header { index: usize, expected: &'static str, found: String },
    #[error("row {row}: expected {} fields, found {found}", COLUMNS.len())]
    FieldCount { row: usize, found: usize },
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a finite number")]
    Field { row: usize, column: &'static str, value: String },
    #[error("row {row}: `{which}` is not a rotation matrix")]
    NotRotation { row: usize, which: &'static str },
    #[error("row {row}: time {t} does not increase strictly")]
    NonMonotonicTime { row: usize, t: f64 },
    #[error("trajectory has no rows")]
    Empty,
}

/// One logged instant of the closed loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub truth: SystemState,
    pub observer: ObserverState,
    /// Rotation angle of `R R̂ᵀ` (rad).
    pub attitude_error: f64,
    /// `‖v − v̂‖` (m/s).
    pub velocity_error: f64,
    pub lyapunov: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TrajectoryRow> {
        self.rows.last()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.t)
    }

    /// Mean sample spacing; `None` for fewer than two rows.
    pub fn sample_dt(&self) -> Option<f64> {
        let (first, last) = (self.rows.first()?, self.rows.last()?);
        (self.rows.len() > 1).then(|| (last.t - first.t) / (self.rows.len() - 1) as f64)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{SCHEMA_LINE}")?;
        writeln!(out, "{}", COLUMNS.join(","))?;
        let mut line = String::with_capacity(512);
        for row in &self.rows {
            line.clear();
            let values = row_values(row);
            for (i, v) in values.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                push_number(&mut line, *v);
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    pub fn read_csv<R: Read>(mut input: R) -> Result<Self, TrajectoryError> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        Self::from_csv_str(&text)
    }

    /// Parses and validates a schema-v1 trajectory.
    pub fn from_csv_str(text: &str) -> Result<Self, TrajectoryError> {
        let (first, body) = text.split_once('\n').unwrap_or((text, ""));
        let first = first.trim_end_matches('\r');
        if first != SCHEMA_LINE {
            return Err(TrajectoryError::Schema { found: first.chars().take(80).collect() });
        }
        let mut reader =
            csv::ReaderBuilder::new().has_headers(true).flexible(true).comment(Some(b'#')).from_reader(body.as_bytes());
        let header = reader.headers()?.clone();
        for (index, expected) in COLUMNS.iter().enumerate() {
            let found = header.get(index).unwrap_or("");
            if found.trim() != *expected {
                return Err(TrajectoryError::Header { index, expected, found: found.to_string() });
            }
        }
        if header.len() != COLUMNS.len() {
            return Err(TrajectoryError::Header {
                index: COLUMNS.len(),
                expected: "<end of header>",
                found: header.get(COLUMNS.len()).unwrap_or("").to_string(),
            });
        }

        let mut rows: Vec<TrajectoryRow> = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() != COLUMNS.len() {
                return Err(TrajectoryError::FieldCount { row, found: record.len() });
            }
            let mut values = [0.0; 31];
            for (i, field) in record.iter().enumerate() {
                values[i] = match field.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => v,
                    _ => {
                        return Err(TrajectoryError::Field {
                            row,
                            column: COLUMNS[i],
                            value: field.chars().take(40).collect(),
                        })
                    }
                };
            }
            let parsed = row_from_values(row, &values)?;
            if let Some(prev) = rows.last() {
                if parsed.t <= prev.t {
                    return Err(TrajectoryError::NonMonotonicTime { row, t: parsed.t });
                }
            }
            rows.push(parsed);
        }
        if rows.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        Ok(Self { rows })
    }
}

fn row_values(row: &TrajectoryRow) -> [f64; 31] {
    let mut v = [0.0; 31];
    v[0] = row.t;
    put_matrix(&mut v[1..10], row.truth.rot.matrix());
    put_vector(&mut v[10..13], &row.truth.vel);
    put_matrix(&mut v[13..22], row.observer.rhat.matrix());
    put_vector(&mut v[22..25], &row.observer.vhat);
    put_vector(&mut v[25..28], &row.observer.z);
    v[28] = row.attitude_error;
    v[29] = row.velocity_error;
    v[30] = row.lyapunov;
    v
}

fn row_from_values(row: usize, v: &[f64; 31]) -> Result<TrajectoryRow, TrajectoryError> {
    let rot = Rotation::new(get_matrix(&v[1..10])).map_err(|_| TrajectoryError::NotRotation { row, which: "R" })?;
    let rhat = Rotation::new(get_matrix(&v[13..22])).map_err(|_| TrajectoryError::NotRotation { row, which: "Rh" })?;
    Ok(TrajectoryRow {
        t: v[0],
        truth: SystemState::new(rot, get_vector(&v[10..13])),
        observer: ObserverState::new(rhat, get_vector(&v[22..25]), get_vector(&v[25..28])),
        attitude_error: v[28],
        velocity_error: v[29],
        lyapunov: v[30],
    })
}

fn put_matrix(dst: &mut [f64], m: &Matrix3) {
    for i in 0..3 {
        for j in 0..3 {
            dst[3 * i + j] = m[(i, j)];
        }
    }
}

fn get_matrix(src: &[f64]) -> Matrix3 {
    Matrix3::from_row_slice(src)
}

fn put_vector(dst: &mut [f64], v: &Vector3) {
    dst.copy_from_slice(v.as_slice());
}

fn get_vector(src: &[f64]) -> Vector3 {
    Vector3::from_row_slice(src)
}

/// Shortest round-trip decimal, switching to exponent form for very small
/// or very large magnitudes.
fn push_number(out: &mut String, v: f64) {
    let a = v.abs();
    if v == 0.0 {
        out.push('0');
    } else if (1e-4..1e15).contains(&a) {
        write!(out, "{v}").unwrap();
    } else {
        write!(out, "{v:e}").unwrap();
    }
}
