//! JSON reports written by the `analyze` and `montecarlo` subcommands.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    classify_convergence, filtered_pe_check, gram_lambda2, synchrony_residual, AnalysisError, Basin,
    ConvergenceVerdict, PEConfig, PEReport, SynchronyMode, Thresholds,
};
use crate::lie_groups::{GroupElement, Rotation};
use crate::simulator::{MonteCarloConfig, MonteCarloRun, Scenario};
use crate::trajectory::TrajectoryRecord;

pub const REPORT_SCHEMA: &str = "vaa-report v1";

/// Horizon and step of the zero-correction synchrony check in reports.
pub const SYNCHRONY_HORIZON: f64 = 10.0;
pub const SYNCHRONY_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSummary {
    pub initial: f64,
    pub terminal: f64,
    /// Largest single-row increase of the logged Lyapunov value.
    pub max_increase: f64,
    /// First logged time at which the attitude error drops below 10°, if any.
    pub t_attitude_below_10deg: Option<f64>,
    /// First logged time at which the attitude error drops below 1°, if any.
    pub t_attitude_below_1deg: Option<f64>,
}

impl LyapunovSummary {
    pub fn from_record(record: &TrajectoryRecord) -> Option<Self> {
        let first = record.rows.first()?;
        let last = record.last()?;
        let max_increase =
            record.rows.windows(2).map(|w| w[1].lyapunov - w[0].lyapunov).fold(f64::NEG_INFINITY, f64::max).max(0.0);
        let first_below = |deg: f64| record.rows.iter().find(|r| r.attitude_error < deg.to_radians()).map(|r| r.t);
        Some(Self {
            initial: first.lyapunov,
            terminal: last.lyapunov,
            max_increase,
            t_attitude_below_10deg: first_below(10.0),
            t_attitude_below_1deg: first_below(1.0),
        })
    }
}

/// Scenario-dependent parts of an analysis report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioAnalysis {
    pub scenario: String,
    /// Excitation of the inertial specific force `R a`.
    pub pe_inertial_accel: PEReport,
    /// Excitation of `R a` after the filter `ẋ = R a − k x`.
    pub pe_filtered_accel: PEReport,
    /// `max_t ‖Ē(t) − Ē(0)‖_F` with corrections disabled.
    pub synchrony_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema: String,
    pub rows: usize,
    pub verdict: ConvergenceVerdict,
    pub thresholds: Thresholds,
    /// Excitation of `v − z` along the logged trajectory.
    pub pe_velocity_residual: PEReport,
    pub lyapunov: LyapunovSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioAnalysis>,
}

/// Builds the report for a logged run. Scenario-dependent metrics are
/// included when the generating scenario is known.
pub fn analyze_record(
    record: &TrajectoryRecord,
    window: f64,
    scenario: Option<&Scenario>,
    thresholds: &Thresholds,
) -> Result<AnalysisReport, AnalysisError> {
    let verdict = classify_convergence(record, thresholds)?;
    let dt = record.sample_dt().ok_or(AnalysisError::EmptySignal)?;
    let config = PEConfig::new(window, dt)?;
    let residual: Vec<_> = record.rows.iter().map(|r| r.truth.vel - r.observer.z).collect();
    let pe_velocity_residual = gram_lambda2(&residual, &config)?;
    let lyapunov = LyapunovSummary::from_record(record).ok_or(AnalysisError::EmptyRecord)?;

    let scenario = match scenario {
        None => None,
        Some(s) => {
            let ra: Vec<_> = record.rows.iter().map(|r| r.truth.rot * s.inputs.imu(r.t).accel).collect();
            let zhat0 = GroupElement::new(Rotation::identity(), s.observer0.z);
            Some(ScenarioAnalysis {
                scenario: s.name.clone(),
                pe_inertial_accel: gram_lambda2(&ra, &config)?,
                pe_filtered_accel: filtered_pe_check(&ra, s.gains.k(), &config)?,
                synchrony_residual: synchrony_residual(
                    &s.inputs,
                    &s.truth0.as_group(),
                    &GroupElement::new(s.observer0.rhat, s.observer0.vhat),
                    &zhat0,
                    SYNCHRONY_HORIZON.min(s.horizon),
                    SYNCHRONY_STEP,
                    SynchronyMode::ZeroCorrection,
                ),
            })
        }
    };

    Ok(AnalysisReport {
        schema: REPORT_SCHEMA.to_string(),
        rows: record.len(),
        verdict,
        thresholds: *thresholds,
        pe_velocity_residual,
        lyapunov,
        scenario,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub schema: String,
    pub scenario: String,
    pub config: MonteCarloConfig,
    pub stable_identity: usize,
    pub near_unstable_set: usize,
    pub diverged: usize,
    pub runs: Vec<MonteCarloRun>,
}

impl MonteCarloReport {
    pub fn new(scenario: &Scenario, config: MonteCarloConfig, runs: Vec<MonteCarloRun>) -> Self {
        let count = |b: Basin| runs.iter().filter(|r| r.verdict.basin == b).count();
        Self {
            schema: REPORT_SCHEMA.to_string(),
            scenario: scenario.name.clone(),
            config,
            stable_identity: count(Basin::StableIdentity),
            near_unstable_set: count(Basin::NearUnstableSet),
            diverged: count(Basin::Diverged),
            runs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::run;

    #[test]
    fn reference_run_report() {
        let s = Scenario::paper2022();
        let rec = run(&s).unwrap();
        let report = analyze_record(&rec, 2.0, Some(&s), &Thresholds::default()).unwrap();
        assert_eq!(report.rows, 151);
        assert!(report.pe_velocity_residual.min_lambda2 > 0.0);
        let sa = report.scenario.as_ref().unwrap();
        assert!(sa.synchrony_residual < 1e-6);
        assert!(sa.pe_filtered_accel.min_lambda2 > 0.0);
        assert!(report.lyapunov.terminal < report.lyapunov.initial);
        let json = serde_json::to_string(&report).unwrap();
        let back: AnalysisReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.rows, report.rows);
    }

    #[test]
    fn short_record_rejects_long_window() {
        let s = Scenario { horizon: 0.5, ..Scenario::paper2022() };
        let rec = run(&s).unwrap();
        assert!(matches!(
            analyze_record(&rec, 2.0, None, &Thresholds::default()),
            Err(AnalysisError::WindowTooLong { .. })
        ));
    }
}
