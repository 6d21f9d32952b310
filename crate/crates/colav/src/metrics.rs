//! Trajectory metrics and benchmark comparison tables.
//!
//! Six scalar metrics summarize a run: closest obstacle approach, worst
//! heading-tracking error, largest single command step, integrated
//! command-rate variation, reach time, and path length, plus the maximum
//! geometric cross-track error from the start→waypoint line as an
//! auxiliary column.  All metrics are evaluated on the recorded integrator
//! grid with no interpolation, so they are exact functions of the trace.

use serde::Serialize;

use crate::geometry::{wrap_angle, Vec2};
use crate::scenario::Scenario;
use crate::sim::SimResult;

/// Scalar summary of one simulation run.
///
/// All angles are radians, distances metres, times seconds.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    /// J1: minimum ship–obstacle distance over the whole run, m.  `None`
    /// when the scenario has no obstacles.
    pub j1_min_distance_m: Option<f64>,
    /// J2: maximum |ψ − u| heading-command tracking error, rad.
    pub j2_max_heading_error_rad: f64,
    /// J3: largest command change between consecutive steps, rad.
    pub j3_max_command_step_rad: f64,
    /// J4: integrated variation of the command rate, Σ|Δu̇|·dt with u̇ by
    /// first differences.
    pub j4_command_rate_variation: f64,
    /// J5: time of waypoint capture, s; the horizon when not reached (see
    /// [`MetricsReport::reached`]).
    pub j5_reach_time_s: f64,
    /// Whether the δ-ball was actually entered; when false, J5 merely
    /// reports the horizon.
    pub reached: bool,
    /// J6: path length Σ‖Δp‖ over the recorded samples, m.
    pub j6_path_length_m: f64,
    /// Maximum geometric distance from the straight start→waypoint line, m.
    pub max_cross_track_error_m: f64,
    /// True when the run never came closer than the safe distance (runs
    /// without obstacles pass vacuously).
    pub safety_pass: bool,
    /// Steps whose raw command exceeded the actuator bound.
    pub saturation_count: u32,
}

/// Distance from `p` to the infinite line through `a` and `b`; distance to
/// `a` when the two coincide.
fn point_line_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len = ab.norm();
    if len < 1e-12 {
        return p.dist(a);
    }
    let ap = p - a;
    (ab.x * ap.y - ab.y * ap.x).abs() / len
}

/// Compute the metric summary of a finished run.
///
/// J1 is the brute-force minimum over every recorded sample and every
/// obstacle track (positions recomputed analytically from the constant
/// track velocities), so it equals the true grid minimum exactly.
pub fn metrics(result: &SimResult, scenario: &Scenario) -> MetricsReport {
    let records = &result.records;

    let mut j1: Option<f64> = None;
    if !scenario.tracks.is_empty() {
        let mut best = f64::INFINITY;
        for r in records {
            for track in &scenario.tracks {
                best = best.min(r.p.dist(track.position(r.t)));
            }
        }
        j1 = Some(best);
    }

    let mut j2 = 0.0f64;
    let mut j6 = 0.0f64;
    let mut xte = 0.0f64;
    for (i, r) in records.iter().enumerate() {
        j2 = j2.max(wrap_angle(r.psi - r.u).abs());
        xte = xte.max(point_line_distance(r.p, scenario.start.p, scenario.waypoint));
        if i > 0 {
            j6 += r.p.dist(records[i - 1].p);
        }
    }

    let mut j3 = 0.0f64;
    let mut j4 = 0.0f64;
    if records.len() >= 2 {
        let dt = scenario.dt;
        let rates: Vec<f64> = records
            .windows(2)
            .map(|w| wrap_angle(w[1].u - w[0].u) / dt)
            .collect();
        for w in rates.windows(2) {
            j4 += (w[1] - w[0]).abs() * dt;
        }
        for r in &rates {
            j3 = j3.max((r * dt).abs());
        }
    }

    let reached = result.status.reached();
    let j5 = match result.status {
        crate::sim::TerminalStatus::Reached { t } => t,
        _ => scenario.horizon,
    };

    let safety_pass = match j1 {
        Some(d) => d >= scenario.c_s,
        None => true,
    };

    MetricsReport {
        j1_min_distance_m: j1,
        j2_max_heading_error_rad: j2,
        j3_max_command_step_rad: j3,
        j4_command_rate_variation: j4,
        j5_reach_time_s: j5,
        reached,
        j6_path_length_m: j6,
        max_cross_track_error_m: xte,
        safety_pass,
        saturation_count: result.saturation_count,
    }
}

/// One row of a comparison table: a named case run under one algorithm,
/// possibly with no result (the algorithm was not run for that case).
#[derive(Debug, Clone, Serialize)]
pub struct CaseOutcome {
    pub case: String,
    pub algorithm: String,
    pub report: Option<MetricsReport>,
}

/// Benchmark comparison table, one row per (case, algorithm) pair.
#[derive(Debug, Clone, Serialize, Default)]
pub struct CompareTable {
    pub rows: Vec<CaseOutcome>,
}

/// Column headers of [`CompareTable::to_delimited`].
pub const COMPARE_HEADER: &str =
    "case,algorithm,j1_min_distance_m,j2_max_heading_error_rad,j3_max_command_step_rad,\
     j4_command_rate_variation,j5_reach_time_s,reached,j6_path_length_m,\
     max_cross_track_error_m,safety,saturation_count";

impl CompareTable {
    pub fn push(&mut self, case: impl Into<String>, algorithm: impl Into<String>, report: Option<MetricsReport>) {
        self.rows.push(CaseOutcome { case: case.into(), algorithm: algorithm.into(), report });
    }

    /// Render as delimited text with a header row.  Absent results render
    /// as `-` in every metric column; J1 of an obstacle-free run likewise.
    pub fn to_delimited(&self) -> String {
        let mut out = String::from(COMPARE_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.case);
            out.push(',');
            out.push_str(&row.algorithm);
            match &row.report {
                None => {
                    for _ in 0..10 {
                        out.push_str(",-");
                    }
                }
                Some(r) => {
                    match r.j1_min_distance_m {
                        Some(d) => out.push_str(&format!(",{d:.6}")),
                        None => out.push_str(",-"),
                    }
                    out.push_str(&format!(
                        ",{:.9},{:.9},{:.9},{:.3},{},{:.6},{:.6},{},{}",
                        r.j2_max_heading_error_rad,
                        r.j3_max_command_step_rad,
                        r.j4_command_rate_variation,
                        r.j5_reach_time_s,
                        if r.reached { "yes" } else { "no" },
                        r.j6_path_length_m,
                        r.max_cross_track_error_m,
                        if r.safety_pass { "pass" } else { "FAIL" },
                        r.saturation_count,
                    ));
                }
            }
            out.push('\n');
        }
        out
    }

    /// Render as JSON with identical content to the delimited form.
    pub fn to_json(&self) -> String {
        // Serialization of these value types cannot fail.
        serde_json::to_string_pretty(self).expect("compare table serializes")
    }
}
