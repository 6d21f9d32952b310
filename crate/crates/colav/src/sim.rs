//! Closed-loop simulation: runs a scenario under either the supervised
//! predefined-time guidance law or the velocity-obstacle baseline, records
//! a per-step trace, and reports how the run ended.
//!
//! Step order: the waypoint latch is checked first, then the active
//! algorithm chooses the heading command for the current state, the step is
//! recorded, and finally the ship integrates one step.  Every step
//! therefore appears exactly once in the trace with the command that was
//! applied over it.

use crate::dynamics::rk4_step;
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Vec2};
use crate::risk::fleet_risk_index;
use crate::scenario::Scenario;
use crate::supervisor::{
    guards, supervisor_step, BoxLogEntry, Diagnostics, GuardReport, Mode, SupervisorState,
    SwitchEvent,
};
use crate::vo::{vo_cones, vo_select_heading};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Steering law driving the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Supervised predefined-time guidance (the subject of this crate).
    Proposed,
    /// Velocity-obstacle baseline.
    Vo,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Algorithm::Proposed => write!(f, "proposed"),
            Algorithm::Vo => write!(f, "vo"),
        }
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TerminalStatus {
    /// Entered the waypoint acceptance ball at time `t`.
    Reached { t: f64 },
    /// Ran out the simulation horizon without reaching the waypoint.
    HorizonExpired,
    /// A state component stopped being finite; the trace retains the last
    /// good step.
    Fault { t: f64 },
}

impl TerminalStatus {
    pub fn reached(&self) -> bool {
        matches!(self, TerminalStatus::Reached { .. })
    }
}

/// One recorded simulation step.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub p: Vec2,
    pub psi: f64,
    /// Heading command applied over this step (after clamping).
    pub u: f64,
    pub mode: Mode,
    /// Distance to the nearest obstacle at this instant (infinite when the
    /// scenario has none).
    pub d_min: f64,
    /// Maximum risk index over all tracks.
    pub ri: f64,
    pub guards: GuardReport,
}

/// Full result of one run.
#[derive(Debug, Clone)]
pub struct SimResult {
    pub algorithm: Algorithm,
    pub records: Vec<TraceRecord>,
    pub status: TerminalStatus,
    pub switch_log: Vec<SwitchEvent>,
    pub box_log: Vec<BoxLogEntry>,
    pub diag: Diagnostics,
    /// Steps whose raw command exceeded the bound and was clamped.
    pub saturation_count: u32,
    /// Ship-speed factor actually applied (≠ 1 only after a stall
    /// perturbation).
    pub v_scale: f64,
}

/// Run `scenario` under `algorithm` from start to latch, horizon, or fault.
pub fn simulate(scenario: &Scenario, algorithm: Algorithm) -> SimResult {
    let env = scenario.environment();
    let cfg = &scenario.supervisor;
    let mut params = scenario.params;
    let mut ship = scenario.start;
    let mut state = SupervisorState::new(ship.t, ship.psi);
    let mut records = Vec::new();
    let mut saturation_count = 0u32;
    let mut v_scale = 1.0f64;
    let dt = scenario.dt;
    // Baseline decision state: course order from the last decision time,
    // expressed as an offset relative to the bearing to the goal so that a
    // zero-offset (cruise) order keeps tracking the goal between decisions.
    let mut vo_hold: Option<(f64, f64)> = None;

    let status = loop {
        if ship.p.dist(scenario.waypoint) <= cfg.guidance.delta {
            break TerminalStatus::Reached { t: ship.t };
        }
        if ship.t >= scenario.horizon {
            break TerminalStatus::HorizonExpired;
        }

        let (u_raw, report) = match algorithm {
            Algorithm::Proposed => supervisor_step(&ship, &env, cfg, &params, dt, &mut state),
            Algorithm::Vo => {
                let desired = crate::geometry::bearing(ship.p, scenario.waypoint);
                let u = match vo_hold {
                    Some((t_plan, offset)) if ship.t - t_plan < crate::vo::REPLAN_PERIOD => {
                        wrap_angle(desired + offset)
                    }
                    _ => {
                        let cones = vo_cones(ship.p, &env.tracks, env.c_s, ship.t);
                        let u = vo_select_heading(
                            ship.p,
                            params.v,
                            scenario.waypoint,
                            &cones,
                            env.c_s,
                            crate::vo::CONFLICT_HORIZON,
                            cfg.side,
                        );
                        vo_hold = Some((ship.t, wrap_angle(u - desired)));
                        u
                    }
                };
                // Guard truth is still reported for the trace even though
                // the baseline ignores it.
                let report = guards(&ship, &env, &state, cfg, &params);
                (u, report)
            }
        };
        let u = u_raw.clamp(-params.m, params.m);
        if u != u_raw {
            saturation_count += 1;
        }

        let d_min = env
            .tracks
            .iter()
            .map(|tr| ship.p.dist(tr.position(ship.t)))
            .fold(f64::INFINITY, f64::min);
        records.push(TraceRecord {
            t: ship.t,
            p: ship.p,
            psi: ship.psi,
            u,
            mode: state.mode,
            d_min,
            ri: report.ri,
            guards: report,
        });

        if state.stall_perturb_request && v_scale == 1.0 {
            v_scale = 1.01;
            params = params.with_speed(scenario.params.v * v_scale);
            state.stall_perturb_request = false;
        }

        let next = rk4_step(&ship, u, dt, &params);
        if !next.is_finite() {
            break TerminalStatus::Fault { t: ship.t };
        }
        ship = next;
    };

    SimResult {
        algorithm,
        records,
        status,
        switch_log: state.switch_log,
        box_log: state.box_log,
        diag: state.diag,
        saturation_count,
        v_scale,
    }
}

/// Recompute the fleet risk profile of a finished trace (diagnostic use).
pub fn trace_risk_profile(result: &SimResult, scenario: &Scenario) -> Vec<f64> {
    result
        .records
        .iter()
        .map(|r| {
            fleet_risk_index(
                r.p,
                r.psi,
                scenario.params.v * result.v_scale,
                &scenario.tracks,
                r.t,
                scenario.supervisor.tcpa_convention,
                &scenario.supervisor.risk,
            )
        })
        .collect()
}

pub const TRACE_HEADER: &str = "t,x,y,psi,u,mode,d_min,ri,g11,g12_or_g22,l1,l2,g23";

fn fmt_bool(b: bool) -> u8 {
    u8::from(b)
}

/// Write the run as a deterministic fixed-precision delimited trace.
pub fn write_trace<W: Write>(w: &mut W, result: &SimResult) -> std::io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for r in &result.records {
        writeln!(
            w,
            "{:.3},{:.6},{:.6},{:.9},{:.9},{},{:.6},{:.6},{},{},{},{},{}",
            r.t,
            r.p.x,
            r.p.y,
            r.psi,
            r.u,
            r.mode,
            if r.d_min.is_finite() { r.d_min } else { -1.0 },
            r.ri,
            fmt_bool(r.guards.g11),
            fmt_bool(r.guards.g12_or_g22),
            fmt_bool(r.guards.l1),
            fmt_bool(r.guards.l2),
            fmt_bool(r.guards.g23),
        )?;
    }
    Ok(())
}

/// Minimal parsed trace row (the columns consumers need back).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub p: Vec2,
    pub psi: f64,
    pub u: f64,
    pub mode: Mode,
}

/// Read back a trace written by [`write_trace`].
pub fn read_trace<R: BufRead>(r: R) -> Result<Vec<TraceRow>> {
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line != TRACE_HEADER {
                return Err(Error::Parse(format!("unexpected trace header: {line:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 6 {
            return Err(Error::Parse(format!("short trace row {}: {line:?}", i + 1)));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))
        };
        let mode = match fields[5] {
            "S1" => Mode::S1,
            "S2" => Mode::S2,
            "S3" => Mode::S3,
            other => return Err(Error::Parse(format!("unknown mode {other:?}"))),
        };
        rows.push(TraceRow {
            t: num(fields[0])?,
            p: Vec2::new(num(fields[1])?, num(fields[2])?),
            psi: num(fields[3])?,
            u: num(fields[4])?,
            mode,
        });
    }
    Ok(rows)
}

/// Largest absolute wrapped heading-command step in a run (rad); useful as
/// a smoothness indicator independent of the metrics module.
pub fn max_command_step(result: &SimResult) -> f64 {
    result
        .records
        .windows(2)
        .map(|w| wrap_angle(w[1].u - w[0].u).abs())
        .fold(0.0, f64::max)
}
