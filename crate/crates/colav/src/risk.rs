//! Collision-risk assessment: closest-point-of-approach quantities between
//! the own ship and a constant-velocity track, quadratic fuzzy membership
//! functions, and the three-channel fuzzy risk index.
//!
//! With R = p − p_m (obstacle-to-ship offset) and Vr = v_ship − v_obstacle:
//!   α    = arccos(Vr · R / (‖Vr‖ ‖R‖)),
//!   DCPA = ‖R‖ sin α,
//! and TCPA by one of two conventions (see [`TcpaConvention`]).  The risk
//! index averages fuzzy memberships of DCPA, TCPA, and the current distance;
//! a receding track (R · Vr ≥ 0, range increasing) carries no risk.

use crate::dynamics::ObstacleTrack;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use serde::{Deserialize, Serialize};

/// Time-to-CPA convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TcpaConvention {
    /// TCPA = ‖R‖ / ‖Vr‖ (range over closing speed; always ≥ 0).
    RangeOverClosing,
    /// TCPA = −R · Vr / ‖Vr‖² (the minimizer of ‖R + Vr t‖; negative when
    /// the closest approach lies in the past).
    ProjectedMin,
}

/// Closest-point-of-approach summary for one ship/track pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpaResult {
    /// Distance at closest approach, m (‖R‖ sin α; orientation-independent).
    pub dcpa: f64,
    /// Time to closest approach, s, per the requested convention.
    pub tcpa: f64,
    /// Angle between the relative velocity and the obstacle-to-ship offset.
    pub alpha: f64,
    /// Obstacle position propagated to the (convention's) TCPA, world metres.
    pub p_cpa: Vec2,
    /// Range is non-decreasing: the track poses no closing threat.
    pub receding: bool,
}

/// Obstacle-to-ship offset R and relative velocity Vr at time `t`.
pub fn relative_state(p: Vec2, psi: f64, v: f64, track: &ObstacleTrack, t: f64) -> (Vec2, Vec2) {
    let r = p - track.position(t);
    let vr = Vec2::from_angle(psi) * v - track.velocity();
    (r, vr)
}

/// Closest-point-of-approach quantities for the ship (`p`, `psi`, speed `v`)
/// against `track` at time `t`.
///
/// Errors with [`Error::NoRelativeMotion`] when ‖Vr‖ is numerically zero
/// (identical velocities: the geometry never changes, CPA is undefined).
/// A coincident position (‖R‖ ≈ 0) returns DCPA = 0 at TCPA = 0.
pub fn cpa(
    p: Vec2,
    psi: f64,
    v: f64,
    track: &ObstacleTrack,
    t: f64,
    convention: TcpaConvention,
) -> Result<CpaResult> {
    let (r, vr) = relative_state(p, psi, v, track, t);
    let vr_norm = vr.norm();
    if vr_norm < 1e-12 {
        return Err(Error::NoRelativeMotion);
    }
    let r_norm = r.norm();
    if r_norm < 1e-9 {
        return Ok(CpaResult {
            dcpa: 0.0,
            tcpa: 0.0,
            alpha: 0.0,
            p_cpa: track.position(t),
            receding: false,
        });
    }
    let cos_alpha = (vr.dot(r) / (vr_norm * r_norm)).clamp(-1.0, 1.0);
    let alpha = cos_alpha.acos();
    let dcpa = r_norm * alpha.sin();
    let tcpa = match convention {
        TcpaConvention::RangeOverClosing => r_norm / vr_norm,
        TcpaConvention::ProjectedMin => -r.dot(vr) / (vr_norm * vr_norm),
    };
    Ok(CpaResult {
        dcpa,
        tcpa,
        alpha,
        p_cpa: track.position(t) + track.velocity() * tcpa,
        receding: r.dot(vr) >= 0.0,
    })
}

/// Quadratic fuzzy membership: 1 below `b1`, 0 above `b2`, and the two
/// quadratic arcs
///   F(z) = 1 − 2((z − b1)/(b2 − b1))²  for b1 ≤ z ≤ mid,
///   F(z) = 2((b2 − z)/(b2 − b1))²      for mid ≤ z ≤ b2,
/// which meet at F(mid) = ½ and are C⁰ at the breakpoints.
pub fn fuzzy_membership(z: f64, b1: f64, b2: f64) -> f64 {
    debug_assert!(b1 < b2, "fuzzy breakpoints must satisfy b1 < b2");
    if z <= b1 {
        return 1.0;
    }
    if z >= b2 {
        return 0.0;
    }
    let w = b2 - b1;
    let mid = 0.5 * (b1 + b2);
    if z <= mid {
        let q = (z - b1) / w;
        1.0 - 2.0 * q * q
    } else {
        let q = (b2 - z) / w;
        2.0 * q * q
    }
}

/// Fuzzy breakpoints (b1, b2) for the three risk channels plus the trigger
/// threshold K.  All SI: metres for DCPA/distance, seconds for TCPA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskParams {
    pub dcpa: (f64, f64),
    pub tcpa: (f64, f64),
    pub distance: (f64, f64),
    /// Risk-index trigger threshold K (dimensionless).
    pub threshold: f64,
}

impl RiskParams {
    pub fn validate(&self) -> Result<()> {
        for (name, (b1, b2)) in
            [("dcpa", self.dcpa), ("tcpa", self.tcpa), ("distance", self.distance)]
        {
            if !(b1 < b2) || !b1.is_finite() || !b2.is_finite() || b1 < 0.0 {
                return Err(Error::InfeasibleConstraint(format!(
                    "risk channel {name}: breakpoints must satisfy 0 ≤ b1 < b2 (got {b1}, {b2})"
                )));
            }
        }
        if !(0.0 < self.threshold && self.threshold <= 1.0) {
            return Err(Error::InfeasibleConstraint(format!(
                "risk threshold must lie in (0, 1] (got {})",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Three-channel fuzzy risk index in [0, 1]: the mean of the DCPA, TCPA and
/// distance memberships.
///
/// A receding track scores 0 (no closing threat).  When CPA quantities are
/// unavailable (`None`, e.g. zero relative velocity), the index falls back
/// to the distance channel alone.
pub fn risk_index(cpa: Option<&CpaResult>, dist: f64, params: &RiskParams) -> f64 {
    match cpa {
        Some(c) if c.receding => 0.0,
        Some(c) => {
            let f_dcpa = fuzzy_membership(c.dcpa, params.dcpa.0, params.dcpa.1);
            let f_tcpa = fuzzy_membership(c.tcpa.abs(), params.tcpa.0, params.tcpa.1);
            let f_dist = fuzzy_membership(dist, params.distance.0, params.distance.1);
            (f_dcpa + f_tcpa + f_dist) / 3.0
        }
        None => fuzzy_membership(dist, params.distance.0, params.distance.1),
    }
}

/// Risk trigger: the index reached the threshold K.
pub fn risk_trigger(ri: f64, k: f64) -> bool {
    ri >= k
}

/// Risk index of one track at time `t` (receding → 0, no relative motion →
/// distance channel only).
pub fn track_risk_index(
    p: Vec2,
    psi: f64,
    v: f64,
    track: &ObstacleTrack,
    t: f64,
    convention: TcpaConvention,
    params: &RiskParams,
) -> f64 {
    let dist = p.dist(track.position(t));
    match cpa(p, psi, v, track, t, convention) {
        Ok(c) => risk_index(Some(&c), dist, params),
        Err(_) => risk_index(None, dist, params),
    }
}

/// Maximum risk index over a set of tracks (0 when the set is empty).
pub fn fleet_risk_index(
    p: Vec2,
    psi: f64,
    v: f64,
    tracks: &[ObstacleTrack],
    t: f64,
    convention: TcpaConvention,
    params: &RiskParams,
) -> f64 {
    tracks
        .iter()
        .map(|tr| track_risk_index(p, psi, v, tr, t, convention, params))
        .fold(0.0, f64::max)
}
