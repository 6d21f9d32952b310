//! Predefined-time line-of-sight guidance: desired heading and heading rate
//! toward a target point, the heading-command law that makes the heading
//! error follow the predefined-time flow, and the feasibility bound on the
//! waypoint acceptance radius.
//!
//! Closed loop: with e = wrap(ψ − ψ_dg) and command
//!   u = ψ̇_dg / a + ψ − η (1 − e^{−e}) / (a (t0 + t_p − t)),
//! the error obeys ė = −η (1 − e^{−e}) / (t0 + t_p − t), which converges to
//! e = 0 no later than t0 + t_p regardless of the initial error.

use crate::dynamics::ShipParams;
use crate::error::{Error, Result};
use crate::geometry::{bearing, wrap_angle, Vec2};
use serde::{Deserialize, Serialize};

/// Guidance tuning: transient deadline, convergence gain, acceptance radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceConfig {
    /// Predefined convergence time t_p, s (> 0).
    pub t_p: f64,
    /// Convergence gain η (> 1).
    pub eta: f64,
    /// Waypoint acceptance radius δ, m (> 0).
    pub delta: f64,
}

impl GuidanceConfig {
    /// Basic construction: validates signs and η > 1 but not the acceptance
    /// radius bound (see [`GuidanceConfig::feasible`]).
    pub fn new(t_p: f64, eta: f64, delta: f64) -> Result<Self> {
        if !(t_p > 0.0) {
            return Err(Error::InfeasibleConstraint(format!("t_p must be > 0 (got {t_p})")));
        }
        if !(eta > 1.0) {
            return Err(Error::InfeasibleConstraint(format!(
                "predefined-time convergence requires eta > 1 (got {eta})"
            )));
        }
        if !(delta > 0.0) {
            return Err(Error::InfeasibleConstraint(format!("delta must be > 0 (got {delta})")));
        }
        Ok(GuidanceConfig { t_p, eta, delta })
    }

    /// Construction that additionally enforces δ ≥ δ_min from
    /// [`min_terminal_radius`] with the worst-case heading error `e_max`
    /// (use π when nothing tighter is known).
    pub fn feasible(t_p: f64, eta: f64, delta: f64, params: &ShipParams, e_max: f64) -> Result<Self> {
        let cfg = GuidanceConfig::new(t_p, eta, delta)?;
        let dmin = min_terminal_radius(params, eta, t_p, e_max)?;
        if delta < dmin {
            return Err(Error::InfeasibleConstraint(format!(
                "acceptance radius delta = {delta:.6} m is below the feasibility bound \
                 delta_min = {dmin:.6} m (v={}, a={}, m={}, eta={eta}, t_p={t_p}, e_max={e_max})",
                params.v, params.a, params.m
            )));
        }
        Ok(cfg)
    }
}

/// Bearing to the target: the desired heading of the line-of-sight law.
/// Errors when the ship sits on the target (bearing undefined).
pub fn desired_heading(p: Vec2, target: Vec2) -> Result<f64> {
    if p.dist(target) < 1e-9 {
        return Err(Error::DegenerateGeometry(
            "desired heading undefined at zero distance to target".into(),
        ));
    }
    Ok(bearing(p, target))
}

/// Time derivative of the desired heading along the ship motion:
///   ψ̇_dg = v (−Δx sin ψ + Δy cos ψ) / ‖Δ‖²,  Δ = target − p.
/// Errors when the ship is (numerically) on the target.
pub fn desired_heading_rate(p: Vec2, psi: f64, target: Vec2, v: f64) -> Result<f64> {
    let d = target - p;
    let d2 = d.norm_sq();
    if d2 < 1e-18 {
        return Err(Error::Singularity(
            "desired-heading rate singular at zero distance to target".into(),
        ));
    }
    let (s, c) = psi.sin_cos();
    Ok(v * (-d.x * s + d.y * c) / d2)
}

/// Scalar error flow the controller enforces on the heading error:
///   ẋ = −η (1 − e^{−x}) / (t_p − t)  for t < t_p,   0 afterwards.
/// Any initial error driven by this flow reaches zero exactly at t = t_p
/// regardless of magnitude; the time-varying gain blows up toward the
/// deadline while the state shrinks faster, keeping the product bounded.
pub fn predefined_time_flow(x: f64, t: f64, t_p: f64, eta: f64) -> f64 {
    if t >= t_p {
        return 0.0;
    }
    let one_minus_exp_neg = -(-x).exp_m1(); // 1 − e^{−x}
    -eta * one_minus_exp_neg / (t_p - t)
}

/// Predefined-time heading command toward `target`.
///
/// The convergence window starts at `t0` (reset on every supervisor mode
/// entry) and is considered active while t − t0 < t_p − dt: the final
/// integrator step before the deadline holds the heading instead of
/// evaluating the singular denominator.  After the window the command holds
/// the current heading, which continues the pursuit because the heading
/// error is already zero and stays zero on the straight line of sight.
#[allow(clippy::too_many_arguments)]
pub fn predefined_time_control(
    p: Vec2,
    psi: f64,
    target: Vec2,
    t: f64,
    t0: f64,
    cfg: &GuidanceConfig,
    params: &ShipParams,
    dt: f64,
) -> Result<f64> {
    if t - t0 < cfg.t_p - dt {
        let psi_dg = desired_heading(p, target)?;
        let rate = desired_heading_rate(p, psi, target, params.v)?;
        let e = wrap_angle(psi - psi_dg);
        let one_minus_exp_neg = -(-e).exp_m1(); // 1 − e^{−e}
        let remaining = t0 + cfg.t_p - t;
        Ok(rate / params.a + psi - cfg.eta * one_minus_exp_neg / (params.a * remaining))
    } else {
        Ok(psi)
    }
}

/// Feasibility bound on the acceptance radius:
///   δ_min = 2 v / (a m − a π − η (e^{e_max} − 1) / t_p),
/// where e_max ≥ 0 bounds the worst-case |heading error| the controller may
/// be asked to remove (π when nothing tighter is known).  The error map
/// 1 − e^{−e} is asymmetric: over e ∈ [−e_max, e_max] its magnitude peaks at
/// e = −e_max with value e^{e_max} − 1, so that branch sets the command
/// budget.  Errors when the denominator is not positive — the actuator
/// cannot support the requested transient.
pub fn min_terminal_radius(params: &ShipParams, eta: f64, t_p: f64, e_max: f64) -> Result<f64> {
    if !(e_max >= 0.0) {
        return Err(Error::InfeasibleConstraint(format!("e_max must be >= 0 (got {e_max})")));
    }
    let flow_budget = eta * e_max.exp_m1() / t_p;
    let denom = params.a * params.m - params.a * std::f64::consts::PI - flow_budget;
    if !(denom > 0.0) {
        return Err(Error::InfeasibleConstraint(format!(
            "terminal-radius bound undefined: a·m − a·π − η(e^(e_max) − 1)/t_p = {denom:.6} ≤ 0 \
             (a={}, m={}, eta={eta}, t_p={t_p}, e_max={e_max})",
            params.a, params.m
        )));
    }
    Ok(2.0 * params.v / denom)
}

/// Reach-time bound for a pure waypoint leg: the heading transient t_p plus
/// the straight-line travel time d / v.
pub fn reach_time_bound(d: f64, v: f64, t_p: f64) -> f64 {
    t_p + d / v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{rk4_step, ShipState};

    fn params() -> ShipParams {
        ShipParams::from_command_bound(12.0, 1.67, 18.0).unwrap()
    }

    #[test]
    fn flow_signs_drive_error_to_zero_and_stop_at_deadline() {
        // Positive error decays, negative error grows toward zero, zero is
        // an equilibrium, and the flow switches off at the deadline.
        assert!(predefined_time_flow(1.0, 0.0, 1.0, 3.5) < 0.0);
        assert!(predefined_time_flow(-1.0, 0.0, 1.0, 3.5) > 0.0);
        assert_eq!(predefined_time_flow(0.0, 0.3, 1.0, 3.5), 0.0);
        assert_eq!(predefined_time_flow(2.0, 1.0, 1.0, 3.5), 0.0);
        // Hand value: x=1, t=0, t_p=2, η=1.5 → −1.5·(1−e^{−1})/2.
        let expect = -1.5 * (1.0 - (-1.0f64).exp()) / 2.0;
        assert!((predefined_time_flow(1.0, 0.0, 2.0, 1.5) - expect).abs() < 1e-15);
    }

    #[test]
    fn desired_heading_matches_bearing() {
        let h = desired_heading(Vec2::ZERO, Vec2::new(10.0, 9.0)).unwrap();
        assert!((h - 0.732_815_101_8).abs() < 1e-9);
        assert!(desired_heading(Vec2::ZERO, Vec2::new(1e-12, 0.0)).is_err());
    }

    #[test]
    fn heading_rate_hand_value_and_singularity() {
        // p=(0,0), ψ=0, v=12, target (0,−10):
        // ψ̇_dg = 12·(−0·0 + (−10)·1)/100 = −1.2 rad/s.
        let r = desired_heading_rate(Vec2::ZERO, 0.0, Vec2::new(0.0, -10.0), 12.0).unwrap();
        assert!((r + 1.2).abs() < 1e-12);
        // Moving straight at the target: rate is zero.
        let r0 = desired_heading_rate(Vec2::ZERO, 0.0, Vec2::new(50.0, 0.0), 12.0).unwrap();
        assert!(r0.abs() < 1e-15);
        assert!(desired_heading_rate(Vec2::ZERO, 0.0, Vec2::new(1e-10, 0.0), 12.0).is_err());
    }

    #[test]
    fn control_holds_heading_after_window() {
        let cfg = GuidanceConfig::new(1.0, 3.5, 1.5).unwrap();
        let p = params();
        let u = predefined_time_control(
            Vec2::ZERO,
            0.37,
            Vec2::new(100.0, 0.0),
            5.0,
            0.0,
            &cfg,
            &p,
            0.01,
        )
        .unwrap();
        assert_eq!(u, 0.37);
        // Last step before the deadline also holds (floor convention).
        let u2 = predefined_time_control(
            Vec2::ZERO,
            0.37,
            Vec2::new(100.0, 0.0),
            0.995,
            0.0,
            &cfg,
            &p,
            0.01,
        )
        .unwrap();
        assert_eq!(u2, 0.37);
    }

    #[test]
    fn closed_loop_kills_heading_error_within_t_p() {
        // Ship starting 90° off the line of sight to a far target must track
        // the desired heading to well under a millirad by t_p.
        let prm = params();
        let cfg = GuidanceConfig::new(1.0, 3.5, 1.5).unwrap();
        let target = Vec2::new(1000.0, 0.0);
        let dt = 1e-3;
        let mut s = ShipState::new(Vec2::ZERO, std::f64::consts::FRAC_PI_2, 0.0);
        let mut max_u = 0.0f64;
        while s.t < 1.5 {
            let u = predefined_time_control(s.p, s.psi, target, s.t, 0.0, &cfg, &prm, dt).unwrap();
            max_u = max_u.max(u.abs());
            s = rk4_step(&s, u, dt, &prm);
            if s.t >= cfg.t_p {
                let e = wrap_angle(s.psi - bearing(s.p, target));
                assert!(e.abs() < 1e-3, "error {e} at t={}", s.t);
            }
        }
        assert!(max_u <= prm.m, "command exceeded admissible bound: {max_u}");
    }

    #[test]
    fn terminal_radius_hand_value_and_infeasible_case() {
        // v=12, a=1.67, m=18, η=3.5, t_p=1:
        //   e_max=π/6 → δ_min = 24/(30.06 − 1.67π − 3.5(e^{π/6}−1)) ≈ 1.07118 m
        //   e_max=0   → δ_min = 24/(30.06 − 1.67π)                  ≈ 0.96721 m
        let dmin = min_terminal_radius(&params(), 3.5, 1.0, std::f64::consts::FRAC_PI_6).unwrap();
        assert!((dmin - 1.071179).abs() < 5e-5, "dmin = {dmin}");
        let d0 = min_terminal_radius(&params(), 3.5, 1.0, 0.0).unwrap();
        assert!((d0 - 0.967214).abs() < 5e-5, "d0 = {d0}");
        // A tiny command bound m makes the bound infeasible.
        let tight = ShipParams::from_command_bound(12.0, 1.67, 3.0).unwrap();
        assert!(min_terminal_radius(&tight, 3.5, 1.0, std::f64::consts::PI).is_err());
        assert!(min_terminal_radius(&params(), 3.5, 1.0, -0.1).is_err());
    }

    #[test]
    fn feasible_constructor_enforces_bound() {
        let prm = params();
        let e6 = std::f64::consts::FRAC_PI_6;
        assert!(GuidanceConfig::feasible(1.0, 3.5, 1.5, &prm, e6).is_ok());
        assert!(GuidanceConfig::feasible(1.0, 3.5, 0.5, &prm, e6).is_err());
        // Removing a worst-case wrapped error (π) costs η(e^π − 1) ≈ 77.5 of
        // command budget: an 18-rad bound cannot cover it, a 60-rad one can.
        assert!(GuidanceConfig::feasible(1.0, 3.5, 1.5, &prm, std::f64::consts::PI).is_err());
        let wide = ShipParams::from_command_bound(12.0, 1.67, 60.0).unwrap();
        assert!(GuidanceConfig::feasible(1.0, 3.5, 1.5, &wide, std::f64::consts::PI).is_ok());
        assert!(GuidanceConfig::new(1.0, 0.9, 1.0).is_err());
        assert!(GuidanceConfig::new(-1.0, 3.5, 1.0).is_err());
    }

    #[test]
    fn reach_time_bound_is_transient_plus_travel() {
        assert!((reach_time_bound(120.0, 12.0, 1.0) - 11.0).abs() < 1e-12);
    }
}
