//! Vehicle and obstacle models: constant-speed planar kinematics with
//! first-order heading dynamics, constant-velocity obstacle tracks, the
//! fixed-step RK4 integrator, and the predefined-time convergence flow that
//! the heading controller is built on.
//!
//! Ship model (speed v constant, heading lag a, heading command u):
//!   ẋ = v cos ψ,   ẏ = v sin ψ,   ψ̇ = −a ψ + a u.
//! Commands are admissible when |u| ≤ m with m = c/a − π, where c is the
//! rudder-rate budget of the actuator.

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Vec2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Constant parameters of the own ship.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShipParams {
    /// Forward speed, m/s (> 0).
    pub v: f64,
    /// Heading-lag coefficient a, 1/s (> 0).
    pub a: f64,
    /// Actuator budget c = a(π + m), rad/s.
    pub c: f64,
    /// Admissible command magnitude m = c/a − π, rad (> 0).
    pub m: f64,
}

impl ShipParams {
    /// Build from the admissible command magnitude `m`; derives c = a(π + m).
    pub fn from_command_bound(v: f64, a: f64, m: f64) -> Result<Self> {
        if !(v > 0.0) || !(a > 0.0) || !(m > 0.0) {
            return Err(Error::InfeasibleConstraint(format!(
                "ship parameters require v > 0, a > 0, m > 0 (got v={v}, a={a}, m={m})"
            )));
        }
        Ok(ShipParams { v, a, c: a * (PI + m), m })
    }

    /// Build from the actuator budget `c`; derives m = c/a − π.
    pub fn from_actuator_budget(v: f64, a: f64, c: f64) -> Result<Self> {
        if !(v > 0.0) || !(a > 0.0) {
            return Err(Error::InfeasibleConstraint(format!(
                "ship parameters require v > 0, a > 0 (got v={v}, a={a})"
            )));
        }
        let m = admissible_bound(a, c)?;
        Ok(ShipParams { v, a, c, m })
    }

    /// Same ship with a scaled forward speed (used by the stall perturbation).
    pub fn with_speed(&self, v: f64) -> Self {
        ShipParams { v, ..*self }
    }
}

/// Admissible command magnitude m = c/a − π; errors when the actuator budget
/// cannot even sustain a π-rad command (m ≤ 0).
pub fn admissible_bound(a: f64, c: f64) -> Result<f64> {
    let m = c / a - PI;
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::InfeasibleConstraint(format!(
            "admissible command bound m = c/a − π = {m:.6} ≤ 0 for a={a}, c={c}"
        )));
    }
    Ok(m)
}

/// Own-ship state: position (m), wrapped heading (rad), time (s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShipState {
    pub p: Vec2,
    /// Heading, wrapped to (−π, π]; `rk4_step` maintains the wrap.
    pub psi: f64,
    pub t: f64,
}

impl ShipState {
    pub fn new(p: Vec2, psi: f64, t: f64) -> Self {
        ShipState { p, psi: wrap_angle(psi), t }
    }

    /// Velocity vector implied by the heading and the ship speed.
    pub fn velocity(&self, params: &ShipParams) -> Vec2 {
        Vec2::from_angle(self.psi) * params.v
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.psi.is_finite() && self.t.is_finite()
    }
}

fn deriv(psi: f64, u: f64, params: &ShipParams) -> (Vec2, f64) {
    (Vec2::from_angle(psi) * params.v, params.a * (u - psi))
}

/// One fixed-step RK4 integration step of the ship model under the
/// zero-order-held command `u`.  The heading is integrated unwrapped across
/// the stages and wrapped once at the end.
pub fn rk4_step(state: &ShipState, u: f64, dt: f64, params: &ShipParams) -> ShipState {
    let (k1_p, k1_psi) = deriv(state.psi, u, params);
    let (k2_p, k2_psi) = deriv(state.psi + 0.5 * dt * k1_psi, u, params);
    let (k3_p, k3_psi) = deriv(state.psi + 0.5 * dt * k2_psi, u, params);
    let (k4_p, k4_psi) = deriv(state.psi + dt * k3_psi, u, params);
    let p = state.p + (k1_p + (k2_p + k3_p) * 2.0 + k4_p) * (dt / 6.0);
    let psi = state.psi + dt / 6.0 * (k1_psi + 2.0 * (k2_psi + k3_psi) + k4_psi);
    ShipState { p, psi: wrap_angle(psi), t: state.t + dt }
}

/// Constant-velocity obstacle track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleTrack {
    /// Position at t = 0, metres.
    pub p0: Vec2,
    /// Course, rad (wrapped).
    pub psi_m: f64,
    /// Speed, m/s (≥ 0; 0 ⇔ static obstacle).
    pub v_o: f64,
}

impl ObstacleTrack {
    pub fn new(p0: Vec2, psi_m: f64, v_o: f64) -> Self {
        ObstacleTrack { p0, psi_m: wrap_angle(psi_m), v_o }
    }

    pub fn position(&self, t: f64) -> Vec2 {
        self.p0 + Vec2::from_angle(self.psi_m) * (self.v_o * t)
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::from_angle(self.psi_m) * self.v_o
    }

    /// True when the track is (numerically) stationary.
    pub fn is_static(&self) -> bool {
        self.v_o.abs() < 1e-9
    }
}

/// Predefined-time convergence flow
///   φ(x, t) = −η (1 − e^{−x}) / (t_p − t)   for t < t_p,
///   φ(x, t) = 0                              for t ≥ t_p,
/// with absolute deadline `t_p` and window start `t0 < t_p` (the window start
/// only anchors the caller's bookkeeping; the flow itself depends on t_p − t).
///
/// Any trajectory ẋ = φ(x, t) started at t0 reaches x = 0 by t_p for η > 1.
/// The 1 − e^{−x} factor is evaluated through `exp_m1`, which is exact near
/// x = 0 and never forms the e^x / e^x quotient that overflows for large |x|.
pub fn predefined_time_flow(x: f64, t: f64, t0: f64, t_p: f64, eta: f64) -> f64 {
    debug_assert!(t0 < t_p, "flow window must start before its deadline");
    debug_assert!(eta > 1.0, "predefined-time convergence requires eta > 1");
    if t >= t_p {
        return 0.0;
    }
    let one_minus_exp_neg = -(-x).exp_m1(); // 1 − e^{−x}
    -eta * one_minus_exp_neg / (t_p - t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_constructors_agree() {
        let a = ShipParams::from_command_bound(12.0, 1.67, 18.0).unwrap();
        let b = ShipParams::from_actuator_budget(12.0, a.a, a.c).unwrap();
        assert!((a.m - b.m).abs() < 1e-12);
        assert!((a.c - 1.67 * (PI + 18.0)).abs() < 1e-12);
        assert!(ShipParams::from_command_bound(12.0, 1.67, 0.0).is_err());
        // Budget below a·π leaves no admissible command.
        assert!(ShipParams::from_actuator_budget(12.0, 1.0, 3.0).is_err());
        assert!(admissible_bound(1.0, 2.0 * PI).unwrap() - PI < 1e-12);
    }

    #[test]
    fn straight_run_is_exact() {
        let params = ShipParams::from_command_bound(10.0, 1.67, 18.0).unwrap();
        let mut s = ShipState::new(Vec2::ZERO, 0.0, 0.0);
        for _ in 0..1000 {
            s = rk4_step(&s, 0.0, 0.01, &params);
        }
        assert!((s.p.x - 100.0).abs() < 1e-9);
        assert!(s.p.y.abs() < 1e-12);
        assert!((s.t - 10.0).abs() < 1e-9);
    }

    #[test]
    fn heading_step_response_matches_analytic_lag() {
        // ψ(t) = u + (ψ0 − u) e^{−a t} for constant u.
        let params = ShipParams::from_command_bound(10.0, 1.67, 18.0).unwrap();
        let u = 0.8;
        let mut s = ShipState::new(Vec2::ZERO, -0.3, 0.0);
        let dt = 1e-3;
        for _ in 0..2000 {
            s = rk4_step(&s, u, dt, &params);
        }
        let t = 2.0;
        let analytic = u + (-0.3 - u) * (-params.a * t).exp();
        assert!(
            (s.psi - analytic).abs() < 1e-10,
            "rk4 heading {} vs analytic {}",
            s.psi,
            analytic
        );
    }

    #[test]
    fn heading_stays_wrapped_through_long_turns() {
        let params = ShipParams::from_command_bound(10.0, 1.67, 18.0).unwrap();
        let mut s = ShipState::new(Vec2::ZERO, 3.0, 0.0);
        for _ in 0..5000 {
            s = rk4_step(&s, -3.0, 0.01, &params);
            assert!(s.psi > -PI - 1e-12 && s.psi <= PI + 1e-12);
        }
    }

    #[test]
    fn obstacle_track_propagation() {
        let tr = ObstacleTrack::new(Vec2::new(100.0, 50.0), PI, 10.0);
        let p = tr.position(5.0);
        assert!((p.x - 50.0).abs() < 1e-9 && (p.y - 50.0).abs() < 1e-9);
        assert!(!tr.is_static());
        assert!(ObstacleTrack::new(Vec2::ZERO, 0.3, 0.0).is_static());
    }

    #[test]
    fn flow_signs_and_deadline() {
        // Positive error decays, negative error rises, zero is stationary.
        assert!(predefined_time_flow(1.0, 0.0, 0.0, 1.0, 3.5) < 0.0);
        assert!(predefined_time_flow(-1.0, 0.0, 0.0, 1.0, 3.5) > 0.0);
        assert_eq!(predefined_time_flow(0.0, 0.0, 0.0, 1.0, 3.5), 0.0);
        // After the deadline the flow vanishes identically.
        assert_eq!(predefined_time_flow(5.0, 1.0, 0.0, 1.0, 3.5), 0.0);
        assert_eq!(predefined_time_flow(5.0, 2.0, 0.0, 1.0, 3.5), 0.0);
        // Hand value: x=1, t=0, t_p=1, η=3.5 → −3.5 (1 − e^{−1}) = −2.212 42.
        let f = predefined_time_flow(1.0, 0.0, 0.0, 1.0, 3.5);
        assert!((f + 3.5 * (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert!((f + 2.212_42).abs() < 1e-4);
    }

    #[test]
    fn flow_is_overflow_safe_for_large_negative_error() {
        // 1 − e^{−x} for x = −700 is a huge negative number but must not be NaN.
        let f = predefined_time_flow(-700.0, 0.0, 0.0, 1.0, 3.5);
        assert!(f.is_infinite() || (f > 0.0 && f.is_finite()));
        // For moderately large |x| the value is finite and positive.
        let f2 = predefined_time_flow(-50.0, 0.0, 0.0, 1.0, 3.5);
        assert!(f2.is_finite() && f2 > 0.0);
    }
}
