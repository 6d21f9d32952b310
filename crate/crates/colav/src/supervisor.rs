//! Avoidance supervisor: unsafe-box construction (single static, clustered
//! static, single dynamic, multi-dynamic), virtual-waypoint synthesis, the
//! guard predicates, and the three-mode switching automaton that dispatches
//! the predefined-time controller.
//!
//! Modes: S1 steers to the mission waypoint; S2 steers to a virtual waypoint
//! on a corner of the active unsafe box; S3 holds the command frozen at the
//! value commanded when the virtual waypoint was reached or passed.
//! Avoidance arms when the ship's transient-reach corridor intersects an
//! unsafe box (G11) together with either the distance gate (G12, binary
//! switching) or the risk gate (G22, risk switching).  A static episode ends
//! when the corridor clears the frozen box (Ḡ11); a dynamic episode ends
//! when every approaching track's swept region misses the corridor (G23).
//! Boxes are axis-aligned in the line-of-sight frame from the ship to the
//! waypoint; receding tracks (range already opening) are never candidates.

use crate::dynamics::{ObstacleTrack, ShipParams, ShipState};
use crate::error::{Error, Result};
use crate::geometry::{
    bearing, los_frame, regions_intersect, ship_reach_region, swept_square_region, wrap_angle,
    Box2, ConvexRegion, FrameTransform, Vec2,
};
use crate::guidance::{predefined_time_control, GuidanceConfig};
use crate::risk::{cpa, track_risk_index, RiskParams, TcpaConvention};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

/// Preferred maneuvering side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Starboard,
    Port,
}

/// Avoidance arming strategy: plain distance gate or fuzzy-risk gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchingStrategy {
    Binary,
    Risk,
}

/// Supervisor mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    S1,
    S2,
    S3,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::S1 => write!(f, "S1"),
            Mode::S2 => write!(f, "S2"),
            Mode::S3 => write!(f, "S3"),
        }
    }
}

/// Horizon used for a track's swept region in the dynamic exit guard G23.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum G23Horizon {
    /// T = t_p + ‖p_w − p‖ / v — time to traverse the remaining leg.
    LegTime,
    /// T = t_p + v·|sin ψ_los| / (C_s + v·t_p) with ψ_los the bearing of the
    /// waypoint relative to the current heading.  Kept for completeness; the
    /// expression is not dimensionally consistent and is off by default.
    LosScaled,
}

/// What an unsafe box was built around.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoxKind {
    Static,
    Dynamic,
}

/// Axis-aligned (in its line-of-sight frame) unsafe box around an obstacle,
/// cluster, or closest-point-of-approach, inflated so that steering to one
/// of its corners keeps the ship at least C_s away from the obstacle.
#[derive(Debug, Clone, PartialEq)]
pub struct UnsafeBox {
    /// Frame the box is axis-aligned in.
    pub frame: FrameTransform,
    /// Box center in frame coordinates.
    pub center: Vec2,
    /// Half-extents (L along frame x, B along frame y).
    pub half: Vec2,
    /// Point the box was anchored on (obstacle, cluster center, or CPA),
    /// world coordinates.
    pub anchor_world: Vec2,
    /// Trigger distance: avoidance may arm when the ship is this close to
    /// the anchor (binary switching).
    pub d_safe: f64,
    /// Obstacle indices this box covers (sorted).
    pub members: Vec<usize>,
    pub kind: BoxKind,
    /// True when `d_safe` came from the degenerate-radicand fallback.
    pub dsafe_fallback: bool,
}

impl UnsafeBox {
    /// Corners in world coordinates, counter-clockwise starting from the
    /// frame's (min x, min y) corner.
    pub fn world_vertices(&self) -> [Vec2; 4] {
        let vs = Box2 { center: self.center, half: self.half }.vertices();
        [
            self.frame.apply_inv(vs[0]),
            self.frame.apply_inv(vs[1]),
            self.frame.apply_inv(vs[2]),
            self.frame.apply_inv(vs[3]),
        ]
    }

    pub fn region(&self) -> ConvexRegion {
        ConvexRegion::from_points(&self.world_vertices()).expect("four corners")
    }

    /// Membership test in world coordinates (box grown by `margin`).
    pub fn contains_world(&self, p: Vec2, margin: f64) -> bool {
        Box2 { center: self.center, half: self.half }.contains(self.frame.apply(p), margin)
    }
}

/// Square unsafe box around a static obstacle at world position `p_s`:
/// half-width C_s, trigger distance d_safe = C_s + transient radius v·t_p.
pub fn static_unsafe_box(
    p_s: Vec2,
    c_s: f64,
    transient_radius: f64,
    frame: &FrameTransform,
    member: usize,
) -> UnsafeBox {
    UnsafeBox {
        frame: *frame,
        center: frame.apply(p_s),
        half: Vec2::new(c_s, c_s),
        anchor_world: p_s,
        d_safe: c_s + transient_radius,
        members: vec![member],
        kind: BoxKind::Static,
        dsafe_fallback: false,
    }
}

/// Cluster nearby static obstacles (transitive closure of pairwise distance
/// < 2·d_safe) and build one box per cluster: center at the midpoint of the
/// frame-coordinate extremes, half-extents half the spread plus C_s.  The
/// cluster trigger distance is max(L, B) + (d_safe − C_s), which degenerates
/// to d_safe for a singleton.
pub fn cluster_static(
    positions: &[(usize, Vec2)],
    c_s: f64,
    d_safe: f64,
    frame: &FrameTransform,
) -> Vec<UnsafeBox> {
    let n = positions.len();
    if n == 0 {
        return Vec::new();
    }
    // Transitive closure by repeated sweeps (n is tiny).
    let mut cluster_id: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in (i + 1)..n {
                if positions[i].1.dist(positions[j].1) < 2.0 * d_safe
                    && cluster_id[i] != cluster_id[j]
                {
                    let m = cluster_id[i].min(cluster_id[j]);
                    cluster_id[i] = m;
                    cluster_id[j] = m;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut boxes = Vec::new();
    let mut seen: Vec<usize> = Vec::new();
    for &cid in cluster_id.iter() {
        if seen.contains(&cid) {
            continue;
        }
        seen.push(cid);
        let mut members: Vec<usize> = Vec::new();
        let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (k, &(idx, pos)) in positions.iter().enumerate() {
            if cluster_id[k] != cid {
                continue;
            }
            members.push(idx);
            let q = frame.apply(pos);
            min.x = min.x.min(q.x);
            min.y = min.y.min(q.y);
            max.x = max.x.max(q.x);
            max.y = max.y.max(q.y);
        }
        members.sort_unstable();
        let center = (min + max) * 0.5;
        let half = Vec2::new((max.x - min.x) * 0.5 + c_s, (max.y - min.y) * 0.5 + c_s);
        let trigger = half.x.max(half.y) + (d_safe - c_s);
        boxes.push(UnsafeBox {
            frame: *frame,
            center,
            half,
            anchor_world: frame.apply_inv(center),
            d_safe: trigger,
            members,
            kind: BoxKind::Static,
            dsafe_fallback: false,
        });
    }
    boxes
}

/// Unsafe box for one moving track, anchored at the track's position at its
/// time of closest approach (the ship cannot beat the obstacle to any point
/// short of it).
///
/// Half-extents: L/B = |current obstacle offset from the CPA along the frame
/// axis| + C_s, so the box always covers the obstacle from the freeze
/// instant through its CPA.  Trigger distance follows
///   d_1 = (D/v_o − t_p)·v,   d_2 = √(d_1² − B²),   d_safe = d_2 + L + v·t_p
/// with D the distance the obstacle still travels to its CPA.  A
/// non-positive radicand (obstacle too slow/close for the geometry) falls
/// back to d_safe = ‖p − anchor‖ and flags the box.
#[allow(clippy::too_many_arguments)]
pub fn dynamic_unsafe_box(
    ship: &ShipState,
    params: &ShipParams,
    track: &ObstacleTrack,
    member: usize,
    c_s: f64,
    t_p: f64,
    frame: &FrameTransform,
    convention: TcpaConvention,
) -> Result<UnsafeBox> {
    if track.is_static() {
        return Ok(static_unsafe_box(
            track.position(ship.t),
            c_s,
            params.v * t_p,
            frame,
            member,
        ));
    }
    let c = cpa(ship.p, ship.psi, params.v, track, ship.t, convention)?;
    let p_m = track.position(ship.t);
    let anchor = c.p_cpa;
    let center = frame.apply(anchor);
    let m_f = frame.apply(p_m);
    let half = Vec2::new((m_f.x - center.x).abs() + c_s, (m_f.y - center.y).abs() + c_s);
    let (d_safe, fallback) = dynamic_trigger_distance(
        ship.p,
        anchor,
        p_m.dist(anchor),
        track.v_o,
        params.v,
        t_p,
        half,
    );
    Ok(UnsafeBox {
        frame: *frame,
        center,
        half,
        anchor_world: anchor,
        d_safe,
        members: vec![member],
        kind: BoxKind::Dynamic,
        dsafe_fallback: fallback,
    })
}

fn dynamic_trigger_distance(
    p: Vec2,
    anchor: Vec2,
    dist_to_cpa: f64,
    v_o: f64,
    v: f64,
    t_p: f64,
    half: Vec2,
) -> (f64, bool) {
    let d_1 = (dist_to_cpa / v_o - t_p) * v;
    let radicand = d_1 * d_1 - half.y * half.y;
    if d_1 > 0.0 && radicand > 0.0 {
        (radicand.sqrt() + half.x + v * t_p, false)
    } else {
        (p.dist(anchor), true)
    }
}

/// Multi-track unsafe box (≥ 2 tracks): recruit members by four tests —
/// (1) current distance to the ship < D_sf = C_s + v·t_p, (2) pairwise
/// distance to an existing member ≤ 2·D_sf (transitive), (3) CPA within
/// D_sf of the ship, (4) position at the riskiest member's TCPA within D_sf
/// of the ship's predicted position — then build one box around the member
/// CPA nearest the ship, with half-extents covering every member's current
/// position plus C_s.
///
/// Returns `Ok(None)` when no track is recruited; a single recruited track
/// (or a single-track input) delegates to [`dynamic_unsafe_box`].
#[allow(clippy::too_many_arguments)]
pub fn multi_dynamic_unsafe_box(
    ship: &ShipState,
    params: &ShipParams,
    tracks: &[(usize, ObstacleTrack)],
    c_s: f64,
    t_p: f64,
    frame: &FrameTransform,
    convention: TcpaConvention,
    risk_params: &RiskParams,
) -> Result<Option<UnsafeBox>> {
    if tracks.is_empty() {
        return Ok(None);
    }
    if tracks.len() == 1 {
        let (idx, tr) = &tracks[0];
        return dynamic_unsafe_box(ship, params, tr, *idx, c_s, t_p, frame, convention).map(Some);
    }
    let t = ship.t;
    let d_sf = c_s + params.v * t_p;
    // Per-track CPA (tracks without relative motion can never be recruited).
    let infos: Vec<Option<crate::risk::CpaResult>> = tracks
        .iter()
        .map(|(_, tr)| cpa(ship.p, ship.psi, params.v, tr, t, convention).ok())
        .collect();

    let mut member = vec![false; tracks.len()];
    for (k, (_, tr)) in tracks.iter().enumerate() {
        if infos[k].is_some() && ship.p.dist(tr.position(t)) < d_sf {
            member[k] = true;
        }
    }
    let closure = |member: &mut Vec<bool>| loop {
        let mut changed = false;
        for i in 0..tracks.len() {
            if !member[i] || infos[i].is_none() {
                continue;
            }
            for j in 0..tracks.len() {
                if member[j] || infos[j].is_none() {
                    continue;
                }
                if tracks[i].1.position(t).dist(tracks[j].1.position(t)) <= 2.0 * d_sf {
                    member[j] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    };
    closure(&mut member);
    for (k, info) in infos.iter().enumerate() {
        if let Some(c) = info {
            if ship.p.dist(c.p_cpa) < d_sf {
                member[k] = true;
            }
        }
    }
    closure(&mut member);
    // Step 4: positions at the riskiest member's TCPA.
    let riskiest = (0..tracks.len())
        .filter(|&k| member[k])
        .max_by(|&a, &b| {
            let ra = track_risk_index(
                ship.p, ship.psi, params.v, &tracks[a].1, t, convention, risk_params,
            );
            let rb = track_risk_index(
                ship.p, ship.psi, params.v, &tracks[b].1, t, convention, risk_params,
            );
            ra.partial_cmp(&rb).unwrap_or(std::cmp::Ordering::Equal)
        });
    if let Some(r) = riskiest {
        let t11 = infos[r].as_ref().map(|c| c.tcpa).unwrap_or(0.0);
        if t11 > 0.0 {
            let ship_pred = ship.p + Vec2::from_angle(ship.psi) * (params.v * t11);
            for (k, (_, tr)) in tracks.iter().enumerate() {
                if infos[k].is_some() && ship_pred.dist(tr.position(t + t11)) < d_sf {
                    member[k] = true;
                }
            }
            closure(&mut member);
        }
    }

    let recruited: Vec<usize> = (0..tracks.len()).filter(|&k| member[k]).collect();
    match recruited.len() {
        0 => Ok(None),
        1 => {
            let k = recruited[0];
            let (idx, tr) = &tracks[k];
            dynamic_unsafe_box(ship, params, tr, *idx, c_s, t_p, frame, convention).map(Some)
        }
        _ => {
            // Anchor: the member CPA nearest the ship.
            let anchor_k = *recruited
                .iter()
                .min_by(|&&a, &&b| {
                    let da = ship.p.dist(infos[a].as_ref().unwrap().p_cpa);
                    let db = ship.p.dist(infos[b].as_ref().unwrap().p_cpa);
                    da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap();
            let anchor = infos[anchor_k].as_ref().unwrap().p_cpa;
            let center = frame.apply(anchor);
            let mut half = Vec2::new(c_s, c_s);
            for &k in &recruited {
                let q = frame.apply(tracks[k].1.position(t));
                half.x = half.x.max((q.x - center.x).abs() + c_s);
                half.y = half.y.max((q.y - center.y).abs() + c_s);
            }
            let anchor_track = &tracks[anchor_k].1;
            let (d_safe, fallback) = dynamic_trigger_distance(
                ship.p,
                anchor,
                anchor_track.position(t).dist(anchor),
                anchor_track.v_o,
                params.v,
                t_p,
                half,
            );
            let mut members: Vec<usize> = recruited.iter().map(|&k| tracks[k].0).collect();
            members.sort_unstable();
            Ok(Some(UnsafeBox {
                frame: *frame,
                center,
                half,
                anchor_world: anchor,
                d_safe,
                members,
                kind: BoxKind::Dynamic,
                dsafe_fallback: fallback,
            }))
        }
    }
}

/// Chosen virtual waypoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualWaypoint {
    pub vertex: Vec2,
    /// True when no vertex had the side-preferred relative-bearing sign and
    /// the max-|ϱ| fallback was used.
    pub fallback: bool,
}

/// Pick the box corner to steer around: among the vertices whose relative
/// bearing ϱ = wrap(bearing(p, V) − ψ) has the side's sign (starboard:
/// ϱ < 0, port: ϱ > 0), the one of extremal ϱ.  Falls back to the vertex of
/// maximal |ϱ| (flagged) when no vertex qualifies.  Errors when the ship is
/// already inside the box.
pub fn virtual_waypoint(
    ubox: &UnsafeBox,
    p: Vec2,
    psi: f64,
    side: Side,
) -> Result<VirtualWaypoint> {
    if ubox.contains_world(p, 0.0) {
        return Err(Error::InconsistentState(
            "virtual waypoint requested for a ship inside the unsafe box".into(),
        ));
    }
    let verts = ubox.world_vertices();
    let rho: Vec<(Vec2, f64)> = verts
        .iter()
        .filter(|v| v.dist(p) > 1e-9)
        .map(|&v| (v, wrap_angle(bearing(p, v) - psi)))
        .collect();
    if rho.is_empty() {
        return Err(Error::DegenerateGeometry("all box corners coincide with the ship".into()));
    }
    let pick = match side {
        Side::Starboard => rho
            .iter()
            .filter(|(_, r)| *r < 0.0)
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal)),
        Side::Port => rho
            .iter()
            .filter(|(_, r)| *r > 0.0)
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal)),
    };
    if let Some((v, _)) = pick {
        return Ok(VirtualWaypoint { vertex: *v, fallback: false });
    }
    let (v, _) = rho
        .iter()
        .max_by(|a, b| {
            a.1.abs().partial_cmp(&b.1.abs()).unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap();
    Ok(VirtualWaypoint { vertex: *v, fallback: true })
}

/// Obstacle field plus the mission waypoint and the safe distance.
#[derive(Debug, Clone)]
pub struct Environment {
    pub waypoint: Vec2,
    pub tracks: Vec<ObstacleTrack>,
    /// Safe (Chebyshev) distance C_s, m.
    pub c_s: f64,
}

/// Supervisor configuration.
#[derive(Debug, Clone)]
pub struct SupervisorConfig {
    pub side: Side,
    pub switching: SwitchingStrategy,
    pub risk: RiskParams,
    pub tcpa_convention: TcpaConvention,
    pub g23_horizon: G23Horizon,
    /// Apply a 1 % speed perturbation when the parallel-escape stall
    /// diagnostic fires.
    pub stall_auto_perturb: bool,
    pub guidance: GuidanceConfig,
}

/// Identity of an avoidance episode's source box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceKey {
    pub kind: BoxKind,
    pub members: Vec<usize>,
}

/// One armed avoidance episode: the frozen box and its virtual waypoint.
#[derive(Debug, Clone)]
pub struct Episode {
    pub key: SourceKey,
    pub ubox: UnsafeBox,
    pub v1: Vec2,
    /// Command frozen on S3 entry.
    pub frozen_u: Option<f64>,
    stall_flagged: bool,
}

/// One mode-transition record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwitchEvent {
    pub t: f64,
    pub mode: Mode,
    pub reason: String,
}

/// Unsafe-box snapshot taken whenever an episode is armed (plot data).
#[derive(Debug, Clone, PartialEq)]
pub struct BoxLogEntry {
    pub t: f64,
    pub verts: [Vec2; 4],
}

/// Counters for the numerical fallbacks and diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Diagnostics {
    /// Virtual-waypoint side rule had no admissible vertex (fallback used).
    pub vw_fallbacks: u32,
    /// Episodes armed with the degenerate-radicand trigger distance.
    pub dsafe_fallbacks: u32,
    /// Parallel-escape stall diagnostic hits.
    pub stall_warnings: u32,
    /// Controller evaluated at a degenerate target (held heading instead).
    pub control_degenerate: u32,
}

/// Guard evaluation for one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GuardReport {
    /// Transient-reach corridor intersects an unsafe box.
    pub g11: bool,
    /// Distance gate (binary switching) or risk gate (risk switching).
    pub g12_or_g22: bool,
    /// Not yet at the virtual waypoint (‖p − V1‖ > δ).
    pub l1: bool,
    /// Virtual waypoint still ahead (|relative bearing| < π/2).
    pub l2: bool,
    /// Every approaching track's swept region misses the corridor.
    pub g23: bool,
    /// Maximum risk index over all tracks.
    pub ri: f64,
}

/// Mutable supervisor state owned by one simulation run.
#[derive(Debug, Clone)]
pub struct SupervisorState {
    pub mode: Mode,
    /// Start of the controller's current predefined-time window.
    pub window_t0: f64,
    pub episode: Option<Episode>,
    /// Command emitted on the previous step (frozen on S3 entry).
    pub last_u: f64,
    pub switch_log: Vec<SwitchEvent>,
    pub box_log: Vec<BoxLogEntry>,
    pub diag: Diagnostics,
    /// Set once when the stall diagnostic fires with auto-perturb enabled;
    /// the simulation loop applies the speed change.
    pub stall_perturb_request: bool,
}

impl SupervisorState {
    pub fn new(t0: f64, psi0: f64) -> Self {
        SupervisorState {
            mode: Mode::S1,
            window_t0: t0,
            episode: None,
            last_u: psi0,
            switch_log: Vec::new(),
            box_log: Vec::new(),
            diag: Diagnostics::default(),
            stall_perturb_request: false,
        }
    }
}

/// One avoidance candidate built during the per-step scan.
struct Candidate {
    key: SourceKey,
    ubox: UnsafeBox,
    g11: bool,
    gate: bool,
    priority: f64,
}

struct Assessment {
    corridor: ConvexRegion,
    candidates: Vec<Candidate>,
    ri_max: f64,
    g23_clear: bool,
}

fn track_approaching(p: Vec2, psi: f64, v: f64, track: &ObstacleTrack, t: f64) -> bool {
    let r = p - track.position(t);
    let vr = Vec2::from_angle(psi) * v - track.velocity();
    r.dot(vr) < 0.0
}

fn g23_sweep_horizon(ship: &ShipState, env: &Environment, cfg: &SupervisorConfig, v: f64) -> f64 {
    let t_p = cfg.guidance.t_p;
    match cfg.g23_horizon {
        G23Horizon::LegTime => t_p + ship.p.dist(env.waypoint) / v,
        G23Horizon::LosScaled => {
            let psi_los = wrap_angle(bearing(ship.p, env.waypoint) - ship.psi);
            t_p + v * psi_los.sin().abs() / (env.c_s + v * t_p)
        }
    }
}

fn assess(
    ship: &ShipState,
    env: &Environment,
    cfg: &SupervisorConfig,
    params: &ShipParams,
) -> Assessment {
    let t = ship.t;
    let t_p = cfg.guidance.t_p;
    let corridor = ship_reach_region(ship.p, params.v, t_p, env.waypoint);
    let frame = los_frame(ship.p, env.waypoint).ok();

    let mut ri_max = 0.0f64;
    let mut per_track_ri: Vec<f64> = Vec::with_capacity(env.tracks.len());
    for tr in &env.tracks {
        let ri = track_risk_index(
            ship.p, ship.psi, params.v, tr, t, cfg.tcpa_convention, &cfg.risk,
        );
        per_track_ri.push(ri);
        ri_max = ri_max.max(ri);
    }

    let mut candidates: Vec<Candidate> = Vec::new();
    if let Some(frame) = frame {
        let d_safe_single = env.c_s + params.v * t_p;
        // Static clusters over approaching static obstacles.
        let statics: Vec<(usize, Vec2)> = env
            .tracks
            .iter()
            .enumerate()
            .filter(|(_, tr)| tr.is_static())
            .filter(|(_, tr)| track_approaching(ship.p, ship.psi, params.v, tr, t))
            .map(|(i, tr)| (i, tr.position(t)))
            .collect();
        for ubox in cluster_static(&statics, env.c_s, d_safe_single, &frame) {
            candidates.push(make_candidate(ubox, ship, params, env, cfg, &per_track_ri, &corridor));
        }
        // Dynamic tracks: approaching only.
        let dynamics: Vec<(usize, ObstacleTrack)> = env
            .tracks
            .iter()
            .enumerate()
            .filter(|(_, tr)| !tr.is_static())
            .filter(|(_, tr)| track_approaching(ship.p, ship.psi, params.v, tr, t))
            .map(|(i, tr)| (i, *tr))
            .collect();
        let mut covered: Vec<usize> = Vec::new();
        if dynamics.len() >= 2 {
            if let Ok(Some(ubox)) = multi_dynamic_unsafe_box(
                ship,
                params,
                &dynamics,
                env.c_s,
                t_p,
                &frame,
                cfg.tcpa_convention,
                &cfg.risk,
            ) {
                if ubox.members.len() >= 2 {
                    covered = ubox.members.clone();
                    candidates.push(make_candidate(
                        ubox, ship, params, env, cfg, &per_track_ri, &corridor,
                    ));
                }
            }
        }
        for (idx, tr) in &dynamics {
            if covered.contains(idx) {
                continue;
            }
            if let Ok(ubox) = dynamic_unsafe_box(
                ship,
                params,
                tr,
                *idx,
                env.c_s,
                t_p,
                &frame,
                cfg.tcpa_convention,
            ) {
                candidates.push(make_candidate(
                    ubox, ship, params, env, cfg, &per_track_ri, &corridor,
                ));
            }
        }
    }

    // Dynamic exit guard: every approaching track's swept region over the
    // configured horizon misses the corridor.
    let mut g23_clear = true;
    for tr in env.tracks.iter().filter(|tr| !tr.is_static()) {
        if !track_approaching(ship.p, ship.psi, params.v, tr, t) {
            continue;
        }
        let horizon = g23_sweep_horizon(ship, env, cfg, params.v);
        let sweep = swept_square_region(
            tr.position(t),
            tr.position(t) + tr.velocity() * horizon,
            env.c_s,
        );
        if regions_intersect(&sweep, &corridor) {
            g23_clear = false;
            break;
        }
    }

    Assessment { corridor, candidates, ri_max, g23_clear }
}

fn make_candidate(
    ubox: UnsafeBox,
    ship: &ShipState,
    _params: &ShipParams,
    _env: &Environment,
    cfg: &SupervisorConfig,
    per_track_ri: &[f64],
    corridor: &ConvexRegion,
) -> Candidate {
    let g11 = regions_intersect(&ubox.region(), corridor);
    let d_s = ship.p.dist(ubox.anchor_world);
    let ri = ubox
        .members
        .iter()
        .map(|&i| per_track_ri[i])
        .fold(0.0, f64::max);
    let (gate, priority) = match cfg.switching {
        SwitchingStrategy::Binary => {
            (d_s <= ubox.d_safe, if d_s > 1e-9 { ubox.d_safe / d_s } else { f64::INFINITY })
        }
        SwitchingStrategy::Risk => (ri >= cfg.risk.threshold, ri),
    };
    Candidate {
        key: SourceKey { kind: ubox.kind, members: ubox.members.clone() },
        ubox,
        g11,
        gate,
        priority,
    }
}

/// Pure guard evaluation (no state mutation): what [`supervisor_step`] sees
/// at this state.  G11 and the gate refer to the active episode's box when
/// one exists, otherwise to the candidate scan.
pub fn guards(
    ship: &ShipState,
    env: &Environment,
    state: &SupervisorState,
    cfg: &SupervisorConfig,
    params: &ShipParams,
) -> GuardReport {
    let a = assess(ship, env, cfg, params);
    build_report(ship, state, cfg, &a)
}

fn build_report(
    ship: &ShipState,
    state: &SupervisorState,
    cfg: &SupervisorConfig,
    a: &Assessment,
) -> GuardReport {
    let mut rep = GuardReport { g23: a.g23_clear, ri: a.ri_max, ..GuardReport::default() };
    if let Some(ep) = &state.episode {
        rep.g11 = regions_intersect(&ep.ubox.region(), &a.corridor);
        rep.g12_or_g22 = a
            .candidates
            .iter()
            .find(|c| c.key == ep.key)
            .map(|c| c.gate)
            .unwrap_or(false);
        let d_v1 = ship.p.dist(ep.v1);
        rep.l1 = d_v1 > cfg.guidance.delta;
        rep.l2 = if d_v1 > 1e-9 {
            wrap_angle(bearing(ship.p, ep.v1) - ship.psi).abs() < FRAC_PI_2
        } else {
            false
        };
    } else {
        rep.g11 = a.candidates.iter().any(|c| c.g11);
        rep.g12_or_g22 = a.candidates.iter().any(|c| c.gate);
    }
    rep
}

/// Rivalry factor a challenger must exceed before an armed episode is
/// replaced while its own source still triggers (prevents two comparable
/// threats from flapping the episode every step).
const RETRIGGER_HYSTERESIS: f64 = 1.05;

/// One supervisor step: evaluate guards, run the mode automaton, and emit
/// the heading command for this step.  `dt` is the integrator step (the
/// controller holds the heading within the last `dt` before its window's
/// deadline).
pub fn supervisor_step(
    ship: &ShipState,
    env: &Environment,
    cfg: &SupervisorConfig,
    params: &ShipParams,
    dt: f64,
    state: &mut SupervisorState,
) -> (f64, GuardReport) {
    let t = ship.t;
    let a = assess(ship, env, cfg, params);

    let mut triggered: Vec<&Candidate> =
        a.candidates.iter().filter(|c| c.g11 && c.gate).collect();
    triggered.sort_by(|x, y| {
        y.priority.partial_cmp(&x.priority).unwrap_or(std::cmp::Ordering::Equal)
    });

    match state.mode {
        Mode::S1 => {
            arm_episode(state, &triggered, ship, cfg, params, dt, t, false);
        }
        Mode::S2 | Mode::S3 => {
            let ep_key = state.episode.as_ref().map(|e| e.key.clone());
            if let Some(key) = ep_key {
                // Re-trigger by a different source.
                let current_priority = a
                    .candidates
                    .iter()
                    .find(|c| c.key == key && c.g11 && c.gate)
                    .map(|c| c.priority);
                let rivals: Vec<&Candidate> =
                    triggered.iter().filter(|c| c.key != key).copied().collect();
                let take_rival = match (rivals.first(), current_priority) {
                    (Some(rv), Some(cp)) => rv.priority > RETRIGGER_HYSTERESIS * cp,
                    (Some(_), None) => true,
                    (None, _) => false,
                };
                if take_rival {
                    arm_episode(state, &rivals, ship, cfg, params, dt, t, true);
                } else {
                    // Exit guard for the frozen episode.
                    let ep = state.episode.as_ref().unwrap();
                    let clear = match ep.ubox.kind {
                        BoxKind::Static => !regions_intersect(&ep.ubox.region(), &a.corridor),
                        BoxKind::Dynamic => a.g23_clear,
                    };
                    if clear {
                        let reason = match ep.ubox.kind {
                            BoxKind::Static => "G11bar",
                            BoxKind::Dynamic => "G23",
                        };
                        state.episode = None;
                        state.mode = Mode::S1;
                        state.window_t0 = t;
                        state.switch_log.push(SwitchEvent {
                            t,
                            mode: Mode::S1,
                            reason: reason.into(),
                        });
                    } else {
                        // S2 ↔ S3 housekeeping against the virtual waypoint.
                        let ep = state.episode.as_mut().unwrap();
                        let d_v1 = ship.p.dist(ep.v1);
                        let l1 = d_v1 > cfg.guidance.delta;
                        let l2 = d_v1 > 1e-9
                            && wrap_angle(bearing(ship.p, ep.v1) - ship.psi).abs() < FRAC_PI_2;
                        match state.mode {
                            Mode::S2 if !(l1 && l2) => {
                                ep.frozen_u = Some(state.last_u);
                                state.mode = Mode::S3;
                                state.window_t0 = t;
                                state.switch_log.push(SwitchEvent {
                                    t,
                                    mode: Mode::S3,
                                    reason: if !l1 { "L1bar" } else { "L2bar" }.into(),
                                });
                            }
                            Mode::S3 if l1 && l2 => {
                                state.mode = Mode::S2;
                                state.window_t0 = t;
                                state.switch_log.push(SwitchEvent {
                                    t,
                                    mode: Mode::S2,
                                    reason: "L1&L2".into(),
                                });
                            }
                            _ => {}
                        }
                    }
                }
            } else {
                // Avoidance mode without an episode cannot happen; recover.
                state.mode = Mode::S1;
            }
        }
    }

    // Parallel-escape stall diagnostic (frozen course vs a single dynamic
    // source moving the same way at the critical speed ratio).
    if state.mode == Mode::S3 {
        if let Some(ep) = &mut state.episode {
            if ep.ubox.kind == BoxKind::Dynamic && !ep.stall_flagged && ep.key.members.len() == 1 {
                let tr = &env.tracks[ep.key.members[0]];
                if tr.v_o > 1e-9 {
                    let parallel = wrap_angle(ship.psi - tr.psi_m).abs() < 1e-2;
                    let s = ship.p.dist(tr.position(t));
                    if parallel && s > 1e-9 {
                        let v_r = params.v - tr.v_o;
                        let critical = (s + env.c_s + v_r * cfg.guidance.t_p) / s;
                        let ratio = params.v / tr.v_o;
                        if (ratio - critical).abs() < 0.01 * ratio.abs() {
                            ep.stall_flagged = true;
                            state.diag.stall_warnings += 1;
                            state.switch_log.push(SwitchEvent {
                                t,
                                mode: state.mode,
                                reason: "stall-diagnostic".into(),
                            });
                            if cfg.stall_auto_perturb {
                                state.stall_perturb_request = true;
                            }
                        }
                    }
                }
            }
        }
    }

    let u = match (state.mode, &state.episode) {
        (Mode::S3, Some(ep)) => ep.frozen_u.unwrap_or(state.last_u),
        (Mode::S2, Some(ep)) => control_or_hold(ship, ep.v1, state, cfg, params, dt),
        _ => control_or_hold(ship, env.waypoint, state, cfg, params, dt),
    };
    let report = build_report(ship, state, cfg, &a);
    state.last_u = u;
    (u, report)
}

fn control_or_hold(
    ship: &ShipState,
    target: Vec2,
    state: &mut SupervisorState,
    cfg: &SupervisorConfig,
    params: &ShipParams,
    dt: f64,
) -> f64 {
    match predefined_time_control(
        ship.p,
        ship.psi,
        target,
        ship.t,
        state.window_t0,
        &cfg.guidance,
        params,
        dt,
    ) {
        Ok(u) => u,
        Err(_) => {
            state.diag.control_degenerate += 1;
            ship.psi
        }
    }
}

/// Arm a fresh avoidance episode from the best workable candidate.
/// Candidates whose virtual waypoint cannot be constructed (ship inside the
/// box) are skipped in priority order.
#[allow(clippy::too_many_arguments)]
fn arm_episode(
    state: &mut SupervisorState,
    ordered: &[&Candidate],
    ship: &ShipState,
    cfg: &SupervisorConfig,
    params: &ShipParams,
    dt: f64,
    t: f64,
    retrigger: bool,
) -> bool {
    for cand in ordered {
        match virtual_waypoint(&cand.ubox, ship.p, ship.psi, cfg.side) {
            Ok(vw) => {
                if vw.fallback {
                    state.diag.vw_fallbacks += 1;
                }
                if cand.ubox.dsafe_fallback {
                    state.diag.dsafe_fallbacks += 1;
                }
                let d_v1 = ship.p.dist(vw.vertex);
                let l1 = d_v1 > cfg.guidance.delta;
                let l2 = d_v1 > 1e-9
                    && wrap_angle(bearing(ship.p, vw.vertex) - ship.psi).abs() < FRAC_PI_2;
                state.window_t0 = t;
                let gate_name = match cfg.switching {
                    SwitchingStrategy::Binary => "G11&G12",
                    SwitchingStrategy::Risk => "G11&G22",
                };
                let reason = if retrigger {
                    format!("retrigger:{gate_name}")
                } else {
                    gate_name.to_string()
                };
                let mut episode = Episode {
                    key: cand.key.clone(),
                    ubox: cand.ubox.clone(),
                    v1: vw.vertex,
                    frozen_u: None,
                    stall_flagged: false,
                };
                state.box_log.push(BoxLogEntry { t, verts: cand.ubox.world_vertices() });
                if l1 && l2 {
                    state.mode = Mode::S2;
                    state.episode = Some(episode);
                    state.switch_log.push(SwitchEvent { t, mode: Mode::S2, reason });
                } else {
                    // Direct S3 entry: freeze the command the S2 controller
                    // would issue right now.
                    let mut probe = SupervisorState { window_t0: t, ..state.clone() };
                    let u_c = control_or_hold(ship, vw.vertex, &mut probe, cfg, params, dt);
                    state.diag = probe.diag;
                    episode.frozen_u = Some(u_c);
                    state.mode = Mode::S3;
                    state.episode = Some(episode);
                    state
                        .switch_log
                        .push(SwitchEvent { t, mode: Mode::S3, reason: format!("{reason}:direct") });
                }
                return true;
            }
            Err(_) => continue,
        }
    }
    false
}
