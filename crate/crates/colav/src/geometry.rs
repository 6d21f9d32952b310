//! Planar geometry: vectors, angle wrapping, line-of-sight frames, convex
//! regions, and the conservative region-intersection test behind the
//! avoidance guards.
//!
//! Every region here is a convex polygon stored counter-clockwise.  Discs are
//! over-approximated by their circumscribed regular polygon so that region
//! containment errs on the safe side: a true intersection is never reported
//! as disjoint.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

/// Number of vertices used when a disc is over-approximated by a polygon.
const DISC_SIDES: usize = 64;

/// A 2-D vector / point in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector at the given angle (radians, measured from +x).
    pub fn from_angle(theta: f64) -> Self {
        Vec2::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product (signed parallelogram area).
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Chebyshev (max-coordinate) distance.
    pub fn chebyshev_dist(self, o: Vec2) -> f64 {
        (self.x - o.x).abs().max((self.y - o.y).abs())
    }

    /// Counter-clockwise rotation by `theta` radians.
    pub fn rotated(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Left-hand perpendicular (90° CCW).
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wrap an angle to the half-open interval (−π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    debug_assert!(theta.is_finite(), "wrap_angle on non-finite angle");
    let r = theta.rem_euclid(TAU); // [0, 2π)
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Bearing (radians from +x, standard atan2 convention) of `to` as seen from
/// `from`.  Zero-length baselines return 0.
pub fn bearing(from: Vec2, to: Vec2) -> f64 {
    let d = to - from;
    d.y.atan2(d.x)
}

/// Rigid transform between the world frame and a derived frame:
/// `frame = R(rot) · world + trans`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameTransform {
    /// Rotation (radians) applied to world coordinates.
    pub rot: f64,
    /// Translation applied after the rotation.
    pub trans: Vec2,
}

impl FrameTransform {
    pub fn identity() -> Self {
        FrameTransform { rot: 0.0, trans: Vec2::ZERO }
    }

    /// World point → frame coordinates.
    pub fn apply(&self, p: Vec2) -> Vec2 {
        p.rotated(self.rot) + self.trans
    }

    /// Frame point → world coordinates.
    pub fn apply_inv(&self, q: Vec2) -> Vec2 {
        (q - self.trans).rotated(-self.rot)
    }

    /// World heading → frame heading (wrapped).
    pub fn apply_heading(&self, psi: f64) -> f64 {
        wrap_angle(psi + self.rot)
    }

    /// Rotate a free vector (no translation) into the frame.
    pub fn apply_vec(&self, v: Vec2) -> Vec2 {
        v.rotated(self.rot)
    }
}

/// Line-of-sight frame anchored at `origin` with +x pointing at `target`.
///
/// `apply(origin) = (0, 0)` and `apply(target) = (‖target − origin‖, 0)`.
/// Errors when the two points coincide (bearing undefined).
pub fn los_frame(origin: Vec2, target: Vec2) -> Result<FrameTransform> {
    let d = target.dist(origin);
    if d < 1e-9 {
        return Err(Error::DegenerateGeometry(format!(
            "line-of-sight frame from ({:.3}, {:.3}) to a coincident target",
            origin.x, origin.y
        )));
    }
    let rot = -bearing(origin, target);
    let trans = -origin.rotated(rot);
    Ok(FrameTransform { rot, trans })
}

/// Axis-aligned box given by center and half-extents (in whatever frame the
/// caller works in).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box2 {
    pub center: Vec2,
    /// Half-extent along x (`hx`) and y (`hy`); both > 0.
    pub half: Vec2,
}

impl Box2 {
    pub fn new(center: Vec2, hx: f64, hy: f64) -> Self {
        Box2 { center, half: Vec2::new(hx, hy) }
    }

    /// Corners counter-clockwise starting from the (min x, min y) corner.
    pub fn vertices(&self) -> [Vec2; 4] {
        let (c, h) = (self.center, self.half);
        [
            Vec2::new(c.x - h.x, c.y - h.y),
            Vec2::new(c.x + h.x, c.y - h.y),
            Vec2::new(c.x + h.x, c.y + h.y),
            Vec2::new(c.x - h.x, c.y + h.y),
        ]
    }

    /// True when `p` lies inside the box grown by `margin` on every side.
    pub fn contains(&self, p: Vec2, margin: f64) -> bool {
        (p.x - self.center.x).abs() <= self.half.x + margin
            && (p.y - self.center.y).abs() <= self.half.y + margin
    }

    pub fn to_region(&self) -> ConvexRegion {
        ConvexRegion { verts: self.vertices().to_vec() }
    }
}

/// Convex polygon with counter-clockwise vertices.  Degenerate regions
/// (a single point, or a segment from collinear input) keep 1 or 2 vertices
/// and are still valid inputs to [`regions_intersect`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexRegion {
    verts: Vec<Vec2>,
}

impl ConvexRegion {
    /// Convex hull of arbitrary points (Andrew monotone chain).
    ///
    /// Errors on an empty input; duplicates and collinear interior points
    /// are dropped.
    pub fn from_points(points: &[Vec2]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::DegenerateGeometry("convex hull of zero points".into()));
        }
        let mut pts: Vec<Vec2> = points.to_vec();
        pts.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap().then(a.y.partial_cmp(&b.y).unwrap()));
        pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
        if pts.len() <= 2 {
            return Ok(ConvexRegion { verts: pts });
        }
        let mut lower: Vec<Vec2> = Vec::with_capacity(pts.len());
        for &p in &pts {
            while lower.len() >= 2 {
                let (a, b) = (lower[lower.len() - 2], lower[lower.len() - 1]);
                if (b - a).cross(p - a) <= 0.0 {
                    lower.pop();
                } else {
                    break;
                }
            }
            lower.push(p);
        }
        let mut upper: Vec<Vec2> = Vec::with_capacity(pts.len());
        for &p in pts.iter().rev() {
            while upper.len() >= 2 {
                let (a, b) = (upper[upper.len() - 2], upper[upper.len() - 1]);
                if (b - a).cross(p - a) <= 0.0 {
                    upper.pop();
                } else {
                    break;
                }
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        if lower.len() < 3 {
            // All input collinear: keep the two extreme points as a segment.
            let mut seg = vec![pts[0], *pts.last().unwrap()];
            seg.dedup_by(|a, b| a.x == b.x && a.y == b.y);
            return Ok(ConvexRegion { verts: seg });
        }
        Ok(ConvexRegion { verts: lower })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.verts
    }

    /// Axis-aligned bounding box as (min, max) corners.
    pub fn bbox(&self) -> (Vec2, Vec2) {
        let mut min = self.verts[0];
        let mut max = self.verts[0];
        for v in &self.verts[1..] {
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
        (min, max)
    }

    /// Point membership with tolerance `tol` ≥ 0 (closed region).
    pub fn contains_point(&self, p: Vec2, tol: f64) -> bool {
        match self.verts.len() {
            1 => self.verts[0].dist(p) <= tol,
            2 => dist_point_segment(p, self.verts[0], self.verts[1]) <= tol,
            _ => {
                let n = self.verts.len();
                for i in 0..n {
                    let a = self.verts[i];
                    let b = self.verts[(i + 1) % n];
                    let edge = b - a;
                    // Positive cross = left of edge = inside for CCW order.
                    if edge.cross(p - a) < -tol * edge.norm() {
                        return false;
                    }
                }
                true
            }
        }
    }
}

fn dist_point_segment(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq < 1e-300 {
        return p.dist(a);
    }
    let s = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.dist(a + ab * s)
}

/// Closed-set intersection test for two convex regions via the separating
/// axis theorem.
///
/// Candidate axes are the edge normals *and* edge directions of both regions
/// plus the line between representative points, which also covers degenerate
/// (point/segment) regions.  Touching boundaries count as intersecting, and
/// the numeric tolerance is biased so that a true intersection is never
/// reported as disjoint (conservative for safety guards).
pub fn regions_intersect(a: &ConvexRegion, b: &ConvexRegion) -> bool {
    let (amin, amax) = a.bbox();
    let (bmin, bmax) = b.bbox();
    let scale = amax.x.abs().max(amax.y.abs()).max(bmax.x.abs()).max(bmax.y.abs()).max(
        amin.x.abs().max(amin.y.abs()).max(bmin.x.abs()).max(bmin.y.abs()),
    );
    let tol = 1e-9 * (1.0 + scale);
    // Quick reject on bounding boxes (these are the x / y separating axes).
    if amax.x < bmin.x - tol || bmax.x < amin.x - tol || amax.y < bmin.y - tol || bmax.y < amin.y - tol
    {
        return false;
    }

    let check_axis = |axis: Vec2| -> bool {
        // Returns true when the axis separates the regions.
        let n = axis.norm();
        if n < 1e-12 {
            return false;
        }
        let axis = axis * (1.0 / n);
        let (mut amin_p, mut amax_p) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in a.vertices() {
            let s = v.dot(axis);
            amin_p = amin_p.min(s);
            amax_p = amax_p.max(s);
        }
        let (mut bmin_p, mut bmax_p) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in b.vertices() {
            let s = v.dot(axis);
            bmin_p = bmin_p.min(s);
            bmax_p = bmax_p.max(s);
        }
        amax_p < bmin_p - tol || bmax_p < amin_p - tol
    };

    // Try the smaller region's (fewer) axes first — cheap early exit.
    let (first, second) =
        if a.vertices().len() <= b.vertices().len() { (a, b) } else { (b, a) };
    for region in [first, second] {
        let verts = region.vertices();
        let n = verts.len();
        // Edge normals separate any pair of full convex polygons; degenerate
        // regions (points/segments) additionally need the edge direction.
        let degenerate = a.vertices().len() < 3 || b.vertices().len() < 3;
        if n >= 2 {
            for i in 0..n {
                let e = verts[(i + 1) % n] - verts[i];
                if check_axis(e.perp()) || (degenerate && check_axis(e)) {
                    return false;
                }
            }
        }
    }
    // Representative-point axis covers the point-vs-point / point-vs-segment
    // cases where no edge normal exists.
    if check_axis(b.vertices()[0] - a.vertices()[0]) {
        return false;
    }
    true
}

/// Region every ship position can occupy while converging to `goal`:
/// the convex hull of the transient disc of radius `speed · t_p` around the
/// current position `p` and the goal point itself.
///
/// The disc is over-approximated by its circumscribed regular 64-gon
/// (circumradius r / cos(π/64) ≈ 1.0012 r) so the hull *contains* the true
/// reachable set.
pub fn ship_reach_region(p: Vec2, speed: f64, t_p: f64, goal: Vec2) -> ConvexRegion {
    let r = (speed * t_p).max(0.0);
    if r <= 0.0 {
        return ConvexRegion::from_points(&[p, goal]).expect("two points");
    }
    let rc = r / (PI / DISC_SIDES as f64).cos();
    let mut pts = Vec::with_capacity(DISC_SIDES + 1);
    for i in 0..DISC_SIDES {
        let th = TAU * i as f64 / DISC_SIDES as f64;
        pts.push(p + Vec2::from_angle(th) * rc);
    }
    pts.push(goal);
    ConvexRegion::from_points(&pts).expect("non-empty point set")
}

/// Region swept by a square of half-width `half_width` whose center moves
/// from `start` to `end` (Minkowski sum of the segment with the square):
/// the convex hull of both end squares' corners.  The square is aligned to
/// the sweep direction — a Chebyshev ball in the frame of the motion — so
/// the construction commutes with rigid transforms of its inputs; a
/// zero-length sweep falls back to world axes.
pub fn swept_square_region(start: Vec2, end: Vec2, half_width: f64) -> ConvexRegion {
    let h = half_width.max(0.0);
    let dir = end - start;
    let (ux, uy) = if dir.norm() > 1e-12 {
        let u = dir * (1.0 / dir.norm());
        (u, u.perp())
    } else {
        (Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0))
    };
    let mut pts = Vec::with_capacity(8);
    for c in [start, end] {
        for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
            pts.push(c + ux * (sx * h) + uy * (sy * h));
        }
    }
    ConvexRegion::from_points(&pts).expect("non-empty point set")
}
