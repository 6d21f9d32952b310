//! Shared test oracles: brute-force implementations that are slow but
//! obviously correct, used to cross-check the library's closed forms.

use colav::geometry::{ConvexRegion, Vec2};

/// True when some point of a dense `n` x `n` grid over the overlap of the
/// two bounding boxes lies in both regions.  A `true` is proof of
/// intersection (the witness point is in both); a `false` only means the
/// grid found no witness.
pub fn grid_overlap_witness(a: &ConvexRegion, b: &ConvexRegion, n: usize) -> bool {
    let (alo, ahi) = a.bbox();
    let (blo, bhi) = b.bbox();
    let lo = Vec2::new(alo.x.max(blo.x), alo.y.max(blo.y));
    let hi = Vec2::new(ahi.x.min(bhi.x), ahi.y.min(bhi.y));
    if lo.x > hi.x || lo.y > hi.y {
        return false;
    }
    let steps = n.max(2) - 1;
    for i in 0..=steps {
        let x = lo.x + (hi.x - lo.x) * i as f64 / steps as f64;
        for j in 0..=steps {
            let y = lo.y + (hi.y - lo.y) * j as f64 / steps as f64;
            let p = Vec2::new(x, y);
            if a.contains_point(p, 0.0) && b.contains_point(p, 0.0) {
                return true;
            }
        }
    }
    false
}

/// Minimum of ‖r0 + vr·t‖ over t ∈ [0, t_end] sampled every `step`
/// seconds (end point included).
pub fn grid_min_distance(r0: Vec2, vr: Vec2, t_end: f64, step: f64) -> f64 {
    let mut best = f64::INFINITY;
    let n = (t_end / step).ceil() as u64;
    for k in 0..=n {
        let t = (k as f64 * step).min(t_end);
        best = best.min((r0 + vr * t).norm());
    }
    best
}
