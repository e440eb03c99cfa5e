use crate::geometry::{clip_convex, convex_hull, polygon_area, segment_quad, Polyline, Vec2};

/// Convex quads covering the path buffered by `half_width`.
pub fn sweep_quads(path: &Polyline, half_width: f64) -> Vec<[Vec2; 4]> {
    path.segments().map(|(a, b)| segment_quad(a, b, half_width)).collect()
}

fn inside_convex(p: Vec2, quad: &[Vec2; 4]) -> bool {
    (0..4).all(|i| (quad[(i + 1) % 4] - quad[i]).cross(p - quad[i]) >= 0.0)
}

fn segments_cross(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> bool {
    let d1 = (a1 - a0).cross(b0 - a0);
    let d2 = (a1 - a0).cross(b1 - a0);
    let d3 = (b1 - b0).cross(a0 - b0);
    let d4 = (b1 - b0).cross(a1 - b0);
    d1 * d2 <= 0.0 && d3 * d4 <= 0.0
}

fn segment_touches_quad(a: Vec2, b: Vec2, quad: &[Vec2; 4]) -> bool {
    inside_convex(a, quad)
        || inside_convex(b, quad)
        || (0..4).any(|i| segments_cross(a, b, quad[i], quad[(i + 1) % 4]))
}

const SPAN_STEP: f64 = 0.05;

/// Offsets along `path` where the vehicle cross-section touches `other`'s sweep.
fn span_on(path: &Polyline, half_width: f64, other: &[[Vec2; 4]]) -> Option<(f64, f64)> {
    let len = path.length();
    let n = (len / SPAN_STEP).ceil() as usize;
    let mut first = None;
    let mut last = None;
    for i in 0..=n {
        let s = (i as f64 * SPAN_STEP).min(len);
        let c = path.point_at(s);
        let r = path.direction_at(s).right() * half_width;
        let (a, b) = (c + r, c - r);
        if other.iter().any(|q| segment_touches_quad(a, b, q)) {
            first.get_or_insert(s);
            last = Some(s);
        }
    }
    Some((first?, last?))
}

/// Geometric overlap of two path sweeps: the conflict polygon plus the
/// entry/exit offsets along each path. `None` when the sweeps are disjoint.
pub fn conflict_zone(a: &Polyline, b: &Polyline, half_width: f64) -> Option<(Vec<Vec2>, (f64, f64), (f64, f64))> {
    let qa = sweep_quads(a, half_width);
    let qb = sweep_quads(b, half_width);
    let mut pts = Vec::new();
    for x in &qa {
        for y in &qb {
            let c = clip_convex(x, y);
            if c.len() >= 3 && polygon_area(&c) > 1e-9 {
                pts.extend(c);
            }
        }
    }
    if pts.is_empty() {
        return None;
    }
    let polygon = convex_hull(&pts);
    let span_a = span_on(a, half_width, &qb)?;
    let span_b = span_on(b, half_width, &qa)?;
    Some((polygon, span_a, span_b))
}
