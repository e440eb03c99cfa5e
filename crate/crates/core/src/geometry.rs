//! Planar geometry used by the map, the visibility model and collision checks.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            Vec2::new(self.x / n, self.y / n)
        }
    }

    /// Normal pointing to the right of this direction.
    pub fn right(self) -> Vec2 {
        Vec2::new(self.y, -self.x)
    }

    pub fn left(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
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
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Rigid placement of a map-local frame in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    pub angle: f64,
    pub translation: Vec2,
}

impl Default for Isometry {
    fn default() -> Self {
        Self::identity()
    }
}

impl Isometry {
    pub const fn identity() -> Self {
        Self { angle: 0.0, translation: Vec2::new(0.0, 0.0) }
    }

    pub fn new(angle: f64, translation: Vec2) -> Self {
        Self { angle, translation }
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        let (s, c) = self.angle.sin_cos();
        Vec2::new(c * p.x - s * p.y, s * p.x + c * p.y) + self.translation
    }

    pub fn rotate(&self, d: Vec2) -> Vec2 {
        let (s, c) = self.angle.sin_cos();
        Vec2::new(c * d.x - s * d.y, s * d.x + c * d.y)
    }

    /// `self` applied after `inner`.
    pub fn compose(&self, inner: &Isometry) -> Isometry {
        Isometry { angle: self.angle + inner.angle, translation: self.apply(inner.translation) }
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn overlaps(&self, o: &Rect) -> bool {
        self.min.x < o.max.x && o.min.x < self.max.x && self.min.y < o.max.y && o.min.y < self.max.y
    }

    pub fn corners(&self) -> [Vec2; 4] {
        [self.min, Vec2::new(self.max.x, self.min.y), self.max, Vec2::new(self.min.x, self.max.y)]
    }

    pub fn expanded(&self, m: f64) -> Rect {
        Rect::new(self.min - Vec2::new(m, m), self.max + Vec2::new(m, m))
    }

    /// Liang-Barsky test: does the closed segment `a..b` touch the rectangle interior or boundary.
    pub fn intersects_segment(&self, a: Vec2, b: Vec2) -> bool {
        let d = b - a;
        let mut t0 = 0.0_f64;
        let mut t1 = 1.0_f64;
        let checks = [
            (-d.x, a.x - self.min.x),
            (d.x, self.max.x - a.x),
            (-d.y, a.y - self.min.y),
            (d.y, self.max.y - a.y),
        ];
        for (p, q) in checks {
            if p == 0.0 {
                if q < 0.0 {
                    return false;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    if r > t1 {
                        return false;
                    }
                    t0 = t0.max(r);
                } else {
                    if r < t0 {
                        return false;
                    }
                    t1 = t1.min(r);
                }
            }
        }
        t0 <= t1
    }
}

/// Polyline with cached cumulative arc length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    points: Vec<Vec2>,
    #[serde(skip)]
    cum: Vec<f64>,
}

impl Polyline {
    pub fn new(points: Vec<Vec2>) -> Self {
        let mut p = Self { points, cum: Vec::new() };
        p.rebuild();
        p
    }

    fn rebuild(&mut self) {
        self.cum.clear();
        let mut acc = 0.0;
        self.cum.push(0.0);
        for w in self.points.windows(2) {
            acc += w[0].dist(w[1]);
            self.cum.push(acc);
        }
    }

    /// Restores the length cache after deserialization.
    pub fn reindex(&mut self) {
        self.rebuild();
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().unwrap_or(&0.0)
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let n = self.points.len();
        if n < 2 {
            return (0, 0.0);
        }
        let s = s.clamp(0.0, self.length());
        // partition_point gives the first cumulative length strictly greater than s
        let i = self.cum.partition_point(|&c| c <= s).clamp(1, n - 1) - 1;
        let seg = self.cum[i + 1] - self.cum[i];
        let t = if seg > 0.0 { (s - self.cum[i]) / seg } else { 0.0 };
        (i, t)
    }

    pub fn point_at(&self, s: f64) -> Vec2 {
        if self.points.len() == 1 {
            return self.points[0];
        }
        let (i, t) = self.locate(s);
        self.points[i] + (self.points[i + 1] - self.points[i]) * t
    }

    pub fn direction_at(&self, s: f64) -> Vec2 {
        if self.points.len() < 2 {
            return Vec2::new(1.0, 0.0);
        }
        let (i, _) = self.locate(s);
        (self.points[i + 1] - self.points[i]).normalized()
    }

    pub fn segments(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Rectangle with arbitrary heading, used for vehicle footprints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    pub center: Vec2,
    /// Unit heading.
    pub axis: Vec2,
    pub half_length: f64,
    pub half_width: f64,
}

impl OrientedRect {
    pub fn corners(&self) -> [Vec2; 4] {
        let f = self.axis * self.half_length;
        let r = self.axis.right() * self.half_width;
        [self.center + f + r, self.center + f - r, self.center - f - r, self.center - f + r]
    }

    fn project(corners: &[Vec2; 4], axis: Vec2) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in corners {
            let p = c.dot(axis);
            lo = lo.min(p);
            hi = hi.max(p);
        }
        (lo, hi)
    }

    /// Separating-axis test; touching boundaries do not count as overlap.
    pub fn overlaps(&self, o: &OrientedRect) -> bool {
        let a = self.corners();
        let b = o.corners();
        for axis in [self.axis, self.axis.right(), o.axis, o.axis.right()] {
            let (a0, a1) = Self::project(&a, axis);
            let (b0, b1) = Self::project(&b, axis);
            if a1 <= b0 || b1 <= a0 {
                return false;
            }
        }
        true
    }

    /// Euclidean distance between two footprints, zero when they overlap.
    pub fn distance(&self, o: &OrientedRect) -> f64 {
        if self.overlaps(o) {
            return 0.0;
        }
        let a = self.corners();
        let b = o.corners();
        let mut best = f64::INFINITY;
        for i in 0..4 {
            let (p0, p1) = (a[i], a[(i + 1) % 4]);
            let (q0, q1) = (b[i], b[(i + 1) % 4]);
            for k in 0..4 {
                best = best.min(point_segment_distance(b[k], p0, p1));
                best = best.min(point_segment_distance(a[k], q0, q1));
            }
        }
        best
    }
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    p.dist(a + d * t)
}

/// Signed area times two; positive for counter-clockwise rings.
pub fn signed_area2(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| poly[i].cross(poly[(i + 1) % n])).sum()
}

pub fn polygon_area(poly: &[Vec2]) -> f64 {
    signed_area2(poly).abs() * 0.5
}

/// Sutherland-Hodgman clip of `subject` by a convex counter-clockwise `clip` polygon.
pub fn clip_convex(subject: &[Vec2], clip: &[Vec2]) -> Vec<Vec2> {
    let mut out: Vec<Vec2> = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if out.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % n];
        let inside = |p: Vec2| (b - a).cross(p - a) >= 0.0;
        let input = std::mem::take(&mut out);
        let m = input.len();
        for j in 0..m {
            let cur = input[j];
            let prev = input[(j + m - 1) % m];
            let (ci, pi) = (inside(cur), inside(prev));
            if ci {
                if !pi {
                    out.push(line_intersection(prev, cur, a, b));
                }
                out.push(cur);
            } else if pi {
                out.push(line_intersection(prev, cur, a, b));
            }
        }
    }
    out
}

fn line_intersection(p0: Vec2, p1: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let r = p1 - p0;
    let s = b - a;
    let denom = r.cross(s);
    if denom == 0.0 {
        return p0;
    }
    let t = (a - p0).cross(s) / denom;
    p0 + r * t
}

/// Andrew's monotone chain. Output is counter-clockwise starting at the
/// lexicographically smallest point, so equal point sets give equal hulls.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Vec2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && (lower[lower.len() - 1] - lower[lower.len() - 2]).cross(p - lower[lower.len() - 2]) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Vec2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && (upper[upper.len() - 1] - upper[upper.len() - 2]).cross(p - upper[upper.len() - 2]) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Rectangle swept by a segment buffered by `half_width` on both sides, counter-clockwise.
pub fn segment_quad(a: Vec2, b: Vec2, half_width: f64) -> [Vec2; 4] {
    let d = (b - a).normalized();
    let l = d.left() * half_width;
    [a - l, b - l, b + l, a + l]
}
