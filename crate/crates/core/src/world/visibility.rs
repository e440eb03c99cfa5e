use serde::{Deserialize, Serialize};

use crate::geometry::{Rect, Vec2};
use crate::road::{IntersectionId, LaneId, MovementId, RoadNetwork, Segment};

use super::WorldState;

/// Spacing of the sample points cast against buildings, m.
pub const SAMPLE_STEP: f64 = 0.5;

/// Visibility of one conflicting approach lane. Distances are measured
/// upstream from the lane end (the intersection entry).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneVisibility {
    pub lane: LaneId,
    pub intersection: IntersectionId,
    /// Ego movement at that intersection the lane conflicts with.
    pub ego_movement: MovementId,
    /// Ego route coordinate of the nearest conflict-zone entry with this lane's movements.
    pub conflict_at: f64,
    /// Inspected length, m.
    pub range: f64,
    pub visible: Vec<(f64, f64)>,
    pub concealed: Vec<(f64, f64)>,
}

impl LaneVisibility {
    pub fn visible_length(&self) -> f64 {
        self.visible.iter().map(|(a, b)| b - a).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VisibilityMask {
    pub lanes: Vec<LaneVisibility>,
}

/// True iff the sight line from `from` to `to` misses every building.
pub fn is_visible(buildings: &[Rect], from: Vec2, to: Vec2) -> bool {
    !buildings.iter().any(|b| b.intersects_segment(from, to))
}

fn relevant_buildings(buildings: &[Rect], viewer: Vec2, pts: &[Vec2]) -> Vec<Rect> {
    let mut lo = viewer;
    let mut hi = viewer;
    for p in pts {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let bb = Rect::new(lo, hi);
    buildings.iter().copied().filter(|b| b.overlaps(&bb)).collect()
}

/// Samples `lane` every `step` m from its end up to `range` m upstream and
/// groups the samples into visible and concealed intervals.
pub fn lane_visibility(
    net: &RoadNetwork,
    buildings: &[Rect],
    viewer: Vec2,
    lane: LaneId,
    range: f64,
    step: f64,
) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let line = &net.lane(lane).centerline;
    let len = line.length();
    let range = range.min(len);
    let n = (range / step).floor() as usize;
    let ds: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
    let pts: Vec<Vec2> = ds.iter().map(|&d| line.point_at(len - d)).collect();
    let near = relevant_buildings(buildings, viewer, &pts);
    let mut visible = Vec::new();
    let mut concealed = Vec::new();
    let mut run: Option<(bool, f64, f64)> = None;
    for (&d, &p) in ds.iter().zip(&pts) {
        let vis = is_visible(&near, viewer, p);
        match &mut run {
            Some((state, _, end)) if *state == vis => *end = d,
            _ => {
                if let Some((state, a, b)) = run.take() {
                    if state { visible.push((a, b)) } else { concealed.push((a, b)) }
                }
                run = Some((vis, d, d));
            }
        }
    }
    if let Some((state, a, b)) = run {
        if state { visible.push((a, b)) } else { concealed.push((a, b)) }
    }
    (visible, concealed)
}

/// Distance upstream of the lane end of the first concealed sample, if any.
pub(crate) fn first_concealed(net: &RoadNetwork, buildings: &[Rect], viewer: Vec2, lane: LaneId, range: f64, step: f64) -> Option<f64> {
    if buildings.is_empty() {
        return None;
    }
    let line = &net.lane(lane).centerline;
    let len = line.length();
    let range = range.min(len);
    let n = (range / step).floor() as usize;
    let far = line.point_at(len - range);
    let near = relevant_buildings(buildings, viewer, &[line.point_at(len), far]);
    if near.is_empty() {
        return None;
    }
    (0..=n).map(|k| k as f64 * step).find(|&d| !is_visible(&near, viewer, line.point_at(len - d)))
}

/// Incoming lanes at intersection `i` (other than `ego_from`) that have a
/// movement conflicting with `ego_m`, with the earliest conflict entry along `ego_m`.
pub(crate) fn conflicting_lanes(net: &RoadNetwork, ego_m: MovementId) -> Vec<(LaneId, f64)> {
    let m = net.movement(ego_m);
    let Some(i) = m.intersection else { return Vec::new() };
    let mut out = Vec::new();
    for &l in &net.intersection(i).incoming {
        if l == m.from {
            continue;
        }
        let entry = net
            .movements_from(l)
            .filter_map(|o| net.conflict(ego_m, o.id))
            .map(|c| c.span.0)
            .fold(f64::INFINITY, f64::min);
        if entry.is_finite() {
            out.push((l, entry));
        }
    }
    out
}

/// Visibility, from the agent's front bumper, of every lane conflicting with
/// its route at the intersections it has not yet entered within the look-ahead.
pub fn visible_region(world: &WorldState) -> VisibilityMask {
    let net = &*world.network;
    let cfg = &world.config.ier;
    let ego = world.agent();
    let viewer = ego.front_point(net);
    let mut lanes = Vec::new();
    let k = ego.path.piece_index(ego.s);
    for p in &ego.path.pieces[k..] {
        if p.start - ego.s > cfg.lookahead {
            break;
        }
        let Segment::Movement(m) = p.seg else { continue };
        let Some(i) = net.movement(m).intersection else { continue };
        if p.start < ego.s {
            continue;
        }
        for (l, entry) in conflicting_lanes(net, m) {
            let range = cfg.monitoring_range.min(net.lane(l).length());
            let (visible, concealed) = lane_visibility(net, &net.buildings, viewer, l, range, SAMPLE_STEP);
            lanes.push(LaneVisibility {
                lane: l,
                intersection: i,
                ego_movement: m,
                conflict_at: p.start + entry,
                range,
                visible,
                concealed,
            });
        }
    }
    VisibilityMask { lanes }
}

/// Start of the concealed interval on the conflicting lane whose conflict with
/// the ego route comes first, as (lane, distance upstream of the lane end).
pub fn first_concealed_patch(mask: &VisibilityMask) -> Option<(LaneId, f64)> {
    mask.lanes
        .iter()
        .filter(|l| !l.concealed.is_empty())
        .min_by(|a, b| a.conflict_at.total_cmp(&b.conflict_at).then(a.lane.cmp(&b.lane)))
        .map(|l| (l.lane, l.concealed[0].0))
}
