use crate::geometry::OrientedRect;
use crate::road::{CrosswalkId, IntersectionId, LaneId, MovementId, RoadNetwork, Segment};

use super::WorldState;

/// How far into a movement a vehicle's rear must be before followers taking
/// a sibling movement from the same lane stop treating it as a leader, m.
pub const SIBLING_OVERLAP: f64 = 5.0;

/// Lateral clearance around a lane that a pedestrian must reach before the lane counts as free, m.
pub const PED_LANE_MARGIN: f64 = 0.5;

/// A vehicle body overlapping a segment, in segment offsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Occupant {
    pub vehicle: usize,
    pub rear: f64,
    pub front: f64,
}

/// A vehicle inside or heading for an intersection movement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproachEntry {
    pub vehicle: usize,
    pub movement: MovementId,
    /// Distance from the front bumper to the movement start; zero once inside.
    pub d_c: f64,
    /// Front-bumper offset along the movement; negative before entry.
    pub pos: f64,
    /// The body overlaps the movement.
    pub committed: bool,
}

/// Spatial lookup tables rebuilt from a world snapshot once per frame.
#[derive(Debug, Clone, Default)]
pub struct TrafficIndex {
    /// Per segment (lanes then movements).
    pub occupancy: Vec<Vec<Occupant>>,
    /// Per intersection.
    pub approaches: Vec<Vec<ApproachEntry>>,
    /// Per lane: vehicles whose route reaches the lane start within the
    /// look-ahead, with the distance from their front bumper (negative once on the lane).
    pub arrivals: Vec<Vec<(usize, f64)>>,
    /// Per crosswalk: pedestrians currently crossing it.
    pub crossing: Vec<Vec<usize>>,
    pub footprints: Vec<OrientedRect>,
}

impl TrafficIndex {
    pub fn build(world: &WorldState, lookahead: f64) -> TrafficIndex {
        let net = &*world.network;
        let mut idx = TrafficIndex {
            occupancy: vec![Vec::new(); net.segment_count()],
            approaches: vec![Vec::new(); net.intersections.len()],
            arrivals: vec![Vec::new(); net.lanes.len()],
            crossing: vec![Vec::new(); net.crosswalks.len()],
            footprints: Vec::with_capacity(world.vehicles.len()),
        };
        for (vi, v) in world.vehicles.iter().enumerate() {
            idx.footprints.push(v.footprint(net));
            let pieces = &v.path.pieces;
            let k = v.path.piece_index(v.s);
            let rear = v.rear();
            // body
            let mut j = k;
            loop {
                let p = pieces[j];
                idx.occupancy[net.segment_index(p.seg)].push(Occupant { vehicle: vi, rear: rear - p.start, front: v.s - p.start });
                if let Segment::Movement(m) = p.seg {
                    if let Some(i) = net.movement(m).intersection {
                        idx.approaches[i.0 as usize].push(ApproachEntry {
                            vehicle: vi,
                            movement: m,
                            d_c: 0.0,
                            pos: v.s - p.start,
                            committed: true,
                        });
                    }
                }
                if let Segment::Lane(l) = p.seg {
                    idx.arrivals[l.0 as usize].push((vi, p.start - v.s));
                }
                if j == 0 || p.start <= rear {
                    break;
                }
                j -= 1;
            }
            // ahead
            let mut next_box = true;
            for p in &pieces[k + 1..] {
                let d = p.start - v.s;
                if d > lookahead {
                    break;
                }
                match p.seg {
                    Segment::Lane(l) => idx.arrivals[l.0 as usize].push((vi, d)),
                    Segment::Movement(m) => {
                        if let (true, Some(i)) = (next_box, net.movement(m).intersection) {
                            idx.approaches[i.0 as usize].push(ApproachEntry {
                                vehicle: vi,
                                movement: m,
                                d_c: d,
                                pos: -d,
                                committed: false,
                            });
                            next_box = false;
                        }
                    }
                }
            }
        }
        for (pi, p) in world.pedestrians.iter().enumerate() {
            if p.is_crossing() {
                idx.crossing[p.crosswalk.0 as usize].push(pi);
            }
        }
        idx
    }

    /// Nearest vehicle body ahead of `vi` along its route within `range`:
    /// (vehicle, gap from front bumper to that body's rear). Overlapping bodies give a gap <= 0.
    pub fn leader(&self, world: &WorldState, vi: usize, range: f64) -> Option<(usize, f64)> {
        let net = &*world.network;
        let v = &world.vehicles[vi];
        let pieces = &v.path.pieces;
        let mut best: Option<(usize, f64)> = None;
        for p in &pieces[v.path.piece_index(v.s)..] {
            if p.start - v.s > range || best.is_some_and(|(_, g)| p.start - v.s > g) {
                break;
            }
            for o in &self.occupancy[net.segment_index(p.seg)] {
                if o.vehicle == vi {
                    continue;
                }
                let front = p.start + o.front;
                if front <= v.s {
                    continue;
                }
                let gap = p.start + o.rear - v.s;
                if gap <= range && best.map_or(true, |(_, g)| gap < g) {
                    best = Some((o.vehicle, gap));
                }
            }
            // movements leaving the same lane overlap near their start
            if let Segment::Movement(m) = p.seg {
                for sib in net.movements_from(net.movement(m).from).filter(|s| s.id != m) {
                    for o in &self.occupancy[net.segment_index(Segment::Movement(sib.id))] {
                        if o.vehicle == vi || o.rear >= SIBLING_OVERLAP || p.start + o.front <= v.s {
                            continue;
                        }
                        let gap = p.start + o.rear - v.s;
                        if gap <= range && best.map_or(true, |(_, g)| gap < g) {
                            best = Some((o.vehicle, gap));
                        }
                    }
                }
            }
        }
        best
    }

    /// Seconds until every pedestrian on `cw` has walked past `lane`, or
    /// `None` when nobody on it is still to pass that lane.
    pub fn crosswalk_blocks(&self, world: &WorldState, cw: CrosswalkId, lane: LaneId) -> Option<f64> {
        self.crosswalk_blockers(world, cw, lane).map(|(_, t)| t).reduce(f64::max)
    }

    /// Pedestrians still in the band of `lane` on `cw`, with the time until each leaves it.
    pub fn crosswalk_blockers<'a>(
        &'a self,
        world: &'a WorldState,
        cw: CrosswalkId,
        lane: LaneId,
    ) -> impl Iterator<Item = (usize, f64)> + 'a {
        let net = &*world.network;
        let c = net.crosswalk(cw);
        let band = c.lanes.iter().find(|(l, _, _)| *l == lane).map(|&(_, s0, s1)| {
            let u = (c.ends.1 - c.ends.0).normalized();
            let l = net.lane(lane);
            let center = (l.centerline.point_at(0.5 * (s0 + s1)) - c.ends.0).dot(u);
            (center, 0.5 * l.width + PED_LANE_MARGIN)
        });
        let len = c.length();
        let peds: &[usize] = if band.is_some() { &self.crossing[cw.0 as usize] } else { &[] };
        peds.iter().filter_map(move |&pi| {
            let (center, half) = band?;
            let p = &world.pedestrians[pi];
            let along = if p.forward { p.progress * len } else { (1.0 - p.progress) * len };
            let left = if p.forward { center + half - along } else { along - (center - half) };
            (left > 0.0).then(|| (pi, left / p.speed))
        })
    }

    pub fn approaches_at(&self, i: IntersectionId) -> &[ApproachEntry] {
        &self.approaches[i.0 as usize]
    }

    /// Entry for vehicle `vi` heading for (or in) `m`, if any.
    pub fn entry(&self, net: &RoadNetwork, vi: usize, m: MovementId) -> Option<ApproachEntry> {
        let i = net.movement(m).intersection?;
        self.approaches[i.0 as usize].iter().copied().find(|e| e.vehicle == vi && e.movement == m)
    }
}
