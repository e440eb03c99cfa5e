use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{LaneId, MovementId, RoadNetwork, Segment, SpawnPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub lanes: Vec<LaneId>,
    /// Lanes plus the movements joining them, m.
    pub length: f64,
}

impl Route {
    pub fn single(net: &RoadNetwork, lane: LaneId) -> Route {
        Route { lanes: vec![lane], length: net.lane(lane).length() }
    }

    /// Appends uniformly random successors until at least `min_length` m lie
    /// ahead of route coordinate `from`.
    pub fn extend<R: Rng + ?Sized>(&mut self, net: &RoadNetwork, rng: &mut R, from: f64, min_length: f64) {
        while self.length - from < min_length {
            let last = *self.lanes.last().expect("route has at least one lane");
            let lane = net.lane(last);
            if lane.successors.is_empty() {
                break;
            }
            let k = rng.gen_range(0..lane.successors.len());
            let next = lane.successors[k].1;
            self.length += net.movement(lane.exits[k]).path.length();
            self.length += net.lane(next).length();
            self.lanes.push(next);
        }
    }

    /// Checks that consecutive lanes are connected successors.
    pub fn is_connected(&self, net: &RoadNetwork) -> bool {
        self.lanes.windows(2).all(|w| net.lane(w[0]).successors.iter().any(|&(_, l)| l == w[1]))
    }
}

/// Samples a route starting at `start`, choosing a uniformly random permitted
/// turn at every intersection, with at least `min_length` m ahead of the start.
pub fn sample_route<R: Rng + ?Sized>(net: &RoadNetwork, start: SpawnPoint, rng: &mut R, min_length: f64) -> Route {
    let mut r = Route::single(net, start.lane);
    r.extend(net, rng, start.offset, min_length);
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub seg: Segment,
    /// Route coordinate of the piece start.
    pub start: f64,
    pub len: f64,
}

impl Piece {
    pub fn end(&self) -> f64 {
        self.start + self.len
    }
}

/// A route unrolled into lane and movement pieces with route coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutePath {
    pub route: Route,
    pub pieces: Vec<Piece>,
}

impl RoutePath {
    pub fn new(net: &RoadNetwork, route: Route) -> Self {
        let mut p = RoutePath { route: Route { lanes: Vec::new(), length: 0.0 }, pieces: Vec::new() };
        for &l in &route.lanes {
            p.push_lane(net, l);
        }
        p
    }

    fn push_lane(&mut self, net: &RoadNetwork, lane: LaneId) {
        let mut at = self.pieces.last().map_or(0.0, |p| p.end());
        if let Some(&prev) = self.route.lanes.last() {
            let m = net.movement_between(prev, lane).expect("route lanes must be connected");
            let len = net.movement(m).path.length();
            self.pieces.push(Piece { seg: Segment::Movement(m), start: at, len });
            at += len;
        }
        let len = net.lane(lane).length();
        self.pieces.push(Piece { seg: Segment::Lane(lane), start: at, len });
        self.route.lanes.push(lane);
        self.route.length = at + len;
    }

    pub fn length(&self) -> f64 {
        self.route.length
    }

    pub fn extend<R: Rng + ?Sized>(&mut self, net: &RoadNetwork, rng: &mut R, from: f64, min_length: f64) {
        let before = self.route.lanes.len();
        let mut r = self.route.clone();
        r.extend(net, rng, from, min_length);
        for &l in &r.lanes[before..] {
            self.push_lane(net, l);
        }
    }

    /// Index of the piece containing route coordinate `s` (end-inclusive on the last piece).
    pub fn piece_index(&self, s: f64) -> usize {
        let i = self.pieces.partition_point(|p| p.end() <= s);
        i.min(self.pieces.len() - 1)
    }

    pub fn piece_at(&self, s: f64) -> (Piece, f64) {
        let p = self.pieces[self.piece_index(s)];
        (p, (s - p.start).clamp(0.0, p.len))
    }

    /// Route coordinate where `seg` starts, searching from piece `from_idx`.
    pub fn find(&self, seg: Segment, from_idx: usize) -> Option<Piece> {
        self.pieces[from_idx.min(self.pieces.len())..].iter().copied().find(|p| p.seg == seg)
    }

    /// Next movement piece whose end lies ahead of `s`.
    pub fn next_movement(&self, s: f64) -> Option<(Piece, MovementId)> {
        let i = self.piece_index(s);
        self.pieces[i..].iter().find_map(|p| match p.seg {
            Segment::Movement(m) if p.end() > s => Some((*p, m)),
            _ => None,
        })
    }
}
