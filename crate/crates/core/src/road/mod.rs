//! Road maps: lanes, intersections with their conflict zones, crosswalks and
//! buildings. Geometry is stored in a map-local frame; `frame` places the map
//! in the world.

mod conflict;
mod generate;
mod io;
mod route;
mod validate;

use serde::{Deserialize, Serialize};

use crate::geometry::{Isometry, Polyline, Rect, Vec2};

pub use conflict::{conflict_zone, sweep_quads};
pub use generate::{generate_map, minimal_map, minimal_map_with_buildings, MapGenParams};
pub use io::{load_map, save_map};
pub use route::{sample_route, Piece, Route, RoutePath};
pub use validate::{validate, ValidationReport};

/// Vehicle width used to sweep movement paths when computing conflict zones.
pub const SWEEP_WIDTH: f64 = 1.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LaneId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MovementId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IntersectionId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CrosswalkId(pub u32);

/// Grid heading of a lane, in the map-local frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dir {
    N,
    E,
    S,
    W,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::N, Dir::E, Dir::S, Dir::W];

    pub fn vec(self) -> Vec2 {
        match self {
            Dir::N => Vec2::new(0.0, 1.0),
            Dir::E => Vec2::new(1.0, 0.0),
            Dir::S => Vec2::new(0.0, -1.0),
            Dir::W => Vec2::new(-1.0, 0.0),
        }
    }

    pub fn opposite(self) -> Dir {
        match self {
            Dir::N => Dir::S,
            Dir::E => Dir::W,
            Dir::S => Dir::N,
            Dir::W => Dir::E,
        }
    }

    /// Heading after a right turn.
    pub fn cw(self) -> Dir {
        match self {
            Dir::N => Dir::E,
            Dir::E => Dir::S,
            Dir::S => Dir::W,
            Dir::W => Dir::N,
        }
    }

    /// Heading after a left turn.
    pub fn ccw(self) -> Dir {
        self.cw().opposite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Turn {
    Straight,
    Left,
    Right,
    UTurn,
}

impl Turn {
    pub fn between(from: Dir, to: Dir) -> Turn {
        if from == to {
            Turn::Straight
        } else if to == from.cw() {
            Turn::Right
        } else if to == from.ccw() {
            Turn::Left
        } else {
            Turn::UTurn
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrosswalkSpan {
    pub crosswalk: CrosswalkId,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub id: LaneId,
    pub centerline: Polyline,
    pub width: f64,
    pub speed_limit: f64,
    pub dir: Dir,
    /// Intersection this lane ends at, `None` for a dead end with a turnaround.
    pub to_intersection: Option<IntersectionId>,
    pub from_intersection: Option<IntersectionId>,
    pub successors: Vec<(Turn, LaneId)>,
    /// Movement realising each successor, index-aligned with `successors`.
    pub exits: Vec<MovementId>,
    pub crosswalks: Vec<CrosswalkSpan>,
}

impl Lane {
    pub fn length(&self) -> f64 {
        self.centerline.length()
    }
}

/// Reference from a movement to one of its conflict zones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConflictRef {
    pub zone: usize,
    pub other: MovementId,
    /// Path offsets on this movement where its sweep touches the zone.
    pub span: (f64, f64),
    pub other_span: (f64, f64),
}

/// A path through an intersection (or a dead-end turnaround) linking two lanes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Movement {
    pub id: MovementId,
    pub from: LaneId,
    pub to: LaneId,
    pub turn: Turn,
    pub path: Polyline,
    pub intersection: Option<IntersectionId>,
    pub conflicts: Vec<ConflictRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictZone {
    pub movements: (MovementId, MovementId),
    pub polygon: Vec<Vec2>,
    pub spans: ((f64, f64), (f64, f64)),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intersection {
    pub id: IntersectionId,
    pub center: Vec2,
    pub half_size: f64,
    pub incoming: Vec<LaneId>,
    pub outgoing: Vec<LaneId>,
    pub movements: Vec<MovementId>,
    pub conflict_zones: Vec<ConflictZone>,
    pub crosswalks: Vec<CrosswalkId>,
}

impl Intersection {
    pub fn degree(&self) -> usize {
        self.incoming.len()
    }

    pub fn area(&self) -> Rect {
        let h = Vec2::new(self.half_size, self.half_size);
        Rect::new(self.center - h, self.center + h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crosswalk {
    pub id: CrosswalkId,
    pub intersection: IntersectionId,
    /// Curb-side endpoints; pedestrians walk between them.
    pub ends: (Vec2, Vec2),
    pub lanes: Vec<(LaneId, f64, f64)>,
}

impl Crosswalk {
    pub fn length(&self) -> f64 {
        self.ends.0.dist(self.ends.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpawnPoint {
    pub lane: LaneId,
    pub offset: f64,
}

/// A route piece: either a lane or a movement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Segment {
    Lane(LaneId),
    Movement(MovementId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadNetwork {
    pub lanes: Vec<Lane>,
    pub movements: Vec<Movement>,
    pub intersections: Vec<Intersection>,
    pub crosswalks: Vec<Crosswalk>,
    pub buildings: Vec<Rect>,
    pub spawn_points: Vec<SpawnPoint>,
    pub agent_spawns: Vec<SpawnPoint>,
    pub bounds: Rect,
    #[serde(default)]
    pub frame: Isometry,
}

impl RoadNetwork {
    pub fn lane(&self, id: LaneId) -> &Lane {
        &self.lanes[id.0 as usize]
    }

    pub fn movement(&self, id: MovementId) -> &Movement {
        &self.movements[id.0 as usize]
    }

    pub fn intersection(&self, id: IntersectionId) -> &Intersection {
        &self.intersections[id.0 as usize]
    }

    pub fn crosswalk(&self, id: CrosswalkId) -> &Crosswalk {
        &self.crosswalks[id.0 as usize]
    }

    pub fn segment_count(&self) -> usize {
        self.lanes.len() + self.movements.len()
    }

    /// Dense index over lanes followed by movements.
    pub fn segment_index(&self, seg: Segment) -> usize {
        match seg {
            Segment::Lane(l) => l.0 as usize,
            Segment::Movement(m) => self.lanes.len() + m.0 as usize,
        }
    }

    pub fn segment_polyline(&self, seg: Segment) -> &Polyline {
        match seg {
            Segment::Lane(l) => &self.lane(l).centerline,
            Segment::Movement(m) => &self.movement(m).path,
        }
    }

    pub fn segment_length(&self, seg: Segment) -> f64 {
        self.segment_polyline(seg).length()
    }

    pub fn movement_between(&self, from: LaneId, to: LaneId) -> Option<MovementId> {
        let lane = self.lane(from);
        lane.successors.iter().position(|&(_, l)| l == to).map(|i| lane.exits[i])
    }

    /// Movements leaving `lane`, in successor order.
    pub fn movements_from(&self, lane: LaneId) -> impl Iterator<Item = &Movement> + '_ {
        self.lane(lane).exits.iter().map(move |&m| self.movement(m))
    }

    pub fn conflict(&self, a: MovementId, b: MovementId) -> Option<&ConflictRef> {
        self.movement(a).conflicts.iter().find(|c| c.other == b)
    }

    /// Same network placed elsewhere in the world; map-local geometry is untouched.
    pub fn transformed(&self, iso: Isometry) -> RoadNetwork {
        let mut n = self.clone();
        n.frame = iso.compose(&self.frame);
        n
    }

    pub fn to_world(&self, p: Vec2) -> Vec2 {
        self.frame.apply(p)
    }

    pub(crate) fn reindex(&mut self) {
        for l in &mut self.lanes {
            l.centerline.reindex();
        }
        for m in &mut self.movements {
            m.path.reindex();
        }
    }
}
