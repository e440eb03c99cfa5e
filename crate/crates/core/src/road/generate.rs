//! Perturbed-grid map generator.
//!
//! A coarse grid of candidate intersections is laid out, every boundary node
//! gets stub roads towards the map edge ending in a turnaround, internal
//! roads are randomly removed while every intersection keeps degree >= 3 and
//! the directed lane graph stays strongly connected, and rectangular
//! buildings are dropped into block interiors.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::conflict::conflict_zone;
use super::{
    validate, ConflictRef, ConflictZone, Crosswalk, CrosswalkId, CrosswalkSpan, Dir, Intersection, IntersectionId, Lane,
    LaneId, Movement, MovementId, RoadNetwork, SpawnPoint, Turn, SWEEP_WIDTH,
};
use crate::error::{Result, SimError};
use crate::geometry::{Isometry, Polyline, Rect, Vec2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapGenParams {
    /// Grid nodes along x.
    pub cols: u32,
    /// Grid nodes along y.
    pub rows: u32,
    /// Node spacing, m.
    pub block_size: f64,
    /// Length of the dead-end roads leaving boundary nodes, m.
    pub stub_length: f64,
    /// Probability that a block receives a building.
    pub building_density: f64,
    /// Minimum distance between a road axis and a building, m.
    pub building_setback: f64,
    /// Probability of trying to delete each internal road.
    pub edge_removal: f64,
    pub lane_width: f64,
    pub speed_limit: f64,
}

impl Default for MapGenParams {
    fn default() -> Self {
        Self {
            cols: 4,
            rows: 4,
            block_size: 80.0,
            stub_length: 40.0,
            building_density: 0.7,
            building_setback: 8.0,
            edge_removal: 0.2,
            lane_width: 3.5,
            speed_limit: 50.0 / 3.6,
        }
    }
}

impl MapGenParams {
    fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(SimError::InvalidMapParams(m.to_string()));
        if self.cols == 0 || self.rows == 0 {
            return bad("grid needs at least one node in each direction to host an intersection");
        }
        if !(0.0..=1.0).contains(&self.building_density) || !(0.0..=1.0).contains(&self.edge_removal) {
            return bad("building_density and edge_removal must lie in [0, 1]");
        }
        if !(self.lane_width > 0.0 && self.speed_limit > 0.0) {
            return bad("lane width and speed limit must be positive");
        }
        if self.building_setback < self.lane_width + 2.5 {
            return bad("building setback must clear the road and sidewalk");
        }
        let min_block = 2.0 * self.lane_width + 30.0;
        if !(self.block_size >= min_block) {
            return bad(&format!("block size must be at least {min_block} m"));
        }
        if !(self.stub_length >= self.lane_width + 20.0) {
            return bad("stub roads are too short");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    pos: Vec2,
    dead_end: bool,
}

/// Undirected road between two nodes; `dir` points from `a` to `b`.
#[derive(Debug, Clone, Copy)]
struct Road {
    a: usize,
    b: usize,
    dir: Dir,
    internal: bool,
}

struct Skeleton {
    nodes: Vec<Node>,
    roads: Vec<Road>,
}

impl Skeleton {
    fn grid(p: &MapGenParams) -> Self {
        let (cols, rows) = (p.cols as usize, p.rows as usize);
        let mut nodes = Vec::new();
        let mut roads = Vec::new();
        for j in 0..rows {
            for i in 0..cols {
                nodes.push(Node { pos: Vec2::new(i as f64 * p.block_size, j as f64 * p.block_size), dead_end: false });
            }
        }
        let idx = |i: usize, j: usize| j * cols + i;
        for j in 0..rows {
            for i in 0..cols {
                if i + 1 < cols {
                    roads.push(Road { a: idx(i, j), b: idx(i + 1, j), dir: Dir::E, internal: true });
                }
                if j + 1 < rows {
                    roads.push(Road { a: idx(i, j), b: idx(i, j + 1), dir: Dir::N, internal: true });
                }
            }
        }
        for j in 0..rows {
            for i in 0..cols {
                let mut stubs = Vec::new();
                if i == 0 {
                    stubs.push(Dir::W);
                }
                if i + 1 == cols {
                    stubs.push(Dir::E);
                }
                if j == 0 {
                    stubs.push(Dir::S);
                }
                if j + 1 == rows {
                    stubs.push(Dir::N);
                }
                for d in stubs {
                    let a = idx(i, j);
                    let pos = nodes[a].pos + d.vec() * p.stub_length;
                    nodes.push(Node { pos, dead_end: true });
                    roads.push(Road { a, b: nodes.len() - 1, dir: d, internal: false });
                }
            }
        }
        Self { nodes, roads }
    }

    fn degree(&self, n: usize, removed: &[bool]) -> usize {
        self.roads.iter().zip(removed).filter(|(r, &x)| !x && (r.a == n || r.b == n)).count()
    }

    /// Directed-road graph: successors of a directed road exclude the U-turn
    /// except at dead ends. Returns true when it is strongly connected.
    fn strongly_connected(&self, removed: &[bool]) -> bool {
        let live: Vec<usize> = (0..self.roads.len()).filter(|&i| !removed[i]).collect();
        // directed road k: live[k/2] traversed forward (even) or backward (odd)
        let ends = |k: usize| {
            let r = self.roads[live[k / 2]];
            if k % 2 == 0 {
                (r.a, r.b)
            } else {
                (r.b, r.a)
            }
        };
        let m = live.len() * 2;
        if m == 0 {
            return false;
        }
        let mut fwd = vec![Vec::new(); m];
        let mut rev = vec![Vec::new(); m];
        for k in 0..m {
            let (from, to) = ends(k);
            for q in 0..m {
                let (f2, t2) = ends(q);
                if f2 != to {
                    continue;
                }
                let uturn = t2 == from && q / 2 == k / 2;
                if uturn && !self.nodes[to].dead_end {
                    continue;
                }
                fwd[k].push(q);
                rev[q].push(k);
            }
        }
        let reach = |adj: &Vec<Vec<usize>>| {
            let mut seen = vec![false; m];
            let mut queue = VecDeque::from([0]);
            seen[0] = true;
            while let Some(k) = queue.pop_front() {
                for &q in &adj[k] {
                    if !seen[q] {
                        seen[q] = true;
                        queue.push_back(q);
                    }
                }
            }
            seen.iter().all(|&s| s)
        };
        reach(&fwd) && reach(&rev)
    }
}

/// Quadratic Bezier from `p` (heading `din`) to `q` (heading `dout`).
fn turn_path(p: Vec2, din: Vec2, q: Vec2, dout: Vec2) -> Polyline {
    if (din - dout).norm() < 1e-9 {
        return Polyline::new(vec![p, q]);
    }
    // control point where the two lane axes meet
    let c = p + din * (q - p).dot(din);
    let n = 8;
    let pts = (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            p * ((1.0 - t) * (1.0 - t)) + c * (2.0 * t * (1.0 - t)) + q * (t * t)
        })
        .collect();
    Polyline::new(pts)
}

/// Half-circle turnaround from the end of an inbound lane to the start of the outbound one.
fn turnaround_path(p: Vec2, din: Vec2, q: Vec2) -> Polyline {
    let center = (p + q) * 0.5;
    let start = p - center;
    let n = 8;
    // rotate from p through the outward direction to q
    let sign = if start.cross(din) > 0.0 { 1.0 } else { -1.0 };
    let pts = (0..=n)
        .map(|i| {
            let ang = sign * std::f64::consts::PI * i as f64 / n as f64;
            let (s, c) = ang.sin_cos();
            center + Vec2::new(c * start.x - s * start.y, s * start.x + c * start.y)
        })
        .collect::<Vec<_>>();
    let mut pts = pts;
    pts[0] = p;
    pts[n] = q;
    Polyline::new(pts)
}

/// Generates a random grid map. Pure function of `(seed, params)`.
pub fn generate_map(seed: u64, params: &MapGenParams) -> Result<RoadNetwork> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sk = Skeleton::grid(params);
    let mut removed = vec![false; sk.roads.len()];
    let mut order: Vec<usize> = (0..sk.roads.len()).filter(|&i| sk.roads[i].internal).collect();
    order.shuffle(&mut rng);
    for r in order {
        if !rng.gen_bool(params.edge_removal) {
            continue;
        }
        let road = sk.roads[r];
        if sk.degree(road.a, &removed) <= 3 || sk.degree(road.b, &removed) <= 3 {
            continue;
        }
        removed[r] = true;
        if !sk.strongly_connected(&removed) {
            removed[r] = false;
        }
    }
    let mut net = build(&sk, &removed, params);
    place_buildings(&mut net, &mut rng, params);
    validate(&net).into_result()?;
    Ok(net)
}

/// Fixed single 4-way crossing with four 80 m approach roads and no buildings.
pub fn minimal_map() -> RoadNetwork {
    let params = minimal_params();
    let sk = Skeleton::grid(&params);
    let removed = vec![false; sk.roads.len()];
    let mut net = build(&sk, &removed, &params);
    // the agent approaches from the south, 60 m before the crossing
    net.agent_spawns = net
        .lanes
        .iter()
        .filter(|l| l.dir == Dir::N && l.to_intersection.is_some())
        .map(|l| SpawnPoint { lane: l.id, offset: l.length() - 60.0 })
        .collect();
    net
}

fn minimal_params() -> MapGenParams {
    MapGenParams { cols: 1, rows: 1, stub_length: 80.0, building_density: 0.0, edge_removal: 0.0, ..MapGenParams::default() }
}

/// `minimal_map` with random buildings dropped into its four corner blocks.
pub fn minimal_map_with_buildings(seed: u64, density: f64) -> RoadNetwork {
    let params = MapGenParams { building_density: density.clamp(0.0, 1.0), ..minimal_params() };
    let mut net = minimal_map();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    place_buildings(&mut net, &mut rng, &params);
    net
}

fn build(sk: &Skeleton, removed: &[bool], p: &MapGenParams) -> RoadNetwork {
    let lw = p.lane_width;
    let h = lw; // intersection half size: two lanes per road
    // node index -> intersection id
    let mut inter_of = vec![None; sk.nodes.len()];
    let mut intersections = Vec::new();
    for (i, n) in sk.nodes.iter().enumerate() {
        if !n.dead_end {
            let id = IntersectionId(intersections.len() as u32);
            inter_of[i] = Some(id);
            intersections.push(Intersection {
                id,
                center: n.pos,
                half_size: h,
                incoming: Vec::new(),
                outgoing: Vec::new(),
                movements: Vec::new(),
                conflict_zones: Vec::new(),
                crosswalks: Vec::new(),
            });
        }
    }

    // two lanes per live road
    let mut lanes: Vec<Lane> = Vec::new();
    let mut lane_ends: Vec<(usize, usize)> = Vec::new(); // (from node, to node)
    for (r, road) in sk.roads.iter().enumerate() {
        if removed[r] {
            continue;
        }
        for (from, to, dir) in [(road.a, road.b, road.dir), (road.b, road.a, road.dir.opposite())] {
            let d = dir.vec();
            let off = d.right() * (lw * 0.5);
            let trim = |n: usize| if sk.nodes[n].dead_end { 0.0 } else { h };
            let start = sk.nodes[from].pos + d * trim(from) + off;
            let end = sk.nodes[to].pos - d * trim(to) + off;
            let id = LaneId(lanes.len() as u32);
            lanes.push(Lane {
                id,
                centerline: Polyline::new(vec![start, end]),
                width: lw,
                speed_limit: p.speed_limit,
                dir,
                to_intersection: inter_of[to],
                from_intersection: inter_of[from],
                successors: Vec::new(),
                exits: Vec::new(),
                crosswalks: Vec::new(),
            });
            lane_ends.push((from, to));
            if let Some(i) = inter_of[to] {
                intersections[i.0 as usize].incoming.push(id);
            }
            if let Some(i) = inter_of[from] {
                intersections[i.0 as usize].outgoing.push(id);
            }
        }
    }

    // movements
    let mut movements: Vec<Movement> = Vec::new();
    for a in 0..lanes.len() {
        let (from_a, to_a) = lane_ends[a];
        for b in 0..lanes.len() {
            let (from_b, to_b) = lane_ends[b];
            if from_b != to_a {
                continue;
            }
            let uturn = to_b == from_a;
            let dead = sk.nodes[to_a].dead_end;
            if uturn != dead {
                continue;
            }
            let (la, lb) = (&lanes[a], &lanes[b]);
            let p0 = *la.centerline.points().last().unwrap();
            let q0 = lb.centerline.points()[0];
            let turn = Turn::between(la.dir, lb.dir);
            let path = if dead {
                turnaround_path(p0, la.dir.vec(), q0)
            } else {
                turn_path(p0, la.dir.vec(), q0, lb.dir.vec())
            };
            let id = MovementId(movements.len() as u32);
            let (from_id, to_id) = (la.id, lb.id);
            movements.push(Movement {
                id,
                from: from_id,
                to: to_id,
                turn,
                path,
                intersection: inter_of[to_a],
                conflicts: Vec::new(),
            });
            lanes[a].successors.push((turn, to_id));
            lanes[a].exits.push(id);
            if let Some(i) = inter_of[to_a] {
                intersections[i.0 as usize].movements.push(id);
            }
        }
    }

    // conflict zones between movements entering from different lanes
    for inter in intersections.iter_mut() {
        let ms = inter.movements.clone();
        for (x, &ma) in ms.iter().enumerate() {
            for &mb in &ms[x + 1..] {
                let (a, b) = (&movements[ma.0 as usize], &movements[mb.0 as usize]);
                if a.from == b.from {
                    continue;
                }
                if let Some((polygon, sa, sb)) = conflict_zone(&a.path, &b.path, SWEEP_WIDTH * 0.5) {
                    let zone = inter.conflict_zones.len();
                    inter.conflict_zones.push(ConflictZone { movements: (ma, mb), polygon, spans: (sa, sb) });
                    movements[ma.0 as usize].conflicts.push(ConflictRef { zone, other: mb, span: sa, other_span: sb });
                    movements[mb.0 as usize].conflicts.push(ConflictRef { zone, other: ma, span: sb, other_span: sa });
                }
            }
        }
    }

    // crosswalks on every arm of every intersection
    let mut crosswalks = Vec::new();
    for inter in intersections.iter_mut() {
        for &out in &inter.outgoing.clone() {
            let lane_out = &lanes[out.0 as usize];
            let d = lane_out.dir.vec();
            let mid = inter.center + d * (h + 2.0);
            let reach = lw + 1.5;
            let ends = (mid + d.right() * reach, mid - d.right() * reach);
            let id = CrosswalkId(crosswalks.len() as u32);
            let mut cw_lanes = vec![(out, 0.5, 3.5)];
            // the inbound lane of the same arm runs opposite to `out`
            let back = inter.incoming.iter().copied().find(|&l| lanes[l.0 as usize].dir == lane_out.dir.opposite());
            if let Some(back) = back {
                let len = lanes[back.0 as usize].length();
                cw_lanes.push((back, len - 3.5, len - 0.5));
            }
            for &(l, s0, s1) in &cw_lanes {
                lanes[l.0 as usize].crosswalks.push(CrosswalkSpan { crosswalk: id, start: s0, end: s1 });
            }
            crosswalks.push(Crosswalk { id, intersection: inter.id, ends, lanes: cw_lanes });
            inter.crosswalks.push(id);
        }
    }

    let mut spawn_points = Vec::new();
    for l in &lanes {
        let len = l.length();
        let mut s = 9.0;
        while s <= len - 9.0 {
            spawn_points.push(SpawnPoint { lane: l.id, offset: s });
            s += 8.0;
        }
    }
    let agent_spawns = lanes
        .iter()
        .filter(|l| l.to_intersection.is_some() && l.length() > 50.0)
        .map(|l| SpawnPoint { lane: l.id, offset: (l.length() - 45.0).max(9.0) })
        .collect();

    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for n in &sk.nodes {
        lo = Vec2::new(lo.x.min(n.pos.x), lo.y.min(n.pos.y));
        hi = Vec2::new(hi.x.max(n.pos.x), hi.y.max(n.pos.y));
    }
    let bounds = Rect::new(lo, hi).expanded(10.0);

    RoadNetwork {
        lanes,
        movements,
        intersections,
        crosswalks,
        buildings: Vec::new(),
        spawn_points,
        agent_spawns,
        bounds,
        frame: Isometry::identity(),
    }
}

/// One candidate building per block between grid lines, including the outer ring.
fn place_buildings(net: &mut RoadNetwork, rng: &mut ChaCha8Rng, p: &MapGenParams) {
    let mut xs: Vec<f64> = (0..p.cols).map(|i| i as f64 * p.block_size).collect();
    let mut ys: Vec<f64> = (0..p.rows).map(|j| j as f64 * p.block_size).collect();
    xs.insert(0, net.bounds.min.x);
    xs.push(net.bounds.max.x);
    ys.insert(0, net.bounds.min.y);
    ys.push(net.bounds.max.y);
    let nx = xs.len();
    let ny = ys.len();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let inset = |v: f64, is_edge: bool, sign: f64| if is_edge { v + sign * 2.0 } else { v + sign * p.building_setback };
            let x0 = inset(xs[i], i == 0, 1.0);
            let x1 = inset(xs[i + 1], i + 1 == nx - 1, -1.0);
            let y0 = inset(ys[j], j == 0, 1.0);
            let y1 = inset(ys[j + 1], j + 1 == ny - 1, -1.0);
            // the draw happens for every block so the stream does not depend on block size
            let take = rng.gen_bool(p.building_density);
            let m: [f64; 4] = [rng.gen(), rng.gen(), rng.gen(), rng.gen()];
            let (w, hgt) = (x1 - x0, y1 - y0);
            if !take || w < 6.0 || hgt < 6.0 {
                continue;
            }
            let shrink = 0.25;
            let r = Rect::new(
                Vec2::new(x0 + m[0] * shrink * w, y0 + m[1] * shrink * hgt),
                Vec2::new(x1 - m[2] * shrink * w, y1 - m[3] * shrink * hgt),
            );
            net.buildings.push(r);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_grid() {
        let p = MapGenParams { cols: 0, ..Default::default() };
        assert!(matches!(generate_map(1, &p), Err(SimError::InvalidMapParams(_))));
    }

    #[test]
    fn rejects_bad_density() {
        let p = MapGenParams { building_density: 1.5, ..Default::default() };
        assert!(generate_map(1, &p).is_err());
    }

    #[test]
    fn zero_density_has_no_buildings() {
        let p = MapGenParams { building_density: 0.0, ..Default::default() };
        assert!(generate_map(1, &p).unwrap().buildings.is_empty());
    }

    #[test]
    fn deterministic() {
        let p = MapGenParams::default();
        assert_eq!(generate_map(1, &p).unwrap(), generate_map(1, &p).unwrap());
        assert_ne!(generate_map(1, &p).unwrap(), generate_map(2, &p).unwrap());
    }

    #[test]
    fn minimal_map_shape() {
        let m = minimal_map();
        assert_eq!(m.intersections.len(), 1);
        assert_eq!(m.intersections[0].degree(), 4);
        assert_eq!(m.lanes.len(), 8);
        // 12 turning movements plus 4 turnarounds
        assert_eq!(m.movements.len(), 16);
        assert_eq!(m, minimal_map());
        assert!(m.buildings.is_empty());
        assert!(!minimal_map_with_buildings(3, 1.0).buildings.is_empty());
    }

    #[test]
    fn turnaround_is_continuous() {
        let m = minimal_map();
        for mv in m.movements.iter().filter(|mv| mv.turn == Turn::UTurn) {
            let a = *m.lane(mv.from).centerline.points().last().unwrap();
            let b = m.lane(mv.to).centerline.points()[0];
            assert_eq!(mv.path.points()[0], a);
            assert_eq!(*mv.path.points().last().unwrap(), b);
            assert!(mv.path.length() > 3.5);
        }
    }
}
