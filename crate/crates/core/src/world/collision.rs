use serde::{Deserialize, Serialize};

use crate::ier::{has_priority_other, Approach, RoadUser};

use super::WorldState;

/// Only entities whose centers are this close to the agent are tested, m.
const BROAD_PHASE: f64 = 12.0;
/// The agent is not blamed when it entered the intersection this much earlier, s.
const ENTRY_LEAD: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionKind {
    /// The agent ran into a vehicle ahead on its route.
    RearEnd,
    /// A vehicle behind ran into the agent.
    RearEnded,
    /// Crossing or merging paths.
    Crossing,
    Pedestrian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collision {
    pub kind: CollisionKind,
    /// Vehicle or pedestrian id.
    pub other: u32,
    pub at_fault: bool,
}

/// Collision and near-collision of the agent against every other entity, on
/// the current poses. Requires an up-to-date index.
pub fn detect_collisions(w: &WorldState) -> (Option<Collision>, bool) {
    let net = &*w.network;
    let nc = &w.config.near_collision;
    let me = w.index.footprints[0];
    let mut near = false;
    let mut hit: Option<Collision> = None;

    for (vi, fp) in w.index.footprints.iter().enumerate().skip(1) {
        if fp.center.dist(me.center) > BROAD_PHASE {
            continue;
        }
        if me.overlaps(fp) {
            if hit.is_none() {
                hit = Some(classify(w, vi));
            }
        } else if me.distance(fp) < nc.gap {
            near = true;
        }
    }
    for p in &w.pedestrians {
        let fp = p.footprint(net);
        if fp.center.dist(me.center) > BROAD_PHASE {
            continue;
        }
        if me.overlaps(&fp) {
            hit.get_or_insert(Collision { kind: CollisionKind::Pedestrian, other: p.id, at_fault: true });
        } else if me.distance(&fp) < nc.gap {
            near = true;
        }
    }

    let agent = w.agent();
    if let Some((li, gap)) = w.index.leader(w, 0, 50.0) {
        let closing = agent.v - w.vehicles[li].v;
        if gap < nc.gap || (closing > 0.0 && gap / closing < nc.ttc) {
            near = true;
        }
    }
    (hit, near || hit.is_some())
}

fn on_route_ahead(w: &WorldState, follower: usize, leader: usize) -> bool {
    w.index.leader(w, follower, 20.0).is_some_and(|(li, _)| li == leader)
        || {
            let net = &*w.network;
            let f = &w.vehicles[follower];
            let k = f.path.piece_index(f.s);
            f.path.pieces[k..].iter().take(3).any(|p| {
                w.index.occupancy[net.segment_index(p.seg)]
                    .iter()
                    .any(|o| o.vehicle == leader && p.start + o.front > f.s && p.start + o.rear > f.rear())
            })
        }
}

fn classify(w: &WorldState, vi: usize) -> Collision {
    let net = &*w.network;
    let other = w.vehicles[vi].id;
    if on_route_ahead(w, 0, vi) {
        return Collision { kind: CollisionKind::RearEnd, other, at_fault: true };
    }
    if on_route_ahead(w, vi, 0) {
        return Collision { kind: CollisionKind::RearEnded, other, at_fault: false };
    }
    let agent = w.agent();
    let o = &w.vehicles[vi];
    let at_fault = match (agent.entered_box, o.entered_box) {
        (Some((am, af)), Some((om, of))) => {
            let (aa, oa) = (Approach::of_movement(net, am), Approach::of_movement(net, om));
            match (aa, oa) {
                (Some(aa), Some(oa)) if aa.intersection == oa.intersection => {
                    let lead = (of as f64 - af as f64) / w.config.fps;
                    let prio = has_priority_other(&aa, &RoadUser::Vehicle(oa)).unwrap_or(false);
                    of < af || (prio && lead < ENTRY_LEAD)
                }
                _ => false,
            }
        }
        (Some(_), None) => false,
        _ => true,
    };
    Collision { kind: CollisionKind::Crossing, other, at_fault }
}
