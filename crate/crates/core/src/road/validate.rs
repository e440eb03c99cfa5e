use std::collections::VecDeque;

use super::{RoadNetwork, SWEEP_WIDTH};
use crate::error::{Result, SimError};
use crate::geometry::{clip_convex, polygon_area, segment_quad};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub errors: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.errors.is_empty() {
            Ok(())
        } else {
            Err(SimError::InvalidNetwork(self.errors.join("; ")))
        }
    }
}

fn reaches_all(adj: &[Vec<usize>]) -> bool {
    if adj.is_empty() {
        return true;
    }
    let mut seen = vec![false; adj.len()];
    let mut q = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(i) = q.pop_front() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                q.push_back(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Checks lane connectivity, building clearance, intersection degree and
/// conflict-zone well-formedness.
pub fn validate(net: &RoadNetwork) -> ValidationReport {
    let mut errors = Vec::new();

    for l in &net.lanes {
        if l.centerline.points().len() < 2 || !(l.width > 0.0) || !(l.speed_limit > 0.0) {
            errors.push(format!("lane {} is malformed", l.id.0));
        }
        if l.successors.is_empty() {
            errors.push(format!("lane {} ends without an intersection or turnaround", l.id.0));
        }
        if l.successors.len() != l.exits.len() {
            errors.push(format!("lane {} successor/exit mismatch", l.id.0));
        }
    }

    let n = net.lanes.len();
    let mut fwd = vec![Vec::new(); n];
    let mut rev = vec![Vec::new(); n];
    for l in &net.lanes {
        for &(_, s) in &l.successors {
            fwd[l.id.0 as usize].push(s.0 as usize);
            rev[s.0 as usize].push(l.id.0 as usize);
        }
    }
    if !(reaches_all(&fwd) && reaches_all(&rev)) {
        errors.push("lane graph is not strongly connected".into());
    }

    for (bi, b) in net.buildings.iter().enumerate() {
        let rect = b.corners();
        let hits_lane = net.lanes.iter().any(|l| {
            l.centerline.segments().any(|(p, q)| polygon_area(&clip_convex(&segment_quad(p, q, l.width * 0.5), &rect)) > 0.0)
        });
        let hits_movement = net.movements.iter().any(|m| {
            m.path.segments().any(|(p, q)| polygon_area(&clip_convex(&segment_quad(p, q, SWEEP_WIDTH), &rect)) > 0.0)
        });
        if hits_lane || hits_movement {
            errors.push(format!("building {bi} overlaps a lane"));
        }
    }

    for i in &net.intersections {
        if !(3..=4).contains(&i.degree()) || i.outgoing.len() != i.incoming.len() {
            errors.push(format!("intersection {} has degree {}", i.id.0, i.degree()));
        }
        for z in &i.conflict_zones {
            let ((a0, a1), (b0, b1)) = z.spans;
            if z.polygon.len() < 3 || !(a0 < a1) || !(b0 < b1) {
                errors.push(format!("degenerate conflict zone at intersection {}", i.id.0));
            }
        }
    }

    ValidationReport { errors }
}
