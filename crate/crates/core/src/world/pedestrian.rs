use rand::Rng;

use crate::road::CrosswalkId;

use super::{PedPhase, WorldState};

/// True when no vehicle is on the crosswalk and none reaches it within the clearance time.
pub(crate) fn crosswalk_clear(w: &WorldState, cw: CrosswalkId) -> bool {
    let net = &*w.network;
    let clear_ttc = w.config.pedestrians.clear_ttc;
    net.crosswalk(cw).lanes.iter().all(|&(lane, s0, s1)| {
        w.index.arrivals[lane.0 as usize].iter().all(|&(vi, d)| {
            let v = &w.vehicles[vi];
            let front = -d;
            let rear = front - v.length;
            if rear < s1 && front > s0 {
                return false;
            }
            if front > s1 {
                return true;
            }
            let gap = s0 - front;
            v.v <= 0.0 || gap / v.v > clear_ttc
        })
    })
}

pub(crate) fn step_pedestrians(w: &mut WorldState) {
    let dt = w.dt();
    let now = w.time() + dt;
    let [d0, d1] = w.config.pedestrians.dwell;
    for i in 0..w.pedestrians.len() {
        let p = &w.pedestrians[i];
        match p.phase {
            PedPhase::Waiting { until } => {
                if now >= until && crosswalk_clear(w, p.crosswalk) {
                    w.pedestrians[i].phase = PedPhase::Crossing;
                }
            }
            PedPhase::Crossing => {
                let len = w.network.crosswalk(p.crosswalk).length();
                let progress = p.progress + p.speed * dt / len;
                if progress >= 1.0 {
                    let pause = if d1 > d0 { w.rng.gen_range(d0..=d1) } else { d0 };
                    let p = &mut w.pedestrians[i];
                    p.progress = 0.0;
                    p.forward = !p.forward;
                    p.phase = PedPhase::Waiting { until: now + pause };
                } else {
                    w.pedestrians[i].progress = progress;
                }
            }
        }
    }
}
