mod common;

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream};
use std::thread;
use std::time::Instant;

use ier_sim::agents::Action;
use ier_sim::config::SimConfig;
use ier_sim::env::{traffic_seed_for, DoneReason, Env};
use ier_sim::protocol::{Client, Request, Response, Server, PROTOCOL_VERSION};

fn server(cfg: SimConfig) -> SocketAddr {
    Server::bind("127.0.0.1:0", cfg).unwrap().spawn().unwrap()
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn tcp_matches_in_process() {
    let cfg = SimConfig::minimal();
    let addr = server(cfg.clone());
    let mut c = Client::connect(addr).unwrap();
    let mut env = Env::new(cfg).unwrap();
    for seed in [3, 11] {
        let r = c.reset(seed).unwrap();
        let obs = env.reset(seed, traffic_seed_for(seed), true).unwrap().to_vector();
        assert_eq!(bits(r.obs.as_ref().unwrap()), bits(&obs));
        let mut frames = 0;
        loop {
            let r = c.step(Action::ACCELERATE.index() as i64).unwrap();
            let out = env.step(Action::ACCELERATE).unwrap();
            assert!(r.ok, "{:?}", r.error);
            assert_eq!(bits(r.obs.as_ref().unwrap()), bits(&out.obs.to_vector()), "frame {frames}");
            assert_eq!(r.reward.unwrap().to_bits(), out.reward.to_bits());
            assert_eq!(r.done, Some(out.done));
            assert_eq!(r.info.as_ref().unwrap().reward_breakdown, out.info.reward);
            frames += 1;
            if out.done {
                break;
            }
        }
        assert!(frames > 24);
    }
}

#[test]
fn bad_action_leaves_episode_unchanged() {
    let addr = server(SimConfig::minimal());
    let mut a = Client::connect(addr).unwrap();
    let mut b = Client::connect(addr).unwrap();
    a.reset(5).unwrap();
    b.reset(5).unwrap();
    for bad in [6, -1, 1000] {
        let r = a.step(bad).unwrap();
        assert!(!r.ok);
        assert!(r.error.unwrap().contains(&bad.to_string()));
    }
    for _ in 0..30 {
        let (x, y) = (a.step(4).unwrap(), b.step(4).unwrap());
        assert_eq!((x.obs, x.reward, x.info), (y.obs, y.reward, y.info));
    }
}

#[test]
fn timeout_then_steps_fail_until_reset() {
    let cfg = SimConfig { traffic: ier_sim::config::TrafficConfig { cars: [0, 0], pedestrians: [0, 0], ..Default::default() }, ..SimConfig::minimal() };
    let limit = (cfg.episode_seconds * cfg.fps).round() as u64;
    let addr = server(cfg);
    let mut c = Client::connect(addr).unwrap();
    c.reset(1).unwrap();
    let mut n = 0;
    let last = loop {
        let r = c.step(Action::EMERGENCY_BRAKE.index() as i64).unwrap();
        assert!(r.ok);
        n += 1;
        if r.done == Some(true) {
            break r;
        }
    };
    assert_eq!(n, limit);
    assert_eq!(last.info.unwrap().done_reason, Some(DoneReason::Timeout));
    let r = c.step(3).unwrap();
    assert!(!r.ok);
    let r = c.reset(1).unwrap();
    assert_eq!((r.ok, r.done, r.episode), (true, Some(false), Some(2)));
    assert!(c.step(3).unwrap().ok);
}

#[test]
fn shield_overrides_throttle() {
    let addr = server(common::safety_config(0.9));
    let mut c = Client::connect(addr).unwrap();
    let mut seen = 0;
    for seed in 0..10 {
        c.reset(seed).unwrap();
        loop {
            let r = c.step(Action::ACCELERATE.index() as i64).unwrap();
            let info = r.info.unwrap();
            assert_eq!(info.proposed_accel, 3.0);
            if info.shield_triggered {
                assert_eq!(info.executed_accel, -7.0);
                seen += 1;
                break;
            }
            assert_eq!(info.executed_accel, 3.0);
            assert!(!info.agent_at_fault);
            if r.done == Some(true) {
                break;
            }
        }
    }
    assert!(seen >= 5, "shield fired in only {seen} of 10 episodes");
}

#[test]
fn misbehaving_client_does_not_disturb_others() {
    let addr = server(SimConfig::minimal());
    let mut good = Client::connect(addr).unwrap();
    let r0 = good.reset(2).unwrap();

    let mut raw = TcpStream::connect(addr).unwrap();
    raw.write_all(b"{\"cmd\":\"reset\",\"seed\":2}\n\xff\xfe garbage\n{\"cmd\":\"step\"\n").unwrap();
    raw.write_all(&vec![b'x'; 1 << 20]).unwrap();
    raw.write_all(b"\n{\"v\":99,\"cmd\":\"close\"}\n").unwrap();
    let mut lines = BufReader::new(raw.try_clone().unwrap()).lines();
    let replies: Vec<Response> = (0..5).map(|_| serde_json::from_str(&lines.next().unwrap().unwrap()).unwrap()).collect();
    assert!(replies[0].ok);
    assert!(replies[1..].iter().all(|r| !r.ok && r.session == replies[0].session));
    assert!(replies[4].error.as_ref().unwrap().contains("version"));
    // hang up in the middle of a request
    raw.write_all(b"{\"cmd\":\"st").unwrap();
    drop(raw);
    drop(lines);

    let mut twin = Client::connect(addr).unwrap();
    assert_eq!(bits(twin.reset(2).unwrap().obs.as_ref().unwrap()), bits(r0.obs.as_ref().unwrap()));
    for _ in 0..50 {
        let (x, y) = (good.step(5).unwrap(), twin.step(5).unwrap());
        assert!(x.ok);
        assert_eq!((x.obs, x.reward), (y.obs, y.reward));
    }
    assert_ne!(good.reset(2).unwrap().session, twin.reset(2).unwrap().session);
}

#[test]
fn close_ends_the_session() {
    let addr = server(SimConfig::minimal());
    let mut c = Client::connect(addr).unwrap();
    let r = c.request(&Request::Close).unwrap();
    assert!(r.ok);
    assert_eq!(r.v, PROTOCOL_VERSION);
    assert!(c.reset(0).is_err());
}

#[test]
fn bind_failure_names_the_endpoint() {
    let taken = Server::bind("127.0.0.1:0", SimConfig::minimal()).unwrap();
    let addr = taken.local_addr().unwrap().to_string();
    let err = Server::bind(&addr, SimConfig::minimal()).err().unwrap();
    assert!(err.to_string().contains(&addr));
}

#[test]
fn ten_sessions_faster_than_real_time() {
    const SESSIONS: usize = 10;
    const STEPS: u64 = 24 * 30;
    let cfg = SimConfig::default();
    let dt = 1.0 / cfg.fps;
    let addr = server(cfg);
    let handles: Vec<_> = (0..SESSIONS)
        .map(|i| {
            thread::spawn(move || {
                let mut c = Client::connect(addr).unwrap();
                c.reset(i as u64).unwrap();
                let t = Instant::now();
                let mut sim = 0.0;
                for k in 0..STEPS {
                    let r = c.step((k % 6) as i64).unwrap();
                    assert!(r.ok);
                    sim += dt;
                    if r.done == Some(true) {
                        c.reset(i as u64 + 100).unwrap();
                    }
                }
                sim / t.elapsed().as_secs_f64()
            })
        })
        .collect();
    for (i, h) in handles.into_iter().enumerate() {
        let speedup = h.join().unwrap();
        assert!(speedup >= 10.0, "session {i}: {speedup:.1}x real time");
    }
}
