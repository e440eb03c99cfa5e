//! Session server for external learners. Newline-delimited JSON over TCP:
//! every request line gets exactly one response line. One session per
//! connection; sessions share nothing.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::agents::Action;
use crate::config::SimConfig;
use crate::env::{traffic_seed_for, DoneReason, Env, StepOutcome};
use crate::error::{Result, SimError};
use crate::reward::RewardBreakdown;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case")]
pub enum Request {
    /// Starts an episode. `seed` picks the map; the traffic seed defaults to one derived from it.
    Reset {
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        traffic_seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shielded: Option<bool>,
    },
    Step {
        action_index: i64,
    },
    /// Merges `overrides` into the session config and returns the result. Drops the running episode.
    Config {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        overrides: Option<serde_json::Value>,
    },
    Close,
}

#[derive(Debug, Deserialize)]
struct Envelope {
    #[serde(default)]
    v: Option<u32>,
    #[serde(flatten)]
    request: Request,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireInfo {
    pub frame: u64,
    pub shield_triggered: bool,
    pub proposed_accel: f64,
    pub executed_accel: f64,
    pub collision: bool,
    pub agent_at_fault: bool,
    pub near_collision: bool,
    pub on_intersection: bool,
    pub done_reason: Option<DoneReason>,
    pub reward_breakdown: RewardBreakdown,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub v: u32,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episode: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub done: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub info: Option<WireInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<SimConfig>,
}

impl Response {
    fn ok() -> Response {
        Response { v: PROTOCOL_VERSION, ok: true, ..Default::default() }
    }

    pub fn error(msg: impl Into<String>) -> Response {
        Response { v: PROTOCOL_VERSION, ok: false, error: Some(msg.into()), ..Default::default() }
    }
}

impl From<&StepOutcome> for Response {
    fn from(out: &StepOutcome) -> Response {
        let i = &out.info;
        Response {
            obs: Some(out.obs.to_vector()),
            reward: Some(out.reward),
            done: Some(out.done),
            info: Some(WireInfo {
                frame: i.frame,
                shield_triggered: i.shield.triggered,
                proposed_accel: i.shield.proposed_accel,
                executed_accel: i.shield.final_accel,
                collision: i.events.collided(),
                agent_at_fault: i.events.agent_at_fault(),
                near_collision: i.events.near_collision,
                on_intersection: i.on_intersection,
                done_reason: i.done_reason,
                reward_breakdown: i.reward,
            }),
            ..Response::ok()
        }
    }
}

/// Protocol state of one connection, independent of the transport.
pub struct Session {
    pub id: u64,
    env: Env,
    episodes: u64,
    closed: bool,
}

impl Session {
    pub fn new(id: u64, config: SimConfig) -> Result<Session> {
        Ok(Session { id, env: Env::new(config)?, episodes: 0, closed: false })
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Handles one raw request line. Malformed input becomes an error response.
    pub fn handle_line(&mut self, line: &str) -> Response {
        let env: Envelope = match serde_json::from_str(line) {
            Ok(e) => e,
            Err(e) => return self.tag(Response::error(format!("malformed request: {e}"))),
        };
        if let Some(v) = env.v.filter(|&v| v != PROTOCOL_VERSION) {
            return self.tag(Response::error(format!("unsupported protocol version {v}, server speaks {PROTOCOL_VERSION}")));
        }
        self.handle(env.request)
    }

    fn tag(&self, mut r: Response) -> Response {
        r.session = Some(self.id);
        r
    }

    pub fn handle(&mut self, req: Request) -> Response {
        let r = match req {
            Request::Reset { seed, traffic_seed, shielded } => self.reset(seed, traffic_seed, shielded),
            Request::Step { action_index } => self.handle_step(action_index),
            Request::Config { overrides } => self.configure(overrides),
            Request::Close => {
                self.closed = true;
                Ok(Response::ok())
            }
        };
        self.tag(r.unwrap_or_else(|e| Response::error(e.to_string())))
    }

    fn reset(&mut self, seed: u64, traffic_seed: Option<u64>, shielded: Option<bool>) -> Result<Response> {
        let ts = traffic_seed.unwrap_or_else(|| traffic_seed_for(seed));
        let obs = self.env.reset(seed, ts, shielded.unwrap_or(true))?.to_vector();
        self.episodes += 1;
        Ok(Response { obs: Some(obs), done: Some(false), episode: Some(self.episodes), ..Response::ok() })
    }

    /// Decodes the action, lets the shield check it and advances one frame.
    /// A bad index leaves the episode untouched.
    pub fn handle_step(&mut self, action_index: i64) -> Result<Response> {
        let action = Action::from_index(action_index)?;
        let out = self.env.step(action)?;
        Ok(Response { episode: Some(self.episodes), ..Response::from(&out) })
    }

    fn configure(&mut self, overrides: Option<serde_json::Value>) -> Result<Response> {
        if let Some(o) = overrides {
            let cfg = self.env.config().with_overrides(&o)?;
            self.env.reconfigure(cfg)?;
        }
        Ok(Response { config: Some(self.env.config().clone()), ..Response::ok() })
    }
}

/// Serves one connection until the peer closes it or sends `close`.
pub fn serve_connection(stream: TcpStream, mut session: Session) -> Result<()> {
    stream.set_nodelay(true)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut out = BufWriter::new(stream);
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        let line = String::from_utf8_lossy(&buf);
        if line.trim().is_empty() {
            continue;
        }
        let resp = session.handle_line(&line);
        serde_json::to_writer(&mut out, &resp)?;
        out.write_all(b"\n")?;
        out.flush()?;
        if session.is_closed() {
            break;
        }
    }
    Ok(())
}

pub struct Server {
    listener: TcpListener,
    config: Arc<SimConfig>,
    next_id: AtomicU64,
}

impl Server {
    pub fn bind(addr: &str, config: SimConfig) -> Result<Server> {
        config.validate()?;
        let listener = TcpListener::bind(addr).map_err(|source| SimError::Bind { addr: addr.to_string(), source })?;
        Ok(Server { listener, config: Arc::new(config), next_id: AtomicU64::new(1) })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Accepts connections forever, one thread per session.
    pub fn run(&self) -> Result<()> {
        for stream in self.listener.incoming() {
            let stream = match stream {
                Ok(s) => s,
                Err(_) => continue,
            };
            let id = self.next_id.fetch_add(1, Ordering::Relaxed);
            let session = Session::new(id, (*self.config).clone())?;
            thread::spawn(move || {
                let _ = serve_connection(stream, session);
            });
        }
        Ok(())
    }

    /// Runs the accept loop on a background thread.
    pub fn spawn(self) -> Result<SocketAddr> {
        let addr = self.local_addr()?;
        thread::spawn(move || self.run());
        Ok(addr)
    }
}

/// Blocking client, one request in flight at a time.
pub struct Client {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Client> {
        let s = TcpStream::connect(addr)?;
        s.set_nodelay(true)?;
        Ok(Client { reader: BufReader::new(s.try_clone()?), writer: BufWriter::new(s) })
    }

    /// Sends a raw line and reads the response.
    pub fn send_line(&mut self, line: &str) -> Result<Response> {
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        let mut buf = String::new();
        if self.reader.read_line(&mut buf)? == 0 {
            return Err(SimError::Io(std::io::Error::new(std::io::ErrorKind::UnexpectedEof, "server closed the connection")));
        }
        Ok(serde_json::from_str(&buf)?)
    }

    pub fn request(&mut self, req: &Request) -> Result<Response> {
        self.send_line(&serde_json::to_string(req)?)
    }

    pub fn reset(&mut self, seed: u64) -> Result<Response> {
        self.request(&Request::Reset { seed, traffic_seed: None, shielded: None })
    }

    pub fn step(&mut self, action_index: i64) -> Result<Response> {
        self.request(&Request::Step { action_index })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session() -> Session {
        Session::new(1, SimConfig::minimal()).unwrap()
    }

    #[test]
    fn step_needs_reset() {
        let mut s = session();
        let r = s.handle_line(r#"{"cmd":"step","action_index":3}"#);
        assert!(!r.ok);
        assert_eq!(r.error.as_deref(), Some("no active episode"));
    }

    #[test]
    fn reset_shape() {
        let mut s = session();
        let r = s.handle_line(r#"{"v":1,"cmd":"reset","seed":7}"#);
        assert!(r.ok, "{r:?}");
        assert_eq!(r.obs.unwrap().len(), 201);
        assert_eq!(r.done, Some(false));
    }

    #[test]
    fn bad_input_keeps_session() {
        let mut s = session();
        s.handle_line(r#"{"cmd":"reset","seed":7}"#);
        for bad in ["not json", r#"{"cmd":"fly"}"#, r#"{"cmd":"step","action_index":6}"#, r#"{"v":9,"cmd":"close"}"#] {
            let r = s.handle_line(bad);
            assert!(!r.ok && r.error.is_some(), "{bad}");
        }
        assert!(!s.is_closed());
        let r = s.handle_line(r#"{"cmd":"step","action_index":3}"#);
        assert!(r.ok);
        assert_eq!(r.info.unwrap().frame, 1);
    }

    #[test]
    fn reward_matches_breakdown() {
        let mut s = session();
        s.handle_line(r#"{"cmd":"reset","seed":3}"#);
        let r = s.handle_line(r#"{"cmd":"step","action_index":3}"#);
        let info = r.info.unwrap();
        assert_eq!(r.reward.unwrap().to_bits(), info.reward_breakdown.total.to_bits());
    }

    #[test]
    fn config_overrides() {
        let mut s = session();
        let r = s.handle_line(r#"{"cmd":"config","overrides":{"episode_seconds":10.0}}"#);
        assert!(r.ok, "{r:?}");
        let r = s.handle_line(r#"{"cmd":"config","overrides":{"fps":-1}}"#);
        assert!(!r.ok);
        let r = s.handle_line(r#"{"cmd":"close"}"#);
        assert!(r.ok && s.is_closed());
    }
}
