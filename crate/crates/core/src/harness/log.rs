//! Episode logs: one JSON object per line, a header first, one record per
//! frame, and an outcome record last.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::env::DoneReason;
use crate::error::{Result, SimError};
use crate::reward::RewardBreakdown;
use crate::world::StepEvents;

pub const LOG_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub schema: u32,
    pub map_seed: u64,
    pub traffic_seed: u64,
    pub policy: String,
    pub shielded: bool,
    pub config_digest: String,
    pub config: SimConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame: u64,
    pub agent_s: f64,
    pub agent_v: f64,
    /// Executed acceleration.
    pub agent_a: f64,
    pub action: usize,
    pub proposed_accel: f64,
    pub shield_triggered: bool,
    pub d_intersection: Option<f64>,
    pub d_braking: f64,
    pub reward: RewardBreakdown,
    pub events: StepEvents,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub done_reason: DoneReason,
    pub frames: u64,
    pub collision: bool,
    pub agent_at_fault: bool,
    pub near_collision_frames: u64,
    pub shield_interventions: u64,
    pub total_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Record {
    Header(LogHeader),
    Frame(FrameRecord),
    Outcome(Outcome),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub header: LogHeader,
    pub frames: Vec<FrameRecord>,
    pub outcome: Outcome,
}

impl EpisodeLog {
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, &Record::Header(self.header.clone()))?;
        w.write_all(b"\n")?;
        for f in &self.frames {
            serde_json::to_writer(&mut w, &Record::Frame(f.clone()))?;
            w.write_all(b"\n")?;
        }
        serde_json::to_writer(&mut w, &Record::Outcome(self.outcome.clone()))?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn to_jsonl(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory cannot fail");
        buf
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<EpisodeLog> {
        let mut header = None;
        let mut frames = Vec::new();
        let mut outcome = None;
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(&line).map_err(|e| SimError::Log(format!("line {}: {e}", n + 1)))?;
            match rec {
                Record::Header(h) if header.is_none() && n == 0 => header = Some(h),
                Record::Frame(f) if header.is_some() && outcome.is_none() => frames.push(f),
                Record::Outcome(o) if header.is_some() && outcome.is_none() => outcome = Some(o),
                _ => return Err(SimError::Log(format!("line {}: record out of order", n + 1))),
            }
        }
        let header = header.ok_or_else(|| SimError::Log("missing header".into()))?;
        if header.schema != LOG_SCHEMA {
            return Err(SimError::Log(format!("unsupported log schema {}", header.schema)));
        }
        let outcome = outcome.ok_or_else(|| SimError::Log("missing outcome record".into()))?;
        Ok(EpisodeLog { header, frames, outcome })
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<EpisodeLog> {
        let f = std::fs::File::open(path)?;
        EpisodeLog::read_jsonl(std::io::BufReader::new(f))
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_jsonl(&mut w)?;
        w.flush()?;
        Ok(())
    }
}
