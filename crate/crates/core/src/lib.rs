//! Deterministic urban-intersection traffic microsimulator with an
//! ego-centric time-to-occupancy observation, a post-posed emergency-brake
//! shield, a six-term driving reward, rule-based baseline policies, a batch
//! evaluation harness and a line-delimited JSON environment server.

pub mod agents;
pub mod config;
pub mod env;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod idm;
pub mod ier;
pub mod protocol;
pub mod reward;
pub mod road;
pub mod shield;
pub mod world;

pub use error::{Result, SimError};
