//! Decentralized multi-player bandits with reward averaging.
//!
//! Players share an arm's realized reward in proportion to random weights.
//! The crate computes the pure Nash equilibrium of the induced congestion
//! game, simulates learning agents against it and reports regret,
//! non-equilibrium rounds and deviation stability.

pub mod agents;
pub mod config;
pub mod environment;
pub mod equilibrium;
pub mod error;
pub mod experiment;
pub mod kl;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};
