//! Multi-user delay alignment modulation (DAM) link simulator.

pub mod beamforming;
pub mod channel;
pub mod config;
pub mod delay;
pub mod error;
pub mod experiment;
pub mod numerics;
pub mod ofdm;
pub mod pulse;
pub mod waveform;

pub use config::SimConfig;
pub use error::{Error, Result};
