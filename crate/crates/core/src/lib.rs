//! OFDM timing synchronization with learned estimators: signal and channel
//! simulation, correlation metrics, label design for computer-aided training
//! sets, an extreme learning machine and a Monte-Carlo evaluation harness.

mod binfmt;
pub mod channel;
pub mod cli;
pub mod datagen;
pub mod elm;
pub mod error;
pub mod harness;
pub mod labels;
pub mod rng;
pub mod signal;
pub mod sync_metrics;

pub use error::{Error, Result};
pub use signal::OfdmConfig;
pub use num_complex;
