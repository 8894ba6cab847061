//! Kalman filtering of a scalar linear system observed by a wireless sensor
//! network that relays measurements with analog amplify-and-forward.
//!
//! Modules:
//! - [`model`]: system, sensors, noise, channels and power accounting.
//! - [`kalman`]: Riccati recursions, SNR decompositions, the filter itself.
//! - [`asymptotics`]: large-`M` expansions, bounds and equal-power rules.
//! - [`alloc`]: optimal power allocation (four convex problems).
//! - [`fading`]: fading channels with CSI and greedy per-step allocation.
//! - [`nocsi`]: the linear MMSE estimator using channel statistics only.
//! - [`vecext`]: vector-state and multi-antenna extensions.
//! - [`scenario`]: TOML scenario documents.
//! - [`oracle`]: independent brute-force references used by the test suites.

pub mod alloc;
pub mod asymptotics;
pub mod error;
pub mod fading;
pub mod kalman;
pub mod model;
pub mod nocsi;
pub mod oracle;
pub mod rng;
pub mod scenario;
pub mod stats;
pub mod vecext;

pub use error::{Error, Result, Violation};
pub use kalman::Scheme;
pub use model::{
    Amplification, ChannelRealization, NoiseModel, Scenario, Sensor, SensorSet, SystemModel,
};
