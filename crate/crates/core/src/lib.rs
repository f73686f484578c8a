//! Joint base-station power and TDMA time allocation for wireless powered
//! communication networks.
//!
//! A base station broadcasts RF energy during the first part of every
//! fading block; the energy harvesting nodes then spend everything they
//! collected to transmit back to the base station in successive TDMA slots.
//! This crate computes the throughput-optimal broadcast power and time split
//! per block under an average and a peak power budget:
//!
//! - [`multiuser`]: K nodes, no circuit cost. Bang-bang broadcast power,
//!   harvest fraction from a transcendental stationarity equation, slot
//!   lengths proportional to each node's effective gain.
//! - [`point_to_point`]: a single node that also pays a fixed processing
//!   power whenever it transmits.
//! - [`calibration`]: bisection on the dual price of the average power
//!   budget.
//! - [`baselines`]: fixed-power benchmark and equal-share floor.
//! - [`oracle`]: brute-force grid search over the per-block dual objectives,
//!   used to check the closed-form allocators.
//! - [`sim`]: Monte Carlo harness, budget sweeps and result files.
//!
//! Rates are carried in nats internally and converted to bits only when
//! reports are produced.

pub mod baselines;
pub mod calibration;
pub mod channel;
pub mod config;
pub mod error;
pub mod multiuser;
pub mod oracle;
pub mod point_to_point;
pub mod root;
pub mod sim;

pub use calibration::{calibrate_lambda, delivered_average_power, EpochAllocator, LambdaSolution};
pub use channel::{generate_trace, load_trace, save_trace, ChannelTrace, EpochChannelState};
pub use config::NetworkConfig;
pub use error::{Error, Result};
pub use multiuser::{EpochAllocation, MultiuserDual};
pub use point_to_point::{P2PAllocation, PointToPointDual};
pub use sim::{run_simulation, sweep_pavg, Scheme, SweepCurve, ThroughputReport};
