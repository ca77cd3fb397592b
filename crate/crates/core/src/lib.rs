//! Event-triggered control of a switched linear plant over a LoRaWAN
//! Class-A link.
//!
//! The crate couples four pieces:
//!
//! - [`airtime`]: LoRa time on air, round trip time and duty-cycle blackout;
//! - [`link`]: the Class-A end-device and its channels;
//! - [`plant`]: the three-tank water network, its controller and triggers;
//! - [`sim`]: the fixed-step co-simulation, metrics and parameter sweeps.
//!
//! [`cli`] holds the scenario file format, the CSV schema and the
//! command implementations behind the `lorawan-etc` binary.

pub mod airtime;
pub mod cli;
pub mod error;
pub mod link;
pub mod plant;
pub mod sim;
pub mod time;
pub mod trace;

pub use airtime::{RadioConfig, TimingProfile};
pub use error::{Error, Result};
pub use link::{EndDevice, LinkOutcome};
pub use plant::{Disturbance, Mode, PlantModel, TriggerConfig};
pub use sim::{run, run_metrics, sweep, LinkKind, RunMetrics, ScenarioConfig, SweepGrid};
pub use time::Micros;
pub use trace::{TraceKind, TraceRecord};
