//! Timestamped simulation records.

use crate::plant::Mode;
use crate::time::Micros;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: Micros,
    /// End-device index, `None` for plant- or controller-wide records.
    pub device_id: Option<usize>,
    pub kind: TraceKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceKind {
    /// Periodic snapshot of the tank levels.
    Sample {
        levels: Vec<f64>,
        mode: Mode,
    },
    /// The device's triggering condition fired with this measurement.
    Trigger {
        level: f64,
    },
    UplinkStart {
        channel_id: usize,
        airtime: Micros,
    },
    /// The measurement reached the controller.
    UplinkDone {
        level: f64,
    },
    /// The control action reached the actuator.
    DownlinkDone {
        valve_deg: f64,
    },
    DropBusy,
    DropBlackout,
    ModeSwitch {
        to: Mode,
    },
    DisturbanceOn,
    DisturbanceOff,
}

impl TraceKind {
    pub fn name(&self) -> &'static str {
        match self {
            TraceKind::Sample { .. } => "sample",
            TraceKind::Trigger { .. } => "trigger",
            TraceKind::UplinkStart { .. } => "uplink_start",
            TraceKind::UplinkDone { .. } => "uplink_done",
            TraceKind::DownlinkDone { .. } => "downlink_done",
            TraceKind::DropBusy => "drop_busy",
            TraceKind::DropBlackout => "drop_blackout",
            TraceKind::ModeSwitch { .. } => "mode_switch",
            TraceKind::DisturbanceOn => "disturbance_on",
            TraceKind::DisturbanceOff => "disturbance_off",
        }
    }

    /// True for the record that closes a `Trigger`.
    pub fn is_outcome(&self) -> bool {
        matches!(
            self,
            TraceKind::UplinkStart { .. } | TraceKind::DropBusy | TraceKind::DropBlackout
        )
    }
}

/// Receives records as the simulation produces them.
pub trait TraceSink {
    fn record(&mut self, record: TraceRecord);

    /// Sinks that discard everything let the engine skip building records.
    fn enabled(&self) -> bool {
        true
    }
}

impl TraceSink for Vec<TraceRecord> {
    fn record(&mut self, record: TraceRecord) {
        self.push(record);
    }
}

/// Discards every record.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _record: TraceRecord) {}

    fn enabled(&self) -> bool {
        false
    }
}
