//! Class-A end-device and per-device channel model.
//!
//! A device may only start an uplink when it is not waiting for the
//! downlink of a previous one and at least one of its channels is out of
//! its duty-cycle blackout. Every attempt maps to exactly one
//! [`LinkOutcome`]; nothing is retransmitted.

use crate::airtime::TimingProfile;
use crate::error::{Error, Result};
use crate::time::Micros;
use crate::trace::{TraceKind, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelState {
    pub channel_id: usize,
    /// End of the blackout; `None` if the channel was never used.
    pub blocked_until: Option<Micros>,
}

impl ChannelState {
    fn is_free(&self, now: Micros) -> bool {
        self.blocked_until.is_none_or(|until| until <= now)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Idle,
    AwaitingDownlink { until: Micros },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinkCounters {
    pub uplinks_sent: u64,
    pub downlinks_received: u64,
    pub events_dropped_busy: u64,
    pub events_dropped_blackout: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkOutcome {
    Delivered {
        uplink_done: Micros,
        downlink_done: Micros,
        channel_id: usize,
    },
    DroppedBusy,
    DroppedBlackout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndDevice {
    pub device_id: usize,
    pub phase: Phase,
    pub channels: Vec<ChannelState>,
    pub counters: LinkCounters,
    last_update: Micros,
}

impl EndDevice {
    pub fn new(device_id: usize, n_channels: usize) -> Self {
        EndDevice {
            device_id,
            phase: Phase::Idle,
            channels: (0..n_channels)
                .map(|channel_id| ChannelState {
                    channel_id,
                    blocked_until: None,
                })
                .collect(),
            counters: LinkCounters::default(),
            last_update: Micros::ZERO,
        }
    }

    /// Attempts an uplink at an event instant.
    pub fn try_transmit(&mut self, now: Micros, profile: &TimingProfile) -> LinkOutcome {
        if let Phase::AwaitingDownlink { until } = self.phase {
            if now < until {
                self.counters.events_dropped_busy += 1;
                return LinkOutcome::DroppedBusy;
            }
        }

        // Least recently blocked free channel, lowest id on ties.
        let Some(channel) = self
            .channels
            .iter_mut()
            .filter(|c| c.is_free(now))
            .min_by_key(|c| (c.blocked_until, c.channel_id))
        else {
            self.counters.events_dropped_blackout += 1;
            return LinkOutcome::DroppedBlackout;
        };

        channel.blocked_until = Some(now + profile.channel_hold());
        let channel_id = channel.channel_id;
        let downlink_done = now + profile.rtt;
        self.phase = Phase::AwaitingDownlink {
            until: downlink_done,
        };
        self.counters.uplinks_sent += 1;
        LinkOutcome::Delivered {
            uplink_done: now + profile.time_on_air,
            downlink_done,
            channel_id,
        }
    }

    /// Moves the device clock forward, closing an elapsed receive window.
    pub fn advance(&mut self, now: Micros) -> Result<()> {
        if now < self.last_update {
            return Err(Error::TimeRegression {
                from_us: self.last_update.0,
                to_us: now.0,
            });
        }
        self.last_update = now;
        if let Phase::AwaitingDownlink { until } = self.phase {
            if now >= until {
                self.phase = Phase::Idle;
                self.counters.downlinks_received += 1;
            }
        }
        Ok(())
    }

    pub fn is_idle(&self) -> bool {
        self.phase == Phase::Idle
    }
}

/// Fraction of `[t0, t1)` during which `device_id` was transmitting on
/// `channel_id`, reconstructed from `UplinkStart` records.
pub fn duty_cycle_utilization(
    trace: &[TraceRecord],
    device_id: usize,
    channel_id: usize,
    t0: Micros,
    t1: Micros,
) -> Result<f64> {
    if t1 <= t0 {
        return Err(Error::domain(format!(
            "empty utilization window [{t0}, {t1})"
        )));
    }
    let busy: u64 = trace
        .iter()
        .filter(|r| r.device_id == Some(device_id))
        .filter_map(|r| match r.kind {
            TraceKind::UplinkStart {
                channel_id: c,
                airtime,
            } if c == channel_id => {
                let start = r.t.max(t0);
                let end = (r.t + airtime).min(t1);
                Some(end.0.saturating_sub(start.0))
            }
            _ => None,
        })
        .sum();
    Ok(busy as f64 / (t1 - t0).0 as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airtime::RadioConfig;

    fn sf7_10b() -> TimingProfile {
        TimingProfile::from_config(&RadioConfig::eu868(7, 10)).unwrap()
    }

    #[test]
    fn idle_device_delivers_on_channel_zero() {
        let mut dev = EndDevice::new(0, 3);
        let outcome = dev.try_transmit(Micros::ZERO, &sf7_10b());
        assert_eq!(
            outcome,
            LinkOutcome::Delivered {
                uplink_done: Micros(61_696),
                downlink_done: Micros(1_123_392),
                channel_id: 0
            }
        );
        assert_eq!(
            dev.phase,
            Phase::AwaitingDownlink {
                until: Micros(1_123_392)
            }
        );
        assert_eq!(dev.channels[0].blocked_until, Some(Micros(6_169_600)));
    }

    #[test]
    fn busy_while_awaiting_downlink() {
        let mut dev = EndDevice::new(0, 3);
        dev.phase = Phase::AwaitingDownlink {
            until: Micros(1_123_392),
        };
        let before = dev.channels.clone();
        assert_eq!(
            dev.try_transmit(Micros::from_ms(500), &sf7_10b()),
            LinkOutcome::DroppedBusy
        );
        assert_eq!(dev.channels, before);
        assert_eq!(dev.counters.events_dropped_busy, 1);
    }

    #[test]
    fn blackout_when_every_channel_blocked() {
        let mut dev = EndDevice::new(0, 3);
        for c in &mut dev.channels {
            c.blocked_until = Some(Micros::from_secs(10));
        }
        assert_eq!(
            dev.try_transmit(Micros::from_secs(1), &sf7_10b()),
            LinkOutcome::DroppedBlackout
        );
        assert_eq!(dev.counters.events_dropped_blackout, 1);
    }

    #[test]
    fn back_to_back_events_exhaust_channels() {
        let profile = sf7_10b();
        let spacing = profile.rtt + Micros(1);
        let mut dev = EndDevice::new(0, 3);
        for (k, expect) in [0usize, 1, 2].into_iter().enumerate() {
            let now = spacing * k as u64;
            dev.advance(now).unwrap();
            match dev.try_transmit(now, &profile) {
                LinkOutcome::Delivered { channel_id, .. } => assert_eq!(channel_id, expect),
                other => panic!("event {k}: {other:?}"),
            }
        }
        let now = spacing * 3;
        dev.advance(now).unwrap();
        assert_eq!(
            dev.try_transmit(now, &profile),
            LinkOutcome::DroppedBlackout
        );
    }

    #[test]
    fn advance_closes_receive_window_inclusively() {
        let mut dev = EndDevice::new(0, 1);
        dev.phase = Phase::AwaitingDownlink {
            until: Micros(2_000_000),
        };
        dev.advance(Micros(1_999_000)).unwrap();
        assert!(!dev.is_idle());
        dev.advance(Micros(2_000_000)).unwrap();
        assert!(dev.is_idle());
        assert_eq!(dev.counters.downlinks_received, 1);
        dev.advance(Micros(9_000_000)).unwrap();
        assert!(dev.is_idle());
        assert_eq!(dev.counters.downlinks_received, 1);
    }

    #[test]
    fn advance_rejects_time_regression() {
        let mut dev = EndDevice::new(0, 1);
        dev.advance(Micros(10)).unwrap();
        assert!(matches!(
            dev.advance(Micros(9)),
            Err(Error::TimeRegression { .. })
        ));
    }

    #[test]
    fn single_channel_spacing_is_toa_over_duty_cycle() {
        let profile = sf7_10b();
        let mut dev = EndDevice::new(0, 1);
        assert!(matches!(
            dev.try_transmit(Micros::ZERO, &profile),
            LinkOutcome::Delivered { .. }
        ));
        let gap = Micros(6_169_600);
        dev.advance(gap - Micros(1)).unwrap();
        assert_eq!(
            dev.try_transmit(gap - Micros(1), &profile),
            LinkOutcome::DroppedBlackout
        );
        dev.advance(gap).unwrap();
        assert!(matches!(
            dev.try_transmit(gap, &profile),
            LinkOutcome::Delivered { .. }
        ));
    }

    #[test]
    fn ideal_profile_never_drops() {
        let profile = TimingProfile::ideal();
        let mut dev = EndDevice::new(0, 1);
        for k in 0..100 {
            let now = Micros::from_ms(k);
            dev.advance(now).unwrap();
            assert!(matches!(
                dev.try_transmit(now, &profile),
                LinkOutcome::Delivered { .. }
            ));
        }
    }

    fn uplink(t: Micros, channel_id: usize, airtime: Micros) -> TraceRecord {
        TraceRecord {
            t,
            device_id: Some(0),
            kind: TraceKind::UplinkStart {
                channel_id,
                airtime,
            },
        }
    }

    #[test]
    fn utilization_ratios() {
        let one = [uplink(Micros::ZERO, 0, Micros(61_696))];
        let u = duty_cycle_utilization(&one, 0, 0, Micros::ZERO, Micros(6_169_600)).unwrap();
        assert!((u - 0.01).abs() < 1e-12);

        assert_eq!(
            duty_cycle_utilization(&[], 0, 0, Micros::ZERO, Micros(10)).unwrap(),
            0.0
        );

        let two = [
            uplink(Micros::from_secs(3), 1, Micros::from_ms(500)),
            uplink(Micros::from_secs(70), 1, Micros::from_ms(500)),
        ];
        let u = duty_cycle_utilization(&two, 0, 1, Micros::ZERO, Micros::from_secs(100)).unwrap();
        assert!((u - 0.01).abs() < 1e-12);
        assert_eq!(
            duty_cycle_utilization(&two, 0, 0, Micros::ZERO, Micros::from_secs(100)).unwrap(),
            0.0
        );

        assert!(duty_cycle_utilization(&two, 0, 1, Micros(5), Micros(5)).is_err());
    }
}
