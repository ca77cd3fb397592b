//! Helpers shared by the integration and acceptance tests.
#![allow(dead_code)]

use lorawan_etc::airtime::{RadioConfig, TimingProfile};
use lorawan_etc::link::{EndDevice, LinkOutcome};
use lorawan_etc::trace::{TraceKind, TraceRecord};
use lorawan_etc::Micros;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    Delivered(usize),
    Busy,
    Blackout,
}

/// Independent 1 ms timeline of one device: every channel and the receive
/// window are arrays of occupied slots.
pub fn brute_force(
    profile: &TimingProfile,
    n_channels: usize,
    events_ms: &[u64],
    horizon_ms: u64,
) -> Vec<Class> {
    let slots = |us: u64| us.div_ceil(1_000) as usize;
    let len = horizon_ms as usize + slots(profile.rtt.0) + slots(profile.channel_hold().0) + 1;
    let mut occupied = vec![vec![false; len]; n_channels];
    let mut awaiting = vec![false; len];
    let mut out = Vec::with_capacity(events_ms.len());
    for &t in events_ms {
        let t = t as usize;
        if awaiting[t] {
            out.push(Class::Busy);
            continue;
        }
        // Among free channels, the one whose last blocked slot is oldest.
        let last_used = |c: usize| {
            occupied[c][..t]
                .iter()
                .rposition(|&b| b)
                .map_or(-1, |i| i as i64)
        };
        let pick = (0..n_channels)
            .filter(|&c| !occupied[c][t])
            .min_by_key(|&c| (last_used(c), c));
        match pick {
            None => out.push(Class::Blackout),
            Some(c) => {
                occupied[c][t..t + slots(profile.channel_hold().0)].fill(true);
                awaiting[t..t + slots(profile.rtt.0)].fill(true);
                out.push(Class::Delivered(c));
            }
        }
    }
    out
}

/// Runs the device model over `events_ms`, returning classifications and
/// the `UplinkStart` records it produced.
pub fn device_model(
    profile: &TimingProfile,
    n_channels: usize,
    events_ms: &[u64],
) -> (Vec<Class>, Vec<TraceRecord>) {
    let mut dev = EndDevice::new(0, n_channels);
    let mut classes = Vec::new();
    let mut trace = Vec::new();
    for &t in events_ms {
        let now = Micros::from_ms(t);
        dev.advance(now).unwrap();
        classes.push(match dev.try_transmit(now, profile) {
            LinkOutcome::Delivered { channel_id, .. } => {
                trace.push(TraceRecord {
                    t: now,
                    device_id: Some(0),
                    kind: TraceKind::UplinkStart {
                        channel_id,
                        airtime: profile.time_on_air,
                    },
                });
                Class::Delivered(channel_id)
            }
            LinkOutcome::DroppedBusy => Class::Busy,
            LinkOutcome::DroppedBlackout => Class::Blackout,
        });
    }
    (classes, trace)
}

/// A random radio setup and a sorted stream of distinct event instants.
pub fn random_stream(rng: &mut impl Rng, horizon_ms: u64) -> (RadioConfig, Vec<u64>) {
    let sf = rng.random_range(7..=12u8);
    let payload = rng.random_range(0..=50u32);
    let channels = rng.random_range(1..=8u32);
    let duty = [0.001, 0.01, 0.1, 0.5, 1.0][rng.random_range(0..5)];
    let radio = RadioConfig::eu868(sf, payload)
        .with_channels(channels)
        .with_duty_cycle(duty);
    let n = rng.random_range(1..=200usize);
    // Mix of dense bursts and sparse gaps.
    let mut t = 0u64;
    let mut events = Vec::with_capacity(n);
    for _ in 0..n {
        t += if rng.random_bool(0.3) {
            rng.random_range(1..50)
        } else {
            rng.random_range(50..5_000)
        };
        if t >= horizon_ms {
            break;
        }
        events.push(t);
    }
    (radio, events)
}
