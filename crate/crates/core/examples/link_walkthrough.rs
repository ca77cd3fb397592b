//! One end-device fed a burst of events: shows which ones are sent, which
//! hit the receive windows and which find every channel in blackout.
//!
//!     cargo run --example link_walkthrough -- 9 30

use lorawan_etc::{EndDevice, LinkOutcome, Micros, RadioConfig, TimingProfile};

fn main() -> lorawan_etc::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<u32>().expect("numeric argument"));
    let sf = args.next().unwrap_or(7) as u8;
    let payload = args.next().unwrap_or(10);
    let radio = RadioConfig::eu868(sf, payload);
    let profile = TimingProfile::from_config(&radio)?;
    println!(
        "SF{sf} {payload} B: toa {:.1} ms, rtt {:.1} ms, channel held {:.1} ms",
        profile.time_on_air.as_ms(),
        profile.rtt.as_ms(),
        profile.channel_hold().as_ms()
    );

    let mut dev = EndDevice::new(0, radio.n_channels as usize);
    let events_ms = [0, 500, 1_200, 2_500, 3_800, 5_000, 7_000, 10_000, 30_000];
    for ms in events_ms {
        let now = Micros::from_ms(ms);
        dev.advance(now)?;
        let what = match dev.try_transmit(now, &profile) {
            LinkOutcome::Delivered {
                channel_id,
                downlink_done,
                ..
            } => {
                format!(
                    "sent on channel {channel_id}, downlink at {:.3} s",
                    downlink_done.as_secs()
                )
            }
            LinkOutcome::DroppedBusy => "dropped: waiting for a downlink".to_string(),
            LinkOutcome::DroppedBlackout => "dropped: all channels in blackout".to_string(),
        };
        println!("{:>8.3} s  {what}", now.as_secs());
    }
    println!("{:?}", dev.counters);
    Ok(())
}
