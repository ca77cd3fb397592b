//! Time on air, round trip time and blackout period for every spreading
//! factor and payload size, with 3 and 8 channels.
//!
//!     cargo run --example airtime_table

use lorawan_etc::{RadioConfig, TimingProfile};

fn main() -> lorawan_etc::Result<()> {
    println!(
        "{:>3} {:>8} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "sf", "payload", "toa_ms", "rtt_ms", "bp_ms", "bp3_ms", "bp8_ms"
    );
    for sf in 7..=12 {
        for payload in [10, 20, 30, 40, 50] {
            let three = TimingProfile::from_config(&RadioConfig::eu868(sf, payload))?;
            let eight =
                TimingProfile::from_config(&RadioConfig::eu868(sf, payload).with_channels(8))?;
            println!(
                "{sf:>3} {payload:>8} {:>10.3} {:>10.3} {:>10.3} {:>10.3} {:>10.3}",
                three.time_on_air.as_ms(),
                three.rtt.as_ms(),
                three.bp_single.as_ms(),
                three.bp_n.as_ms(),
                eight.bp_n.as_ms(),
            );
        }
    }
    Ok(())
}
