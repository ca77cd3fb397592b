//! Disturbance-free runs over every spreading factor and payload size:
//! maximum deviation of tank 1 and the link counters.
//!
//!     cargo run --release --example feasibility_sweep

use lorawan_etc::{ScenarioConfig, SweepGrid};

fn main() {
    let grid = SweepGrid {
        sf: (7..=12).collect(),
        payload: vec![10, 20, 30, 40, 50],
        ..Default::default()
    };
    println!(
        "{:>3} {:>8} {:>9} {:>7} {:>9} {:>6} {:>9}",
        "sf", "payload", "dev1_pct", "events", "delivered", "busy", "blackout"
    );
    for row in lorawan_etc::sweep(&ScenarioConfig::default(), &grid) {
        let c = row.cell;
        match row.result {
            Ok(m) => println!(
                "{:>3} {:>8} {:>9.2} {:>7} {:>9} {:>6} {:>9}{}",
                c.sf,
                c.payload_bytes,
                m.max_deviation_pct[0],
                m.events_triggered,
                m.events_delivered,
                m.events_dropped_busy,
                m.events_dropped_blackout,
                if m.max_deviation_pct[0] > 15.0 {
                    "  infeasible"
                } else {
                    ""
                }
            ),
            Err(e) => println!("{:>3} {:>8} error: {e}", c.sf, c.payload_bytes),
        }
    }
}
