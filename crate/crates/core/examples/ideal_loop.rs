//! The closed loop over a zero-delay link: levels every 10 s and the mode
//! switch times.
//!
//!     cargo run --release --example ideal_loop

use lorawan_etc::{LinkKind, ScenarioConfig, TraceKind};

fn main() -> lorawan_etc::Result<()> {
    let cfg = ScenarioConfig {
        link: LinkKind::Ideal,
        trace_sample_ms: 10_000,
        ..Default::default()
    };
    let (m, trace) = lorawan_etc::run(&cfg)?;
    println!(
        "{:>6} {:>9} {:>8} {:>8} {:>8}",
        "t_s", "mode", "tank1", "tank2", "tank3"
    );
    for r in &trace {
        if let TraceKind::Sample { levels, mode } = &r.kind {
            println!(
                "{:>6.0} {:>9?} {:>8.4} {:>8.4} {:>8.4}",
                r.t.as_secs(),
                mode,
                levels[0],
                levels[1],
                levels[2]
            );
        }
    }
    let switches: Vec<String> = m
        .mode_switch_times
        .iter()
        .map(|(t, to)| format!("{:.1}s->{to:?}", t.as_secs()))
        .collect();
    println!("switches: {}", switches.join(" "));
    println!(
        "settle time: {:?} s, events: {}",
        m.settle_time_s, m.events_triggered
    );
    Ok(())
}
