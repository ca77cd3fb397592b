//! SF8 with 0.01 m drained from tank 1 for 1, 5 and 10 s, per payload size.
//!
//!     cargo run --release --example disturbance_table

use lorawan_etc::{ScenarioConfig, SweepGrid};

fn main() {
    let durations = [1.0, 5.0, 10.0];
    let grid = SweepGrid {
        sf: vec![8],
        payload: vec![10, 20, 30, 40, 50],
        duration_s: durations.to_vec(),
        ..Default::default()
    };
    let rows = lorawan_etc::sweep(&ScenarioConfig::default(), &grid);
    println!("{:>8} {:>8} {:>8} {:>8}", "payload", "1 s", "5 s", "10 s");
    for chunk in rows.chunks(durations.len()) {
        let cells: Vec<String> = chunk
            .iter()
            .map(|r| {
                r.result
                    .as_ref()
                    .map_or("error".into(), |m| format!("{:.2}", m.max_deviation_pct[0]))
            })
            .collect();
        println!(
            "{:>6} B {:>8} {:>8} {:>8}",
            chunk[0].cell.payload_bytes, cells[0], cells[1], cells[2]
        );
    }
}
