//! Loads a TOML scenario, runs it and prints the CSV row the CLI would.
//!
//!     cargo run --release --example scenario_file -- crates/core/examples/scenarios/sf8_10b_leak_1s.toml

use std::path::PathBuf;

use lorawan_etc::cli::{load_scenario, write_rows, OutputRow};

fn main() -> lorawan_etc::Result<()> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR"))
                .join("examples/scenarios/sf8_10b_leak_1s.toml")
        });
    let cfg = load_scenario(&path)?;
    let metrics = lorawan_etc::run_metrics(&cfg)?;
    let row = OutputRow::new(&cfg, Some(&cfg.timing()?), Some(&metrics));
    write_rows(std::io::stdout().lock(), &[row])
}
