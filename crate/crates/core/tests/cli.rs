//! End-to-end tests of the `lorawan-etc` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lorawan_etc::cli::{load_scenario, read_rows, Status, HEADER};
use lorawan_etc::sim;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lorawan-etc"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("examples/scenarios")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn airtime_row() {
    let o = run(&["airtime", "--sf", "12", "--payload", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[..6], ["12", "50", "125000", "1", "3", "0.0100"]);
    let toa: f64 = row[6].parse().unwrap();
    assert_eq!(toa, 2793.472);
    let rtt: f64 = row[7].parse().unwrap();
    assert_eq!(rtt, 2.0 * toa + 1000.0);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["airtime", "--sf", "6", "--payload", "10"][..],
        &["airtime", "--payload", "10"],
        &["airtime", "--sf", "7", "--payload", "10", "--duty", "0"],
        &["frobnicate"],
        &["run"],
        &["sweep", "--grid", "sf=7..x"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(o.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn malformed_scenario_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[trigger]\neta = \"small\"\n").unwrap();
    let o = run(&["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("trigger.eta"), "{}", stderr(&o));

    std::fs::write(&path, "[radio]\nduty_cycle = 1.5\n").unwrap();
    assert_eq!(run(&["run", path.to_str().unwrap()]).status.code(), Some(2));

    assert_eq!(
        run(&["run", dir.path().join("missing.toml").to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn run_matches_library() {
    let path = scenario("sf8_10b_leak_1s.toml");
    let o = run(&["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_rows(o.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    assert_eq!((row.sf, row.payload_bytes, row.status), (8, 10, Status::Ok));
    assert_eq!(row.disturbance_duration_s, Some(1.0));

    let cfg = load_scenario(&path).unwrap();
    let m = sim::run_metrics(&cfg).unwrap();
    for (printed, exact) in row.max_dev_pct.iter().zip(&m.max_deviation_pct) {
        assert!((printed.unwrap() - exact).abs() <= 0.005 + 1e-9);
    }
    assert_eq!(row.events_triggered, Some(m.events_triggered));
    assert_eq!(row.delivered, Some(m.events_delivered));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("sf7_10b_no_disturbance.toml");
    let mut outputs = Vec::new();
    for i in 0..2 {
        let trace = dir.path().join(format!("trace{i}.csv"));
        let o = run(&[
            "run",
            path.to_str().unwrap(),
            "--trace",
            trace.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        outputs.push((o.stdout, std::fs::read(&trace).unwrap()));
    }
    assert!(!outputs[0].1.is_empty());
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = run(&[
        "sweep",
        "--grid",
        "sf=7,12;payload=10,50",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let rows = read_rows(std::fs::File::open(&out).unwrap()).unwrap();
    let cells: Vec<(u8, u32)> = rows.iter().map(|r| (r.sf, r.payload_bytes)).collect();
    assert_eq!(cells, [(7, 10), (7, 50), (12, 10), (12, 50)]);
    assert!(rows
        .iter()
        .all(|r| r.status == Status::Ok && r.disturbance_duration_s.is_none()));
}

#[test]
fn failed_cell_exits_1_but_keeps_the_table() {
    // 250 B is beyond any LoRa frame, so that cell cannot be simulated.
    let o = run(&["sweep", "--grid", "sf=7;payload=10,250"]);
    assert_eq!(o.status.code(), Some(1));
    let rows = read_rows(o.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].status, Status::Ok);
    assert_eq!(rows[1].status, Status::Error);
    assert_eq!(rows[1].max_dev_pct, [None; 3]);
    assert!(stderr(&o).contains("payload=250"));
}

#[test]
fn empty_grid_is_header_only() {
    let o = run(&["sweep", scenario("ideal_link.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), HEADER.join(",") + "\n");
}

#[test]
fn shipped_scenarios_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/scenarios");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        load_scenario(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 3);
}

#[test]
fn reference_scenario_spells_out_the_defaults() {
    let mut cfg = load_scenario(&scenario("full_reference.toml")).unwrap();
    let default = sim::ScenarioConfig::default();
    assert_eq!(cfg.disturbance, Some(sim::default_disturbance(1.0)));
    cfg.disturbance = None;
    // The matrices are written out in decimal, so compare those loosely.
    for (got, want) in [
        (&cfg.plant.weak.b, &default.plant.weak.b),
        (&cfg.plant.powerful.b, &default.plant.powerful.b),
        (&cfg.plant.weak.k, &default.plant.weak.k),
        (&cfg.plant.powerful.k, &default.plant.powerful.k),
    ] {
        assert!((got - want).abs().max() <= 1e-12 * want.abs().max());
    }
    cfg.plant.weak = default.plant.weak.clone();
    cfg.plant.powerful = default.plant.powerful.clone();
    assert_eq!(cfg, default);
}
