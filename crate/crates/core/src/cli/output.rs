//! CSV tables: one [`OutputRow`] per run or sweep cell, and trace export.
//!
//! Durations are printed in ms with 3 decimals, deviations in % with 2.
//! Missing values (no disturbance, no settle time, failed cell) are empty
//! fields.

use std::io::Write;

use crate::airtime::TimingProfile;
use crate::error::{Error, Result};
use crate::sim::{RunMetrics, ScenarioConfig, SweepRow};
use crate::trace::{TraceKind, TraceRecord};

pub const HEADER: [&str; 18] = [
    "sf",
    "payload_bytes",
    "n_channels",
    "duty_cycle",
    "disturbance_duration_s",
    "toa_ms",
    "rtt_ms",
    "bp_ms",
    "bp_n_ms",
    "max_dev_pct_tank1",
    "max_dev_pct_tank2",
    "max_dev_pct_tank3",
    "events_triggered",
    "delivered",
    "dropped_busy",
    "dropped_blackout",
    "settle_time_s",
    "status",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Error,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub max_dev_pct: [f64; 3],
    pub events_triggered: u64,
    pub delivered: u64,
    pub dropped_busy: u64,
    pub dropped_blackout: u64,
    pub settle_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputRow {
    pub sf: u8,
    pub payload_bytes: u32,
    pub n_channels: u32,
    pub duty_cycle: f64,
    pub disturbance_duration_s: Option<f64>,
    pub toa_ms: f64,
    pub rtt_ms: f64,
    pub bp_ms: f64,
    pub bp_n_ms: f64,
    /// `None` when the run failed.
    pub run: Option<RunSummary>,
}

impl OutputRow {
    pub fn new(
        cfg: &ScenarioConfig,
        timing: Option<&TimingProfile>,
        metrics: Option<&RunMetrics>,
    ) -> Self {
        let ms = |f: fn(&TimingProfile) -> crate::time::Micros| {
            timing.map_or(f64::NAN, |t| f(t).as_ms())
        };
        OutputRow {
            sf: cfg.radio.spreading_factor,
            payload_bytes: cfg.radio.payload_bytes,
            n_channels: cfg.radio.n_channels,
            duty_cycle: cfg.radio.duty_cycle,
            disturbance_duration_s: cfg.disturbance.map(|d| d.duration_s),
            toa_ms: ms(|t| t.time_on_air),
            rtt_ms: ms(|t| t.rtt),
            bp_ms: ms(|t| t.bp_single),
            bp_n_ms: ms(|t| t.bp_n),
            run: metrics.map(|m| {
                let dev = |i: usize| m.max_deviation_pct.get(i).copied().unwrap_or(0.0);
                RunSummary {
                    max_dev_pct: [dev(0), dev(1), dev(2)],
                    events_triggered: m.events_triggered,
                    delivered: m.events_delivered,
                    dropped_busy: m.events_dropped_busy,
                    dropped_blackout: m.events_dropped_blackout,
                    settle_time_s: m.settle_time_s,
                }
            }),
        }
    }

    pub fn from_sweep(row: &SweepRow) -> Self {
        let timing = row
            .config
            .radio
            .validate()
            .and_then(|_| TimingProfile::from_config(&row.config.radio))
            .ok();
        OutputRow::new(&row.config, timing.as_ref(), row.result.as_ref().ok())
    }

    pub fn status(&self) -> Status {
        if self.run.is_some() {
            Status::Ok
        } else {
            Status::Error
        }
    }

    /// Fields in [`HEADER`] order, all fixed precision.
    pub fn fields(&self) -> Vec<String> {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let ms = |v: f64| {
            if v.is_finite() {
                format!("{v:.3}")
            } else {
                String::new()
            }
        };
        let run = self.run.as_ref();
        vec![
            self.sf.to_string(),
            self.payload_bytes.to_string(),
            self.n_channels.to_string(),
            format!("{:.4}", self.duty_cycle),
            opt(self.disturbance_duration_s.map(|d| format!("{d:.3}"))),
            ms(self.toa_ms),
            ms(self.rtt_ms),
            ms(self.bp_ms),
            ms(self.bp_n_ms),
            opt(run.map(|r| format!("{:.2}", r.max_dev_pct[0]))),
            opt(run.map(|r| format!("{:.2}", r.max_dev_pct[1]))),
            opt(run.map(|r| format!("{:.2}", r.max_dev_pct[2]))),
            opt(run.map(|r| r.events_triggered.to_string())),
            opt(run.map(|r| r.delivered.to_string())),
            opt(run.map(|r| r.dropped_busy.to_string())),
            opt(run.map(|r| r.dropped_blackout.to_string())),
            opt(run.and_then(|r| r.settle_time_s).map(|s| format!("{s:.3}"))),
            self.status().name().to_string(),
        ]
    }
}

/// A row as read back from a CSV file; numbers carry the printed precision.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRow {
    pub sf: u8,
    pub payload_bytes: u32,
    pub n_channels: u32,
    pub duty_cycle: f64,
    pub disturbance_duration_s: Option<f64>,
    pub toa_ms: Option<f64>,
    pub rtt_ms: Option<f64>,
    pub bp_ms: Option<f64>,
    pub bp_n_ms: Option<f64>,
    pub max_dev_pct: [Option<f64>; 3],
    pub events_triggered: Option<u64>,
    pub delivered: Option<u64>,
    pub dropped_busy: Option<u64>,
    pub dropped_blackout: Option<u64>,
    pub settle_time_s: Option<f64>,
    pub status: Status,
}

pub fn write_rows<W: Write>(out: W, rows: &[OutputRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let io = |e: csv::Error| Error::domain(format!("cannot write CSV: {e}"));
    w.write_record(HEADER).map_err(io)?;
    for row in rows {
        w.write_record(row.fields()).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::domain(format!("cannot write CSV: {e}")))
}

pub fn read_rows<R: std::io::Read>(input: R) -> Result<Vec<ParsedRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r
        .headers()
        .map_err(|e| Error::domain(e.to_string()))?
        .clone();
    if header.iter().ne(HEADER) {
        return Err(Error::domain(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::domain(e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let bad = |i: usize| Error::Parse {
            key: format!("row {}.{}", line + 1, HEADER[i]),
            message: format!("`{}`", field(i)),
        };
        let opt_f = |i: usize| -> Result<Option<f64>> {
            match field(i) {
                "" => Ok(None),
                s => s.parse().map(Some).map_err(|_| bad(i)),
            }
        };
        let opt_u = |i: usize| -> Result<Option<u64>> {
            match field(i) {
                "" => Ok(None),
                s => s.parse().map(Some).map_err(|_| bad(i)),
            }
        };
        rows.push(ParsedRow {
            sf: field(0).parse().map_err(|_| bad(0))?,
            payload_bytes: field(1).parse().map_err(|_| bad(1))?,
            n_channels: field(2).parse().map_err(|_| bad(2))?,
            duty_cycle: field(3).parse().map_err(|_| bad(3))?,
            disturbance_duration_s: opt_f(4)?,
            toa_ms: opt_f(5)?,
            rtt_ms: opt_f(6)?,
            bp_ms: opt_f(7)?,
            bp_n_ms: opt_f(8)?,
            max_dev_pct: [opt_f(9)?, opt_f(10)?, opt_f(11)?],
            events_triggered: opt_u(12)?,
            delivered: opt_u(13)?,
            dropped_busy: opt_u(14)?,
            dropped_blackout: opt_u(15)?,
            settle_time_s: opt_f(16)?,
            status: match field(17) {
                "ok" => Status::Ok,
                "error" => Status::Error,
                _ => return Err(bad(17)),
            },
        });
    }
    Ok(rows)
}

pub const TRACE_HEADER: [&str; 8] = [
    "t_ms",
    "device_id",
    "kind",
    "channel_id",
    "airtime_ms",
    "value",
    "mode",
    "levels_m",
];

/// Writes a trace as CSV. `value` holds the reported level (m) or the
/// valve angle (deg); `levels_m` is a space-separated level snapshot.
pub fn write_trace<W: Write>(out: W, trace: &[TraceRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let io = |e: csv::Error| Error::domain(format!("cannot write trace: {e}"));
    w.write_record(TRACE_HEADER).map_err(io)?;
    for r in trace {
        let mut f: [String; 8] = Default::default();
        f[0] = format!("{:.3}", r.t.as_ms());
        f[1] = r.device_id.map(|d| d.to_string()).unwrap_or_default();
        f[2] = r.kind.name().to_string();
        match &r.kind {
            TraceKind::Sample { levels, mode } => {
                f[6] = mode.name().to_string();
                f[7] = levels
                    .iter()
                    .map(|x| format!("{x:.9}"))
                    .collect::<Vec<_>>()
                    .join(" ");
            }
            TraceKind::Trigger { level } | TraceKind::UplinkDone { level } => {
                f[5] = format!("{level:.9}")
            }
            TraceKind::UplinkStart {
                channel_id,
                airtime,
            } => {
                f[3] = channel_id.to_string();
                f[4] = format!("{:.3}", airtime.as_ms());
            }
            TraceKind::DownlinkDone { valve_deg } => f[5] = format!("{valve_deg:.1}"),
            TraceKind::ModeSwitch { to } => f[6] = to.name().to_string(),
            TraceKind::DropBusy
            | TraceKind::DropBlackout
            | TraceKind::DisturbanceOn
            | TraceKind::DisturbanceOff => {}
        }
        w.write_record(&f).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::domain(format!("cannot write trace: {e}")))
}
