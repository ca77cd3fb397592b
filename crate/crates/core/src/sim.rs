//! Fixed-step co-simulation of the plant, the event triggers and the link.
//!
//! Per step `t`:
//! 1. close elapsed receive windows, deliver due uplinks to the controller
//!    and due downlinks to the actuators;
//! 2. evaluate the controller's mode switch on its composite state;
//! 3. at trigger instants, let every device test its condition and try to
//!    transmit;
//! 4. deliver anything a zero-delay link made due at `t`;
//! 5. record metrics and integrate the plant over `[t, t + dt)`.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::airtime::{RadioConfig, TimingProfile};
use crate::error::{Error, Result};
use crate::link::{EndDevice, LinkOutcome};
use crate::plant::{
    self, Disturbance, DisturbanceProfile, Mode, PlantModel, PlantState, TriggerConfig, ZohStep,
};
use crate::time::Micros;
use crate::trace::{NullSink, TraceKind, TraceRecord, TraceSink};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinkKind {
    #[default]
    LoRaWan,
    /// Zero airtime, zero receive delay, no duty cycle.
    Ideal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub radio: RadioConfig,
    pub link: LinkKind,
    pub trigger: TriggerConfig,
    pub plant: PlantModel,
    pub disturbance: Option<Disturbance>,
    pub horizon_s: u64,
    pub dt_ms: u64,
    /// Deviation is only accumulated from this time on.
    pub metrics_from_s: f64,
    /// Period of `Sample` trace records; 0 disables them.
    pub trace_sample_ms: u64,
    /// Reserved; the model has no stochastic element.
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            radio: RadioConfig::eu868(7, 10),
            link: LinkKind::LoRaWan,
            trigger: TriggerConfig::default(),
            plant: plant::water::model(),
            disturbance: None,
            horizon_s: 600,
            dt_ms: 1,
            metrics_from_s: 150.0,
            trace_sample_ms: 1_000,
            seed: 0,
        }
    }
}

/// Disturbance used when a sweep varies the duration of a scenario that
/// does not define one: 0.01 m drained from tank 1.
pub fn default_disturbance(duration_s: f64) -> Disturbance {
    Disturbance {
        tank_index: 0,
        magnitude_m: 0.01,
        start_s: 250.0,
        duration_s,
        profile: DisturbanceProfile::default(),
        leak_window_s: Disturbance::DEFAULT_LEAK_WINDOW_S,
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.radio.validate()?;
        self.trigger.validate()?;
        self.plant.validate()?;
        if self.plant.states() != self.plant.inputs() {
            return Err(Error::config(
                "every tank needs exactly one end-device with one actuator",
            ));
        }
        if let Some(d) = &self.disturbance {
            d.validate(self.plant.states())?;
        }
        if self.dt_ms == 0 {
            return Err(Error::config("dt_ms must be positive"));
        }
        if !self.trigger.h_ms.is_multiple_of(self.dt_ms) {
            return Err(Error::config(format!(
                "trigger period {} ms is not a multiple of dt {} ms",
                self.trigger.h_ms, self.dt_ms
            )));
        }
        if !(self.horizon_s * 1_000).is_multiple_of(self.dt_ms) {
            return Err(Error::config("horizon is not a whole number of steps"));
        }
        if !(self.metrics_from_s >= 0.0) {
            return Err(Error::config("metrics_from_s must be non-negative"));
        }
        Ok(())
    }

    pub fn timing(&self) -> Result<TimingProfile> {
        match self.link {
            LinkKind::LoRaWan => TimingProfile::from_config(&self.radio),
            LinkKind::Ideal => Ok(TimingProfile::ideal()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub max_deviation_pct: Vec<f64>,
    pub events_triggered: u64,
    pub events_delivered: u64,
    pub events_dropped_busy: u64,
    pub events_dropped_blackout: u64,
    pub mode_switch_times: Vec<(Micros, Mode)>,
    /// First time after which every level stays in the safe band;
    /// `None` if the run ends outside it.
    pub settle_time_s: Option<f64>,
    pub final_levels: Vec<f64>,
}

/// Deviations below this are reported as 0.00% and count as inside the band.
pub const ZERO_DEVIATION_PCT: f64 = 0.005;

/// Relative excursion of `level` outside `band`, in percent of the band width.
pub fn deviation_pct(level: f64, band: (f64, f64)) -> f64 {
    let (lo, hi) = band;
    let excess = if level < lo {
        lo - level
    } else if level > hi {
        level - hi
    } else {
        0.0
    };
    excess / (hi - lo) * 100.0
}

/// Per-tank maximum deviation over the `Sample` records of a trace.
pub fn max_deviation_pct(trace: &[TraceRecord], band: (f64, f64)) -> Result<Vec<f64>> {
    let mut out: Option<Vec<f64>> = None;
    for r in trace {
        if let TraceKind::Sample { levels, .. } = &r.kind {
            let acc = out.get_or_insert_with(|| vec![0.0; levels.len()]);
            for (m, &x) in acc.iter_mut().zip(levels) {
                *m = m.max(deviation_pct(x, band));
            }
        }
    }
    out.ok_or_else(|| Error::domain("trace has no samples"))
}

#[derive(Debug, Clone, Copy)]
enum Pending {
    Uplink {
        device: usize,
        level: f64,
        downlink_done: Micros,
    },
    Downlink {
        device: usize,
        valve_deg: f64,
    },
}

struct Engine<'a, S: TraceSink> {
    cfg: &'a ScenarioConfig,
    profile: TimingProfile,
    sink: &'a mut S,
    state: PlantState,
    composite: DVector<f64>,
    devices: Vec<EndDevice>,
    pending: BTreeMap<(Micros, u64), Pending>,
    seq: u64,
    metrics: RunMetrics,
    last_out_of_band: Option<Micros>,
}

impl<S: TraceSink> Engine<'_, S> {
    fn emit(&mut self, t: Micros, device_id: Option<usize>, kind: impl FnOnce() -> TraceKind) {
        if self.sink.enabled() {
            self.sink.record(TraceRecord {
                t,
                device_id,
                kind: kind(),
            });
        }
    }

    fn schedule(&mut self, at: Micros, p: Pending) {
        self.pending.insert((at, self.seq), p);
        self.seq += 1;
    }

    fn process_due(&mut self, t: Micros) -> Result<()> {
        for dev in &mut self.devices {
            dev.advance(t)?;
        }
        let mut answered = Vec::new();
        while let Some(entry) = self.pending.first_entry() {
            if entry.key().0 > t {
                break;
            }
            let ((at, _), p) = entry.remove_entry();
            match p {
                Pending::Uplink {
                    device,
                    level,
                    downlink_done,
                } => {
                    self.composite[device] = level;
                    self.emit(at, Some(device), || TraceKind::UplinkDone { level });
                    answered.push((device, downlink_done));
                }
                Pending::Downlink { device, valve_deg } => {
                    self.state.held_u[device] = valve_deg;
                    self.emit(at, Some(device), || TraceKind::DownlinkDone { valve_deg });
                }
            }
        }

        let next = self.cfg.plant.evaluate_mode_switch(
            self.state.mode,
            &self.composite,
            self.cfg.trigger.h_low,
        )?;
        if next != self.state.mode {
            self.state.mode = next;
            self.metrics.mode_switch_times.push((t, next));
            self.emit(t, None, || TraceKind::ModeSwitch { to: next });
        }

        if !answered.is_empty() {
            let plant = &self.cfg.plant;
            let u = plant::controller_update(
                &self.composite,
                plant.mode(self.state.mode),
                &plant.setpoint,
                &plant.valve,
            )?;
            for (device, downlink_done) in answered {
                self.schedule(
                    downlink_done,
                    Pending::Downlink {
                        device,
                        valve_deg: u[device],
                    },
                );
            }
            // Zero-delay downlinks land in this same step.
            if self
                .pending
                .first_key_value()
                .is_some_and(|(k, _)| k.0 <= t)
            {
                return self.process_due(t);
            }
        }
        Ok(())
    }

    fn sample_triggers(&mut self, t: Micros) -> bool {
        let mut delivered_now = false;
        for j in 0..self.devices.len() {
            let level = self.state.xi[j];
            if !self.cfg.trigger.fires(level, self.state.last_sample[j]) {
                continue;
            }
            self.metrics.events_triggered += 1;
            self.emit(t, Some(j), || TraceKind::Trigger { level });
            match self.devices[j].try_transmit(t, &self.profile) {
                LinkOutcome::Delivered {
                    uplink_done,
                    downlink_done,
                    channel_id,
                } => {
                    self.metrics.events_delivered += 1;
                    self.state.last_sample[j] = level;
                    let airtime = self.profile.time_on_air;
                    self.emit(t, Some(j), || TraceKind::UplinkStart {
                        channel_id,
                        airtime,
                    });
                    self.schedule(
                        uplink_done,
                        Pending::Uplink {
                            device: j,
                            level,
                            downlink_done,
                        },
                    );
                    delivered_now |= uplink_done <= t;
                }
                LinkOutcome::DroppedBusy => {
                    self.metrics.events_dropped_busy += 1;
                    self.emit(t, Some(j), || TraceKind::DropBusy);
                }
                LinkOutcome::DroppedBlackout => {
                    self.metrics.events_dropped_blackout += 1;
                    self.emit(t, Some(j), || TraceKind::DropBlackout);
                }
            }
        }
        delivered_now
    }

    fn observe(&mut self, t: Micros) {
        let band = self.cfg.trigger.safe_band;
        let in_window = t.as_secs() >= self.cfg.metrics_from_s;
        let mut outside = false;
        for (m, &x) in self
            .metrics
            .max_deviation_pct
            .iter_mut()
            .zip(self.state.xi.iter())
        {
            let dev = deviation_pct(x, band);
            outside |= dev >= ZERO_DEVIATION_PCT;
            if in_window {
                *m = m.max(dev);
            }
        }
        if outside {
            self.last_out_of_band = Some(t);
        }
    }

    fn run(mut self) -> Result<RunMetrics> {
        let cfg = self.cfg;
        let dt = Micros::from_ms(cfg.dt_ms);
        let steps = cfg.horizon_s * 1_000 / cfg.dt_ms;
        let trigger_every = cfg.trigger.h_ms / cfg.dt_ms;
        let sample_every = if cfg.trace_sample_ms == 0 {
            0
        } else {
            (cfg.trace_sample_ms / cfg.dt_ms).max(1)
        };
        let zoh_weak = ZohStep::new(&cfg.plant.weak, dt.as_secs());
        let zoh_powerful = ZohStep::new(&cfg.plant.powerful, dt.as_secs());
        let n = cfg.plant.states();
        let tank = cfg.disturbance.map(|d| d.tank_index);

        for k in 0..=steps {
            let t = dt * k;
            self.process_due(t)?;

            if let Some(d) = &cfg.disturbance {
                if t == d.start() || (k > 0 && t > d.start() && t - dt < d.start()) {
                    self.emit(t, None, || TraceKind::DisturbanceOn);
                }
                if t == d.end() || (k > 0 && t > d.end() && t - dt < d.end()) {
                    self.emit(t, None, || TraceKind::DisturbanceOff);
                }
            }

            if k % trigger_every == 0 && self.sample_triggers(t) {
                self.process_due(t)?;
            }

            self.observe(t);
            if sample_every > 0 && k % sample_every == 0 {
                let levels: Vec<f64> = self.state.xi.iter().copied().collect();
                let mode = self.state.mode;
                self.emit(t, None, || TraceKind::Sample { levels, mode });
            }

            if k == steps {
                break;
            }
            let mut w = -&cfg.plant.demand;
            if let (Some(d), Some(i)) = (&cfg.disturbance, tank) {
                w[i] += d.mean_rate(t, t + dt);
            }
            let zoh = match self.state.mode {
                Mode::Weak => &zoh_weak,
                Mode::Powerful => &zoh_powerful,
            };
            self.state.xi = zoh.apply(&self.state.xi, &self.state.held_u, &w);
            plant::check_finite(&self.state.xi, t + dt)?;
            debug_assert_eq!(self.state.xi.len(), n);
        }

        let end = dt * steps;
        self.metrics.settle_time_s = match self.last_out_of_band {
            None => Some(0.0),
            Some(t) if t == end => None,
            Some(t) => Some((t + dt).as_secs()),
        };
        self.metrics.final_levels = self.state.xi.iter().copied().collect();
        Ok(self.metrics)
    }
}

/// Runs a scenario, streaming trace records into `sink`.
pub fn run_with_sink<S: TraceSink>(cfg: &ScenarioConfig, sink: &mut S) -> Result<RunMetrics> {
    cfg.validate()?;
    let profile = cfg.timing()?;
    let n = cfg.plant.states();
    let xi0 = cfg.plant.initial_levels.clone();
    let engine = Engine {
        cfg,
        profile,
        sink,
        state: PlantState::new(xi0, cfg.plant.initial_mode, cfg.plant.inputs()),
        // The controller assumes nominal levels until the first reports arrive.
        composite: cfg.plant.setpoint.clone(),
        devices: (0..n)
            .map(|j| EndDevice::new(j, cfg.radio.n_channels as usize))
            .collect(),
        pending: BTreeMap::new(),
        seq: 0,
        metrics: RunMetrics {
            max_deviation_pct: vec![0.0; n],
            events_triggered: 0,
            events_delivered: 0,
            events_dropped_busy: 0,
            events_dropped_blackout: 0,
            mode_switch_times: Vec::new(),
            settle_time_s: None,
            final_levels: Vec::new(),
        },
        last_out_of_band: None,
    };
    engine.run()
}

/// Runs a scenario and returns its metrics together with the full trace.
pub fn run(cfg: &ScenarioConfig) -> Result<(RunMetrics, Vec<TraceRecord>)> {
    let mut trace = Vec::new();
    let metrics = run_with_sink(cfg, &mut trace)?;
    Ok((metrics, trace))
}

/// Runs a scenario without building a trace.
pub fn run_metrics(cfg: &ScenarioConfig) -> Result<RunMetrics> {
    run_with_sink(cfg, &mut NullSink)
}

/// Axes of a parameter sweep. An empty axis keeps the base value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepGrid {
    pub sf: Vec<u8>,
    pub payload: Vec<u32>,
    pub channels: Vec<u32>,
    pub duration_s: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub sf: u8,
    pub payload_bytes: u32,
    pub n_channels: u32,
    pub disturbance_duration_s: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub cell: SweepCell,
    pub config: ScenarioConfig,
    pub result: Result<RunMetrics>,
}

impl SweepGrid {
    pub fn is_empty(&self) -> bool {
        self.sf.is_empty()
            && self.payload.is_empty()
            && self.channels.is_empty()
            && self.duration_s.is_empty()
    }

    /// Cells in lexicographic order of (sf, payload, channels, duration).
    pub fn cells(&self, base: &ScenarioConfig) -> Vec<SweepCell> {
        if self.is_empty() {
            return Vec::new();
        }
        let sfs = or_base(&self.sf, base.radio.spreading_factor);
        let payloads = or_base(&self.payload, base.radio.payload_bytes);
        let channels = or_base(&self.channels, base.radio.n_channels);
        let durations: Vec<Option<f64>> = if self.duration_s.is_empty() {
            vec![base.disturbance.map(|d| d.duration_s)]
        } else {
            self.duration_s.iter().copied().map(Some).collect()
        };
        let mut cells = Vec::new();
        for &sf in &sfs {
            for &payload_bytes in &payloads {
                for &n_channels in &channels {
                    for &disturbance_duration_s in &durations {
                        cells.push(SweepCell {
                            sf,
                            payload_bytes,
                            n_channels,
                            disturbance_duration_s,
                        });
                    }
                }
            }
        }
        cells
    }
}

fn or_base<T: Copy>(axis: &[T], base: T) -> Vec<T> {
    if axis.is_empty() {
        vec![base]
    } else {
        axis.to_vec()
    }
}

impl SweepCell {
    pub fn apply(&self, base: &ScenarioConfig) -> ScenarioConfig {
        let mut cfg = base.clone();
        if cfg.radio.spreading_factor != self.sf {
            cfg.radio.spreading_factor = self.sf;
            cfg.radio.low_dr_optimize =
                crate::airtime::default_low_dr_optimize(self.sf, cfg.radio.bandwidth_hz);
        }
        cfg.radio.payload_bytes = self.payload_bytes;
        cfg.radio.n_channels = self.n_channels;
        if let Some(duration_s) = self.disturbance_duration_s {
            let mut d = base
                .disturbance
                .unwrap_or_else(|| default_disturbance(duration_s));
            d.duration_s = duration_s;
            cfg.disturbance = Some(d);
        }
        cfg
    }
}

/// Runs every grid cell on its own fresh state. Rows come back in grid
/// order whatever order the cells finish in; a failing cell does not stop
/// the others.
pub fn sweep(base: &ScenarioConfig, grid: &SweepGrid) -> Vec<SweepRow> {
    grid.cells(base)
        .into_par_iter()
        .map(|cell| {
            let config = cell.apply(base);
            let result = run_metrics(&config);
            SweepRow {
                cell,
                config,
                result,
            }
        })
        .collect()
}
