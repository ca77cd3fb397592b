//! TOML scenario files.
//!
//! Every section and key is optional; anything left out keeps the value of
//! [`ScenarioConfig::default`]. Unknown keys are rejected so that a typo
//! cannot silently fall back to a default.
//!
//! ```toml
//! [radio]
//! spreading_factor = 8
//! payload_bytes = 10
//!
//! [disturbance]
//! magnitude_m = 0.01
//! start_s = 250
//! duration_s = 1
//!
//! [sim]
//! link = "lorawan"
//! ```

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::airtime::default_low_dr_optimize;
use crate::error::{Error, Result};
use crate::plant::{Disturbance, DisturbanceProfile, LinearMode, Mode, Valve};
use crate::sim::{LinkKind, ScenarioConfig};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    radio: Option<RadioSection>,
    trigger: Option<TriggerSection>,
    plant: Option<PlantSection>,
    disturbance: Option<DisturbanceSection>,
    sim: Option<SimSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RadioSection {
    spreading_factor: Option<u8>,
    bandwidth_hz: Option<u32>,
    code_rate_num: Option<u8>,
    payload_bytes: Option<u32>,
    header_bytes: Option<u32>,
    n_channels: Option<u32>,
    duty_cycle: Option<f64>,
    preamble_symbols: Option<u32>,
    crc_enabled: Option<bool>,
    explicit_header: Option<bool>,
    low_dr_optimize: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TriggerSection {
    eta: Option<f64>,
    h_ms: Option<u64>,
    h_low: Option<f64>,
    safe_band: Option<(f64, f64)>,
    level_alarm: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlantSection {
    setpoint: Option<Vec<f64>>,
    initial_levels: Option<Vec<f64>>,
    initial_mode: Option<Mode>,
    demand: Option<Vec<f64>>,
    alpha_p_in: Option<Vec<f64>>,
    a_weak: Option<Vec<Vec<f64>>>,
    b_weak: Option<Vec<Vec<f64>>>,
    k_weak: Option<Vec<Vec<f64>>>,
    a_powerful: Option<Vec<Vec<f64>>>,
    b_powerful: Option<Vec<Vec<f64>>>,
    k_powerful: Option<Vec<Vec<f64>>>,
    valve: Option<Valve>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DisturbanceSection {
    tank_index: Option<usize>,
    magnitude_m: Option<f64>,
    start_s: Option<f64>,
    duration_s: f64,
    profile: Option<DisturbanceProfile>,
    leak_window_s: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    link: Option<LinkName>,
    horizon_s: Option<u64>,
    dt_ms: Option<u64>,
    metrics_from_s: Option<f64>,
    trace_sample_ms: Option<u64>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum LinkName {
    Lorawan,
    Ideal,
}

/// Parses a scenario from TOML text and validates it.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::Parse {
        key: String::new(),
        message: e.message().to_string(),
    })?;
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let message = e.inner().message().to_string();
        let key = match e.path().to_string() {
            root if root == "." => String::new(),
            key => key,
        };
        Error::Parse { key, message }
    })?;
    let cfg = file.into_config()?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text)
}

fn matrix(key: &str, rows: Vec<Vec<f64>>) -> Result<DMatrix<f64>> {
    let parse_err = |message: String| Error::Parse {
        key: key.to_string(),
        message,
    };
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Err(parse_err("matrix is empty".into()));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != m) {
        return Err(parse_err(format!(
            "row {bad} has {} entries, expected {m}",
            rows[bad].len()
        )));
    }
    Ok(DMatrix::from_row_iterator(n, m, rows.into_iter().flatten()))
}

fn override_mode(
    base: &LinearMode,
    prefix: &str,
    a: Option<Vec<Vec<f64>>>,
    b: Option<Vec<Vec<f64>>>,
    k: Option<Vec<Vec<f64>>>,
) -> Result<LinearMode> {
    let a = a
        .map(|v| matrix(&format!("plant.a_{prefix}"), v))
        .transpose()?;
    let b = b
        .map(|v| matrix(&format!("plant.b_{prefix}"), v))
        .transpose()?;
    let k = k
        .map(|v| matrix(&format!("plant.k_{prefix}"), v))
        .transpose()?;
    let b = b.unwrap_or_else(|| base.b.clone());
    // A defaults to zero at whatever size B now has.
    let a = a.unwrap_or_else(|| {
        if base.a.nrows() == b.nrows() {
            base.a.clone()
        } else {
            DMatrix::zeros(b.nrows(), b.nrows())
        }
    });
    let k = k.unwrap_or_else(|| base.k.clone());
    LinearMode::new(base.mode, a, b, k)
}

impl ScenarioFile {
    fn into_config(self) -> Result<ScenarioConfig> {
        let mut cfg = ScenarioConfig::default();

        if let Some(r) = self.radio {
            let radio = &mut cfg.radio;
            if let Some(v) = r.spreading_factor {
                radio.spreading_factor = v;
            }
            if let Some(v) = r.bandwidth_hz {
                radio.bandwidth_hz = v;
            }
            if let Some(v) = r.code_rate_num {
                radio.code_rate_num = v;
            }
            if let Some(v) = r.payload_bytes {
                radio.payload_bytes = v;
            }
            if let Some(v) = r.header_bytes {
                radio.header_bytes = v;
            }
            if let Some(v) = r.n_channels {
                radio.n_channels = v;
            }
            if let Some(v) = r.duty_cycle {
                radio.duty_cycle = v;
            }
            if let Some(v) = r.preamble_symbols {
                radio.preamble_symbols = v;
            }
            if let Some(v) = r.crc_enabled {
                radio.crc_enabled = v;
            }
            if let Some(v) = r.explicit_header {
                radio.explicit_header = v;
            }
            radio.low_dr_optimize = r.low_dr_optimize.unwrap_or_else(|| {
                default_low_dr_optimize(radio.spreading_factor, radio.bandwidth_hz)
            });
        }

        if let Some(t) = self.trigger {
            let trig = &mut cfg.trigger;
            if let Some(v) = t.eta {
                trig.eta = v;
            }
            if let Some(v) = t.h_ms {
                trig.h_ms = v;
            }
            if let Some(v) = t.h_low {
                trig.h_low = v;
            }
            if let Some(v) = t.safe_band {
                trig.safe_band = v;
            }
            if let Some(v) = t.level_alarm {
                trig.level_alarm = v;
            }
        }

        if let Some(p) = self.plant {
            let plant = &mut cfg.plant;
            plant.weak = override_mode(&plant.weak, "weak", p.a_weak, p.b_weak, p.k_weak)?;
            plant.powerful = override_mode(
                &plant.powerful,
                "powerful",
                p.a_powerful,
                p.b_powerful,
                p.k_powerful,
            )?;
            for (slot, value) in [
                (&mut plant.setpoint, p.setpoint),
                (&mut plant.initial_levels, p.initial_levels),
                (&mut plant.demand, p.demand),
                (&mut plant.alpha_p_in, p.alpha_p_in),
            ] {
                if let Some(v) = value {
                    *slot = DVector::from_vec(v);
                }
            }
            if let Some(v) = p.initial_mode {
                plant.initial_mode = v;
            }
            if let Some(v) = p.valve {
                plant.valve = v;
            }
        }

        if let Some(d) = self.disturbance {
            let base = crate::sim::default_disturbance(d.duration_s);
            cfg.disturbance = Some(Disturbance {
                tank_index: d.tank_index.unwrap_or(base.tank_index),
                magnitude_m: d.magnitude_m.unwrap_or(base.magnitude_m),
                start_s: d.start_s.unwrap_or(base.start_s),
                duration_s: d.duration_s,
                profile: d.profile.unwrap_or(base.profile),
                leak_window_s: d.leak_window_s.unwrap_or(base.leak_window_s),
            });
        }

        if let Some(s) = self.sim {
            if let Some(v) = s.link {
                cfg.link = match v {
                    LinkName::Lorawan => LinkKind::LoRaWan,
                    LinkName::Ideal => LinkKind::Ideal,
                };
            }
            if let Some(v) = s.horizon_s {
                cfg.horizon_s = v;
            }
            if let Some(v) = s.dt_ms {
                cfg.dt_ms = v;
            }
            if let Some(v) = s.metrics_from_s {
                cfg.metrics_from_s = v;
            }
            if let Some(v) = s.trace_sample_ms {
                cfg.trace_sample_ms = v;
            }
            if let Some(v) = s.seed {
                cfg.seed = v;
            }
        }
        Ok(cfg)
    }
}
