//! Switched linear plant, sample-and-hold state feedback and the
//! decentralised event trigger.
//!
//! The plant follows `dξ/dt = A ξ + B υ + w − d`, where `υ` is the valve
//! opening held by the actuators, `d` a constant demand drawn from every
//! tank and `w` an external disturbance. Control actions are computed as
//! `υ = S(K (ξ_ref − ξ̂))` from the controller's composite view `ξ̂` of the
//! tank levels, with `S` the valve saturation and quantisation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::Micros;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Weak,
    Powerful,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Weak => "weak",
            Mode::Powerful => "powerful",
        }
    }
}

/// One operating regime `(A, B, K)` of the switched plant.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMode {
    pub mode: Mode,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    /// Feedback gain, `m × n`.
    pub k: DMatrix<f64>,
}

impl LinearMode {
    pub fn new(mode: Mode, a: DMatrix<f64>, b: DMatrix<f64>, k: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::config(format!(
                "{} mode: A must be square",
                mode.name()
            )));
        }
        if b.nrows() != n {
            return Err(Error::config(format!(
                "{} mode: B has {} rows, expected {n}",
                mode.name(),
                b.nrows()
            )));
        }
        let m = b.ncols();
        if k.nrows() != m || k.ncols() != n {
            return Err(Error::config(format!(
                "{} mode: K is {}x{}, expected {m}x{n}",
                mode.name(),
                k.nrows(),
                k.ncols()
            )));
        }
        Ok(LinearMode { mode, a, b, k })
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }
}

/// Exact zero-order-hold discretisation of one mode for a fixed step.
///
/// `ξ⁺ = Φ ξ + Γ_u υ + Γ_w w` where `w` is any input entering the state
/// derivative directly (disturbance and demand).
#[derive(Debug, Clone)]
pub struct ZohStep {
    phi: DMatrix<f64>,
    gamma_u: DMatrix<f64>,
    gamma_w: DMatrix<f64>,
    a_is_zero: bool,
    dt_s: f64,
}

impl ZohStep {
    pub fn new(mode: &LinearMode, dt_s: f64) -> Self {
        let n = mode.states();
        let m = mode.inputs();
        if mode.a.iter().all(|&x| x == 0.0) {
            return ZohStep {
                phi: DMatrix::identity(n, n),
                gamma_u: &mode.b * dt_s,
                gamma_w: DMatrix::identity(n, n) * dt_s,
                a_is_zero: true,
                dt_s,
            };
        }
        // exp([[A, B, I], [0, 0, 0]] dt) holds Φ, Γ_u and Γ_w in its top rows.
        let size = n + m + n;
        let mut aug = DMatrix::zeros(size, size);
        aug.view_mut((0, 0), (n, n)).copy_from(&mode.a);
        aug.view_mut((0, n), (n, m)).copy_from(&mode.b);
        aug.view_mut((0, n + m), (n, n)).fill_with_identity();
        let e = (aug * dt_s).exp();
        ZohStep {
            phi: e.view((0, 0), (n, n)).into_owned(),
            gamma_u: e.view((0, n), (n, m)).into_owned(),
            gamma_w: e.view((0, n + m), (n, n)).into_owned(),
            a_is_zero: false,
            dt_s,
        }
    }

    pub fn dt_s(&self) -> f64 {
        self.dt_s
    }

    pub fn apply(&self, xi: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        if self.a_is_zero {
            // Φ = I and Γ_w = I·dt; skip the identity products.
            return xi + &self.gamma_u * u + w * self.dt_s;
        }
        &self.phi * xi + &self.gamma_u * u + &self.gamma_w * w
    }
}

/// Advances `xi` by `dt_s` seconds with `u` and `w` held constant.
///
/// `t_end` only labels a numerical blow-up error.
pub fn integrate_step(
    xi: &DVector<f64>,
    u: &DVector<f64>,
    w: &DVector<f64>,
    mode: &LinearMode,
    dt_s: f64,
    t_end: Micros,
) -> Result<DVector<f64>> {
    if dt_s <= 0.0 || !dt_s.is_finite() {
        return Err(Error::domain(format!("step {dt_s} s must be positive")));
    }
    let next = ZohStep::new(mode, dt_s).apply(xi, u, w);
    check_finite(&next, t_end)?;
    Ok(next)
}

pub(crate) fn check_finite(xi: &DVector<f64>, t: Micros) -> Result<()> {
    if xi.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericalBlowUp {
            t_ms: t.as_ms(),
            state: xi.iter().copied().collect(),
        })
    }
}

/// Saturation and quantisation of the valve actuators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Valve {
    pub min_deg: f64,
    pub max_deg: f64,
    pub step_deg: f64,
}

impl Default for Valve {
    fn default() -> Self {
        Valve {
            min_deg: 0.0,
            max_deg: 180.0,
            step_deg: 10.0,
        }
    }
}

impl Valve {
    /// Saturates, then rounds to the nearest step; exact ties round toward zero.
    pub fn apply_scalar(&self, raw: f64) -> f64 {
        let clamped = raw.clamp(self.min_deg, self.max_deg);
        let q = clamped / self.step_deg;
        let lower = q.floor();
        let frac = q - lower;
        let steps = if frac > 0.5 || (frac == 0.5 && q < 0.0) {
            lower + 1.0
        } else {
            lower
        };
        steps * self.step_deg
    }
}

pub fn apply_valve(u_raw: &DVector<f64>, valve: &Valve) -> DVector<f64> {
    u_raw.map(|x| valve.apply_scalar(x))
}

/// Event condition of one end-device: strictly exceeding `eta`.
pub fn check_trigger(level_now: f64, level_last_sent: f64, eta: f64) -> bool {
    (level_now - level_last_sent).abs() > eta
}

/// Valve command for a composite state.
pub fn controller_update(
    xi_composite: &DVector<f64>,
    mode: &LinearMode,
    setpoint: &DVector<f64>,
    valve: &Valve,
) -> Result<DVector<f64>> {
    Ok(apply_valve(
        &raw_control(xi_composite, mode, setpoint)?,
        valve,
    ))
}

/// `K (ξ_ref − ξ̂)` before the valve model.
pub fn raw_control(
    xi_composite: &DVector<f64>,
    mode: &LinearMode,
    setpoint: &DVector<f64>,
) -> Result<DVector<f64>> {
    if xi_composite.len() != mode.states() || setpoint.len() != mode.states() {
        return Err(Error::config(format!(
            "state has {} entries and setpoint {}, plant expects {}",
            xi_composite.len(),
            setpoint.len(),
            mode.states()
        )));
    }
    Ok(&mode.k * (setpoint - xi_composite))
}

/// Tank levels, pump mode and the per-actuator held valve openings.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub xi: DVector<f64>,
    pub mode: Mode,
    pub held_u: DVector<f64>,
    /// Last level each end-device reported; NaN until the first report.
    pub last_sample: DVector<f64>,
}

impl PlantState {
    pub fn new(xi0: DVector<f64>, mode: Mode, inputs: usize) -> Self {
        PlantState {
            last_sample: DVector::from_element(xi0.len(), f64::NAN),
            xi: xi0,
            mode,
            held_u: DVector::zeros(inputs),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerConfig {
    /// Per-device threshold on the measurement error, metres.
    pub eta: f64,
    /// Trigger evaluation period.
    pub h_ms: u64,
    /// Level at or below which the plant switches to the powerful pump.
    pub h_low: f64,
    pub safe_band: (f64, f64),
    /// A device also reports as soon as its level reaches `h_low`.
    pub level_alarm: bool,
}

impl Default for TriggerConfig {
    fn default() -> Self {
        TriggerConfig {
            eta: 0.0037,
            h_ms: 1,
            h_low: 0.03,
            safe_band: (0.03, 0.06),
            level_alarm: true,
        }
    }
}

impl TriggerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::config(format!("eta {} must be positive", self.eta)));
        }
        if self.h_ms == 0 {
            return Err(Error::config("trigger period h must be positive"));
        }
        if !(self.safe_band.0 < self.safe_band.1) {
            return Err(Error::config(format!(
                "safe band {:?} is empty",
                self.safe_band
            )));
        }
        Ok(())
    }

    /// Whether a device reports `level_now` given what it last sent.
    /// A device that has never reported always fires.
    pub fn fires(&self, level_now: f64, level_last_sent: f64) -> bool {
        level_last_sent.is_nan()
            || check_trigger(level_now, level_last_sent, self.eta)
            || (self.level_alarm && level_now <= self.h_low && level_last_sent > self.h_low)
    }
}

/// How the disturbance magnitude is spread over its duration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DisturbanceProfile {
    /// Constant rate of `magnitude / duration`; the total change is `magnitude`.
    Spread,
    /// Constant leak of `magnitude / leak_window_s` for the whole duration,
    /// so longer disturbances remove more water.
    #[default]
    Sustained,
}

/// Level change applied to one tank over a time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    pub tank_index: usize,
    /// Positive values drain the tank (leak or demand increase).
    pub magnitude_m: f64,
    pub start_s: f64,
    pub duration_s: f64,
    #[serde(default)]
    pub profile: DisturbanceProfile,
    /// Time over which a sustained leak removes `magnitude_m`.
    #[serde(default = "default_leak_window")]
    pub leak_window_s: f64,
}

fn default_leak_window() -> f64 {
    Disturbance::DEFAULT_LEAK_WINDOW_S
}

impl Disturbance {
    pub const DEFAULT_LEAK_WINDOW_S: f64 = 5.0;

    pub fn validate(&self, states: usize) -> Result<()> {
        if self.tank_index >= states {
            return Err(Error::config(format!(
                "disturbance tank {} out of range 0..{states}",
                self.tank_index
            )));
        }
        if !(self.duration_s > 0.0) {
            return Err(Error::config("disturbance duration must be positive"));
        }
        if !(self.leak_window_s > 0.0) {
            return Err(Error::config("disturbance leak_window_s must be positive"));
        }
        if !(self.start_s >= 0.0) || !self.magnitude_m.is_finite() {
            return Err(Error::config(
                "disturbance start must be non-negative and magnitude finite",
            ));
        }
        Ok(())
    }

    pub fn start(&self) -> Micros {
        Micros((self.start_s * 1e6).round() as u64)
    }

    pub fn end(&self) -> Micros {
        Micros(((self.start_s + self.duration_s) * 1e6).round() as u64)
    }

    /// Level rate while active, m/s (negative drains).
    pub fn rate(&self) -> f64 {
        match self.profile {
            DisturbanceProfile::Spread => -self.magnitude_m / self.duration_s,
            DisturbanceProfile::Sustained => -self.magnitude_m / self.leak_window_s,
        }
    }

    /// Average rate over `[t0, t1)`, so partially covered steps integrate exactly.
    pub fn mean_rate(&self, t0: Micros, t1: Micros) -> f64 {
        let lo = t0.max(self.start());
        let hi = t1.min(self.end());
        if hi <= lo || t1 <= t0 {
            return 0.0;
        }
        self.rate() * (hi - lo).0 as f64 / (t1 - t0).0 as f64
    }
}

/// Everything that defines the switched plant apart from its state.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    pub weak: LinearMode,
    pub powerful: LinearMode,
    pub setpoint: DVector<f64>,
    /// Constant outflow from each tank, m/s.
    pub demand: DVector<f64>,
    /// In-valve opening added to the powerful-mode command when deciding
    /// whether the weak pump suffices.
    pub alpha_p_in: DVector<f64>,
    pub valve: Valve,
    pub initial_levels: DVector<f64>,
    pub initial_mode: Mode,
}

impl PlantModel {
    pub fn mode(&self, mode: Mode) -> &LinearMode {
        match mode {
            Mode::Weak => &self.weak,
            Mode::Powerful => &self.powerful,
        }
    }

    pub fn states(&self) -> usize {
        self.weak.states()
    }

    pub fn inputs(&self) -> usize {
        self.weak.inputs()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.states();
        let m = self.inputs();
        if self.powerful.states() != n || self.powerful.inputs() != m {
            return Err(Error::config(
                "weak and powerful modes disagree on dimensions",
            ));
        }
        for (name, v, len) in [
            ("setpoint", &self.setpoint, n),
            ("demand", &self.demand, n),
            ("initial_levels", &self.initial_levels, n),
            ("alpha_p_in", &self.alpha_p_in, m),
        ] {
            if v.len() != len {
                return Err(Error::config(format!(
                    "{name} has {} entries, expected {len}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::config(format!("{name} must be finite")));
            }
        }
        if !(self.valve.step_deg > 0.0 && self.valve.min_deg <= self.valve.max_deg) {
            return Err(Error::config("invalid valve limits"));
        }
        Ok(())
    }

    /// Controller-side mode switching on the composite state.
    pub fn evaluate_mode_switch(
        &self,
        current: Mode,
        xi_composite: &DVector<f64>,
        h_low: f64,
    ) -> Result<Mode> {
        evaluate_mode_switch(current, xi_composite, self, h_low)
    }
}

/// Powerful → weak once `|S(K_p (ξ_ref − ξ̂) + α_p^in)|₁ < 180°`;
/// weak → powerful once any `ξ̂_j ≤ h_low`.
///
/// The powerful → weak guard is disabled while a level is still at or
/// below `h_low`, otherwise both guards can hold at once and the mode
/// would flip on every sample.
pub fn evaluate_mode_switch(
    current: Mode,
    xi_composite: &DVector<f64>,
    model: &PlantModel,
    h_low: f64,
) -> Result<Mode> {
    let any_low = xi_composite.iter().any(|&x| x <= h_low);
    Ok(match current {
        Mode::Powerful => {
            let cmd =
                raw_control(xi_composite, &model.powerful, &model.setpoint)? + &model.alpha_p_in;
            let opening = apply_valve(&cmd, &model.valve).sum();
            if opening < 180.0 && !any_low {
                Mode::Weak
            } else {
                Mode::Powerful
            }
        }
        Mode::Weak => {
            if any_low {
                Mode::Powerful
            } else {
                Mode::Weak
            }
        }
    })
}

/// The three-tank water distribution network.
pub mod water {
    use super::*;

    pub fn b_weak() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            3,
            3,
            &[
                0.1436, -0.0170, -0.0164, -0.0098, 0.1060, -0.0100, -0.0139, -0.0139, 0.1492,
            ],
        ) * 1e-5
    }

    pub fn b_powerful() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            3,
            3,
            &[
                0.7666, -0.0493, -0.0457, -0.0274, 0.5848, -0.0279, -0.0393, -0.0432, 0.1492,
            ],
        ) * 1e-5
    }

    pub fn k_weak() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            3,
            3,
            &[
                99950.0, 3029.0, 872.0, -3014.0, 99940.0, -1679.0, -922.0, 1652.0, 99982.0,
            ],
        )
    }

    pub fn k_powerful() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            3,
            3,
            &[
                9998.5, 167.1, 41.0, -166.6, 9997.9, -116.0, -43.0, 115.3, 9999.2,
            ],
        )
    }

    pub fn weak_mode() -> LinearMode {
        LinearMode {
            mode: Mode::Weak,
            a: DMatrix::zeros(3, 3),
            b: b_weak(),
            k: k_weak(),
        }
    }

    pub fn powerful_mode() -> LinearMode {
        LinearMode {
            mode: Mode::Powerful,
            a: DMatrix::zeros(3, 3),
            b: b_powerful(),
            k: k_powerful(),
        }
    }

    pub const SETPOINT: [f64; 3] = [0.045, 0.045, 0.045];
    pub const INITIAL_LEVELS: [f64; 3] = [0.017, 0.017, 0.017];
    pub const DEMAND: [f64; 3] = [3.0e-4, 2.5e-4, 0.5e-4];
    pub const ALPHA_P_IN: [f64; 3] = [0.0, 0.0, 0.0];

    pub fn model() -> PlantModel {
        PlantModel {
            weak: weak_mode(),
            powerful: powerful_mode(),
            setpoint: DVector::from_row_slice(&SETPOINT),
            demand: DVector::from_row_slice(&DEMAND),
            alpha_p_in: DVector::from_row_slice(&ALPHA_P_IN),
            valve: Valve::default(),
            initial_levels: DVector::from_row_slice(&INITIAL_LEVELS),
            initial_mode: Mode::Weak,
        }
    }
}
