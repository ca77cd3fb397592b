//! LoRa airtime, round trip time and duty-cycle blackout arithmetic.
//!
//! All functions here are pure. Durations are exact [`Micros`] values; the
//! only floating point step is the division by the duty cycle, which is
//! rounded up to the next whole microsecond so that a blocked channel never
//! frees up before the regulatory limit allows it.

use crate::error::{Error, Result};
use crate::time::Micros;

/// Fixed gap between the end of an uplink and the first receive window.
pub const RECEIVE_DELAY: Micros = Micros::from_secs(1);

/// LoRaWAN MAC header + FHDR + FPort + MIC overhead carried by every frame.
pub const DEFAULT_HEADER_BYTES: u32 = 13;

/// Maximum PHY payload length.
pub const MAX_PHY_PAYLOAD: u32 = 255;

#[derive(Debug, Clone, PartialEq)]
pub struct RadioConfig {
    pub spreading_factor: u8,
    pub bandwidth_hz: u32,
    /// `CR` in the `4/(4+CR)` coding rate; 1 encodes 4/5.
    pub code_rate_num: u8,
    /// Application payload, excluding the header.
    pub payload_bytes: u32,
    pub header_bytes: u32,
    pub n_channels: u32,
    /// Fraction of time a channel may be used, in `(0, 1]`.
    pub duty_cycle: f64,
    pub preamble_symbols: u32,
    pub crc_enabled: bool,
    pub explicit_header: bool,
    pub low_dr_optimize: bool,
}

impl RadioConfig {
    /// EU868 defaults for the given spreading factor and payload: 125 kHz,
    /// CR 4/5, 13 B header, 3 channels at 1% duty cycle.
    pub fn eu868(spreading_factor: u8, payload_bytes: u32) -> Self {
        let bandwidth_hz = 125_000;
        RadioConfig {
            spreading_factor,
            bandwidth_hz,
            code_rate_num: 1,
            payload_bytes,
            header_bytes: DEFAULT_HEADER_BYTES,
            n_channels: 3,
            duty_cycle: 0.01,
            preamble_symbols: 8,
            crc_enabled: true,
            explicit_header: true,
            low_dr_optimize: default_low_dr_optimize(spreading_factor, bandwidth_hz),
        }
    }

    pub fn with_channels(mut self, n_channels: u32) -> Self {
        self.n_channels = n_channels;
        self
    }

    pub fn with_duty_cycle(mut self, duty_cycle: f64) -> Self {
        self.duty_cycle = duty_cycle;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(7..=12).contains(&self.spreading_factor) {
            return Err(Error::config(format!(
                "spreading factor {} outside 7..=12",
                self.spreading_factor
            )));
        }
        if self.bandwidth_hz == 0 {
            return Err(Error::config("bandwidth must be non-zero"));
        }
        if !(1..=4).contains(&self.code_rate_num) {
            return Err(Error::config(format!(
                "code rate 4/{} not supported",
                4 + u32::from(self.code_rate_num)
            )));
        }
        if self.payload_bytes + self.header_bytes > MAX_PHY_PAYLOAD {
            return Err(Error::config(format!(
                "frame of {} B exceeds {MAX_PHY_PAYLOAD} B",
                self.payload_bytes + self.header_bytes
            )));
        }
        if self.n_channels == 0 {
            return Err(Error::config("at least one channel is required"));
        }
        check_duty_cycle(self.duty_cycle).map_err(|e| match e {
            Error::Domain(m) => Error::Config(m),
            other => other,
        })?;
        Ok(())
    }

    /// Duration of one symbol, `2^SF / BW`.
    pub fn symbol_time(&self) -> Micros {
        Micros(div_round(
            (1u128 << self.spreading_factor) * 1_000_000,
            self.bandwidth_hz as u128,
        ) as u64)
    }

    /// Number of payload symbols, including the 8 fixed ones after the preamble.
    pub fn payload_symbols(&self) -> u32 {
        let sf = i64::from(self.spreading_factor);
        let pl = i64::from(self.payload_bytes + self.header_bytes);
        let crc = i64::from(self.crc_enabled);
        let ih = i64::from(!self.explicit_header);
        let de = i64::from(self.low_dr_optimize);
        let num = 8 * pl - 4 * sf + 28 + 16 * crc - 20 * ih;
        let den = 4 * (sf - 2 * de);
        let blocks = if num <= 0 { 0 } else { (num + den - 1) / den };
        8 + (blocks * (i64::from(self.code_rate_num) + 4)) as u32
    }
}

/// Low data rate optimisation is mandatory once the symbol time exceeds 16 ms.
pub fn default_low_dr_optimize(spreading_factor: u8, bandwidth_hz: u32) -> bool {
    bandwidth_hz <= 125_000 && spreading_factor >= 11
}

/// Per-configuration timing derived once and shared by the link model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimingProfile {
    pub time_on_air: Micros,
    pub rtt: Micros,
    pub bp_single: Micros,
    pub bp_n: Micros,
}

impl TimingProfile {
    pub fn from_config(cfg: &RadioConfig) -> Result<Self> {
        let time_on_air = compute_time_on_air(cfg)?;
        let rtt = compute_rtt(time_on_air);
        let bp_single = compute_blackout(time_on_air, cfg.duty_cycle)?;
        let bp_n = compute_blackout_n(bp_single, rtt, cfg.n_channels)?;
        Ok(TimingProfile {
            time_on_air,
            rtt,
            bp_single,
            bp_n,
        })
    }

    /// Zero airtime, zero receive delay and no duty-cycle restriction.
    pub fn ideal() -> Self {
        TimingProfile {
            time_on_air: Micros::ZERO,
            rtt: Micros::ZERO,
            bp_single: Micros::ZERO,
            bp_n: Micros::ZERO,
        }
    }

    /// How long a channel stays unusable after an uplink starts on it.
    pub fn channel_hold(&self) -> Micros {
        self.time_on_air + self.bp_single
    }
}

/// Time on air of a single frame: preamble plus payload symbols.
pub fn compute_time_on_air(cfg: &RadioConfig) -> Result<Micros> {
    cfg.validate()?;
    // (preamble + 4.25) symbols, counted in quarter symbols to stay integral.
    let quarter_symbols = 4 * u128::from(cfg.preamble_symbols + cfg.payload_symbols()) + 17;
    let num = quarter_symbols * (1u128 << cfg.spreading_factor) * 1_000_000;
    Ok(Micros(div_round(num, 4 * cfg.bandwidth_hz as u128) as u64))
}

/// Uplink, receive delay and a downlink of equal airtime.
/// Controller processing time is not included.
pub fn compute_rtt(time_on_air: Micros) -> Micros {
    time_on_air * 2 + RECEIVE_DELAY
}

/// Time a channel stays blocked after a transmission of `time_on_air`.
pub fn compute_blackout(time_on_air: Micros, duty_cycle: f64) -> Result<Micros> {
    check_duty_cycle(duty_cycle)?;
    let period = time_on_air.0 as f64 / duty_cycle;
    let nearest = period.round();
    let period = if (period - nearest).abs() <= 1e-9 * period.max(1.0) {
        nearest
    } else {
        period.ceil()
    };
    Ok(Micros(period as u64).saturating_sub(time_on_air))
}

/// Blackout seen by a device rotating over `n_channels`, never negative.
pub fn compute_blackout_n(bp: Micros, rtt: Micros, n_channels: u32) -> Result<Micros> {
    if n_channels == 0 {
        return Err(Error::domain("n_channels must be at least 1"));
    }
    Ok(bp.saturating_sub(rtt * u64::from(n_channels - 1)))
}

fn check_duty_cycle(duty_cycle: f64) -> Result<()> {
    if duty_cycle.is_nan() || duty_cycle <= 0.0 || duty_cycle > 1.0 {
        return Err(Error::domain(format!(
            "duty cycle {duty_cycle} outside (0, 1]"
        )));
    }
    Ok(())
}

fn div_round(num: u128, den: u128) -> u128 {
    (num + den / 2) / den
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toa(sf: u8, payload: u32) -> Micros {
        compute_time_on_air(&RadioConfig::eu868(sf, payload)).unwrap()
    }

    // Independent symbol count: walk the frame bit by bit in codeword blocks.
    fn hand_symbols(sf: u32, phy_bytes: u32, de: bool) -> u32 {
        let bits = 8 * phy_bytes + 16 /* crc */ + 20 /* explicit header */ + 8 - 4 * sf;
        let bits_per_block = 4 * (sf - if de { 2 } else { 0 });
        let mut blocks = 0;
        let mut covered = 0;
        while covered < bits {
            covered += bits_per_block;
            blocks += 1;
        }
        8 + 5 * blocks
    }

    #[test]
    fn symbol_counts_match_hand_count() {
        for sf in 7..=12u8 {
            for payload in 0..=50 {
                let cfg = RadioConfig::eu868(sf, payload);
                assert_eq!(
                    cfg.payload_symbols(),
                    hand_symbols(u32::from(sf), payload + 13, cfg.low_dr_optimize),
                    "sf{sf} {payload}B"
                );
            }
        }
    }

    #[test]
    fn reference_airtimes() {
        assert_eq!(toa(7, 10), Micros(61_696));
        assert_eq!(toa(7, 20), Micros(71_936));
        assert_eq!(toa(12, 50), Micros(2_793_472));
        assert!(toa(7, 0) < toa(7, 10));
    }

    #[test]
    fn preamble_is_twelve_and_a_quarter_symbols() {
        let cfg = RadioConfig::eu868(7, 20);
        assert_eq!(cfg.symbol_time(), Micros(1_024));
        assert_eq!(cfg.payload_symbols(), 58);
        assert_eq!(toa(7, 20).0 - 58 * 1_024, 12_544);
    }

    #[test]
    fn rtt_values() {
        assert_eq!(compute_rtt(Micros(61_696)), Micros(1_123_392));
        assert_eq!(compute_rtt(Micros(2_793_472)), Micros(6_586_944));
        assert_eq!(compute_rtt(Micros::ZERO), Micros::from_secs(1));
    }

    #[test]
    fn blackout_values() {
        assert_eq!(
            compute_blackout(Micros(61_696), 0.01).unwrap(),
            Micros(6_107_904)
        );
        assert_eq!(
            compute_blackout(Micros::from_ms(500), 0.01).unwrap(),
            Micros::from_ms(49_500)
        );
        assert_eq!(compute_blackout(Micros(61_696), 1.0).unwrap(), Micros::ZERO);
        assert!(compute_blackout(Micros(61_696), 0.0).is_err());
        assert!(compute_blackout(Micros(61_696), -0.5).is_err());
        assert!(compute_blackout(Micros(61_696), 1.5).is_err());
    }

    #[test]
    fn blackout_rounds_up_to_whole_microseconds() {
        // 1001 / 0.3 = 3336.67 us
        assert_eq!(
            compute_blackout(Micros(1_001), 0.3).unwrap(),
            Micros(3_337 - 1_001)
        );
    }

    #[test]
    fn blackout_n_values() {
        assert_eq!(
            compute_blackout_n(Micros(6_107_904), Micros(1_123_392), 3).unwrap(),
            Micros(3_861_120)
        );
        assert_eq!(
            compute_blackout_n(Micros(5), Micros(7), 1).unwrap(),
            Micros(5)
        );
        let bp = compute_blackout(toa(7, 20), 0.01).unwrap();
        assert_eq!(
            compute_blackout_n(bp, compute_rtt(toa(7, 20)), 8).unwrap(),
            Micros::ZERO
        );
        assert!(compute_blackout_n(bp, Micros(1), 0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(RadioConfig::eu868(6, 10).validate().is_err());
        assert!(RadioConfig::eu868(13, 10).validate().is_err());
        assert!(RadioConfig::eu868(7, 243).validate().is_err());
        assert!(RadioConfig::eu868(7, 242).validate().is_ok());
        assert!(RadioConfig::eu868(7, 10)
            .with_duty_cycle(1.2)
            .validate()
            .is_err());
        assert!(RadioConfig::eu868(7, 10)
            .with_channels(0)
            .validate()
            .is_err());
        let mut cfg = RadioConfig::eu868(7, 10);
        cfg.bandwidth_hz = 0;
        assert!(matches!(compute_time_on_air(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn low_dr_defaults() {
        assert!(!RadioConfig::eu868(10, 10).low_dr_optimize);
        assert!(RadioConfig::eu868(11, 10).low_dr_optimize);
        assert!(RadioConfig::eu868(12, 10).low_dr_optimize);
        assert!(!default_low_dr_optimize(12, 250_000));
    }
}
