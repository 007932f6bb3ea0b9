//! Scalar system parameters shared by every module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// System parameters. Defaults describe a 28 GHz link sampled at 200 MHz
/// with two users and three resolvable paths each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Base station antennas.
    pub tx_antennas: usize,
    /// Antennas per user.
    pub rx_antennas: usize,
    pub num_ues: usize,
    pub paths_per_ue: usize,
    /// Total transmit power in dBm.
    pub p_dbm: f64,
    pub noise_psd_dbm_hz: f64,
    /// Sample interval in nanoseconds.
    pub t_ns: f64,
    /// Roll-off of the raised-cosine pulse.
    pub beta: f64,
    pub f_c_ghz: f64,
    pub subcarriers: usize,
    /// Samples per channel coherence block.
    pub g_c: usize,
    /// OFDM cyclic prefix length in samples.
    pub g_cp: usize,
    /// Guard interval per coherence block for single-carrier transmission.
    pub g_gi: usize,
    /// Path delays are drawn from `[0, delay_span_samples · T]`.
    pub delay_span_samples: usize,
    /// Half-width of every truncated interference sum, in samples.
    pub rho_window: usize,
    /// Oversampling factor used for waveform synthesis.
    pub oversample: usize,
    /// Average path-loss gain applied to every user's channel, in dB.
    pub large_scale_gain_db: f64,
    /// Draw continuous delays; when false every delay is an integer multiple of T.
    pub fractional_delays: bool,
    /// When both arrays are large enough for single-side compensation,
    /// pick UE-side instead of BS-side.
    pub prefer_ue_side: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            tx_antennas: 128,
            rx_antennas: 2,
            num_ues: 2,
            paths_per_ue: 3,
            p_dbm: 30.0,
            noise_psd_dbm_hz: -174.0,
            t_ns: 5.0,
            beta: 0.01,
            f_c_ghz: 28.0,
            subcarriers: 512,
            g_c: 200_000,
            g_cp: 100,
            g_gi: 200,
            delay_span_samples: 100,
            rho_window: 300,
            oversample: 4,
            large_scale_gain_db: -101.0,
            fractional_delays: true,
            prefer_ue_side: false,
        }
    }
}

impl SimConfig {
    pub fn sample_interval_s(&self) -> f64 {
        self.t_ns * 1e-9
    }

    /// Noise power over the sampling bandwidth `1/T`, in dBm.
    pub fn noise_power_dbm(&self) -> f64 {
        self.noise_psd_dbm_hz + 10.0 * (1.0 / self.sample_interval_s()).log10()
    }

    /// Noise power in mW.
    pub fn noise_power(&self) -> f64 {
        dbm_to_mw(self.noise_power_dbm())
    }

    /// Transmit power in mW.
    pub fn tx_power(&self) -> f64 {
        dbm_to_mw(self.p_dbm)
    }

    pub fn large_scale_gain(&self) -> f64 {
        10f64.powf(self.large_scale_gain_db / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|(field, msg)| Error::Config(format!("{field}: {msg}")))
    }

    /// First out-of-range field and the reason.
    pub fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        let counts = [
            ("tx_antennas", self.tx_antennas),
            ("rx_antennas", self.rx_antennas),
            ("num_ues", self.num_ues),
            ("paths_per_ue", self.paths_per_ue),
            ("subcarriers", self.subcarriers),
            ("g_c", self.g_c),
            ("delay_span_samples", self.delay_span_samples),
            ("rho_window", self.rho_window),
            ("oversample", self.oversample),
        ];
        for (name, v) in counts {
            if v < 1 {
                return Err((name, "must be at least 1".into()));
            }
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(("beta", format!("must lie in [0, 1), got {}", self.beta)));
        }
        if !(self.t_ns > 0.0) || !self.t_ns.is_finite() {
            return Err(("t_ns", "must be positive".into()));
        }
        for (name, v) in [
            ("p_dbm", self.p_dbm),
            ("noise_psd_dbm_hz", self.noise_psd_dbm_hz),
            ("f_c_ghz", self.f_c_ghz),
            ("large_scale_gain_db", self.large_scale_gain_db),
        ] {
            if !v.is_finite() {
                return Err((name, "must be finite".into()));
            }
        }
        if self.g_cp < self.delay_span_samples {
            return Err(("g_cp", format!("{} must cover the delay span ({})", self.g_cp, self.delay_span_samples)));
        }
        if self.rho_window < self.delay_span_samples {
            return Err((
                "rho_window",
                format!("{} must cover the delay span ({})", self.rho_window, self.delay_span_samples),
            ));
        }
        if self.g_gi > self.g_c {
            return Err(("g_gi", "cannot exceed g_c".into()));
        }
        Ok(())
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_power_from_defaults() {
        let cfg = SimConfig::default();
        assert!((cfg.noise_power_dbm() - (-90.9897)).abs() < 1e-3);
        assert!((cfg.noise_power_dbm() - (-91.0)).abs() < 0.1);
    }

    #[test]
    fn defaults_validate() {
        SimConfig::default().validate().unwrap();
    }

    #[test]
    fn range_checks() {
        let cfg = SimConfig { beta: 1.5, ..Default::default() };
        assert!(cfg.validate().is_err());
        assert_eq!(cfg.check().unwrap_err().0, "beta");
        let cfg = SimConfig { g_cp: 50, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = SimConfig { num_ues: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
