//! Sparse multipath MIMO channels.
//!
//! Every user sees a handful of temporally resolvable paths. Each path is a
//! rank-one geometric component `√(Mt·Mr)·α·a_r(φ)·a_t(θ)^H` with a complex
//! Gaussian amplitude and a delay split into an integer number of samples
//! plus a fractional remainder in `[−T/2, T/2]`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, ComplexVector};

/// One resolvable path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathComponent {
    /// `M_r × M_t` gain matrix.
    pub gain: ComplexMatrix,
    /// Absolute delay in seconds.
    pub tau_s: f64,
    /// Integer part of the delay in samples.
    pub n: i64,
    /// Fractional part of the delay in seconds.
    pub tau_f_s: f64,
}

impl PathComponent {
    /// Splits `tau_s` on the sample grid of interval `t_s`.
    pub fn from_delay(gain: ComplexMatrix, tau_s: f64, t_s: f64) -> Self {
        let (n, tau_f_s) = split_delay(tau_s, t_s);
        Self { gain, tau_s, n, tau_f_s }
    }

    /// A path whose delay is exactly `n` samples.
    pub fn on_grid(gain: ComplexMatrix, n: i64, t_s: f64) -> Self {
        Self { gain, tau_s: n as f64 * t_s, n, tau_f_s: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UEChannel {
    pub ue_index: usize,
    /// Sorted by strictly increasing integer delay.
    pub paths: Vec<PathComponent>,
}

impl UEChannel {
    pub fn new(ue_index: usize, mut paths: Vec<PathComponent>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::InvalidInput(format!("UE {ue_index} has no paths")));
        }
        paths.sort_by_key(|p| p.n);
        if paths.windows(2).any(|w| w[0].n == w[1].n) {
            return Err(Error::InvalidInput(format!("UE {ue_index}: integer path delays must be pairwise distinct")));
        }
        let (r, c) = paths[0].gain.shape();
        if paths.iter().any(|p| p.gain.shape() != (r, c)) {
            return Err(Error::InvalidInput(format!("UE {ue_index}: path matrices differ in shape")));
        }
        Ok(Self { ue_index, paths })
    }

    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }

    /// Integer delays `n_1 < … < n_L`.
    pub fn integer_delays(&self) -> Vec<i64> {
        self.paths.iter().map(|p| p.n).collect()
    }

    pub fn max_delay(&self) -> i64 {
        self.paths.last().map(|p| p.n).unwrap_or(0)
    }

    /// Same gains with every fractional delay dropped.
    pub fn on_grid(&self, t_s: f64) -> Self {
        Self {
            ue_index: self.ue_index,
            paths: self.paths.iter().map(|p| PathComponent::on_grid(p.gain.clone(), p.n, t_s)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub sample_interval_s: f64,
    pub ues: Vec<UEChannel>,
}

impl ChannelSet {
    pub fn new(tx_antennas: usize, rx_antennas: usize, sample_interval_s: f64, ues: Vec<UEChannel>) -> Result<Self> {
        for ue in &ues {
            for p in &ue.paths {
                if p.gain.shape() != (rx_antennas, tx_antennas) {
                    return Err(Error::InvalidInput(format!(
                        "UE {}: path matrix is {:?}, expected {}×{}",
                        ue.ue_index,
                        p.gain.shape(),
                        rx_antennas,
                        tx_antennas
                    )));
                }
            }
        }
        Ok(Self { tx_antennas, rx_antennas, sample_interval_s, ues })
    }

    pub fn num_ues(&self) -> usize {
        self.ues.len()
    }

    pub fn total_paths(&self) -> usize {
        self.ues.iter().map(UEChannel::num_paths).sum()
    }

    pub fn on_grid(&self) -> Self {
        Self { ues: self.ues.iter().map(|u| u.on_grid(self.sample_interval_s)).collect(), ..self.clone() }
    }

    /// Every channel matrix multiplied by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for ue in &mut out.ues {
            for p in &mut ue.paths {
                p.gain *= c;
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ChannelSetDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ChannelSetDoc = serde_json::from_str(text)?;
        doc.try_into()
    }
}

/// Rounds `tau_s / t_s` to the nearest integer (ties away from zero) and
/// returns it with the remainder in seconds.
pub fn split_delay(tau_s: f64, t_s: f64) -> (i64, f64) {
    let n = (tau_s / t_s).round();
    (n as i64, tau_s - n * t_s)
}

/// Uniform linear array response with half-wavelength spacing.
pub fn steering_vector(count: usize, angle_rad: f64) -> ComplexVector {
    let scale = 1.0 / (count as f64).sqrt();
    let phase = PI * angle_rad.sin();
    ComplexVector::from_fn(count, |m, _| Complex64::from_polar(scale, phase * m as f64))
}

/// Draws a channel for every user. Deterministic in `(cfg, seed)`.
pub fn generate_channel_set(cfg: &SimConfig, seed: u64) -> Result<ChannelSet> {
    cfg.validate()?;
    let l = cfg.paths_per_ue;
    if l > cfg.delay_span_samples + 1 {
        return Err(Error::Config(format!(
            "{l} paths cannot have distinct integer delays within {} samples",
            cfg.delay_span_samples
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_s = cfg.sample_interval_s();
    let span_s = cfg.delay_span_samples as f64 * t_s;
    let amp = Normal::new(0.0, (cfg.large_scale_gain() / (2.0 * l as f64)).sqrt())
        .map_err(|e| Error::Config(e.to_string()))?;
    let array_gain = ((cfg.tx_antennas * cfg.rx_antennas) as f64).sqrt();

    let mut ues = Vec::with_capacity(cfg.num_ues);
    for k in 0..cfg.num_ues {
        let delays = draw_delays(&mut rng, cfg, l, span_s, t_s);
        let mut paths = Vec::with_capacity(l);
        for tau in delays {
            let alpha = Complex64::new(amp.sample(&mut rng), amp.sample(&mut rng));
            let aod = rng.random_range(-PI / 2.0..=PI / 2.0);
            let aoa = rng.random_range(-PI / 2.0..=PI / 2.0);
            let a_t = steering_vector(cfg.tx_antennas, aod);
            let a_r = steering_vector(cfg.rx_antennas, aoa);
            let gain = (a_r * a_t.adjoint()) * (alpha * array_gain);
            let path = if cfg.fractional_delays {
                PathComponent::from_delay(gain, tau, t_s)
            } else {
                PathComponent::on_grid(gain, (tau / t_s).round() as i64, t_s)
            };
            paths.push(path);
        }
        ues.push(UEChannel::new(k, paths)?);
    }
    ChannelSet::new(cfg.tx_antennas, cfg.rx_antennas, t_s, ues)
}

/// Draws `l` delays whose integer parts are pairwise distinct, by rejection.
fn draw_delays(rng: &mut ChaCha8Rng, cfg: &SimConfig, l: usize, span_s: f64, t_s: f64) -> Vec<f64> {
    loop {
        let taus: Vec<f64> = (0..l)
            .map(|_| {
                if cfg.fractional_delays {
                    rng.random_range(0.0..=span_s)
                } else {
                    rng.random_range(0..=cfg.delay_span_samples) as f64 * t_s
                }
            })
            .collect();
        let mut ns: Vec<i64> = taus.iter().map(|&t| split_delay(t, t_s).0).collect();
        ns.sort_unstable();
        if ns.windows(2).all(|w| w[0] != w[1]) {
            return taus;
        }
    }
}

/// Per-subcarrier response `H_m = M^{-1/2} Σ_l H_l e^{j2π m n_l / M}` on
/// the integer delays.
pub fn frequency_response(ch: &UEChannel, subcarriers: usize) -> Vec<ComplexMatrix> {
    let m_total = subcarriers as f64;
    let scale = 1.0 / m_total.sqrt();
    (0..subcarriers)
        .map(|m| {
            let (r, c) = ch.paths[0].gain.shape();
            let mut h = ComplexMatrix::zeros(r, c);
            for p in &ch.paths {
                let phase = 2.0 * PI * ((m as i64 * p.n).rem_euclid(subcarriers as i64)) as f64 / m_total;
                h += &p.gain * Complex64::from_polar(scale, phase);
            }
            h
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct ChannelSetDoc {
    tx_antennas: usize,
    rx_antennas: usize,
    sample_interval_s: f64,
    ues: Vec<UeDoc>,
}

#[derive(Serialize, Deserialize)]
struct UeDoc {
    ue_index: usize,
    paths: Vec<PathDoc>,
}

#[derive(Serialize, Deserialize)]
struct PathDoc {
    tau_s: f64,
    n: i64,
    tau_f_s: f64,
    /// Row-major `[re, im]` pairs.
    gain: Vec<[f64; 2]>,
}

impl From<&ChannelSet> for ChannelSetDoc {
    fn from(set: &ChannelSet) -> Self {
        let ues = set
            .ues
            .iter()
            .map(|ue| UeDoc {
                ue_index: ue.ue_index,
                paths: ue
                    .paths
                    .iter()
                    .map(|p| {
                        let (r, c) = p.gain.shape();
                        let mut gain = Vec::with_capacity(r * c);
                        for i in 0..r {
                            for j in 0..c {
                                let z = p.gain[(i, j)];
                                gain.push([z.re, z.im]);
                            }
                        }
                        PathDoc { tau_s: p.tau_s, n: p.n, tau_f_s: p.tau_f_s, gain }
                    })
                    .collect(),
            })
            .collect();
        Self {
            tx_antennas: set.tx_antennas,
            rx_antennas: set.rx_antennas,
            sample_interval_s: set.sample_interval_s,
            ues,
        }
    }
}

impl TryFrom<ChannelSetDoc> for ChannelSet {
    type Error = Error;

    fn try_from(doc: ChannelSetDoc) -> Result<Self> {
        let (r, c) = (doc.rx_antennas, doc.tx_antennas);
        let mut ues = Vec::with_capacity(doc.ues.len());
        for ue in doc.ues {
            let mut paths = Vec::with_capacity(ue.paths.len());
            for p in ue.paths {
                if p.gain.len() != r * c {
                    return Err(Error::InvalidInput(format!(
                        "UE {}: expected {} gain entries, found {}",
                        ue.ue_index,
                        r * c,
                        p.gain.len()
                    )));
                }
                let gain = ComplexMatrix::from_fn(r, c, |i, j| {
                    let [re, im] = p.gain[i * c + j];
                    Complex64::new(re, im)
                });
                paths.push(PathComponent { gain, tau_s: p.tau_s, n: p.n, tau_f_s: p.tau_f_s });
            }
            ues.push(UEChannel::new(ue.ue_index, paths)?);
        }
        ChannelSet::new(doc.tx_antennas, doc.rx_antennas, doc.sample_interval_s, ues)
    }
}
