//! Oversampled baseband waveforms and peak-to-average power statistics.
//!
//! Every scheme is shaped by the same truncated root-raised-cosine filter.
//! Sample `t` of a shaped stream sits at time `(t / oversample − span) · T`,
//! so symbol `n` peaks at sample `(n + span) · oversample`.

use std::ops::Range;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::beamforming::BeamformerSet;
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::numerics::{svd, ComplexMatrix};
use crate::ofdm::OfdmBeamformerSet;
use crate::pulse::rrc;

/// Half-length of the synthesis filter in symbols.
pub const RRC_SPAN_SYMBOLS: usize = 16;

/// Per-antenna sample streams at rate `oversample / T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub antennas: Vec<Vec<Complex64>>,
    pub oversample: usize,
    /// Symbols per PAPR block.
    pub block_symbols: usize,
    /// Samples free of start-up and tail transients.
    pub steady: Range<usize>,
}

impl Waveform {
    pub fn len(&self) -> usize {
        self.antennas.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Mean of `Σ_a |x_a[t]|²` over the steady samples.
    pub fn mean_power(&self) -> f64 {
        let n = self.steady.len().max(1) as f64;
        self.antennas.iter().map(|x| x[self.steady.clone()].iter().map(|z| z.norm_sqr()).sum::<f64>()).sum::<f64>() / n
    }
}

/// Gray-mapped 4-QAM: bit pair `(b1, b0)` becomes `((1 − 2b1) + j(1 − 2b0)) / √2`.
pub fn qam4_map(bits: &[bool]) -> Result<Vec<Complex64>> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("4-QAM needs an even number of bits, got {}", bits.len())));
    }
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let level = |b: bool| if b { -a } else { a };
    Ok(bits.chunks_exact(2).map(|p| Complex64::new(level(p[0]), level(p[1]))).collect())
}

/// `count` uniformly random 4-QAM symbols.
pub fn random_qam4<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<Complex64> {
    let bits: Vec<bool> = (0..2 * count).map(|_| rng.random()).collect();
    qam4_map(&bits).expect("even bit count")
}

/// Samples `√T · φ(j T / oversample)` for `|j| ≤ span · oversample`.
///
/// With unit-power symbols the shaped stream then has unit mean power per
/// sample, up to truncation.
pub fn rrc_taps(oversample: usize, beta: f64) -> Vec<f64> {
    let half = (RRC_SPAN_SYMBOLS * oversample) as i64;
    (-half..=half).map(|j| rrc(j as f64 / oversample as f64, 1.0, beta)).collect()
}

/// Upsamples by `oversample` and filters with `taps`.
pub fn shape(symbols: &[Complex64], oversample: usize, taps: &[f64]) -> Vec<Complex64> {
    if symbols.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); (symbols.len() - 1) * oversample + taps.len()];
    for (n, &s) in symbols.iter().enumerate() {
        if s == Complex64::new(0.0, 0.0) {
            continue;
        }
        let dst = &mut out[n * oversample..n * oversample + taps.len()];
        for (o, &g) in dst.iter_mut().zip(taps) {
            *o += s * g;
        }
    }
    out
}

fn check_oversample(oversample: usize) -> Result<()> {
    if oversample < 2 {
        return Err(Error::InvalidInput(format!("oversample must be at least 2, got {oversample}")));
    }
    Ok(())
}

/// Delay-pre-compensated DAM transmit signal `Σ_k Σ_i f_ki s_k(t − κ_ki T)`.
///
/// `symbols[k]` is the symbol stream of user `k` and `kappa[k][i]` the
/// delay of its stream `i`; the number of streams is `kappa[k].len()`.
pub fn synthesize_dam_waveform(
    symbols: &[Vec<Complex64>],
    beamformers: &BeamformerSet,
    kappa: &[Vec<i64>],
    oversample: usize,
    beta: f64,
    block_symbols: usize,
) -> Result<Waveform> {
    check_oversample(oversample)?;
    let k_count = symbols.len();
    if kappa.len() != k_count || beamformers.transmit.len() != k_count {
        return Err(Error::InvalidInput("symbols, delays and beamformers disagree on the number of users".into()));
    }
    let n = symbols.first().map_or(0, Vec::len);
    if n == 0 || symbols.iter().any(|s| s.len() != n) {
        return Err(Error::InvalidInput("every user needs the same non-zero number of symbols".into()));
    }
    if kappa.iter().flatten().any(|&d| d < 0) {
        return Err(Error::InvalidInput("pre-compensation delays must be non-negative".into()));
    }
    let streams = |k: usize| kappa[k].len();
    let m_t = beamformers.transmit[0].len() / streams(0).max(1);
    for k in 0..k_count {
        if streams(k) == 0 || beamformers.transmit[k].len() != m_t * streams(k) {
            return Err(Error::InvalidInput(format!("user {k}: transmit vector does not match its delays")));
        }
    }
    let taps = rrc_taps(oversample, beta);
    let shaped: Vec<Vec<Complex64>> = symbols.par_iter().map(|s| shape(s, oversample, &taps)).collect();
    let k_max = *kappa.iter().flatten().max().unwrap_or(&0) as usize;
    let k_min = *kappa.iter().flatten().min().unwrap_or(&0) as usize;
    let len = shaped[0].len() + k_max * oversample;
    let antennas: Vec<Vec<Complex64>> = (0..m_t)
        .into_par_iter()
        .map(|a| {
            let mut x = vec![Complex64::new(0.0, 0.0); len];
            for k in 0..k_count {
                for (i, &d) in kappa[k].iter().enumerate() {
                    let w = beamformers.transmit[k][i * m_t + a];
                    let off = d as usize * oversample;
                    for (o, &y) in x[off..off + shaped[k].len()].iter_mut().zip(&shaped[k]) {
                        *o += w * y;
                    }
                }
            }
            x
        })
        .collect();
    let span = RRC_SPAN_SYMBOLS * oversample;
    let start = k_max * oversample + 2 * span;
    let end = (k_min + n - 1) * oversample + 1;
    Ok(Waveform { antennas, oversample, block_symbols, steady: start..end.max(start) })
}

/// Single-tap baseline: every user is served on its strongest path alone
/// with `√(P/K)` times that path's dominant right singular vector.
pub fn strongest_path_beamformers(channels: &ChannelSet, power: f64) -> Result<BeamformerSet> {
    let k_count = channels.num_ues();
    let scale = Complex64::new((power / k_count as f64).sqrt(), 0.0);
    let mut transmit = Vec::with_capacity(k_count);
    let mut receive = Vec::with_capacity(k_count);
    for ue in &channels.ues {
        let strongest: &ComplexMatrix = &ue
            .paths
            .iter()
            .max_by(|a, b| a.gain.norm_squared().total_cmp(&b.gain.norm_squared()))
            .ok_or_else(|| Error::InvalidInput("user without paths".into()))?
            .gain;
        let (u, _, v) = svd(strongest)?.top_pair();
        transmit.push(v * scale);
        receive.push(u);
    }
    Ok(BeamformerSet { transmit, receive, power_budget: power })
}

pub fn synthesize_strongest_path_waveform(
    symbols: &[Vec<Complex64>],
    channels: &ChannelSet,
    power: f64,
    oversample: usize,
    beta: f64,
    block_symbols: usize,
) -> Result<Waveform> {
    let bf = strongest_path_beamformers(channels, power)?;
    let kappa = vec![vec![0]; channels.num_ues()];
    synthesize_dam_waveform(symbols, &bf, &kappa, oversample, beta, block_symbols)
}

fn append_ofdm_symbol(buf: &mut [Complex64], ifft: &dyn rustfft::Fft<f64>, g_cp: usize, out: &mut Vec<Complex64>) {
    let m = buf.len();
    let norm = 1.0 / (m as f64).sqrt();
    ifft.process(buf);
    out.extend(buf[m - g_cp..].iter().map(|z| z * norm));
    out.extend(buf.iter().map(|z| z * norm));
}

/// Time samples of one OFDM symbol: unitary inverse DFT of `freq` with a
/// cyclic prefix of `g_cp` samples.
pub fn ofdm_symbol(freq: &[Complex64], g_cp: usize) -> Vec<Complex64> {
    let mut buf = freq.to_vec();
    let ifft = FftPlanner::new().plan_fft_inverse(buf.len());
    let mut out = Vec::with_capacity(buf.len() + g_cp);
    append_ofdm_symbol(&mut buf, ifft.as_ref(), g_cp, &mut out);
    out
}

/// Unitary inverse DFT of each antenna's subcarrier vector, cyclic prefix,
/// serialisation at rate `1/T`, then the DAM shaping filter.
///
/// `symbols[k][d][m]` is the symbol of user `k` on subcarrier `m` of OFDM
/// symbol `d`. Blocks are one OFDM symbol including its prefix, and the
/// steady range is aligned to OFDM symbol boundaries.
pub fn synthesize_ofdm_waveform(
    symbols: &[Vec<Vec<Complex64>>],
    beamformers: &OfdmBeamformerSet,
    g_cp: usize,
    oversample: usize,
    beta: f64,
) -> Result<Waveform> {
    check_oversample(oversample)?;
    let m = beamformers.subcarriers;
    let k_count = beamformers.beams.len();
    if symbols.len() != k_count {
        return Err(Error::InvalidInput("symbols and beamformers disagree on the number of users".into()));
    }
    let d_count = symbols.first().map_or(0, Vec::len);
    if d_count == 0 || symbols.iter().flatten().any(|s| s.len() != m) || symbols.iter().any(|s| s.len() != d_count) {
        return Err(Error::InvalidInput(format!(
            "every user needs the same number of OFDM symbols of {m} subcarriers"
        )));
    }
    if g_cp > m {
        return Err(Error::InvalidInput("cyclic prefix longer than the OFDM symbol".into()));
    }
    let m_t = beamformers.beams[0][0].transmit.len();
    let ifft = FftPlanner::new().plan_fft_inverse(m);
    let taps = rrc_taps(oversample, beta);
    let sym_len = m + g_cp;
    let antennas: Vec<Vec<Complex64>> = (0..m_t)
        .into_par_iter()
        .map(|a| {
            let mut serial = Vec::with_capacity(d_count * sym_len);
            let mut buf = vec![Complex64::new(0.0, 0.0); m];
            for d in 0..d_count {
                for (mm, b) in buf.iter_mut().enumerate() {
                    *b = (0..k_count).map(|k| beamformers.beams[k][mm].transmit[a] * symbols[k][d][mm]).sum();
                }
                append_ofdm_symbol(&mut buf, ifft.as_ref(), g_cp, &mut serial);
            }
            shape(&serial, oversample, &taps)
        })
        .collect();
    let span = RRC_SPAN_SYMBOLS * oversample;
    let block = sym_len * oversample;
    let first = span.div_ceil(block);
    let last_end = (d_count * sym_len - 1) * oversample + 1;
    let start = first * block + span;
    let full_blocks = last_end.saturating_sub(start) / block;
    Ok(Waveform { antennas, oversample, block_symbols: sym_len, steady: start..start + full_blocks * block })
}

/// PAPR of every `(block, antenna)` pair and its empirical CCDF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaprResult {
    pub blocks: usize,
    pub antennas: usize,
    /// Linear PAPR, block-major.
    pub papr: Vec<f64>,
    /// `(threshold_db, P[PAPR > threshold])`.
    pub ccdf: Vec<(f64, f64)>,
}

impl PaprResult {
    pub fn papr_db(&self) -> Vec<f64> {
        self.papr.iter().map(|p| 10.0 * p.log10()).collect()
    }

    /// Smallest PAPR in dB whose exceedance probability is at most `prob`.
    pub fn papr_at(&self, prob: f64) -> f64 {
        papr_quantile_db(&self.papr, prob)
    }
}

/// Fraction of `papr` (linear) strictly above each threshold in dB.
pub fn ccdf(papr: &[f64], thresholds_db: &[f64]) -> Vec<f64> {
    let mut db: Vec<f64> = papr.iter().map(|p| 10.0 * p.log10()).collect();
    db.sort_by(f64::total_cmp);
    let n = db.len().max(1) as f64;
    thresholds_db.iter().map(|&t| (db.len() - db.partition_point(|&x| x <= t)) as f64 / n).collect()
}

/// Empirical PAPR level in dB exceeded with probability at most `prob`.
pub fn papr_quantile_db(papr: &[f64], prob: f64) -> f64 {
    let mut db: Vec<f64> = papr.iter().map(|p| 10.0 * p.log10()).collect();
    db.sort_by(f64::total_cmp);
    if db.is_empty() {
        return f64::NAN;
    }
    let allowed = (prob * db.len() as f64).floor() as usize;
    db[db.len() - 1 - allowed.min(db.len() - 1)]
}

fn block_papr(x: &[Complex64]) -> Result<f64> {
    let (peak, sum) = x.iter().fold((0.0f64, 0.0), |(p, s), z| {
        let e = z.norm_sqr();
        (p.max(e), s + e)
    });
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(Error::Degenerate("block with zero or non-finite power".into()));
    }
    Ok(peak / (sum / x.len() as f64))
}

/// Splits the steady part of every antenna stream into blocks of
/// `block_symbols · oversample` samples and measures each block's PAPR.
pub fn papr_ccdf(waveform: &Waveform, block_symbols: usize, thresholds_db: &[f64]) -> Result<PaprResult> {
    if waveform.is_empty() || waveform.antennas.is_empty() {
        return Err(Error::InvalidInput("empty waveform".into()));
    }
    let block = block_symbols * waveform.oversample;
    if block == 0 {
        return Err(Error::InvalidInput("block length must be positive".into()));
    }
    let blocks = waveform.steady.len() / block;
    if blocks == 0 {
        return Err(Error::InvalidInput("waveform is shorter than one block".into()));
    }
    let antennas = waveform.antennas.len();
    let papr = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let s = waveform.steady.start + b * block;
            waveform.antennas.iter().map(move |x| block_papr(&x[s..s + block]))
        })
        .collect::<Result<Vec<f64>>>()?;
    let ccdf = thresholds_db.iter().copied().zip(ccdf(&papr, thresholds_db)).collect();
    Ok(PaprResult { blocks, antennas, papr, ccdf })
}

/// CSV with columns `threshold_db, ccdf_dam, ccdf_ofdm, ccdf_strongest`.
pub fn ccdf_csv(thresholds_db: &[f64], dam: &[f64], ofdm: &[f64], strongest: &[f64]) -> String {
    let mut out = String::from("threshold_db,ccdf_dam,ccdf_ofdm,ccdf_strongest\n");
    for (i, t) in thresholds_db.iter().enumerate() {
        out.push_str(&format!("{t},{},{},{}\n", dam[i], ofdm[i], strongest[i]));
    }
    out
}
