//! Per-subcarrier OFDM baselines and overhead-corrected spectral efficiency.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamforming::eigen_power_scaling;
use crate::channel::{frequency_response, ChannelSet};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::numerics::{normalized, rank_of, svd, water_fill, ComplexMatrix, ComplexVector, DEFAULT_RANK_TOL};

/// Beamformer pair of one user on one subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierBeam {
    pub transmit: ComplexVector,
    /// Unit norm.
    pub receive: ComplexVector,
    /// `‖transmit‖²`.
    pub power: f64,
}

/// Beams indexed `[k][m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmBeamformerSet {
    pub subcarriers: usize,
    pub beams: Vec<Vec<SubcarrierBeam>>,
}

impl OfdmBeamformerSet {
    pub fn total_power(&self) -> f64 {
        self.beams.iter().flatten().map(|b| b.transmit.norm_squared()).sum()
    }
}

fn responses(channels: &ChannelSet, subcarriers: usize) -> Result<Vec<Vec<ComplexMatrix>>> {
    if subcarriers < 1 {
        return Err(Error::InvalidInput("at least one subcarrier is required".into()));
    }
    Ok(channels.ues.iter().map(|u| frequency_response(u, subcarriers)).collect())
}

/// `|u^H H v|²`.
fn coupling(u: &ComplexVector, h: &ComplexMatrix, v: &ComplexVector) -> f64 {
    u.dotc(&(h * v)).norm_sqr()
}

/// SINR of every `(k, m)` with per-subcarrier noise `sigma2 / M`.
pub fn ofdm_sinr(freq: &[Vec<ComplexMatrix>], bf: &OfdmBeamformerSet, sigma2: f64) -> Vec<Vec<f64>> {
    let noise = sigma2 / bf.subcarriers as f64;
    (0..freq.len())
        .map(|k| {
            (0..bf.subcarriers)
                .map(|m| {
                    let h = &freq[k][m];
                    let u = &bf.beams[k][m].receive;
                    let signal = coupling(u, h, &bf.beams[k][m].transmit);
                    let iui: f64 =
                        (0..freq.len()).filter(|&k2| k2 != k).map(|k2| coupling(u, h, &bf.beams[k2][m].transmit)).sum();
                    signal / (iui + noise * u.norm_squared())
                })
                .collect()
        })
        .collect()
}

/// `(1/M) Σ_{k,m} log2(1 + γ_{k,m})`.
pub fn ofdm_sum_rate(sinr: &[Vec<f64>]) -> f64 {
    let m = sinr.first().map_or(1, Vec::len).max(1);
    sinr.iter().flatten().map(|g| (1.0 + g).log2()).sum::<f64>() / m as f64
}

/// Dominant-eigenmode transmission on every subcarrier, sharing `P` equally
/// between users on each subcarrier.
pub fn ofdm_eigen(
    channels: &ChannelSet,
    subcarriers: usize,
    power: f64,
    sigma2: f64,
) -> Result<(OfdmBeamformerSet, Vec<Vec<f64>>)> {
    let freq = responses(channels, subcarriers)?;
    let k_count = channels.num_ues();
    let per_m: Vec<Vec<SubcarrierBeam>> = (0..subcarriers)
        .into_par_iter()
        .map(|m| {
            let pairs = (0..k_count).map(|k| svd(&freq[k][m]).map(|d| d.top_pair())).collect::<Result<Vec<_>>>()?;
            let tx = eigen_power_scaling(pairs.iter().map(|p| p.2.clone()).collect(), power);
            Ok(pairs
                .into_iter()
                .zip(tx)
                .map(|((u, _, _), v)| SubcarrierBeam { power: v.norm_squared(), transmit: v, receive: normalized(&u) })
                .collect())
        })
        .collect::<Result<_>>()?;
    let bf = transpose(per_m, k_count, subcarriers);
    let sinr = ofdm_sinr(&freq, &bf, sigma2);
    Ok((bf, sinr))
}

fn transpose(per_m: Vec<Vec<SubcarrierBeam>>, k_count: usize, subcarriers: usize) -> OfdmBeamformerSet {
    let mut beams: Vec<Vec<SubcarrierBeam>> = (0..k_count).map(|_| Vec::with_capacity(subcarriers)).collect();
    for row in per_m {
        for (k, b) in row.into_iter().enumerate() {
            beams[k].push(b);
        }
    }
    OfdmBeamformerSet { subcarriers, beams }
}

struct ZfMode {
    gain: f64,
    transmit: ComplexVector,
    receive: ComplexVector,
}

/// Top mode of `H_k` restricted to the kernel of the other users' responses.
fn zf_mode(freq: &[Vec<ComplexMatrix>], k: usize, m: usize) -> Result<ZfMode> {
    let h = &freq[k][m];
    let (m_r, m_t) = h.shape();
    let others: Vec<&ComplexMatrix> = (0..freq.len()).filter(|&k2| k2 != k).map(|k2| &freq[k2][m]).collect();
    let row_space = if others.is_empty() {
        None
    } else {
        let mut stacked = ComplexMatrix::zeros(others.len() * m_r, m_t);
        for (j, o) in others.iter().enumerate() {
            stacked.rows_mut(j * m_r, m_r).copy_from(o);
        }
        let d = svd(&stacked)?;
        let r = rank_of(&d.singular_values, DEFAULT_RANK_TOL);
        (r > 0).then(|| d.right_vectors.columns(0, r).into_owned())
    };
    let effective = match &row_space {
        Some(vr) => h - (h * vr) * vr.adjoint(),
        None => h.clone(),
    };
    let (u, s, mut v) = svd(&effective)?.top_pair();
    if let Some(vr) = &row_space {
        v -= vr * (vr.adjoint() * &v);
    }
    Ok(ZfMode { gain: s * s, transmit: normalized(&v), receive: normalized(&u) })
}

/// Inter-user zero forcing on every subcarrier with water-filled powers over
/// all `K · M` effective channels and a total budget `M · P`.
///
/// Returns the beams, the per-`(k, m)` SNR and `(1/M) Σ log2(1 + SNR)`.
pub fn ofdm_zf_waterfill(
    channels: &ChannelSet,
    subcarriers: usize,
    power: f64,
    sigma2: f64,
) -> Result<(OfdmBeamformerSet, Vec<Vec<f64>>, f64)> {
    let k_count = channels.num_ues();
    let (m_t, m_r) = (channels.tx_antennas, channels.rx_antennas);
    if m_t < (k_count - 1) * m_r + 1 {
        return Err(Error::Infeasible(format!(
            "OFDM zero forcing needs M_t >= (K-1)M_r + 1 = {}, have {m_t}",
            (k_count - 1) * m_r + 1
        )));
    }
    let freq = responses(channels, subcarriers)?;
    let modes: Vec<Vec<ZfMode>> = (0..subcarriers)
        .into_par_iter()
        .map(|m| (0..k_count).map(|k| zf_mode(&freq, k, m)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let noise = sigma2 / subcarriers as f64;
    let gains: Vec<f64> = modes.iter().flatten().map(|z| z.gain / noise).collect();
    let powers = water_fill(&gains, subcarriers as f64 * power)?;
    let mut snr = vec![Vec::with_capacity(subcarriers); k_count];
    let per_m: Vec<Vec<SubcarrierBeam>> = modes
        .into_iter()
        .enumerate()
        .map(|(m, row)| {
            row.into_iter()
                .enumerate()
                .map(|(k, z)| {
                    let p = powers[m * k_count + k];
                    snr[k].push(gains[m * k_count + k] * p);
                    SubcarrierBeam {
                        transmit: z.transmit * Complex64::new(p.sqrt(), 0.0),
                        receive: z.receive,
                        power: p,
                    }
                })
                .collect()
        })
        .collect();
    let rate = ofdm_sum_rate(&snr);
    Ok((transpose(per_m, k_count, subcarriers), snr, rate))
}

/// Raw and overhead-corrected sum rates of a DAM and an OFDM link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub dam_sinr: Vec<f64>,
    pub dam_ue_rates: Vec<f64>,
    pub dam_raw_rate: f64,
    /// `(1/M) Σ_m log2(1 + γ_{k,m})` per user.
    pub ofdm_ue_rates: Vec<f64>,
    pub ofdm_raw_rate: f64,
    pub dam_factor: f64,
    pub ofdm_factor: f64,
    pub dam_rate: f64,
    pub ofdm_rate: f64,
}

/// `(1/(1+β))·(G_c − G_GI)/G_c` and `M/(M + G_CP)`.
pub fn overhead_factors(cfg: &SimConfig) -> (f64, f64) {
    let dam = (cfg.g_c - cfg.g_gi) as f64 / cfg.g_c as f64 / (1.0 + cfg.beta);
    let m = cfg.subcarriers as f64;
    (dam, m / (m + cfg.g_cp as f64))
}

/// Applies the guard-interval, cyclic-prefix and excess-bandwidth overheads.
pub fn effective_rates(dam_sinr: &[f64], ofdm_sinr: &[Vec<f64>], cfg: &SimConfig) -> RateResult {
    let (dam_factor, ofdm_factor) = overhead_factors(cfg);
    let dam_ue_rates: Vec<f64> = dam_sinr.iter().map(|g| (1.0 + g).log2()).collect();
    let ofdm_ue_rates: Vec<f64> = ofdm_sinr.iter().map(|row| ofdm_sum_rate(std::slice::from_ref(row))).collect();
    let dam_raw_rate: f64 = dam_ue_rates.iter().sum();
    let ofdm_raw_rate: f64 = ofdm_ue_rates.iter().sum();
    RateResult {
        dam_sinr: dam_sinr.to_vec(),
        dam_ue_rates,
        dam_raw_rate,
        ofdm_ue_rates,
        ofdm_raw_rate,
        dam_factor,
        ofdm_factor,
        dam_rate: dam_factor * dam_raw_rate,
        ofdm_rate: ofdm_factor * ofdm_raw_rate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_channel_set, PathComponent, UEChannel};
    use std::f64::consts::PI;

    fn small(m_t: usize, m_r: usize, k: usize, l: usize, seed: u64) -> ChannelSet {
        let cfg = SimConfig {
            tx_antennas: m_t,
            rx_antennas: m_r,
            num_ues: k,
            paths_per_ue: l,
            delay_span_samples: 20,
            g_cp: 20,
            fractional_delays: false,
            ..SimConfig::default()
        };
        let set = generate_channel_set(&cfg, seed).unwrap();
        set.scaled(Complex64::new(cfg.large_scale_gain().sqrt().recip(), 0.0))
    }

    #[test]
    fn flat_channel_gives_flat_sinr() {
        let h = ComplexMatrix::from_fn(2, 4, |i, j| Complex64::new(i as f64 + 1.0, j as f64 - 1.5));
        let ue = UEChannel::new(0, vec![PathComponent::on_grid(h.clone(), 0, 1.0)]).unwrap();
        let set = ChannelSet::new(4, 2, 1.0, vec![ue]).unwrap();
        let (p, s2, m) = (2.0, 0.5, 16);
        let (bf, sinr) = ofdm_eigen(&set, m, p, s2).unwrap();
        let top = svd(&h).unwrap().largest();
        for g in &sinr[0] {
            assert!((g - sinr[0][0]).abs() <= 1e-10 * sinr[0][0]);
            assert!((g - p * top * top / s2).abs() <= 1e-10 * g);
        }
        assert!((bf.total_power() - m as f64 * p).abs() <= 1e-9 * m as f64 * p);
    }

    #[test]
    fn eigen_sinr_matches_literal_sum() {
        let set = small(6, 2, 2, 3, 4);
        let m = 8;
        let (p, s2) = (1.5, 0.3);
        let (bf, sinr) = ofdm_eigen(&set, m, p, s2).unwrap();
        let literal = |k: usize, mm: usize| -> ComplexMatrix {
            set.ues[k].paths.iter().fold(ComplexMatrix::zeros(2, 6), |acc, path| {
                let ph = 2.0 * PI * mm as f64 * path.n as f64 / m as f64;
                acc + &path.gain * (Complex64::new(ph.cos(), ph.sin()) / (m as f64).sqrt())
            })
        };
        for k in 0..2 {
            for mm in 0..m {
                let h = literal(k, mm);
                let u = &bf.beams[k][mm].receive;
                let num = u.dotc(&(&h * &bf.beams[k][mm].transmit)).norm_sqr();
                let k2 = 1 - k;
                let den = u.dotc(&(&h * &bf.beams[k2][mm].transmit)).norm_sqr() + s2 / m as f64 * u.norm_squared();
                assert!((sinr[k][mm] - num / den).abs() <= 1e-10 * sinr[k][mm]);
            }
        }
        assert!((bf.total_power() - m as f64 * p).abs() <= 1e-9 * m as f64 * p);
    }

    #[test]
    fn zero_forcing_removes_inter_user_leakage() {
        let set = small(8, 2, 3, 3, 7);
        let m = 16;
        let (bf, snr, rate) = ofdm_zf_waterfill(&set, m, 1.0, 0.05).unwrap();
        let freq = responses(&set, m).unwrap();
        for k in 0..3 {
            for mm in 0..m {
                for k2 in 0..3 {
                    if k2 != k {
                        let leak = bf.beams[k][mm].receive.dotc(&(&freq[k][mm] * &bf.beams[k2][mm].transmit)).norm();
                        assert!(leak <= 1e-10, "leak {leak}");
                    }
                }
            }
        }
        assert!((bf.total_power() - m as f64).abs() <= 1e-9 * m as f64);
        let zf_sinr = ofdm_sinr(&freq, &bf, 0.05);
        for k in 0..3 {
            for mm in 0..m {
                assert!((zf_sinr[k][mm] - snr[k][mm]).abs() <= 1e-8 * (1.0 + snr[k][mm]));
            }
        }
        assert!((ofdm_sum_rate(&snr) - rate).abs() < 1e-12);
    }

    #[test]
    fn water_level_is_common() {
        let set = small(6, 2, 2, 3, 11);
        let m = 32;
        let (p, s2) = (1.0, 0.2);
        let (bf, snr, _) = ofdm_zf_waterfill(&set, m, p, s2).unwrap();
        let mut level = None;
        let mut inactive = vec![];
        for k in 0..2 {
            for mm in 0..m {
                let pw = bf.beams[k][mm].power;
                if pw > 0.0 {
                    let g = snr[k][mm] / pw;
                    let l = pw + 1.0 / g;
                    let lv = *level.get_or_insert(l);
                    assert!((l - lv).abs() <= 1e-6 * lv);
                } else {
                    inactive.push((k, mm));
                }
            }
        }
        let total: f64 = bf.beams.iter().flatten().map(|b| b.power).sum();
        assert!((total - m as f64 * p).abs() <= 1e-9 * m as f64 * p);
        let lv = level.unwrap();
        let freq = responses(&set, m).unwrap();
        for (k, mm) in inactive {
            let g = zf_mode(&freq, k, mm).unwrap().gain / (s2 / m as f64);
            assert!(1.0 / g >= lv * (1.0 - 1e-6));
        }
    }

    #[test]
    fn single_antenna_single_user_is_classic_water_filling() {
        let set = small(1, 1, 1, 3, 2);
        let m = 64;
        let (p, s2) = (1.0, 0.5);
        let (_, snr, rate) = ofdm_zf_waterfill(&set, m, p, s2).unwrap();
        let gains: Vec<f64> =
            frequency_response(&set.ues[0], m).iter().map(|h| h[(0, 0)].norm_sqr() * m as f64 / s2).collect();
        let powers = water_fill(&gains, m as f64 * p).unwrap();
        let expect: f64 = gains.iter().zip(&powers).map(|(g, q)| (1.0 + g * q).log2()).sum::<f64>() / m as f64;
        assert!((rate - expect).abs() <= 1e-10 * expect);
        for mm in 0..m {
            assert!((snr[0][mm] - gains[mm] * powers[mm]).abs() <= 1e-9 * (1.0 + snr[0][mm]));
        }
    }

    #[test]
    fn water_filling_beats_equal_power() {
        for seed in 0..5 {
            let set = small(6, 2, 2, 3, 20 + seed);
            let m = 16;
            let (_, _, rate) = ofdm_zf_waterfill(&set, m, 1.0, 0.5).unwrap();
            let freq = responses(&set, m).unwrap();
            let equal_rate: f64 = (0..2)
                .flat_map(|k| (0..m).map(move |mm| (k, mm)))
                .map(|(k, mm)| (1.0 + zf_mode(&freq, k, mm).unwrap().gain / (0.5 / m as f64) * 0.5).log2())
                .sum::<f64>()
                / m as f64;
            assert!(rate >= equal_rate - 1e-12);
        }
    }

    #[test]
    fn zero_forcing_rate_ignores_user_order() {
        let set = small(6, 2, 3, 2, 5);
        let mut swapped = set.clone();
        swapped.ues.reverse();
        let (_, _, a) = ofdm_zf_waterfill(&set, 16, 1.0, 0.1).unwrap();
        let (_, _, b) = ofdm_zf_waterfill(&swapped, 16, 1.0, 0.1).unwrap();
        assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn zero_forcing_needs_enough_antennas() {
        let set = small(4, 2, 3, 2, 1);
        assert!(matches!(ofdm_zf_waterfill(&set, 8, 1.0, 0.1), Err(Error::Infeasible(_))));
        assert!(ofdm_zf_waterfill(&small(5, 2, 3, 2, 1), 8, 1.0, 0.1).is_ok());
    }

    #[test]
    fn overhead_factors_examples() {
        let cfg = SimConfig::default();
        let (dam, ofdm) = overhead_factors(&cfg);
        assert!((ofdm - 0.836601).abs() < 5e-7);
        assert!((dam - 0.989109).abs() < 5e-7);
        let bare = SimConfig { beta: 0.0, g_gi: 0, g_cp: 0, ..cfg };
        assert_eq!(overhead_factors(&bare), (1.0, 1.0));
    }

    #[test]
    fn overheads_only_reduce_rates() {
        let base = SimConfig::default();
        let dam = [3.0, 10.0];
        let ofdm = vec![vec![1.0, 2.0, 4.0], vec![0.5, 0.5, 8.0]];
        let mut prev = f64::INFINITY;
        for g in [0, 10, 100, 1000] {
            let r = effective_rates(&dam, &ofdm, &SimConfig { g_cp: g, g_gi: g, ..base.clone() });
            assert!(r.dam_rate <= r.dam_raw_rate && r.ofdm_rate <= r.ofdm_raw_rate);
            assert!(r.dam_rate + r.ofdm_rate <= prev);
            prev = r.dam_rate + r.ofdm_rate;
        }
        let r = effective_rates(&dam, &ofdm, &base);
        assert!((r.dam_raw_rate - (2.0 + 11f64.log2())).abs() < 1e-12);
        assert!((r.ofdm_raw_rate - ofdm_sum_rate(&ofdm)).abs() < 1e-12);
    }
}
