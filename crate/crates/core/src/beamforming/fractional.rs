//! Base-station-side DAM under fractional path delays.
//!
//! Stream `i` of user `k` is pre-delayed by `κ_ki = n_k,max − n_ki` and
//! beamformed towards path `i`. Integer alignment is exact but the
//! fractional residuals leave every stream smeared over neighbouring
//! samples through the raised-cosine correlation `ρ`.

use num_complex::Complex64;

use super::doubleside::top_singular_vectors;
use super::{eigen_power_scaling, BeamformerSet};
use crate::channel::{ChannelSet, UEChannel};
use crate::error::Result;
use crate::numerics::{ComplexMatrix, ComplexVector};
use crate::pulse::{build_rho_table, RhoTable};

/// Pre-compensation delays of the base-station-side design, indexed by path.
pub fn bs_side_kappa(ch: &UEChannel) -> Vec<i64> {
    let n_max = ch.max_delay();
    ch.paths.iter().map(|p| n_max - p.n).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FractionalEffectiveChannels {
    pub channels: ChannelSet,
    pub window: usize,
    pub kappa: Vec<Vec<i64>>,
    /// `tables[k·K + k']`: correlations seen by `k` from the streams of `k'`.
    tables: Vec<RhoTable>,
}

impl FractionalEffectiveChannels {
    pub fn num_ues(&self) -> usize {
        self.channels.num_ues()
    }

    pub fn table(&self, k: usize, k2: usize) -> &RhoTable {
        &self.tables[k * self.num_ues() + k2]
    }

    /// `ρ_kk,ll` over the whole window, starting at `n = −W`.
    pub fn aligned_sequence(&self, k: usize, l: usize) -> &[f64] {
        self.table(k, k).column(l, l)
    }

    fn block_matrix(&self, k: usize, k2: usize, n: i64, keep: impl Fn(usize, usize) -> bool) -> ComplexMatrix {
        let m_t = self.channels.tx_antennas;
        let ue = &self.channels.ues[k];
        let streams = self.kappa[k2].len();
        let tab = self.table(k, k2);
        let mut out = ComplexMatrix::zeros(self.channels.rx_antennas, m_t * streams);
        for i in 0..streams {
            let mut view = out.columns_mut(i * m_t, m_t);
            for (l, p) in ue.paths.iter().enumerate() {
                if keep(l, i) {
                    view += &p.gain * Complex64::new(tab.get(l, i, n), 0.0);
                }
            }
        }
        out
    }

    /// Aligned taps `[H_k1 ρ_11[n], …, H_kL ρ_LL[n]]`.
    pub fn h_rho(&self, k: usize, n: i64) -> ComplexMatrix {
        self.block_matrix(k, k, n, |l, i| l == i)
    }

    /// Misaligned taps: block `i` is `Σ_{l≠i} H_kl ρ_li[n]`.
    pub fn h_hat(&self, k: usize, n: i64) -> ComplexMatrix {
        self.block_matrix(k, k, n, |l, i| l != i)
    }

    /// Taps from user `k2`'s streams: block `i` is `Σ_l H_kl ρ_kk2,li[n]`.
    pub fn h_cross(&self, k: usize, k2: usize, n: i64) -> ComplexMatrix {
        self.block_matrix(k, k2, n, |_, _| true)
    }
}

/// Builds the correlation tables for every user pair.
pub fn assemble_bs_side(channels: &ChannelSet, window: usize, beta: f64) -> Result<FractionalEffectiveChannels> {
    let kappa: Vec<Vec<i64>> = channels.ues.iter().map(bs_side_kappa).collect();
    let mut tables = Vec::with_capacity(kappa.len() * kappa.len());
    for ue in &channels.ues {
        for kp in &kappa {
            tables.push(build_rho_table(ue, kp, window, channels.sample_interval_s, beta)?);
        }
    }
    Ok(FractionalEffectiveChannels { channels: channels.clone(), window, kappa, tables })
}

/// Received power components of one user.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct PowerTerms {
    pub desired: f64,
    /// Aligned streams leaking into neighbouring samples.
    pub isi_aligned: f64,
    /// Misaligned stream/path combinations of the same user.
    pub isi_cross: f64,
    pub iui: f64,
}

impl PowerTerms {
    pub fn interference(&self) -> f64 {
        self.isi_aligned + self.isi_cross + self.iui
    }

    pub fn sinr(&self, noise: f64) -> f64 {
        if self.desired == 0.0 {
            0.0
        } else {
            self.desired / (self.interference() + noise)
        }
    }
}

/// `w_k^H H_kl f_k'i` for every path `l` of `k` and stream `i` of `k'`.
fn path_gains(
    f: &FractionalEffectiveChannels,
    w: &ComplexVector,
    k: usize,
    f_k2: &ComplexVector,
) -> Vec<Vec<Complex64>> {
    let m_t = f.channels.tx_antennas;
    let streams = f_k2.len() / m_t;
    f.channels.ues[k]
        .paths
        .iter()
        .map(|p| {
            let g = p.gain.ad_mul(w);
            (0..streams).map(|i| g.dotc(&f_k2.rows(i * m_t, m_t))).collect()
        })
        .collect()
}

/// Power decomposition for every user. Sums run over the table window.
pub fn power_terms(
    f: &FractionalEffectiveChannels,
    receive: &[ComplexVector],
    transmit: &[ComplexVector],
) -> Vec<PowerTerms> {
    let k_count = f.num_ues();
    let span = 2 * f.window + 1;
    let centre = f.window;
    (0..k_count)
        .map(|k| {
            let mut out = PowerTerms::default();
            for k2 in 0..k_count {
                let c = path_gains(f, &receive[k], k, &transmit[k2]);
                let tab = f.table(k, k2);
                let mut aligned = vec![Complex64::new(0.0, 0.0); span];
                let mut other = vec![Complex64::new(0.0, 0.0); span];
                for (l, row) in c.iter().enumerate() {
                    for (i, &cli) in row.iter().enumerate() {
                        let target = if k2 == k && l == i { &mut aligned } else { &mut other };
                        for (acc, &r) in target.iter_mut().zip(tab.column(l, i)) {
                            *acc += cli * r;
                        }
                    }
                }
                let energy = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();
                if k2 == k {
                    out.desired = aligned[centre].norm_sqr();
                    out.isi_aligned =
                        aligned.iter().enumerate().filter(|(n, _)| *n != centre).map(|(_, z)| z.norm_sqr()).sum();
                    out.isi_cross = energy(&other);
                } else {
                    out.iui += energy(&other);
                }
            }
            out
        })
        .collect()
}

/// SINR of every user under the fractional-delay power decomposition.
pub fn bs_side_sinr(f: &FractionalEffectiveChannels, bf: &BeamformerSet, sigma2: f64) -> Vec<f64> {
    power_terms(f, &bf.receive, &bf.transmit)
        .iter()
        .zip(&bf.receive)
        .map(|(t, w)| t.sinr(sigma2 * w.norm_squared()))
        .collect()
}

/// Eigen-beamforming on the aligned taps `H_rho[0]`.
pub fn eigen_beamform_bs_side(
    f: &FractionalEffectiveChannels,
    power: f64,
    sigma2: f64,
) -> Result<(BeamformerSet, Vec<f64>)> {
    let mut tx = Vec::with_capacity(f.num_ues());
    let mut rx = Vec::with_capacity(f.num_ues());
    for k in 0..f.num_ues() {
        let (u, v) = top_singular_vectors(&f.h_rho(k, 0))?;
        rx.push(u);
        tx.push(v);
    }
    let bf = BeamformerSet { transmit: eigen_power_scaling(tx, power), receive: rx, power_budget: power };
    let sinr = bs_side_sinr(f, &bf, sigma2);
    Ok((bf, sinr))
}
