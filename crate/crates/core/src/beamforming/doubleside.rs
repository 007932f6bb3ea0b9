//! Effective channels and eigen-beamforming with integer delay compensation
//! at both link ends.
//!
//! For receiving user `k` and transmitting user `k'`, the path `l` of user
//! `k` reaches receive branch `r` from stream `i` with total delay offset
//! `Δ = n_kl + κ_k'i + μ_kr − n_k,max`. All paths sharing an offset `q` form
//! the block matrix `Ḡ_kk'[q]`; only `q = 0` of `Ḡ_kk` carries signal.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{column, eigen_power_scaling, BeamformerSet};
use crate::channel::ChannelSet;
use crate::delay::DelayPlan;
use crate::error::{Error, Result};
use crate::numerics::{svd, ComplexMatrix, ComplexVector};

/// Path `l` of the receiving user placed in block `(r, i)` at offset `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub q: i64,
    pub r: usize,
    pub i: usize,
    pub l: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairChannel {
    pub delta_min: i64,
    pub delta_max: i64,
    /// Sorted by `q`.
    pub placements: Vec<Placement>,
}

/// `Ḡ_kk'[q]` for all user pairs, kept as sparse placements.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannelTensor {
    pub channels: ChannelSet,
    pub plans: Vec<DelayPlan>,
    pairs: Vec<PairChannel>,
}

impl EffectiveChannelTensor {
    pub fn num_ues(&self) -> usize {
        self.plans.len()
    }

    pub fn pair(&self, k: usize, k2: usize) -> &PairChannel {
        &self.pairs[k * self.num_ues() + k2]
    }

    /// Dense `Ḡ_kk'[q]`, `M_r·R_k × M_t·I_k'`.
    pub fn block(&self, k: usize, k2: usize, q: i64) -> ComplexMatrix {
        let (m_r, m_t) = (self.channels.rx_antennas, self.channels.tx_antennas);
        let rows = m_r * self.plans[k].post_count;
        let cols = m_t * self.plans[k2].pre_count;
        let mut g = ComplexMatrix::zeros(rows, cols);
        for p in self.pair(k, k2).placements.iter().filter(|p| p.q == q) {
            let h = &self.channels.ues[k].paths[p.l].gain;
            let mut view = g.view_mut((p.r * m_r, p.i * m_t), (m_r, m_t));
            view += h;
        }
        g
    }

    /// Distinct offsets present for a pair, ascending.
    pub fn offsets(&self, k: usize, k2: usize) -> Vec<i64> {
        let mut qs: Vec<i64> = self.pair(k, k2).placements.iter().map(|p| p.q).collect();
        qs.dedup();
        qs
    }
}

pub fn assemble_effective_channels(channels: &ChannelSet, plans: &[DelayPlan]) -> Result<EffectiveChannelTensor> {
    let k_count = channels.num_ues();
    if plans.len() != k_count {
        return Err(Error::Internal(format!("{} plans for {k_count} users", plans.len())));
    }
    for (ue, plan) in channels.ues.iter().zip(plans) {
        if plan.kappa.len() != plan.pre_count || plan.mu.len() != plan.post_count {
            return Err(Error::Internal("plan length mismatch".into()));
        }
        if plan.n_max != ue.max_delay() {
            return Err(Error::Internal(format!(
                "UE {}: plan targets n_max = {}, channel has {}",
                ue.ue_index,
                plan.n_max,
                ue.max_delay()
            )));
        }
    }
    let mut pairs = Vec::with_capacity(k_count * k_count);
    for (k, ue) in channels.ues.iter().enumerate() {
        let n_max = ue.max_delay();
        for plan_t in plans {
            let mut placements = Vec::new();
            for (r, &mu) in plans[k].mu.iter().enumerate() {
                for (i, &kappa) in plan_t.kappa.iter().enumerate() {
                    for (l, p) in ue.paths.iter().enumerate() {
                        placements.push(Placement { q: p.n + kappa + mu - n_max, r, i, l });
                    }
                }
            }
            placements.sort_by_key(|p| (p.q, p.r, p.i, p.l));
            let delta_min = placements.first().map(|p| p.q).unwrap_or(0);
            let delta_max = placements.last().map(|p| p.q).unwrap_or(0);
            pairs.push(PairChannel { delta_min, delta_max, placements });
        }
    }
    Ok(EffectiveChannelTensor { channels: channels.clone(), plans: plans.to_vec(), pairs })
}

/// Per-offset inner products `w̄_k^H Ḡ_kk'[q] f̄_k'`.
fn offset_gains(t: &EffectiveChannelTensor, bf: &BeamformerSet, k: usize, k2: usize) -> BTreeMap<i64, Complex64> {
    let (m_r, m_t) = (t.channels.rx_antennas, t.channels.tx_antennas);
    let mut acc = BTreeMap::new();
    for p in &t.pair(k, k2).placements {
        let h = &t.channels.ues[k].paths[p.l].gain;
        let w = bf.receive[k].rows(p.r * m_r, m_r);
        let f = bf.transmit[k2].rows(p.i * m_t, m_t);
        let c = w.dotc(&(h * f));
        *acc.entry(p.q).or_insert(Complex64::new(0.0, 0.0)) += c;
    }
    acc
}

/// Signal, self-interference and cross-user interference powers of user `k`.
pub fn doubleside_terms(t: &EffectiveChannelTensor, bf: &BeamformerSet, k: usize) -> (f64, f64, f64) {
    let own = offset_gains(t, bf, k, k);
    let signal = own.get(&0).map(|c| c.norm_sqr()).unwrap_or(0.0);
    let isi: f64 = own.iter().filter(|(q, _)| **q != 0).map(|(_, c)| c.norm_sqr()).sum();
    let iui: f64 = (0..t.num_ues())
        .filter(|&k2| k2 != k)
        .flat_map(|k2| offset_gains(t, bf, k, k2).into_values())
        .map(|c| c.norm_sqr())
        .sum();
    (signal, isi, iui)
}

/// SINR of every user for the given beamformers.
pub fn doubleside_sinr(t: &EffectiveChannelTensor, bf: &BeamformerSet, sigma2: f64) -> Vec<f64> {
    (0..t.num_ues())
        .map(|k| {
            let (s, isi, iui) = doubleside_terms(t, bf, k);
            let noise = sigma2 * bf.receive[k].norm_squared();
            if s == 0.0 {
                0.0
            } else {
                s / (isi + iui + noise)
            }
        })
        .collect()
}

/// Top singular pair of every aligned block `Ḡ_kk[0]`, transmit vectors
/// scaled jointly to the power budget.
pub fn eigen_beamform_doubleside(
    t: &EffectiveChannelTensor,
    power: f64,
    sigma2: f64,
) -> Result<(BeamformerSet, Vec<f64>)> {
    let mut tx = Vec::with_capacity(t.num_ues());
    let mut rx = Vec::with_capacity(t.num_ues());
    for k in 0..t.num_ues() {
        let g0 = t.block(k, k, 0);
        let (u, v) = top_singular_vectors(&g0)?;
        rx.push(u);
        tx.push(v);
    }
    let bf = BeamformerSet { transmit: eigen_power_scaling(tx, power), receive: rx, power_budget: power };
    let sinr = doubleside_sinr(t, &bf, sigma2);
    Ok((bf, sinr))
}

pub(crate) fn top_singular_vectors(g: &ComplexMatrix) -> Result<(ComplexVector, ComplexVector)> {
    let d = svd(g)?;
    Ok((column(&d.left_vectors, 0), column(&d.right_vectors, 0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_channel_set, PathComponent, UEChannel};
    use crate::config::SimConfig;
    use crate::delay::{enumerate_alignment_sets, proposition1_delays};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const T: f64 = 5e-9;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(r, c, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn channel_with_delays(rng: &mut ChaCha8Rng, delays: &[Vec<i64>], m_r: usize, m_t: usize) -> ChannelSet {
        let ues = delays
            .iter()
            .enumerate()
            .map(|(k, ns)| {
                let paths = ns.iter().map(|&n| PathComponent::on_grid(random_matrix(rng, m_r, m_t), n, T)).collect();
                UEChannel::new(k, paths).unwrap()
            })
            .collect();
        ChannelSet::new(m_t, m_r, T, ues).unwrap()
    }

    fn plans(set: &ChannelSet, pre: usize, post: usize) -> Vec<DelayPlan> {
        set.ues.iter().map(|u| proposition1_delays(&u.integer_delays(), pre, post).unwrap()).collect()
    }

    #[test]
    fn single_path_single_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let set = channel_with_delays(&mut rng, &[vec![4]], 2, 3);
        let t = assemble_effective_channels(&set, &plans(&set, 1, 1)).unwrap();
        assert_eq!(t.offsets(0, 0), vec![0]);
        assert_eq!(t.block(0, 0, 0), set.ues[0].paths[0].gain);
    }

    #[test]
    fn figure_three_placements() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let set = channel_with_delays(&mut rng, &[vec![1, 3, 4, 5]], 2, 4);
        let ps = plans(&set, 2, 3);
        let t = assemble_effective_channels(&set, &ps).unwrap();
        let aligned = t.pair(0, 0).placements.iter().filter(|p| p.q == 0).count();
        assert_eq!(aligned, enumerate_alignment_sets(&ps[0], &[1, 3, 4, 5]).desired.len());
        assert_eq!(aligned, 5);
    }

    #[test]
    fn offsets_match_index_formula_and_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let delays = vec![vec![0, 7, 9, 20], vec![3, 5, 30, 31]];
        let set = channel_with_delays(&mut rng, &delays, 2, 4);
        for pre in 1..=4 {
            let post = 5 - pre;
            let ps = plans(&set, pre, post);
            let t = assemble_effective_channels(&set, &ps).unwrap();
            for k in 0..2 {
                for k2 in 0..2 {
                    let pair = t.pair(k, k2);
                    assert_eq!(pair.placements.len(), pre * post * 4);
                    let nk = &delays[k];
                    let nk2 = &delays[k2];
                    for p in &pair.placements {
                        // 1-based formula n_kl + n_{k'I} − n_{k'(I+1−i)} − n_{k(L+1−r)}
                        let expect = nk[p.l] + nk2[pre - 1] - nk2[pre - 1 - p.i] - nk[3 - p.r];
                        assert_eq!(p.q, expect);
                    }
                    // at most one path per block and offset
                    let mut keys: Vec<_> = pair.placements.iter().map(|p| (p.q, p.r, p.i)).collect();
                    keys.dedup();
                    assert_eq!(keys.len(), pair.placements.len());
                }
                assert_eq!(t.pair(k, k).delta_min, delays[k][0] - delays[k][3]);
            }
        }
    }

    #[test]
    fn single_user_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let set = channel_with_delays(&mut rng, &[vec![2]], 3, 5);
        let t = assemble_effective_channels(&set, &plans(&set, 1, 1)).unwrap();
        let (p, s2) = (2.0, 0.1);
        let (bf, sinr) = eigen_beamform_doubleside(&t, p, s2).unwrap();
        let smax = svd(&set.ues[0].paths[0].gain).unwrap().largest();
        assert!((sinr[0] - p * smax * smax / s2).abs() < 1e-10 * sinr[0]);
        assert!((bf.total_power() - p).abs() < 1e-12 * p);
        assert!((bf.receive[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_channel_gives_zero_sinr() {
        let set = channel_with_delays(&mut ChaCha8Rng::seed_from_u64(5), &[vec![0, 3]], 2, 2)
            .scaled(Complex64::new(0.0, 0.0));
        let t = assemble_effective_channels(&set, &plans(&set, 2, 1)).unwrap();
        let (_, sinr) = eigen_beamform_doubleside(&t, 1.0, 1.0).unwrap();
        assert_eq!(sinr, vec![0.0]);
    }

    #[test]
    fn sinr_matches_literal_block_sum() {
        let cfg = SimConfig { tx_antennas: 6, rx_antennas: 3, fractional_delays: false, ..Default::default() };
        let set = generate_channel_set(&cfg, 11).unwrap();
        let ps = plans(&set, 2, 2);
        let t = assemble_effective_channels(&set, &ps).unwrap();
        let (p, s2) = (1.0, 1e-12);
        let (bf, sinr) = eigen_beamform_doubleside(&t, p, s2).unwrap();
        for k in 0..2 {
            let w = &bf.receive[k];
            let mut signal = 0.0;
            let mut interference = 0.0;
            for k2 in 0..2 {
                let pair = t.pair(k, k2);
                for q in pair.delta_min..=pair.delta_max {
                    let v = w.dotc(&(t.block(k, k2, q) * &bf.transmit[k2])).norm_sqr();
                    if k2 == k && q == 0 {
                        signal = v;
                    } else {
                        interference += v;
                    }
                }
            }
            let oracle = signal / (interference + s2 * w.norm_squared());
            assert!((sinr[k] - oracle).abs() <= 1e-9 * oracle, "{} vs {}", sinr[k], oracle);
        }
    }

    #[test]
    fn n_max_mismatch_is_internal_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let set = channel_with_delays(&mut rng, &[vec![0, 3]], 1, 2);
        let mut ps = plans(&set, 2, 1);
        ps[0].n_max += 1;
        assert!(matches!(assemble_effective_channels(&set, &ps), Err(Error::Internal(_))));
    }
}
