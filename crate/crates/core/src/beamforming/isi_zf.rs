//! Zero-forcing of every cross path/user term followed by alternating MMSE
//! receive and transmit updates.
//!
//! The transmit vector of stream `(k, l)` is confined to the kernel of all
//! other paths, `f_kl = B_kl b_kl`. What remains for user `k` is its own
//! aligned taps smeared by `ρ_ll[n]`, so with `E = [H_k1 B_k1 b_k1, …]` and
//! the Gram matrix `C = Σ_{n≠0} ρ[n] ρ[n]^T` of the aligned sequences, the
//! per-user SINR is `|w^H E ρ[0]|² / (w^H E C E^H w + σ²‖w‖²)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::fractional::{power_terms, FractionalEffectiveChannels};
use super::BeamformerSet;
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::numerics::{normalized, null_space_basis, solve_hpd, ComplexMatrix, ComplexVector, DEFAULT_RANK_TOL};

/// Kernel basis of all paths except `(k, l)`, across every user.
pub fn null_space_projection(channels: &ChannelSet, k: usize, l: usize) -> Result<ComplexMatrix> {
    let (m_t, m_r) = (channels.tx_antennas, channels.rx_antennas);
    let l_tot = channels.total_paths();
    let need = m_r * (l_tot - 1) + 1;
    if m_t < need {
        return Err(Error::Infeasible(format!(
            "ISI zero-forcing needs M_t ≥ M_r(L_tot − 1) + 1 = {need}, have M_t = {m_t}"
        )));
    }
    if l_tot == 1 {
        return Ok(ComplexMatrix::identity(m_t, m_t));
    }
    let mut stacked = ComplexMatrix::zeros(m_r * (l_tot - 1), m_t);
    let mut row = 0;
    for (k2, ue) in channels.ues.iter().enumerate() {
        for (l2, p) in ue.paths.iter().enumerate() {
            if (k2, l2) != (k, l) {
                stacked.rows_mut(row, m_r).copy_from(&p.gain);
                row += m_r;
            }
        }
    }
    null_space_basis(&stacked, DEFAULT_RANK_TOL)
}

/// Precomputed quantities for the alternating updates.
#[derive(Debug, Clone)]
pub struct ZfProblem {
    pub m_t: usize,
    pub m_r: usize,
    /// `B_kl`, `M_t × N_kl`.
    pub bases: Vec<Vec<ComplexMatrix>>,
    /// `H_kl B_kl`, `M_r × N_kl`.
    reduced: Vec<Vec<ComplexMatrix>>,
    /// `ρ_kk,ll[0]` per user.
    rho0: Vec<Vec<f64>>,
    /// `Σ_{n≠0} ρ_ll[n] ρ_l'l'[n]` per user.
    gram: Vec<DMatrix<f64>>,
}

impl ZfProblem {
    pub fn new(f: &FractionalEffectiveChannels) -> Result<Self> {
        let ch = &f.channels;
        let w = f.window;
        let mut bases = Vec::with_capacity(ch.num_ues());
        let mut reduced = Vec::with_capacity(ch.num_ues());
        let mut rho0 = Vec::with_capacity(ch.num_ues());
        let mut gram = Vec::with_capacity(ch.num_ues());
        for (k, ue) in ch.ues.iter().enumerate() {
            let bk: Vec<ComplexMatrix> =
                (0..ue.num_paths()).map(|l| null_space_projection(ch, k, l)).collect::<Result<_>>()?;
            reduced.push(ue.paths.iter().zip(&bk).map(|(p, b)| &p.gain * b).collect());
            bases.push(bk);
            let seqs: Vec<&[f64]> = (0..ue.num_paths()).map(|l| f.aligned_sequence(k, l)).collect();
            rho0.push(seqs.iter().map(|s| s[w]).collect());
            let l_k = seqs.len();
            gram.push(DMatrix::from_fn(l_k, l_k, |a, b| {
                seqs[a].iter().zip(seqs[b]).enumerate().filter(|(n, _)| *n != w).map(|(_, (x, y))| x * y).sum()
            }));
        }
        Ok(Self { m_t: ch.tx_antennas, m_r: ch.rx_antennas, bases, reduced, rho0, gram })
    }

    pub fn num_ues(&self) -> usize {
        self.bases.len()
    }

    /// Length of the stacked reduced beamformer `b̄_k`.
    pub fn reduced_len(&self, k: usize) -> usize {
        self.bases[k].iter().map(|b| b.ncols()).sum()
    }

    fn split<'a>(&self, k: usize, b_bar: &'a ComplexVector) -> Vec<nalgebra::DVectorView<'a, Complex64>> {
        let mut off = 0;
        self.bases[k]
            .iter()
            .map(|b| {
                let v = b_bar.rows(off, b.ncols());
                off += b.ncols();
                v
            })
            .collect()
    }

    /// Columns `H_kl B_kl b_kl`.
    fn effective(&self, k: usize, b_bar: &ComplexVector) -> ComplexMatrix {
        let parts = self.split(k, b_bar);
        let cols: Vec<ComplexVector> = self.reduced[k].iter().zip(parts).map(|(hb, b)| hb * b).collect();
        ComplexMatrix::from_columns(&cols)
    }

    fn rho0_vec(&self, k: usize) -> ComplexVector {
        ComplexVector::from_iterator(self.rho0[k].len(), self.rho0[k].iter().map(|&r| Complex64::new(r, 0.0)))
    }

    fn gram_complex(&self, k: usize) -> ComplexMatrix {
        self.gram[k].map(|x| Complex64::new(x, 0.0))
    }

    /// Signal and residual self-ISI power of user `k`.
    pub fn terms(&self, k: usize, w: &ComplexVector, b_bar: &ComplexVector) -> (f64, f64) {
        let e = self.effective(k, b_bar);
        let ew = e.ad_mul(w);
        let signal = ew.dotc(&self.rho0_vec(k)).norm_sqr();
        let isi = ew.dotc(&(self.gram_complex(k) * &ew)).re.max(0.0);
        (signal, isi)
    }

    pub fn sinr(&self, k: usize, w: &ComplexVector, b_bar: &ComplexVector, sigma2: f64) -> f64 {
        let (s, isi) = self.terms(k, w, b_bar);
        if s == 0.0 {
            0.0
        } else {
            s / (isi + sigma2 * w.norm_squared())
        }
    }

    /// Full transmit vector `f̄_k = [B_k1 b_k1; …]`.
    pub fn expand(&self, k: usize, b_bar: &ComplexVector) -> ComplexVector {
        let parts = self.split(k, b_bar);
        let l_k = parts.len();
        let mut out = ComplexVector::zeros(self.m_t * l_k);
        for (l, (b, part)) in self.bases[k].iter().zip(parts).enumerate() {
            out.rows_mut(l * self.m_t, self.m_t).copy_from(&(b * part));
        }
        out
    }

    /// Uniform reduced beamformers with power `P/K` each.
    pub fn equal_power_init(&self, power: f64) -> Vec<ComplexVector> {
        let per_ue = power / self.num_ues() as f64;
        (0..self.num_ues())
            .map(|k| {
                let n = self.reduced_len(k);
                ComplexVector::from_element(n, Complex64::new((per_ue / n as f64).sqrt(), 0.0))
            })
            .collect()
    }
}

/// `w_k = Λ_k⁻¹ H̃_k[0] b̄_k`, normalised.
pub fn mmse_receive_update(problem: &ZfProblem, b_bar: &[ComplexVector], sigma2: f64) -> Result<Vec<ComplexVector>> {
    (0..problem.num_ues())
        .map(|k| {
            let e = problem.effective(k, &b_bar[k]);
            let target = &e * problem.rho0_vec(k);
            let mut lambda = &e * problem.gram_complex(k) * e.adjoint();
            for d in 0..problem.m_r {
                lambda[(d, d)] += sigma2;
            }
            Ok(normalized(&solve_hpd(&lambda, &target)?))
        })
        .collect()
}

/// `b̄_k ∝ Λ̄_k⁻¹ H̃_k[0]^H w_k` scaled to power `P/K`.
///
/// `Λ̄_k = A C A^H + c I` with `A = blockdiag(B_kl^H H_kl^H w_k)`, so the
/// solve reduces to `A (cI + C A^H A)⁻¹ ρ[0]`, an `L × L` system.
pub fn mmse_transmit_update(
    problem: &ZfProblem,
    w: &[ComplexVector],
    power: f64,
    sigma2: f64,
) -> Result<Vec<ComplexVector>> {
    let k_count = problem.num_ues();
    let per_ue = power / k_count as f64;
    (0..k_count)
        .map(|k| {
            let h: Vec<ComplexVector> = problem.reduced[k].iter().map(|hb| hb.ad_mul(&w[k])).collect();
            let l_k = h.len();
            let c = sigma2 * w[k].norm_squared() / per_ue;
            let mut sys = DMatrix::<f64>::from_fn(l_k, l_k, |a, b| problem.gram[k][(a, b)] * h[b].norm_squared());
            for d in 0..l_k {
                sys[(d, d)] += c;
            }
            let rhs = nalgebra::DVector::from_column_slice(&problem.rho0[k]);
            let x = sys.lu().solve(&rhs).ok_or_else(|| Error::Degenerate("singular transmit system".into()))?;
            let mut b = ComplexVector::zeros(problem.reduced_len(k));
            let mut off = 0;
            for (hl, &xl) in h.iter().zip(x.iter()) {
                b.rows_mut(off, hl.len()).copy_from(&(hl * Complex64::new(xl, 0.0)));
                off += hl.len();
            }
            let norm = b.norm();
            if norm == 0.0 {
                return Err(Error::Degenerate(format!("UE {k} has no usable transmit direction")));
            }
            Ok(b * Complex64::new(per_ue.sqrt() / norm, 0.0))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct IsiZfState {
    pub bases: Vec<Vec<ComplexMatrix>>,
    pub b_bar: Vec<ComplexVector>,
    pub receive: Vec<ComplexVector>,
    /// Sum rate after initialisation and after every iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct IsiZfOutcome {
    pub state: IsiZfState,
    pub beamformers: BeamformerSet,
    /// SINR under the full power decomposition, including any ZF residual.
    pub sinr: Vec<f64>,
    /// SINR of the zero-forced model the iterations optimise.
    pub zf_sinr: Vec<f64>,
    pub sum_rate: f64,
}

fn sum_rate(problem: &ZfProblem, w: &[ComplexVector], b: &[ComplexVector], sigma2: f64) -> f64 {
    (0..problem.num_ues()).map(|k| (1.0 + problem.sinr(k, &w[k], &b[k], sigma2)).log2()).sum()
}

/// Alternates receive and transmit MMSE updates from an equal-power start
/// until the relative sum-rate increase drops to `tol` or below.
pub fn isi_zf_alternating(
    f: &FractionalEffectiveChannels,
    power: f64,
    sigma2: f64,
    tol: f64,
    max_iter: usize,
) -> Result<IsiZfOutcome> {
    let problem = ZfProblem::new(f)?;
    let k_count = problem.num_ues();
    let mut b_bar = problem.equal_power_init(power);
    let mut w: Vec<ComplexVector> =
        (0..k_count).map(|k| normalized(&(problem.effective(k, &b_bar[k]) * problem.rho0_vec(k)))).collect();
    let mut trace = vec![sum_rate(&problem, &w, &b_bar, sigma2)];
    let mut last_increase = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter && last_increase > tol {
        w = mmse_receive_update(&problem, &b_bar, sigma2)?;
        b_bar = mmse_transmit_update(&problem, &w, power, sigma2)?;
        let prev = *trace.last().unwrap_or(&0.0);
        let obj = sum_rate(&problem, &w, &b_bar, sigma2);
        last_increase = if prev > 0.0 {
            (obj - prev) / prev
        } else if obj > prev {
            f64::INFINITY
        } else {
            0.0
        };
        trace.push(obj);
        iterations += 1;
    }
    let transmit: Vec<ComplexVector> = (0..k_count).map(|k| problem.expand(k, &b_bar[k])).collect();
    let terms = power_terms(f, &w, &transmit);
    let sinr: Vec<f64> = terms.iter().zip(&w).map(|(t, wk)| t.sinr(sigma2 * wk.norm_squared())).collect();
    let zf_sinr: Vec<f64> = (0..k_count).map(|k| problem.sinr(k, &w[k], &b_bar[k], sigma2)).collect();
    let sum_rate = sinr.iter().map(|s| (1.0 + s).log2()).sum();
    let beamformers = BeamformerSet { transmit, receive: w.clone(), power_budget: power };
    Ok(IsiZfOutcome {
        state: IsiZfState {
            bases: problem.bases,
            b_bar,
            receive: w,
            trace,
            iterations,
            converged: last_increase <= tol,
        },
        beamformers,
        sinr,
        zf_sinr,
        sum_rate,
    })
}
