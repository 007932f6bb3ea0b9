#![allow(dead_code)]

use std::f64::consts::PI;

use dam::beamforming::PowerTerms;
use dam::channel::ChannelSet;
use dam::numerics::ComplexVector;
use num_complex::Complex64;

/// Samples per symbol of the reference convolution.
pub const OVERSAMPLE: usize = 8;
/// Half-width of the convolution support, in symbols.
pub const SPAN: f64 = 256.0;

/// Unit-energy root-raised-cosine pulse with the argument in symbols.
pub fn root_raised_cosine(t: f64, beta: f64) -> f64 {
    let t = t.abs();
    if t < 1e-12 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    if (4.0 * beta * t - 1.0).abs() < 1e-9 {
        let a = PI / (4.0 * beta);
        return beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
    num / (PI * t * (1.0 - (4.0 * beta * t).powi(2)))
}

/// Matched-filter output at time `t` (in symbols) for a pulse launched at 0,
/// by Riemann summation on the oversampled grid.
pub fn matched_response(t: f64, beta: f64) -> f64 {
    let dt = 1.0 / OVERSAMPLE as f64;
    let half = (SPAN * OVERSAMPLE as f64) as i64;
    let centre = (t / 2.0 / dt).round() as i64;
    (centre - half..=centre + half)
        .map(|j| {
            let s = j as f64 * dt;
            root_raised_cosine(s, beta) * root_raised_cosine(s - t, beta)
        })
        .sum::<f64>()
        * dt
}

/// Power terms of every user from the sampled end-to-end response: each
/// stream `i` of user `k'` is launched `κ_k'i` symbols late, travels path `l`
/// of user `k` with its absolute delay, and is matched-filtered and sampled
/// at `(n + n_k,max)T` for `n ∈ [−window, window]`.
pub fn time_domain_power_terms(
    channels: &ChannelSet,
    kappa: &[Vec<i64>],
    receive: &[ComplexVector],
    transmit: &[ComplexVector],
    window: usize,
    beta: f64,
) -> Vec<PowerTerms> {
    let t_s = channels.sample_interval_s;
    let m_t = channels.tx_antennas;
    let w = window as i64;
    let span = 2 * window + 1;
    let zero = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(channels.ues.len());
    for (k, ue) in channels.ues.iter().enumerate() {
        let n_max = ue.paths.iter().map(|p| p.n).max().unwrap();
        let mut terms = PowerTerms::default();
        for (k2, kap) in kappa.iter().enumerate() {
            let mut aligned = vec![zero; span];
            let mut other = vec![zero; span];
            for (l, path) in ue.paths.iter().enumerate() {
                let delay = path.tau_s / t_s;
                let row = path.gain.ad_mul(&receive[k]);
                for (i, &kp) in kap.iter().enumerate() {
                    let c = row.dotc(&transmit[k2].rows(i * m_t, m_t));
                    let target = if k2 == k && l == i { &mut aligned } else { &mut other };
                    for (j, n) in (-w..=w).enumerate() {
                        let t = (n + n_max) as f64 - kp as f64 - delay;
                        target[j] += c * matched_response(t, beta);
                    }
                }
            }
            let energy = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();
            if k2 == k {
                terms.desired = aligned[window].norm_sqr();
                terms.isi_aligned = energy(&aligned) - terms.desired;
                terms.isi_cross = energy(&other);
            } else {
                terms.iui += energy(&other);
            }
        }
        out.push(terms);
    }
    out
}

/// `L(L + 1 − I)I − L`, minimised by brute force over the feasible `I`.
pub fn brute_force_min_isi(m_t: usize, m_r: usize, l: usize) -> Option<i64> {
    let f = |i: usize| {
        let (l, i) = (l as i64, i as i64);
        l * (l + 1 - i) * i - l
    };
    (1..=l).filter(|&i| i <= m_t && l + 1 - i <= m_r).map(f).min()
}

/// Eigenvalues of a 3×3 Hermitian matrix from its characteristic
/// polynomial, descending.
pub fn hermitian3_eigenvalues(a: &[[Complex64; 3]; 3]) -> [f64; 3] {
    let d = [a[0][0].re, a[1][1].re, a[2][2].re];
    let tr = d[0] + d[1] + d[2];
    let minors = d[0] * d[1] + d[0] * d[2] + d[1] * d[2] - a[0][1].norm_sqr() - a[0][2].norm_sqr() - a[1][2].norm_sqr();
    let det = d[0] * d[1] * d[2] + 2.0 * (a[0][1] * a[1][2] * a[2][0]).re
        - d[0] * a[1][2].norm_sqr()
        - d[1] * a[0][2].norm_sqr()
        - d[2] * a[0][1].norm_sqr();
    // λ = tr/3 + 2√(p/3)·cos(θ) for the depressed cubic x³ − p x − q
    let shift = tr / 3.0;
    let p = shift * shift * 3.0 - minors;
    let q = det - shift * minors + 2.0 * shift.powi(3);
    let p = p.max(0.0);
    if p < 1e-300 {
        return [shift; 3];
    }
    let r = (p / 3.0).sqrt();
    let arg = (q / (2.0 * r.powi(3))).clamp(-1.0, 1.0);
    let phi = arg.acos() / 3.0;
    let mut e = [0.0; 3];
    for (j, v) in e.iter_mut().enumerate() {
        *v = shift + 2.0 * r * (phi - 2.0 * PI * j as f64 / 3.0).cos();
    }
    e.sort_by(|x, y| y.partial_cmp(x).unwrap());
    e
}

/// Student t quantile at 0.975 for 99 degrees of freedom.
pub const T_975_DF99: f64 = 1.984_216_951_6;

/// Mean and half-width of the 95% interval of paired differences.
pub fn paired_interval(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert_eq!(a.len(), b.len());
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, T_975_DF99 * (var / n).sqrt())
}
