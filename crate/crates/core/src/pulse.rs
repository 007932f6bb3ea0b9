//! Raised-cosine / root-raised-cosine pulses and sampled correlation tables.

use std::f64::consts::PI;

use crate::channel::UEChannel;
use crate::error::{Error, Result};

const SINGULAR_EPS: f64 = 1e-8;

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x.fract() == 0.0 {
        0.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Raised-cosine pulse, the autocorrelation of [`rrc`].
pub fn rho(t: f64, t_s: f64, beta: f64) -> f64 {
    raised_cosine(t / t_s, beta)
}

/// [`rho`] with the argument in sample intervals.
pub fn raised_cosine(x: f64, beta: f64) -> f64 {
    // evaluate on |x| so that the pulse is even bit for bit
    let x = x.abs();
    let denom = 1.0 - (2.0 * beta * x).powi(2);
    if denom.abs() < SINGULAR_EPS {
        return PI / 4.0 * sinc(1.0 / (2.0 * beta));
    }
    sinc(x) * (PI * beta * x).cos() / denom
}

/// Unit-energy root-raised-cosine pulse.
pub fn rrc(t: f64, t_s: f64, beta: f64) -> f64 {
    let x = t.abs() / t_s;
    let scale = 1.0 / t_s.sqrt();
    if x == 0.0 {
        return scale * (1.0 - beta + 4.0 * beta / PI);
    }
    if beta > 0.0 && (1.0 - (4.0 * beta * x).powi(2)).abs() < SINGULAR_EPS {
        let a = PI / (4.0 * beta);
        return scale * beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * x * (1.0 - beta)).sin() + 4.0 * beta * x * (PI * x * (1.0 + beta)).cos();
    let den = PI * x * (1.0 - (4.0 * beta * x).powi(2));
    scale * num / den
}

/// Samples `ρ(nT + offset(l, i))` for `n ∈ [−W, W]`.
///
/// Rows index the paths `l` of the receiving user, columns the transmit
/// streams `i` of the interfering (or same) user.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoTable {
    pub window: usize,
    pub rows: usize,
    pub cols: usize,
    /// Offsets in seconds, row-major `(l, i)`.
    pub offsets_s: Vec<f64>,
    values: Vec<f64>,
}

impl RhoTable {
    fn span(&self) -> usize {
        2 * self.window + 1
    }

    /// All `2W+1` samples for one `(l, i)` pair, starting at `n = −W`.
    pub fn column(&self, l: usize, i: usize) -> &[f64] {
        let s = self.span();
        let start = (l * self.cols + i) * s;
        &self.values[start..start + s]
    }

    /// Sample at `n`; zero outside the window.
    pub fn get(&self, l: usize, i: usize, n: i64) -> f64 {
        let w = self.window as i64;
        if n < -w || n > w {
            return 0.0;
        }
        self.column(l, i)[(n + w) as usize]
    }
}

/// Builds the sampled correlations seen by user `k` from the streams of a
/// user whose pre-compensation delays are `kappa` (the same user when
/// `kappa` comes from `ch_k`'s own plan).
///
/// Entry `(l, i, n)` is `ρ(nT + (n_max − n_l − κ_i)T − τ_F,l)` where the
/// delays refer to `ch_k`.
pub fn build_rho_table(ch_k: &UEChannel, kappa: &[i64], window: usize, t_s: f64, beta: f64) -> Result<RhoTable> {
    let n_max = ch_k.max_delay();
    let rows = ch_k.num_paths();
    let cols = kappa.len();
    let mut offsets_s = Vec::with_capacity(rows * cols);
    for p in &ch_k.paths {
        for &kp in kappa {
            let shift = n_max - p.n - kp;
            if shift.unsigned_abs() as usize > window {
                return Err(Error::Config(format!("rho window {window} is smaller than the delay offset {shift}")));
            }
            offsets_s.push(shift as f64 * t_s - p.tau_f_s);
        }
    }
    let w = window as i64;
    let mut values = Vec::with_capacity(rows * cols * (2 * window + 1));
    for p in &ch_k.paths {
        let frac = p.tau_f_s / t_s;
        for &kp in kappa {
            let shift = n_max - p.n - kp;
            values.extend((-w..=w).map(|n| raised_cosine((n + shift) as f64 - frac, beta)));
        }
    }
    Ok(RhoTable { window, rows, cols, offsets_s, values })
}
