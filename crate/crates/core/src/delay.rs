//! Delay pre/post-compensation design.
//!
//! A plan delays transmit stream `i` by `κ_i` samples and receive branch `r`
//! by `μ_r` samples. A triple `(i, r, l)` is aligned when
//! `κ_i + μ_r + n_l = n_max`; every other triple leaks as inter-symbol
//! interference.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

/// Compensation delays for one user. Indices are 0-based throughout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayPlan {
    /// Number of transmit-side streams.
    pub pre_count: usize,
    /// Number of receive-side branches.
    pub post_count: usize,
    pub kappa: Vec<i64>,
    pub mu: Vec<i64>,
    pub n_max: i64,
}

impl DelayPlan {
    pub fn validate(&self) -> Result<()> {
        if self.kappa.len() != self.pre_count || self.mu.len() != self.post_count {
            return Err(Error::InvalidInput("plan length mismatch".into()));
        }
        if self.kappa.first() != Some(&0) {
            return Err(Error::InvalidInput("first pre-compensation delay must be 0".into()));
        }
        for v in [&self.kappa, &self.mu] {
            if v.iter().any(|&x| x < 0) {
                return Err(Error::InvalidInput("negative compensation delay".into()));
            }
            let mut s = v.clone();
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidInput("compensation delays must be distinct".into()));
            }
        }
        Ok(())
    }
}

/// Classification of every `(i, r, l)` triple of a plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentSets {
    pub desired: Vec<(usize, usize, usize)>,
    pub isi: Vec<(usize, usize, usize)>,
    /// Aligned triples beyond the `L` the plan was designed for.
    pub l_extra: usize,
}

/// The linear system `V·Q·x = n` whose solution `x = [κ; μ]` is a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct CompensationSystem {
    pub q: ComplexMatrix,
    pub v: ComplexMatrix,
    pub n_vec: Vec<i64>,
}

impl CompensationSystem {
    pub fn new(n_list: &[i64], pre_count: usize, post_count: usize) -> Result<Self> {
        check_delays(n_list)?;
        let l = n_list.len();
        if pre_count == 0 || post_count == 0 || pre_count + post_count - 1 != l {
            return Err(Error::Config(format!("need pre + post − 1 = L, got {pre_count} + {post_count} − 1 vs {l}")));
        }
        let n_max = n_list[l - 1];
        Ok(Self {
            q: build_compensation_matrix(pre_count, post_count),
            v: selection_matrix(pre_count, post_count),
            n_vec: (0..l).map(|j| n_max - n_list[l - 1 - j]).collect(),
        })
    }

    /// `V·Q·x − n` evaluated in exact integer arithmetic.
    pub fn residual(&self, plan: &DelayPlan) -> Vec<i64> {
        let x: Vec<i64> = plan.kappa.iter().chain(&plan.mu).copied().collect();
        let vq = &self.v * &self.q;
        (0..vq.nrows())
            .map(|row| {
                let lhs: i64 = (0..vq.ncols()).map(|c| vq[(row, c)].re.round() as i64 * x[c]).sum();
                lhs - self.n_vec[row]
            })
            .collect()
    }
}

fn check_delays(n_list: &[i64]) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::Config("empty delay list".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("delays must be strictly increasing".into()));
    }
    Ok(())
}

/// Stacks `[B_i, I_R]` for `i = 0..I`, where `B_i` is `R × I` with column `i`
/// all ones.
pub fn build_compensation_matrix(pre_count: usize, post_count: usize) -> ComplexMatrix {
    let one = Complex64::new(1.0, 0.0);
    let mut q = ComplexMatrix::zeros(pre_count * post_count, pre_count + post_count);
    for i in 0..pre_count {
        for r in 0..post_count {
            let row = i * post_count + r;
            q[(row, i)] = one;
            q[(row, pre_count + r)] = one;
        }
    }
    q
}

/// Picks the `L = I + R − 1` rows of `Q` used by the closed-form plan: the
/// whole first block, then the last row of every later block.
pub fn selection_matrix(pre_count: usize, post_count: usize) -> ComplexMatrix {
    let l = pre_count + post_count - 1;
    let mut v = ComplexMatrix::zeros(l, pre_count * post_count);
    let one = Complex64::new(1.0, 0.0);
    for r in 0..post_count {
        v[(r, r)] = one;
    }
    for i in 1..pre_count {
        v[(post_count + i - 1, i * post_count + post_count - 1)] = one;
    }
    v
}

/// Whether `I` pre- and `R` post-compensations can align all `L` paths.
pub fn feasibility_check(pre_count: usize, post_count: usize, l: usize) -> bool {
    pre_count + post_count > l
}

/// Closed-form plan for `I + R − 1 = L`.
pub fn proposition1_delays(n_list: &[i64], pre_count: usize, post_count: usize) -> Result<DelayPlan> {
    check_delays(n_list)?;
    let l = n_list.len();
    if pre_count == 0 || post_count == 0 || pre_count + post_count - 1 != l {
        return Err(Error::Config(format!(
            "closed-form plan needs I + R − 1 = L, got I={pre_count}, R={post_count}, L={l}"
        )));
    }
    let n_max = n_list[l - 1];
    let n_pivot = n_list[pre_count - 1];
    let kappa = (0..pre_count).map(|i| n_pivot - n_list[pre_count - 1 - i]).collect();
    let mu = (0..post_count).map(|r| n_max - n_list[l - 1 - r]).collect();
    Ok(DelayPlan { pre_count, post_count, kappa, mu, n_max })
}

pub fn enumerate_alignment_sets(plan: &DelayPlan, n_list: &[i64]) -> AlignmentSets {
    let mut desired = Vec::new();
    let mut isi = Vec::new();
    for (i, &k) in plan.kappa.iter().enumerate() {
        for (r, &m) in plan.mu.iter().enumerate() {
            for (l, &n) in n_list.iter().enumerate() {
                if k + m + n == plan.n_max {
                    desired.push((i, r, l));
                } else {
                    isi.push((i, r, l));
                }
            }
        }
    }
    let l_extra = desired.len().saturating_sub(n_list.len());
    AlignmentSets { desired, isi, l_extra }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompensationCase {
    /// Enough transmit antennas only: all compensation at the base station.
    BsSide,
    /// Enough receive antennas only: all compensation at the user.
    UeSide,
    /// Both arrays large enough for either single-side design.
    EitherSide,
    /// Neither array suffices alone.
    DoubleSide,
}

impl CompensationCase {
    pub fn number(self) -> u8 {
        match self {
            Self::BsSide => 1,
            Self::UeSide => 2,
            Self::EitherSide => 3,
            Self::DoubleSide => 4,
        }
    }
}

impl fmt::Display for CompensationCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "case {}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompensationChoice {
    pub pre_count: usize,
    pub post_count: usize,
    pub case: CompensationCase,
}

/// Number of same-user ISI terms left by `I` pre-compensations.
pub fn isi_count(l: usize, pre_count: usize) -> i64 {
    let (l, i) = (l as i64, pre_count as i64);
    l * (l + 1 - i) * i - l
}

/// Feasible range of `I` given the antenna counts.
pub fn feasible_pre_counts(m_t: usize, m_r: usize, l: usize) -> Option<(usize, usize)> {
    let lo = (l + 1).saturating_sub(m_r).max(1);
    let hi = l.min(m_t);
    (lo <= hi).then_some((lo, hi))
}

/// Splits `L` alignments between transmitter and receiver to minimise the
/// ISI count, subject to `I ≤ M_t` and `R ≤ M_r`.
pub fn choose_compensation_counts(
    m_t: usize,
    m_r: usize,
    l: usize,
    prefer_ue_side: bool,
) -> Result<CompensationChoice> {
    if m_t == 0 || m_r == 0 || l == 0 {
        return Err(Error::InvalidInput("antenna and path counts must be positive".into()));
    }
    if feasible_pre_counts(m_t, m_r, l).is_none() {
        return Err(Error::Infeasible(format!(
            "M_t + M_r = {} cannot cover {l} paths (need at least {})",
            m_t + m_r,
            l + 1
        )));
    }
    let (pre_count, case) = match (m_t >= l, m_r >= l) {
        (true, false) => (l, CompensationCase::BsSide),
        (false, true) => (1, CompensationCase::UeSide),
        (true, true) => (if prefer_ue_side { 1 } else { l }, CompensationCase::EitherSide),
        (false, false) => {
            let i = if m_r * (l + 1 - m_r) >= m_t * (l + 1 - m_t) { m_t } else { l + 1 - m_r };
            (i, CompensationCase::DoubleSide)
        }
    };
    Ok(CompensationChoice { pre_count, post_count: l + 1 - pre_count, case })
}
