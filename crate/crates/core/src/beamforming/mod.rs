//! Path-based transmit beamforming and receive combining for DAM.
//!
//! Every user gets one transmit vector per compensated stream and one
//! receive vector per post-compensation branch; both are stored stacked.

use serde::{Deserialize, Serialize};

use crate::numerics::{ComplexMatrix, ComplexVector};

pub mod doubleside;
pub mod fractional;
pub mod isi_zf;

pub use doubleside::{assemble_effective_channels, eigen_beamform_doubleside, EffectiveChannelTensor};
pub use fractional::{assemble_bs_side, eigen_beamform_bs_side, power_terms, FractionalEffectiveChannels, PowerTerms};
pub use isi_zf::{
    isi_zf_alternating, mmse_receive_update, mmse_transmit_update, null_space_projection, IsiZfOutcome, IsiZfState,
    ZfProblem,
};

/// Stacked per-user beamformers sharing one power budget.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    /// `f̄_k`, length `M_t · (number of streams)`.
    pub transmit: Vec<ComplexVector>,
    /// `w̄_k`, length `M_r · (number of branches)`, unit norm.
    pub receive: Vec<ComplexVector>,
    pub power_budget: f64,
}

impl BeamformerSet {
    pub fn total_power(&self) -> f64 {
        self.transmit.iter().map(|f| f.norm_squared()).sum()
    }

    /// Transmit vector of stream `i` for user `k`.
    pub fn stream(&self, k: usize, i: usize, m_t: usize) -> ComplexVector {
        self.transmit[k].rows(i * m_t, m_t).into_owned()
    }

    /// Receive vector of branch `r` for user `k`.
    pub fn branch(&self, k: usize, r: usize, m_r: usize) -> ComplexVector {
        self.receive[k].rows(r * m_r, m_r).into_owned()
    }
}

/// Serializable form of a [`BeamformerSet`] with `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamformerDoc {
    pub transmit: Vec<Vec<[f64; 2]>>,
    pub receive: Vec<Vec<[f64; 2]>>,
    pub power_budget: f64,
}

impl From<&BeamformerSet> for BeamformerDoc {
    fn from(b: &BeamformerSet) -> Self {
        let pairs = |v: &ComplexVector| v.iter().map(|z| [z.re, z.im]).collect();
        Self {
            transmit: b.transmit.iter().map(pairs).collect(),
            receive: b.receive.iter().map(pairs).collect(),
            power_budget: b.power_budget,
        }
    }
}

/// `√P · v_k / ‖[v_1 … v_K]‖_F` for every user.
pub(crate) fn eigen_power_scaling(vectors: Vec<ComplexVector>, power: f64) -> Vec<ComplexVector> {
    let frob: f64 = vectors.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt();
    if frob == 0.0 {
        return vectors;
    }
    let s = num_complex::Complex64::new(power.sqrt() / frob, 0.0);
    vectors.into_iter().map(|v| v * s).collect()
}

/// Column `j` of `m` as an owned vector.
pub(crate) fn column(m: &ComplexMatrix, j: usize) -> ComplexVector {
    m.column(j).into_owned()
}
