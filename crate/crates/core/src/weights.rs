//! ABC kernel weights.
//!
//! For each prior sample a dataset is simulated at the observed patient
//! counts and compared with the observed DLT proportions through
//! `w = exp(−Σ_k (ŷ_k/m_k − y_k/m_k)² / h)`, summing over tried doses only.

use rand::Rng;

use crate::bank::PriorBank;
use crate::binomial::FixedBinomial;
use crate::config::TrialConfig;
use crate::error::{Error, Result};
use crate::state::TrialState;

/// Log-weights below this make `exp` subnormal or zero.
const LN_MIN_POSITIVE: f64 = -708.396_418_532_264_1;

/// Weights aligned with the samples of a [`PriorBank`].
///
/// `values[j] · exp(log_scale)` is the kernel weight of sample `j`. The
/// scale is 0 unless every raw weight would underflow, in which case the
/// values are renormalized so that the largest is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub values: Vec<f64>,
    pub log_scale: f64,
}

impl Weights {
    pub fn uniform(len: usize) -> Self {
        Self { values: vec![1.0; len], log_scale: 0.0 }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Turns log-weights into weights, shifting only if all would underflow.
    pub fn from_log_weights(mut log_weights: Vec<f64>) -> Self {
        let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let shift = if max < LN_MIN_POSITIVE && max.is_finite() { max } else { 0.0 };
        for lw in log_weights.iter_mut() {
            *lw = (*lw - shift).exp();
        }
        Self { values: log_weights, log_scale: shift }
    }
}

/// Squared-distance contribution of each possible simulated count at one dose,
/// already divided by the bandwidth, and its exponential.
struct DoseKernel {
    column: usize,
    sampler: FixedBinomial,
    penalty: Vec<f64>,
    factor: Vec<f64>,
}

fn dose_kernels(state: &TrialState, bandwidth: f64) -> Vec<DoseKernel> {
    state
        .patient_counts
        .iter()
        .zip(&state.dlt_counts)
        .enumerate()
        .filter(|(_, (&m, _))| m > 0)
        .map(|(column, (&m, &y))| {
            let m_f = m as f64;
            let observed = y as f64 / m_f;
            let penalty: Vec<f64> = (0..=m)
                .map(|sim| {
                    let diff = sim as f64 / m_f - observed;
                    diff * diff / bandwidth
                })
                .collect();
            let factor = penalty.iter().map(|d| (-d).exp()).collect();
            DoseKernel { column, sampler: FixedBinomial::new(m), penalty, factor }
        })
        .collect()
}

#[inline]
fn unit_interval(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Simulates one dataset per prior sample and returns the kernel weights.
///
/// Tried doses are processed in increasing order; for each one the
/// generator fills one uniform per prior sample, in bank order, and each
/// uniform drives a single binomial draw by inversion.
pub fn compute_weights<R: Rng + ?Sized>(
    bank: &PriorBank,
    state: &TrialState,
    config: &TrialConfig,
    rng: &mut R,
) -> Result<Weights> {
    bank.check_matches(config)?;
    if state.num_doses() != config.num_doses {
        return Err(Error::DimensionMismatch { expected: config.num_doses, found: state.num_doses() });
    }
    let kernels = dose_kernels(state, config.bandwidth);
    if kernels.is_empty() {
        return Ok(Weights::uniform(bank.len()));
    }
    let k = bank.num_doses();
    let probs = bank.raw_probs();
    let mut bits = vec![0u64; bank.len()];
    let mut distances = vec![0.0; bank.len()];
    let mut weights = vec![1.0; bank.len()];
    for kernel in &kernels {
        rng.fill(&mut bits[..]);
        let column = probs[kernel.column..].iter().step_by(k);
        for (((&b, &p), d), w) in bits.iter().zip(column).zip(&mut distances).zip(&mut weights) {
            let y = kernel.sampler.sample_with_uniform(unit_interval(b), p) as usize;
            *d += kernel.penalty[y];
            *w *= kernel.factor[y];
        }
    }
    let max = weights.iter().copied().fold(0.0, f64::max);
    if max >= f64::MIN_POSITIVE {
        Ok(Weights { values: weights, log_scale: 0.0 })
    } else {
        for d in distances.iter_mut() {
            *d = -*d;
        }
        Ok(Weights::from_log_weights(distances))
    }
}
