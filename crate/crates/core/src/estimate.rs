use serde::{Deserialize, Serialize};

use crate::bank::PriorBank;
use crate::config::TrialConfig;
use crate::error::{Error, Result};
use crate::median::weighted_median_presorted;
use crate::state::TrialState;
use crate::weights::Weights;

/// Weighted-median toxicity estimates for every dose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub p_hat: Vec<f64>,
    /// Σ of the (possibly rescaled) weights; a diagnostic of how much prior
    /// mass agrees with the data.
    pub effective_weight_sum: f64,
    /// 1-based dose whose estimate is closest to the target.
    pub optimal_dose: usize,
    /// Weighted fraction of samples with `p_1` above the target.
    pub lowest_dose_exceedance: f64,
}

/// `argmin_k |p̂_k − φ|` over the doses accepted by `eligible`; ties go to the
/// lower dose. Falls back to all doses when none is eligible.
pub fn optimal_dose(p_hat: &[f64], target: f64, eligible: impl Fn(usize) -> bool) -> usize {
    let pick = |filter: &dyn Fn(usize) -> bool| {
        let mut best: Option<(usize, f64)> = None;
        for (i, &p) in p_hat.iter().enumerate() {
            let dose = i + 1;
            if !filter(dose) {
                continue;
            }
            let gap = (p - target).abs();
            if best.is_none_or(|(_, g)| gap < g) {
                best = Some((dose, gap));
            }
        }
        best.map(|(d, _)| d)
    };
    pick(&eligible).or_else(|| pick(&|_| true)).unwrap_or(1)
}

/// Weighted fraction of bank samples whose lowest-dose toxicity exceeds `target`.
pub fn lowest_dose_exceedance(bank: &PriorBank, weights: &[f64], target: f64) -> Result<f64> {
    if weights.len() != bank.len() {
        return Err(Error::DimensionMismatch { expected: bank.len(), found: weights.len() });
    }
    let mut total = 0.0;
    let mut above = 0.0;
    for (j, &w) in weights.iter().enumerate() {
        total += w;
        if bank.probs(j)[0] > target {
            above += w;
        }
    }
    if !(total > 0.0) {
        return Err(Error::DegenerateWeights);
    }
    Ok(above / total)
}

pub fn estimate_toxicity(
    bank: &PriorBank,
    weights: &Weights,
    state: &TrialState,
    config: &TrialConfig,
) -> Result<Estimate> {
    if weights.len() != bank.len() {
        return Err(Error::DimensionMismatch { expected: bank.len(), found: weights.len() });
    }
    let w = weights.as_slice();
    let total = weights.sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateWeights);
    }
    let p_hat = (1..=bank.num_doses())
        .map(|dose| {
            let column = bank.column(dose);
            weighted_median_presorted(&column.values, &column.order, w, total)
        })
        .collect::<Result<Vec<f64>>>()?;
    let optimal = if config.restrict_to_tried {
        optimal_dose(&p_hat, config.target, |d| state.is_tried(d))
    } else {
        optimal_dose(&p_hat, config.target, |_| true)
    };
    Ok(Estimate {
        p_hat,
        effective_weight_sum: total,
        optimal_dose: optimal,
        lowest_dose_exceedance: lowest_dose_exceedance(bank, w, config.target)?,
    })
}
