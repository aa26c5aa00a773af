//! Early stopping for safety.

use crate::bank::PriorBank;
use crate::config::TrialConfig;
use crate::error::Result;
use crate::estimate::lowest_dose_exceedance;
use crate::special::regularized_incomplete_beta;

/// Minimum number of patients at the lowest dose before the rule can fire.
pub const MIN_PATIENTS_FOR_STOP: u32 = 3;

/// `Pr(p_1 > φ | y_1, m_1)` under a Beta(0.5, 0.5) prior.
pub fn posterior_exceedance(dlts: u32, patients: u32, target: f64) -> f64 {
    assert!(dlts <= patients, "DLT count exceeds patient count");
    let a = 0.5 + dlts as f64;
    let b = 0.5 + (patients - dlts) as f64;
    1.0 - regularized_incomplete_beta(target, a, b).expect("target lies in (0, 1)")
}

/// Beta–binomial stopping rule on the lowest dose: fires when at least three
/// patients have been treated there and the posterior probability that its
/// DLT rate exceeds the target is above `stop_threshold`.
pub fn safety_stop(dlts: u32, patients: u32, config: &TrialConfig) -> bool {
    patients >= MIN_PATIENTS_FOR_STOP
        && posterior_exceedance(dlts, patients, config.target) > config.stop_threshold
}

/// Stopping rule built from the ABC weights: fires when the weighted share of
/// prior samples whose lowest dose is above the target exceeds
/// `alt_stop_threshold`.
pub fn alt_safety_stop(bank: &PriorBank, weights: &[f64], config: &TrialConfig) -> Result<bool> {
    Ok(lowest_dose_exceedance(bank, weights, config.target)? > config.alt_stop_threshold)
}
