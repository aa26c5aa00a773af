//! Dose transitions and final MTD selection.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bank::PriorBank;
use crate::config::TrialConfig;
use crate::error::{Error, Result};
use crate::estimate::{estimate_toxicity, Estimate};
use crate::state::{TrialState, TrialStatus};
use crate::stopping::safety_stop;
use crate::weights::compute_weights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    Escalate { to: usize },
    Stay { at: usize },
    Deescalate { to: usize },
    StopSafety,
}

impl Action {
    /// Dose for the next cohort, if the trial continues.
    pub fn next_dose(&self) -> Option<usize> {
        match *self {
            Action::Escalate { to } | Action::Deescalate { to } => Some(to),
            Action::Stay { at } => Some(at),
            Action::StopSafety => None,
        }
    }

    pub fn is_stop(&self) -> bool {
        matches!(self, Action::StopSafety)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    #[serde(flatten)]
    pub action: Action,
    pub estimate: Estimate,
}

/// Whether the configured safety rule fires on the current data.
pub fn stop_for_safety(state: &TrialState, estimate: &Estimate, config: &TrialConfig) -> bool {
    if config.use_alt_stop {
        estimate.lowest_dose_exceedance > config.alt_stop_threshold
    } else {
        safety_stop(state.dlt_counts[0], state.patient_counts[0], config)
    }
}

/// Moves at most one level toward the estimated optimal dose, unless the
/// safety rule fires.
pub fn next_decision(state: &TrialState, estimate: &Estimate, config: &TrialConfig) -> Result<Decision> {
    if state.status != TrialStatus::Active {
        return Err(Error::TrialNotActive);
    }
    let action = if stop_for_safety(state, estimate, config) {
        Action::StopSafety
    } else {
        let current = state.current_dose;
        let target = estimate.optimal_dose;
        let step = |d: usize| d.clamp(1, config.num_doses);
        if current > target {
            Action::Deescalate { to: step(current - 1) }
        } else if current < target {
            Action::Escalate { to: step(current + 1) }
        } else {
            Action::Stay { at: current }
        }
    };
    Ok(Decision { action, estimate: estimate.clone() })
}

/// Full decision round: fresh ABC weights, estimates, transition.
pub fn decide<R: Rng + ?Sized>(
    bank: &PriorBank,
    state: &TrialState,
    config: &TrialConfig,
    rng: &mut R,
) -> Result<Decision> {
    if state.status != TrialStatus::Active {
        return Err(Error::TrialNotActive);
    }
    let weights = compute_weights(bank, state, config, rng)?;
    let estimate = estimate_toxicity(bank, &weights, state, config)?;
    next_decision(state, &estimate, config)
}

/// Estimates from one more ABC round on the final data.
pub fn final_estimate<R: Rng + ?Sized>(
    bank: &PriorBank,
    state: &TrialState,
    config: &TrialConfig,
    rng: &mut R,
) -> Result<Estimate> {
    let weights = compute_weights(bank, state, config, rng)?;
    estimate_toxicity(bank, &weights, state, config)
}

/// MTD at the end of a trial, `None` when it was stopped for safety.
pub fn select_final_mtd<R: Rng + ?Sized>(
    bank: &PriorBank,
    state: &TrialState,
    config: &TrialConfig,
    rng: &mut R,
) -> Result<Option<usize>> {
    match state.status {
        TrialStatus::StoppedForSafety => Ok(None),
        TrialStatus::Active => Err(Error::TrialNotFinished),
        TrialStatus::Completed => Ok(Some(final_estimate(bank, state, config, rng)?.optimal_dose)),
    }
}
