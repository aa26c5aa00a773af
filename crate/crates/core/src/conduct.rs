//! Advancing a live trial one cohort at a time with reproducible random
//! streams: the decision after event `i` uses substream `i` of the trial
//! seed, and the final selection uses a separate stream.

use serde::{Deserialize, Serialize};

use crate::bank::PriorBank;
use crate::config::TrialConfig;
use crate::decision::{decide, final_estimate, Decision};
use crate::error::{Error, Result};
use crate::estimate::{estimate_toxicity, Estimate};
use crate::rng::{derive_seed, substream, SimRng};
use crate::state::{TrialState, TrialStatus};
use crate::weights::Weights;

const FINAL_STREAM_TAG: u64 = 0xf1_4a1;

pub fn decision_rng(seed: u64, event_index: u64) -> SimRng {
    substream(seed, event_index)
}

pub fn final_rng(seed: u64) -> SimRng {
    substream(derive_seed(seed, FINAL_STREAM_TAG), 0)
}

/// Estimate before any patient is treated; no random numbers are needed.
pub fn prior_estimate(bank: &PriorBank, config: &TrialConfig) -> Result<Estimate> {
    let state = TrialState::new(config);
    estimate_toxicity(bank, &Weights::uniform(bank.len()), &state, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub decision: Decision,
    pub status: TrialStatus,
    /// Set once the trial completes; `None` while active or after a safety stop.
    pub final_mtd: Option<usize>,
    pub final_estimate: Option<Estimate>,
}

/// Records a cohort and moves the trial on. The caller checks whether the
/// dose matches the recommendation; this only needs it to be in range.
pub fn advance(
    bank: &PriorBank,
    config: &TrialConfig,
    state: &mut TrialState,
    dose: usize,
    patients: u32,
    dlts: u32,
    seed: u64,
    event_index: u64,
) -> Result<StepOutcome> {
    if state.status != TrialStatus::Active {
        return Err(Error::TrialNotActive);
    }
    let mut next = state.clone();
    next.record_cohort(dose, patients, dlts, config)?;
    next.current_dose = dose;
    let decision = decide(bank, &next, config, &mut decision_rng(seed, event_index))?;
    let mut final_mtd = None;
    let mut final_est = None;
    match decision.action.next_dose() {
        None => next.status = TrialStatus::StoppedForSafety,
        Some(_) if next.is_exhausted(config) => {
            next.status = TrialStatus::Completed;
            let est = final_estimate(bank, &next, config, &mut final_rng(seed))?;
            final_mtd = Some(est.optimal_dose);
            final_est = Some(est);
        }
        Some(d) => next.current_dose = d,
    }
    *state = next;
    Ok(StepOutcome { decision, status: state.status, final_mtd, final_estimate: final_est })
}
