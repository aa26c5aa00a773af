//! Approximate Bayesian computation (ABC) design for phase I dose finding.
//!
//! A bank of prior toxicity curves is drawn once from `K + 1` candidate
//! models. At every decision each curve is weighted by how closely a
//! dataset simulated from it matches the observed DLT proportions, the
//! per-dose toxicity is estimated by a weighted median, and the next cohort
//! moves one level toward the dose whose estimate is closest to the target.

pub mod bank;
pub mod bank_io;
pub mod binomial;
pub mod conduct;
pub mod config;
pub mod constrained;
pub mod decision;
pub mod error;
pub mod estimate;
pub mod median;
pub mod report;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod special;
pub mod state;
pub mod stopping;
pub mod weights;

pub use bank::{generate_bank, DEFAULT_BANK_SEED, BankFingerprint, PriorBank, PriorSample};
pub use bank_io::{load_bank, save_bank};
pub use config::TrialConfig;
pub use constrained::{sample_constrained_uniform, ConstrainedMethod};
pub use decision::{decide, next_decision, select_final_mtd, Action, Decision};
pub use error::{Error, Result};
pub use estimate::{estimate_toxicity, Estimate};
pub use median::weighted_median;
pub use scenario::{builtin_scenario, calibrate_mu, fixed_scenarios, generate_random_scenario, Scenario, ScenarioGenSpec};
pub use sim::{run_batch, run_trial, sweep, BatchOptions, BatchSummary, TrialResult};
pub use special::regularized_incomplete_beta;
pub use state::{TrialState, TrialStatus};
pub use stopping::{alt_safety_stop, safety_stop};
pub use weights::{compute_weights, Weights};
