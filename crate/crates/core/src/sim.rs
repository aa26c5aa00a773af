//! Simulated trials against a known dose–toxicity curve.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bank::{generate_bank, PriorBank};
use crate::binomial::sample_binomial;
use crate::config::TrialConfig;
use crate::decision::{decide, select_final_mtd};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, substream};
use crate::scenario::Scenario;
use crate::state::{TrialState, TrialStatus};
use crate::stopping::safety_stop;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortRecord {
    pub dose: usize,
    pub patients: u32,
    pub dlts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    /// 1-based selected dose, 0 when the trial stopped for safety.
    pub selected_mtd: usize,
    pub patient_counts: Vec<u32>,
    pub dlt_counts: Vec<u32>,
    pub stopped_early: bool,
    pub trajectory: Vec<CohortRecord>,
}

impl TrialResult {
    pub fn total_patients(&self) -> u32 {
        self.patient_counts.iter().sum()
    }

    pub fn total_dlts(&self) -> u32 {
        self.dlt_counts.iter().sum()
    }
}

fn check_compatible(scenario: &Scenario, config: &TrialConfig, bank: &PriorBank) -> Result<()> {
    if scenario.num_doses() != config.num_doses {
        return Err(Error::DimensionMismatch { expected: config.num_doses, found: scenario.num_doses() });
    }
    if scenario.target != config.target {
        return Err(Error::InvalidConfig(format!(
            "scenario {} has target {} but the trial targets {}",
            scenario.label, scenario.target, config.target
        )));
    }
    bank.check_matches(config)
}

/// Runs one trial to completion, drawing cohort outcomes from the
/// scenario's true probabilities.
pub fn run_trial<R: Rng + ?Sized>(
    scenario: &Scenario,
    config: &TrialConfig,
    bank: &PriorBank,
    rng: &mut R,
) -> Result<TrialResult> {
    check_compatible(scenario, config, bank)?;
    let mut state = TrialState::new(config);
    let mut trajectory = Vec::new();
    loop {
        let dose = state.current_dose;
        let size = state.next_cohort_size(config);
        let dlts = sample_binomial(rng, size, scenario.true_probs[dose - 1]);
        state.record_cohort(dose, size, dlts, config)?;
        trajectory.push(CohortRecord { dose, patients: size, dlts });

        if !config.use_alt_stop && safety_stop(state.dlt_counts[0], state.patient_counts[0], config) {
            state.status = TrialStatus::StoppedForSafety;
            break;
        }
        let exhausted = state.is_exhausted(config);
        if exhausted && !config.use_alt_stop {
            state.status = TrialStatus::Completed;
            break;
        }
        let decision = decide(bank, &state, config, rng)?;
        match decision.action.next_dose() {
            None => {
                state.status = TrialStatus::StoppedForSafety;
                break;
            }
            Some(_) if exhausted => {
                state.status = TrialStatus::Completed;
                break;
            }
            Some(next) => state.current_dose = next,
        }
    }
    let selected_mtd = select_final_mtd(bank, &state, config, rng)?.unwrap_or(0);
    Ok(TrialResult {
        selected_mtd,
        stopped_early: state.status == TrialStatus::StoppedForSafety,
        patient_counts: state.patient_counts,
        dlt_counts: state.dlt_counts,
        trajectory,
    })
}

/// Operating characteristics of a batch of simulated trials. All figures
/// are percentages except `mean_patients`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub scenario: String,
    pub target: f64,
    pub true_probs: Vec<f64>,
    pub mtd_index: usize,
    pub replications: usize,
    /// Per-dose share of trials selecting that dose.
    pub selection_pct: Vec<f64>,
    /// Per-dose mean number of patients treated.
    pub mean_patients: Vec<f64>,
    pub none_pct: f64,
    /// DLTs over all trials divided by patients over all trials.
    pub dlt_pct: f64,
    /// Trials selecting the true MTD (no selection when there is none).
    pub mtd_selection_pct: f64,
    /// Share of all treated patients who received the true MTD.
    pub mtd_allocation_pct: f64,
    /// Trials selecting a dose above the true MTD.
    pub overdose_selection_pct: f64,
    /// Share of all treated patients who received a dose above the true MTD.
    pub overdose_allocation_pct: f64,
    /// As `overdose_selection_pct` but counting doses whose true rate exceeds the target.
    pub above_target_selection_pct: f64,
    pub above_target_allocation_pct: f64,
}

pub fn summarize(scenario: &Scenario, results: &[TrialResult]) -> BatchSummary {
    let k = scenario.num_doses();
    let n = results.len().max(1) as f64;
    let mtd = scenario.mtd_index;
    let above_mtd = |dose: usize| dose > mtd;
    let above_target = |dose: usize| scenario.true_probs[dose - 1] > scenario.target;

    let mut selection = vec![0.0; k];
    let mut patients = vec![0.0; k];
    let (mut none, mut mtd_sel, mut od_sel, mut at_sel) = (0.0, 0.0, 0.0, 0.0);
    let mut dlts = 0.0;
    for r in results {
        if r.selected_mtd == 0 {
            none += 1.0;
        } else {
            selection[r.selected_mtd - 1] += 1.0;
            od_sel += above_mtd(r.selected_mtd) as u8 as f64;
            at_sel += above_target(r.selected_mtd) as u8 as f64;
        }
        if r.selected_mtd == mtd {
            mtd_sel += 1.0;
        }
        for (acc, &m) in patients.iter_mut().zip(&r.patient_counts) {
            *acc += m as f64;
        }
        dlts += r.total_dlts() as f64;
    }
    let treated: f64 = patients.iter().sum();
    let share = |pred: &dyn Fn(usize) -> bool| {
        let hits: f64 = (1..=k).filter(|&d| pred(d)).map(|d| patients[d - 1]).sum();
        if treated > 0.0 { 100.0 * hits / treated } else { 0.0 }
    };
    let pct = |x: f64| 100.0 * x / n;
    BatchSummary {
        scenario: scenario.label.clone(),
        target: scenario.target,
        true_probs: scenario.true_probs.clone(),
        mtd_index: mtd,
        replications: results.len(),
        selection_pct: selection.into_iter().map(pct).collect(),
        mean_patients: patients.iter().map(|x| x / n).collect(),
        none_pct: pct(none),
        dlt_pct: if treated > 0.0 { 100.0 * dlts / treated } else { 0.0 },
        mtd_selection_pct: pct(mtd_sel),
        mtd_allocation_pct: share(&|d| d == mtd),
        overdose_selection_pct: pct(od_sel),
        overdose_allocation_pct: share(&above_mtd),
        above_target_selection_pct: pct(at_sel),
        above_target_allocation_pct: share(&above_target),
    }
}

/// Batch settings. Replication `i` always uses substream `i` of
/// `master_seed`, so results do not depend on `workers`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchOptions {
    pub replications: usize,
    pub master_seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

pub(crate) fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidConfig("workers must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub fn run_batch_results(
    scenario: &Scenario,
    config: &TrialConfig,
    bank: &PriorBank,
    opts: &BatchOptions,
) -> Result<Vec<TrialResult>> {
    config.validate()?;
    check_compatible(scenario, config, bank)?;
    with_workers(opts.workers, || {
        (0..opts.replications)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(opts.master_seed, i as u64);
                run_trial(scenario, config, bank, &mut rng)
            })
            .collect::<Result<Vec<_>>>()
    })?
}

pub fn run_batch(
    scenario: &Scenario,
    config: &TrialConfig,
    bank: &PriorBank,
    opts: &BatchOptions,
) -> Result<BatchSummary> {
    let results = run_batch_results(scenario, config, bank, opts)?;
    Ok(summarize(scenario, &results))
}

/// A prior half-width in a sweep: fixed, or drawn uniformly per scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeltaChoice {
    Fixed { value: f64 },
    Random { low: f64, high: f64 },
}

impl DeltaChoice {
    pub fn label(&self) -> String {
        match *self {
            DeltaChoice::Fixed { value } => value.to_string(),
            DeltaChoice::Random { low, high } => format!("U({low}..{high})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: String,
    /// The half-width actually used for this scenario.
    pub delta_value: f64,
    pub bandwidth: f64,
    /// Generator mean for random scenarios, when known.
    pub mu: Option<f64>,
    pub summary: BatchSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub deltas: Vec<DeltaChoice>,
    pub bandwidths: Vec<f64>,
    pub replications: usize,
    pub master_seed: u64,
    pub bank_seed: u64,
    pub workers: Option<usize>,
    /// Copied into every row.
    pub mu: Option<f64>,
}

const RANDOM_DELTA_TAG: u64 = 0x5eed_de17a;

/// Runs every scenario under every (half-width, bandwidth) pair. A bank is
/// built once per fixed half-width and shared by all bandwidths; a random
/// half-width gets its own bank per scenario. Scenario `s` uses master seed
/// `derive_seed(master_seed, s)` in every cell, so cells share random
/// numbers. Rows come out grid-major, scenario-minor.
pub fn sweep(base: &TrialConfig, scenarios: &[Scenario], opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    for &h in &opts.bandwidths {
        let mut c = base.clone();
        c.bandwidth = h;
        c.validate()?;
    }
    let mut rows = Vec::with_capacity(opts.deltas.len() * opts.bandwidths.len() * scenarios.len());
    for choice in &opts.deltas {
        let deltas: Vec<f64> = match *choice {
            DeltaChoice::Fixed { value } => vec![value; scenarios.len()],
            DeltaChoice::Random { low, high } => {
                if !(low >= 0.0 && low < high) {
                    return Err(Error::InvalidConfig(format!("bad random half-width range [{low}, {high}]")));
                }
                (0..scenarios.len())
                    .map(|s| {
                        let mut rng = substream(derive_seed(opts.master_seed, RANDOM_DELTA_TAG), s as u64);
                        rng.random_range(low..high)
                    })
                    .collect()
            }
        };
        let banks: Vec<PriorBank> = match *choice {
            DeltaChoice::Fixed { value } => {
                let mut c = base.clone();
                c.delta = value;
                c.validate()?;
                vec![generate_bank(&c, opts.bank_seed)?]
            }
            DeltaChoice::Random { .. } => deltas
                .iter()
                .enumerate()
                .map(|(s, &d)| {
                    let mut c = base.clone();
                    c.delta = d;
                    generate_bank(&c, derive_seed(opts.bank_seed, s as u64))
                })
                .collect::<Result<_>>()?,
        };
        for &h in &opts.bandwidths {
            let cells = with_workers(opts.workers, || {
                scenarios
                    .par_iter()
                    .enumerate()
                    .map(|(s, scenario)| {
                        let bank = if banks.len() == 1 { &banks[0] } else { &banks[s] };
                        let mut config = base.clone();
                        config.delta = deltas[s];
                        config.bandwidth = h;
                        let batch = BatchOptions {
                            replications: opts.replications,
                            master_seed: derive_seed(opts.master_seed, s as u64),
                            workers: None,
                        };
                        let summary = run_batch(scenario, &config, bank, &batch)?;
                        Ok(SweepRow { delta: choice.label(), delta_value: deltas[s], bandwidth: h, mu: opts.mu, summary })
                    })
                    .collect::<Result<Vec<_>>>()
            })??;
            rows.extend(cells);
        }
    }
    Ok(rows)
}
