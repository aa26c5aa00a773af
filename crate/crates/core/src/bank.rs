//! The prior sample bank: `J_m` toxicity curves from each of the `K + 1`
//! candidate models, generated once and reused for every decision.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::TrialConfig;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, substream};

const BANK_STREAM_TAG: u64 = 0xB4_4E_C0_DE;

/// Bank seed used by the command line and the service when none is given,
/// so that both build the same bank for the same configuration.
pub const DEFAULT_BANK_SEED: u64 = 20_240_501;

/// Identifies the configuration a bank was generated for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BankFingerprint {
    pub num_doses: usize,
    pub target: f64,
    pub delta: f64,
    pub samples_per_model: usize,
    pub seed: u64,
}

impl BankFingerprint {
    pub fn for_config(config: &TrialConfig, seed: u64) -> Self {
        Self {
            num_doses: config.num_doses,
            target: config.target,
            delta: config.delta,
            samples_per_model: config.samples_per_model,
            seed,
        }
    }

    pub fn bank_size(&self) -> usize {
        self.samples_per_model * (self.num_doses + 1)
    }
}

impl std::fmt::Display for BankFingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "K={} phi={} delta={} J_m={} seed={}",
            self.num_doses, self.target, self.delta, self.samples_per_model, self.seed
        )
    }
}

/// One prior toxicity curve and the model that generated it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSample {
    pub probs: Vec<f64>,
    /// 0 means every dose is overly toxic; `k ≥ 1` means dose `k` is the MTD.
    pub model_index: usize,
}

/// Values of one dose coordinate in ascending order, with the sample index
/// each came from.
#[derive(Debug, Clone)]
pub(crate) struct SortedColumn {
    pub values: Vec<f64>,
    pub order: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct PriorBank {
    fingerprint: BankFingerprint,
    /// Row-major `J × K`.
    probs: Vec<f64>,
    models: Vec<u8>,
    columns: Vec<SortedColumn>,
}

impl PriorBank {
    /// Assembles a bank from raw parts, checking shape and per-sample invariants.
    pub fn from_parts(fingerprint: BankFingerprint, probs: Vec<f64>, models: Vec<u8>) -> Result<Self> {
        let k = fingerprint.num_doses;
        let j = fingerprint.bank_size();
        if probs.len() != j * k || models.len() != j {
            return Err(Error::CorruptBank(format!(
                "expected {j} samples of {k} doses, found {} values and {} model indices",
                probs.len(),
                models.len()
            )));
        }
        for (row, &model) in probs.chunks_exact(k).zip(&models) {
            check_sample(row, model as usize, fingerprint.target, fingerprint.delta)?;
        }
        let columns = (0..k)
            .into_par_iter()
            .map(|dose| {
                let values: Vec<f64> = probs.iter().skip(dose).step_by(k).copied().collect();
                let mut order: Vec<u32> = (0..j as u32).collect();
                order.sort_unstable_by(|&a, &b| values[a as usize].total_cmp(&values[b as usize]));
                let sorted = order.iter().map(|&i| values[i as usize]).collect();
                SortedColumn { values: sorted, order }
            })
            .collect();
        Ok(Self { fingerprint, probs, models, columns })
    }

    pub fn fingerprint(&self) -> &BankFingerprint {
        &self.fingerprint
    }

    pub fn num_doses(&self) -> usize {
        self.fingerprint.num_doses
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Toxicity probabilities of sample `j`.
    #[inline]
    pub fn probs(&self, j: usize) -> &[f64] {
        let k = self.fingerprint.num_doses;
        &self.probs[j * k..(j + 1) * k]
    }

    pub fn model_index(&self, j: usize) -> usize {
        self.models[j] as usize
    }

    pub fn sample(&self, j: usize) -> PriorSample {
        PriorSample { probs: self.probs(j).to_vec(), model_index: self.model_index(j) }
    }

    pub fn iter(&self) -> impl Iterator<Item = PriorSample> + '_ {
        (0..self.len()).map(|j| self.sample(j))
    }

    pub fn raw_probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn raw_models(&self) -> &[u8] {
        &self.models
    }

    pub(crate) fn column(&self, dose: usize) -> &SortedColumn {
        &self.columns[dose - 1]
    }

    /// Checks that the bank was generated for the dose count, target and
    /// neighbourhood of `config`.
    pub fn check_matches(&self, config: &TrialConfig) -> Result<()> {
        let fp = &self.fingerprint;
        if fp.num_doses != config.num_doses || fp.target != config.target || fp.delta != config.delta {
            return Err(Error::FingerprintMismatch {
                bank: format!("K={} phi={} delta={}", fp.num_doses, fp.target, fp.delta),
                config: format!("K={} phi={} delta={}", config.num_doses, config.target, config.delta),
            });
        }
        Ok(())
    }
}

fn check_sample(row: &[f64], model: usize, target: f64, delta: f64) -> Result<()> {
    let k = row.len();
    if model > k {
        return Err(Error::CorruptBank(format!("model index {model} exceeds {k}")));
    }
    if row.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::CorruptBank("sample is not ascending".into()));
    }
    let lo = target - delta;
    let hi = target + delta;
    for (i, &p) in row.iter().enumerate() {
        let dose = i + 1;
        let ok = if model == 0 || dose > model {
            p > hi && p < 2.0 * target
        } else if dose == model {
            if delta == 0.0 {
                p == target
            } else {
                p > lo && p < hi
            }
        } else {
            p > 0.0 && p < lo
        };
        if !ok {
            return Err(Error::CorruptBank(format!(
                "dose {dose} value {p} outside the interval of model {model}"
            )));
        }
    }
    Ok(())
}

/// Uniform draw on the open interval `(lo, hi)`; boundary hits are redrawn.
#[inline]
fn open_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        return lo;
    }
    loop {
        let u: f64 = rng.random();
        let x = lo + (hi - lo) * u;
        if x > lo && x < hi {
            return x;
        }
    }
}

/// Fills `row` with one sample from model `model` (0 = all doses toxic).
pub(crate) fn draw_model_sample<R: Rng + ?Sized>(
    rng: &mut R,
    row: &mut [f64],
    model: usize,
    target: f64,
    delta: f64,
) {
    let lo = target - delta;
    let hi = target + delta;
    let upper = 2.0 * target;
    let (below, rest) = row.split_at_mut(model.saturating_sub(1));
    for p in below.iter_mut() {
        *p = open_uniform(rng, 0.0, lo);
    }
    below.sort_unstable_by(f64::total_cmp);
    let above = if model == 0 {
        rest
    } else {
        rest[0] = open_uniform(rng, lo, hi);
        &mut rest[1..]
    };
    for p in above.iter_mut() {
        *p = open_uniform(rng, hi, upper);
    }
    above.sort_unstable_by(f64::total_cmp);
}

/// Generates the model-based prior bank.
///
/// Samples are ordered by model index, then slot. Each model draws from its
/// own substream of `seed`, so the result does not depend on the number of
/// worker threads.
pub fn generate_bank(config: &TrialConfig, seed: u64) -> Result<PriorBank> {
    config.validate()?;
    let k = config.num_doses;
    let per_model = config.samples_per_model;
    let stream_seed = derive_seed(seed, BANK_STREAM_TAG);
    let blocks: Vec<Vec<f64>> = (0..=k)
        .into_par_iter()
        .map(|model| {
            let mut rng = substream(stream_seed, model as u64);
            let mut block = vec![0.0; per_model * k];
            for row in block.chunks_exact_mut(k) {
                draw_model_sample(&mut rng, row, model, config.target, config.delta);
            }
            block
        })
        .collect();
    let probs = blocks.concat();
    let models = (0..=k).flat_map(|m| std::iter::repeat_n(m as u8, per_model)).collect();
    PriorBank::from_parts(BankFingerprint::for_config(config, seed), probs, models)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(k: usize, target: f64, delta: f64) -> TrialConfig {
        let mut c = TrialConfig::new(k, target, 30);
        c.delta = delta;
        c.samples_per_model = 500;
        c
    }

    #[test]
    fn bank_size_is_per_model_times_k_plus_one() {
        let mut c = TrialConfig::new(3, 0.25, 37);
        c.samples_per_model = 20_000;
        let bank = generate_bank(&c, 1).unwrap();
        assert_eq!(bank.len(), 80_000);
        for m in 0..=3 {
            assert_eq!((0..bank.len()).filter(|&j| bank.model_index(j) == m).count(), 20_000);
        }
    }

    #[test]
    fn zero_delta_pins_target_dose() {
        let c = small_config(4, 0.3, 0.0);
        let bank = generate_bank(&c, 5).unwrap();
        for s in bank.iter().filter(|s| s.model_index > 0) {
            assert_eq!(s.probs[s.model_index - 1], 0.3);
        }
    }

    #[test]
    fn all_toxic_model_intervals() {
        let c = small_config(5, 0.3, 0.1);
        let bank = generate_bank(&c, 9).unwrap();
        for s in bank.iter().filter(|s| s.model_index == 0) {
            assert!(s.probs.windows(2).all(|w| w[0] <= w[1]));
            assert!(s.probs.iter().all(|&p| p > 0.4 && p < 0.6));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let c = small_config(3, 0.25, 0.1);
        let a = generate_bank(&c, 42).unwrap();
        let b = generate_bank(&c, 42).unwrap();
        let d = generate_bank(&c, 43).unwrap();
        assert_eq!(a.raw_probs(), b.raw_probs());
        assert_ne!(a.raw_probs(), d.raw_probs());
    }

    #[test]
    fn sorted_columns_are_sorted_permutations() {
        let c = small_config(3, 0.25, 0.1);
        let bank = generate_bank(&c, 2).unwrap();
        for dose in 1..=3 {
            let col = bank.column(dose);
            assert!(col.values.windows(2).all(|w| w[0] <= w[1]));
            for (v, &j) in col.values.iter().zip(&col.order) {
                assert_eq!(*v, bank.probs(j as usize)[dose - 1]);
            }
        }
    }

    #[test]
    fn fingerprint_mismatch() {
        let c = small_config(3, 0.25, 0.1);
        let bank = generate_bank(&c, 2).unwrap();
        let other = small_config(4, 0.25, 0.1);
        assert!(matches!(bank.check_matches(&other), Err(Error::FingerprintMismatch { .. })));
        bank.check_matches(&c).unwrap();
    }
}
