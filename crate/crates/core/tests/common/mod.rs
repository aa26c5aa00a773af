//! Invariant checks shared by the property tests and the acceptance run.

#![allow(dead_code)]

use abcdose::rng::substream;
use abcdose::scenario::{generate_random_scenario, ScenarioGenSpec};
use abcdose::sim::{run_batch, run_trial, BatchOptions};
use abcdose::{decide, estimate_toxicity, generate_bank, weighted_median, TrialConfig, TrialState, Weights};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

fn flatten<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

pub fn bank_intervals(cases: u32) -> Result<(), String> {
    let strategy = (
        2usize..=7,
        0.05f64..=0.5,
        prop_oneof![Just(0.0), 0.0f64..0.95],
        1usize..40,
        any::<u64>(),
    );
    flatten(runner(cases).run(&strategy, |(k, phi, frac, jm, seed)| {
        let mut config = TrialConfig::new(k, phi, 30);
        config.delta = frac * phi;
        config.samples_per_model = jm;
        let bank = generate_bank(&config, seed).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(bank.len(), jm * (k + 1));
        let (lo, hi) = (phi - config.delta, phi + config.delta);
        let mut per_model = vec![0usize; k + 1];
        for j in 0..bank.len() {
            let p = bank.probs(j);
            let model = bank.model_index(j);
            per_model[model] += 1;
            prop_assert!(p.windows(2).all(|w| w[0] <= w[1]), "unordered sample {:?}", p);
            for (i, &x) in p.iter().enumerate() {
                let dose = i + 1;
                let ok = if model == 0 || dose > model {
                    x > hi && x < 2.0 * phi
                } else if dose == model {
                    if config.delta == 0.0 { x == phi } else { x > lo && x < hi }
                } else {
                    x > 0.0 && x < lo
                };
                prop_assert!(ok, "model {} dose {} value {} (phi {}, delta {})", model, dose, x, phi, config.delta);
            }
        }
        prop_assert!(per_model.iter().all(|&c| c == jm));
        Ok(())
    }))
}

fn random_setup() -> impl Strategy<Value = (usize, f64, u32, u32, u64)> {
    (2usize..=5, 0.2f64..=0.35, 1u32..=4, 2u32..=8, any::<u64>())
        .prop_map(|(k, phi, cohort, cohorts, seed)| (k, phi, cohort, cohort * cohorts, seed))
}

pub fn trial_paths(cases: u32) -> Result<(), String> {
    flatten(runner(cases).run(&random_setup(), |(k, phi, cohort, max, seed)| {
        let mut config = TrialConfig::new(k, phi, max);
        config.cohort_size = cohort;
        config.samples_per_model = 150;
        let bank = generate_bank(&config, seed).unwrap();
        let spec = ScenarioGenSpec::new(k, phi, 0.4);
        let mut scenario = generate_random_scenario(&spec, &mut substream(seed, 1));
        scenario.target = phi;
        let r = run_trial(&scenario, &config, &bank, &mut substream(seed, 2)).unwrap();
        let mut m = vec![0u32; k];
        let mut y = vec![0u32; k];
        prop_assert_eq!(r.trajectory[0].dose, config.start_dose);
        for c in &r.trajectory {
            m[c.dose - 1] += c.patients;
            y[c.dose - 1] += c.dlts;
            prop_assert!(c.dlts <= c.patients);
        }
        for w in r.trajectory.windows(2) {
            prop_assert!(w[0].dose.abs_diff(w[1].dose) <= 1, "jump {} -> {}", w[0].dose, w[1].dose);
        }
        prop_assert_eq!(&m, &r.patient_counts);
        prop_assert_eq!(&y, &r.dlt_counts);
        prop_assert!(r.total_patients() <= max);
        if !r.stopped_early {
            prop_assert_eq!(r.total_patients(), max);
        }
        prop_assert!(r.selected_mtd <= k);
        prop_assert_eq!(r.stopped_early, r.selected_mtd == 0);
        Ok(())
    }))
}

pub fn decision_step_bound(cases: u32) -> Result<(), String> {
    let strategy = (2usize..=6, any::<u64>(), proptest::collection::vec((0u32..=6, 0u32..=6), 6), 1usize..=6);
    flatten(runner(cases).run(&strategy, |(k, seed, counts, dose)| {
        let mut config = TrialConfig::new(k, 0.25, 100);
        config.samples_per_model = 150;
        let bank = generate_bank(&config, seed).unwrap();
        let m: Vec<u32> = counts.iter().take(k).map(|&(a, b)| a.max(b)).collect();
        let y: Vec<u32> = counts.iter().take(k).map(|&(a, b)| a.min(b)).collect();
        let dose = dose.min(k);
        let state = TrialState::from_counts(y, m, dose, &config).unwrap();
        let d = decide(&bank, &state, &config, &mut substream(seed, 0)).unwrap();
        if let Some(next) = d.action.next_dose() {
            prop_assert!(next.abs_diff(dose) <= 1);
            prop_assert!((1..=k).contains(&next));
        }
        Ok(())
    }))
}

pub fn batch_determinism(cases: u32) -> Result<(), String> {
    flatten(runner(cases).run(&(random_setup(), 1usize..=12), |((k, phi, cohort, max, seed), reps)| {
        let mut config = TrialConfig::new(k, phi, max);
        config.cohort_size = cohort;
        config.samples_per_model = 100;
        let bank = generate_bank(&config, seed).unwrap();
        let mut scenario = generate_random_scenario(&ScenarioGenSpec::new(k, phi, 0.4), &mut substream(seed, 1));
        scenario.target = phi;
        let run = |workers| run_batch(&scenario, &config, &bank, &BatchOptions { replications: reps, master_seed: seed, workers: Some(workers) }).unwrap();
        let one = run(1);
        prop_assert_eq!(&one, &run(2));
        prop_assert_eq!(&one, &run(4));
        let total = one.selection_pct.iter().sum::<f64>() + one.none_pct;
        prop_assert!((total - 100.0).abs() < 1e-9);
        prop_assert!(one.mean_patients.iter().sum::<f64>() <= max as f64 + 1e-9);
        Ok(())
    }))
}

pub fn weight_scale_invariance(cases: u32) -> Result<(), String> {
    let strategy = (
        proptest::collection::vec((0.0f64..1.0, 0.0f64..10.0), 1..60),
        -200i32..200,
        any::<u64>(),
        proptest::collection::vec((0u32..=3, 0u32..=3), 3),
    );
    flatten(runner(cases).run(&strategy, |(pairs, exp, seed, counts)| {
        prop_assume!(pairs.iter().any(|&(_, w)| w > 0.0));
        let scale = 2f64.powi(exp);
        let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let scaled: Vec<f64> = weights.iter().map(|w| w * scale).collect();
        prop_assert_eq!(weighted_median(&values, &weights).unwrap(), weighted_median(&values, &scaled).unwrap());

        let mut config = TrialConfig::new(3, 0.25, 30);
        config.samples_per_model = 100;
        let bank = generate_bank(&config, seed).unwrap();
        let m: Vec<u32> = counts.iter().map(|&(a, b)| a.max(b)).collect();
        let y: Vec<u32> = counts.iter().map(|&(a, b)| a.min(b)).collect();
        let state = TrialState::from_counts(y, m, 1, &config).unwrap();
        let w = abcdose::compute_weights(&bank, &state, &config, &mut substream(seed, 3)).unwrap();
        let w_scaled = Weights { values: w.values.iter().map(|x| x * 2f64.powi(exp / 4)).collect(), log_scale: w.log_scale };
        let a = estimate_toxicity(&bank, &w, &state, &config).unwrap();
        let b = estimate_toxicity(&bank, &w_scaled, &state, &config).unwrap();
        prop_assert_eq!(a.p_hat, b.p_hat);
        prop_assert_eq!(a.optimal_dose, b.optimal_dose);
        Ok(())
    }))
}

/// Name and check for every invariant, with its case count.
pub fn invariant_suite() -> Vec<(&'static str, Box<dyn Fn() -> Result<(), String>>)> {
    vec![
        ("prior bank intervals and ordering", Box::new(|| bank_intervals(200))),
        ("dose-step bound and patient conservation", Box::new(|| trial_paths(150))),
        ("decision moves at most one level", Box::new(|| decision_step_bound(150))),
        ("batch determinism across worker counts", Box::new(|| batch_determinism(25))),
        ("weight scale invariance", Box::new(|| weight_scale_invariance(300))),
    ]
}
