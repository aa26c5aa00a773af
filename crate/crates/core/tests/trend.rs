//! Larger trials find the MTD at least as often.

use abcdose::{generate_bank, run_batch, BatchOptions, Scenario, TrialConfig};

#[test]
fn mtd_selection_grows_with_sample_size() {
    let scenario = Scenario::new("exact", 0.25, vec![0.1, 0.25, 0.45]).unwrap();
    assert_eq!(scenario.mtd_index, 2);
    let mut bank = None;
    let mut pcts = Vec::new();
    for n in [18, 30, 60] {
        let config = TrialConfig::new(3, 0.25, n);
        let bank = bank.get_or_insert_with(|| generate_bank(&config, 77).unwrap());
        let opts = BatchOptions { replications: 1000, master_seed: 78, workers: None };
        pcts.push(run_batch(&scenario, &config, bank, &opts).unwrap().mtd_selection_pct);
    }
    assert!(pcts.windows(2).all(|w| w[0] <= w[1]), "{pcts:?}");
}
