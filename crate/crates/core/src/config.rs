//! Design constants of a trial.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_BANDWIDTH: f64 = 0.01;
pub const DEFAULT_SAMPLES_PER_MODEL: usize = 20_000;
pub const DEFAULT_COHORT_SIZE: u32 = 3;
pub const DEFAULT_STOP_THRESHOLD: f64 = 0.95;
pub const DEFAULT_ALT_STOP_THRESHOLD: f64 = 0.9;

/// Largest supported number of dose levels; model indices are stored as bytes.
pub const MAX_DOSES: usize = 255;

/// All design constants of an ABC dose-finding trial.
///
/// Doses are numbered `1..=num_doses` everywhere in the public API.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    pub num_doses: usize,
    /// Target DLT rate.
    pub target: f64,
    /// Half-width of the neighbourhood around the target used by the prior models.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Kernel bandwidth of the ABC weights.
    #[serde(default = "default_bandwidth")]
    pub bandwidth: f64,
    #[serde(default = "default_samples_per_model")]
    pub samples_per_model: usize,
    #[serde(default = "default_cohort_size")]
    pub cohort_size: u32,
    pub max_patients: u32,
    #[serde(default = "default_start_dose")]
    pub start_dose: usize,
    #[serde(default = "default_stop_threshold")]
    pub stop_threshold: f64,
    /// Replace the Beta(0.5, 0.5) safety rule with the weighted-sample rule.
    #[serde(default)]
    pub use_alt_stop: bool,
    #[serde(default = "default_alt_stop_threshold")]
    pub alt_stop_threshold: f64,
    /// Restrict the argmin over doses to doses that have been tried.
    #[serde(default)]
    pub restrict_to_tried: bool,
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}
fn default_bandwidth() -> f64 {
    DEFAULT_BANDWIDTH
}
fn default_samples_per_model() -> usize {
    DEFAULT_SAMPLES_PER_MODEL
}
fn default_cohort_size() -> u32 {
    DEFAULT_COHORT_SIZE
}
fn default_start_dose() -> usize {
    1
}
fn default_stop_threshold() -> f64 {
    DEFAULT_STOP_THRESHOLD
}
fn default_alt_stop_threshold() -> f64 {
    DEFAULT_ALT_STOP_THRESHOLD
}

impl TrialConfig {
    /// A configuration with every tuning constant at its default.
    pub fn new(num_doses: usize, target: f64, max_patients: u32) -> Self {
        Self {
            num_doses,
            target,
            delta: DEFAULT_DELTA,
            bandwidth: DEFAULT_BANDWIDTH,
            samples_per_model: DEFAULT_SAMPLES_PER_MODEL,
            cohort_size: DEFAULT_COHORT_SIZE,
            max_patients,
            start_dose: 1,
            stop_threshold: DEFAULT_STOP_THRESHOLD,
            use_alt_stop: false,
            alt_stop_threshold: DEFAULT_ALT_STOP_THRESHOLD,
            restrict_to_tried: false,
        }
    }

    /// Total number of prior samples, `samples_per_model · (K + 1)`.
    pub fn bank_size(&self) -> usize {
        self.samples_per_model * (self.num_doses + 1)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_doses < 2 {
            return fail(format!("num_doses must be at least 2 (got {})", self.num_doses));
        }
        if self.num_doses > MAX_DOSES {
            return fail(format!("num_doses must be at most {MAX_DOSES} (got {})", self.num_doses));
        }
        if !(self.target > 0.0 && self.target <= 0.5) {
            return fail(format!("target must lie in (0, 0.5] (got {})", self.target));
        }
        if !(self.delta >= 0.0) {
            return fail(format!("delta must be nonnegative (got {})", self.delta));
        }
        if self.delta >= self.target {
            return fail(format!(
                "delta must be smaller than target so that (target + delta, 2 target) is nonempty (delta = {}, target = {})",
                self.delta, self.target
            ));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return fail(format!("bandwidth must be positive and finite (got {})", self.bandwidth));
        }
        if self.samples_per_model == 0 {
            return fail("samples_per_model must be at least 1".into());
        }
        if self.cohort_size == 0 {
            return fail("cohort_size must be at least 1".into());
        }
        if self.max_patients < self.cohort_size {
            return fail(format!(
                "max_patients ({}) must be at least cohort_size ({})",
                self.max_patients, self.cohort_size
            ));
        }
        if self.start_dose < 1 || self.start_dose > self.num_doses {
            return fail(format!(
                "start_dose must lie in 1..={} (got {})",
                self.num_doses, self.start_dose
            ));
        }
        for (name, t) in [
            ("stop_threshold", self.stop_threshold),
            ("alt_stop_threshold", self.alt_stop_threshold),
        ] {
            if !(t > 0.0 && t < 1.0) {
                return fail(format!("{name} must lie in (0, 1) (got {t})"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = TrialConfig::new(3, 0.25, 37);
        c.validate().unwrap();
        assert_eq!(c.delta, 0.1);
        assert_eq!(c.bandwidth, 0.01);
        assert_eq!(c.bank_size(), 80_000);
    }

    #[test]
    fn delta_must_be_below_target() {
        let mut c = TrialConfig::new(3, 0.25, 37);
        c.delta = 0.25;
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("delta must be smaller than target"), "{err}");
        c.delta = 0.3;
        assert!(c.validate().is_err());
    }

    #[test]
    fn rejects_bad_fields() {
        let base = TrialConfig::new(3, 0.25, 37);
        let mut c = base.clone();
        c.num_doses = 1;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.target = 0.6;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.bandwidth = 0.0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.start_dose = 4;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.max_patients = 2;
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_rejects_unknown_keys() {
        let ok = r#"{"num_doses": 3, "target": 0.25, "max_patients": 37}"#;
        let c: TrialConfig = serde_json::from_str(ok).unwrap();
        assert_eq!(c, TrialConfig::new(3, 0.25, 37));
        let bad = r#"{"num_doses": 3, "target": 0.25, "max_patients": 37, "bogus": 1}"#;
        assert!(serde_json::from_str::<TrialConfig>(bad).is_err());
    }
}
