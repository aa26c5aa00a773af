use serde::{Deserialize, Serialize};

use crate::config::TrialConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Active,
    StoppedForSafety,
    Completed,
}

/// Cumulative trial data: DLT and patient counts per dose plus the dose
/// the next cohort is assigned to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialState {
    pub dlt_counts: Vec<u32>,
    pub patient_counts: Vec<u32>,
    /// 1-based.
    pub current_dose: usize,
    pub cohorts_enrolled: u32,
    pub status: TrialStatus,
}

impl TrialState {
    pub fn new(config: &TrialConfig) -> Self {
        Self {
            dlt_counts: vec![0; config.num_doses],
            patient_counts: vec![0; config.num_doses],
            current_dose: config.start_dose,
            cohorts_enrolled: 0,
            status: TrialStatus::Active,
        }
    }

    /// Builds an active state from externally supplied counts.
    pub fn from_counts(
        dlt_counts: Vec<u32>,
        patient_counts: Vec<u32>,
        current_dose: usize,
        config: &TrialConfig,
    ) -> Result<Self> {
        let k = config.num_doses;
        if dlt_counts.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: dlt_counts.len() });
        }
        if patient_counts.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: patient_counts.len() });
        }
        for (i, (&y, &m)) in dlt_counts.iter().zip(&patient_counts).enumerate() {
            if y > m {
                return Err(Error::InvalidCounts(format!(
                    "dose {}: {y} DLTs exceed {m} patients",
                    i + 1
                )));
            }
        }
        if current_dose < 1 || current_dose > k {
            return Err(Error::InvalidCounts(format!("current dose {current_dose} outside 1..={k}")));
        }
        let total: u64 = patient_counts.iter().map(|&m| m as u64).sum();
        if total > config.max_patients as u64 {
            return Err(Error::InvalidCounts(format!(
                "{total} patients exceed the maximum of {}",
                config.max_patients
            )));
        }
        Ok(Self {
            dlt_counts,
            patient_counts,
            current_dose,
            cohorts_enrolled: 0,
            status: TrialStatus::Active,
        })
    }

    pub fn num_doses(&self) -> usize {
        self.patient_counts.len()
    }

    pub fn total_patients(&self) -> u32 {
        self.patient_counts.iter().sum()
    }

    pub fn total_dlts(&self) -> u32 {
        self.dlt_counts.iter().sum()
    }

    pub fn is_tried(&self, dose: usize) -> bool {
        self.patient_counts[dose - 1] > 0
    }

    /// Size of the next cohort; the last one is truncated to hit `max_patients`.
    pub fn next_cohort_size(&self, config: &TrialConfig) -> u32 {
        config.cohort_size.min(config.max_patients - self.total_patients())
    }

    pub fn is_exhausted(&self, config: &TrialConfig) -> bool {
        self.total_patients() >= config.max_patients
    }

    /// Adds one cohort's outcome. Does not move the current dose or change status.
    pub fn record_cohort(&mut self, dose: usize, patients: u32, dlts: u32, config: &TrialConfig) -> Result<()> {
        if self.status != TrialStatus::Active {
            return Err(Error::TrialNotActive);
        }
        if dose < 1 || dose > self.num_doses() {
            return Err(Error::InvalidCounts(format!("dose {dose} outside 1..={}", self.num_doses())));
        }
        if patients == 0 {
            return Err(Error::InvalidCounts("a cohort needs at least one patient".into()));
        }
        if dlts > patients {
            return Err(Error::InvalidCounts(format!("{dlts} DLTs exceed {patients} patients")));
        }
        if self.total_patients() as u64 + patients as u64 > config.max_patients as u64 {
            return Err(Error::InvalidCounts(format!(
                "{patients} more patients would exceed the maximum of {}",
                config.max_patients
            )));
        }
        self.patient_counts[dose - 1] += patients;
        self.dlt_counts[dose - 1] += dlts;
        self.cohorts_enrolled += 1;
        Ok(())
    }
}
