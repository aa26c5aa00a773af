//! Trial records and their append-only JSON-lines logs.
//!
//! Each trial lives in `<data_dir>/<id>.jsonl`. The first line creates the
//! trial, every later line is a cohort, and a final `deleted` line hides it.
//! Derived state is never stored; it is rebuilt by replaying the cohorts
//! with the trial's seed.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use abcdose::conduct::{advance, prior_estimate};
use abcdose::{BankFingerprint, Decision, Estimate, PriorBank, TrialConfig, TrialState, TrialStatus};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogEntry {
    Created { id: String, at_ms: u64, config: TrialConfig, seed: u64, bank_seed: u64 },
    Cohort(CohortEvent),
    Deleted { at_ms: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortEvent {
    pub at_ms: u64,
    pub dose: usize,
    pub patients: u32,
    pub dlts: u32,
    /// The cohort was given a dose other than the recommendation.
    #[serde(rename = "override")]
    pub overridden: bool,
}

/// One cohort with the decision it led to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryItem {
    pub index: usize,
    #[serde(flatten)]
    pub event: CohortEvent,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub id: String,
    pub created_at_ms: u64,
    pub config: TrialConfig,
    pub seed: u64,
    pub bank_seed: u64,
    pub state: TrialState,
    pub history: Vec<HistoryItem>,
    pub prior: Estimate,
    pub final_mtd: Option<usize>,
    pub final_estimate: Option<Estimate>,
}

pub fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

impl TrialRecord {
    pub fn new(id: String, created_at_ms: u64, config: TrialConfig, seed: u64, bank_seed: u64, bank: &PriorBank) -> abcdose::Result<Self> {
        let prior = prior_estimate(bank, &config)?;
        let state = TrialState::new(&config);
        Ok(Self { id, created_at_ms, config, seed, bank_seed, state, history: Vec::new(), prior, final_mtd: None, final_estimate: None })
    }

    pub fn fingerprint(&self) -> BankFingerprint {
        BankFingerprint::for_config(&self.config, self.bank_seed)
    }

    /// Dose recommended for the next cohort while the trial is active.
    pub fn recommendation(&self) -> Option<usize> {
        (self.state.status == TrialStatus::Active).then_some(self.state.current_dose)
    }

    /// Latest estimate: the final one once available, else that of the last
    /// decision, else the prior.
    pub fn latest_estimate(&self) -> &Estimate {
        self.final_estimate
            .as_ref()
            .or_else(|| self.history.last().map(|h| &h.decision.estimate))
            .unwrap_or(&self.prior)
    }

    /// Applies a cohort, returning the updated record. `self` is untouched on error.
    pub fn apply(&self, bank: &PriorBank, event: CohortEvent) -> abcdose::Result<TrialRecord> {
        let mut next = self.clone();
        let index = self.history.len();
        let step = advance(bank, &self.config, &mut next.state, event.dose, event.patients, event.dlts, self.seed, index as u64)?;
        next.final_mtd = step.final_mtd;
        next.final_estimate = step.final_estimate;
        next.history.push(HistoryItem { index, event, decision: step.decision });
        Ok(next)
    }
}

pub fn log_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.jsonl"))
}

fn line(entry: &LogEntry) -> Vec<u8> {
    let mut bytes = serde_json::to_vec(entry).expect("log entries serialize");
    bytes.push(b'\n');
    bytes
}

/// Creates the log with its first entry and syncs file and directory.
pub fn create_log(dir: &Path, id: &str, entry: &LogEntry) -> io::Result<()> {
    let mut file = OpenOptions::new().write(true).create_new(true).open(log_path(dir, id))?;
    file.write_all(&line(entry))?;
    file.sync_all()?;
    File::open(dir)?.sync_all()
}

/// Appends one entry and syncs it before returning.
pub fn append_log(dir: &Path, id: &str, entry: &LogEntry) -> io::Result<()> {
    let mut file = OpenOptions::new().append(true).open(log_path(dir, id))?;
    file.write_all(&line(entry))?;
    file.sync_all()
}

/// Parsed contents of one log file.
#[derive(Debug, Clone, PartialEq)]
pub struct LogContents {
    pub created: LogEntry,
    pub cohorts: Vec<CohortEvent>,
    pub deleted: bool,
}

/// Reads a log. A final line without a newline is an interrupted write that
/// was never acknowledged, and is ignored.
pub fn read_log(path: &Path) -> io::Result<LogContents> {
    let text = fs::read_to_string(path)?;
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let bad = |n: usize, e: String| io::Error::new(io::ErrorKind::InvalidData, format!("{} line {n}: {e}", path.display()));
    let mut entries = complete
        .lines()
        .enumerate()
        .map(|(i, l)| serde_json::from_str::<LogEntry>(l).map_err(|e| bad(i + 1, e.to_string())));
    let created = match entries.next() {
        Some(Ok(c @ LogEntry::Created { .. })) => c,
        Some(Err(e)) => return Err(e),
        _ => return Err(bad(1, "log must start with a created entry".into())),
    };
    let mut cohorts = Vec::new();
    let mut deleted = false;
    for (n, entry) in entries.enumerate() {
        match entry? {
            LogEntry::Cohort(c) if !deleted => cohorts.push(c),
            LogEntry::Deleted { .. } => deleted = true,
            _ => return Err(bad(n + 2, "unexpected entry".into())),
        }
    }
    Ok(LogContents { created, cohorts, deleted })
}
