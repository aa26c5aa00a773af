//! Tabular output for batch summaries and sweeps.

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sim::{BatchSummary, SweepRow};

pub const SUMMARY_CSV_HEADER: &str =
    "scenario,dose,true_p,sel_pct,mean_n,dlt_pct,none_pct,overdose_sel_pct,overdose_alloc_pct";

pub const SWEEP_CSV_HEADER: &str = "delta,delta_value,bandwidth,mu,scenario,dose,true_p,sel_pct,mean_n,dlt_pct,none_pct,overdose_sel_pct,overdose_alloc_pct,mtd_sel_pct";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One line per dose, without a trailing newline.
pub fn summary_csv_lines(s: &BatchSummary) -> Vec<String> {
    (0..s.true_probs.len())
        .map(|i| {
            format!(
                "{},{},{},{},{},{},{},{},{}",
                csv_field(&s.scenario),
                i + 1,
                s.true_probs[i],
                s.selection_pct[i],
                s.mean_patients[i],
                s.dlt_pct,
                s.none_pct,
                s.overdose_selection_pct,
                s.overdose_allocation_pct
            )
        })
        .collect()
}

pub fn summaries_to_csv(summaries: &[BatchSummary]) -> String {
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for s in summaries {
        for line in summary_csv_lines(s) {
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let mu = row.mu.map(|m| m.to_string()).unwrap_or_default();
        let prefix = format!("{},{},{},{}", csv_field(&row.delta), row.delta_value, row.bandwidth, mu);
        for line in summary_csv_lines(&row.summary) {
            out.push_str(&format!("{prefix},{line},{}\n", row.summary.mtd_selection_pct));
        }
    }
    out
}

/// One JSON object per line.
pub fn to_json_lines<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).map_err(|e| Error::InvalidConfig(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn from_json_lines<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::ScenarioParse { line: i + 1, message: e.to_string() })
        })
        .collect()
}
