//! Weighted median: the 50% weighted percentile.
//!
//! After sorting values ascending (weights carried along), the median is
//! the value at the smallest position `l` with
//! `Σ_{j<l} w_j ≤ W/2` and `Σ_{j>l} w_j ≤ W/2`, where `W` is the total.

use crate::error::{Error, Result};

/// Scans `(value, weight)` pairs in ascending value order.
#[inline]
fn scan_sorted<I>(pairs: I, total: f64) -> Option<f64>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let half = 0.5 * total;
    let mut below = 0.0;
    let mut last = None;
    for (value, weight) in pairs {
        let above = total - below - weight;
        if below <= half && above <= half {
            return Some(value);
        }
        below += weight;
        last = Some(value);
    }
    // Only reachable through rounding in `above`; the heaviest tail end is the
    // closest valid position.
    last
}

pub fn weighted_median(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: values.len(), found: weights.len() });
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::Domain("weights must be finite and nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    Ok(scan_sorted(order.iter().map(|&i| (values[i], weights[i])), total).expect("nonempty"))
}

/// Weighted median over values already sorted ascending, where `order[r]`
/// is the index into `weights` belonging to `sorted_values[r]`.
pub(crate) fn weighted_median_presorted(
    sorted_values: &[f64],
    order: &[u32],
    weights: &[f64],
    total: f64,
) -> Result<f64> {
    if sorted_values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if total <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    let pairs = sorted_values.iter().zip(order).map(|(&v, &j)| (v, weights[j as usize]));
    Ok(scan_sorted(pairs, total).expect("nonempty"))
}
