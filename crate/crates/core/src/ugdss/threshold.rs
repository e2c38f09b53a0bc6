use super::UncertaintyLedger;
use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 32;
pub const FALLBACK_PERCENTILE: f64 = 0.75;

/// Outcome of the histogram scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    pub threshold: f64,
    pub bin_edges: Vec<f64>,
    pub bin_counts: Vec<usize>,
    /// `Some(n)` when bin `n` satisfied the scan; `None` when the percentile
    /// fallback was used.
    pub bin: Option<usize>,
    pub fallback_used: bool,
}

/// Equal-width histogram of `values` over `[min, max]`; returns `(edges, counts)`.
/// The maximum lands in the last bin.
pub fn histogram(values: &[f64], bins: usize) -> (Vec<f64>, Vec<usize>) {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> =
        (0..=bins).map(|n| if n == bins { hi } else { lo + n as f64 * width }).collect();
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = if width > 0.0 { (((v - lo) / width) as usize).min(bins - 1) } else { 0 };
        counts[idx] += 1;
    }
    (edges, counts)
}

/// First bin `n` with `h[n+1] - h[n] < delta` and
/// `(h[n+2] - h[n+1]) - (h[n+1] - h[n]) < 0`.
pub fn scan_histogram(counts: &[usize], delta: f64) -> Option<usize> {
    let h: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let d1: Vec<f64> = h.windows(2).map(|w| w[1] - w[0]).collect();
    let d2: Vec<f64> = d1.windows(2).map(|w| w[1] - w[0]).collect();
    (0..d2.len()).find(|&n| d1[n] < delta && d2[n] < 0.0)
}

/// Linear-interpolation percentile (`q` in `[0, 1]`) of unsorted values.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < v.len() {
        v[i] + frac * (v[i + 1] - v[i])
    } else {
        v[i]
    }
}

/// Adaptive uncertainty threshold: the right edge of the first histogram bin
/// passing [`scan_histogram`], or the 75th percentile when none does.
pub fn adaptive_threshold(ledger: &UncertaintyLedger, bins: usize, delta: f64) -> Result<ThresholdResult> {
    if bins < 3 {
        return Err(Error::Argument(format!("need at least 3 bins, got {bins}")));
    }
    let values = ledger.uncertainties();
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || lo == hi {
        return Err(Error::Degenerate("fewer than two distinct uncertainty values".into()));
    }
    let (bin_edges, bin_counts) = histogram(&values, bins);
    let bin = scan_histogram(&bin_counts, delta);
    let threshold = match bin {
        Some(n) => bin_edges[n + 1],
        None => percentile(&values, FALLBACK_PERCENTILE),
    };
    Ok(ThresholdResult { threshold, bin_edges, bin_counts, bin, fallback_used: bin.is_none() })
}

/// `(high, confident)`: ids with uncertainty `>= threshold`, and the rest.
/// Both keep ledger order.
pub fn partition_pool(ledger: &UncertaintyLedger, threshold: f64) -> (Vec<usize>, Vec<usize>) {
    let mut high = Vec::new();
    let mut confident = Vec::new();
    for e in ledger.entries() {
        if e.uncertainty >= threshold {
            high.push(e.id);
        } else {
            confident.push(e.id);
        }
    }
    (high, confident)
}
