//! Uncertainty-guided dual sampling: split the pool at an adaptive
//! uncertainty threshold, pick a diverse annotation query from the uncertain
//! side, and perturb the annotated samples in feature space.

mod drqs;
mod gfp;
mod threshold;

pub use drqs::{drqs_select, kmeans, KMeansResult, QuerySelection, DEFAULT_RESTARTS};
pub use gfp::{feature_variance, gfp_augment, perturbation_scale, AugmentedSample, GfpConfig, GfpSource, GfpStats};
pub use threshold::{
    adaptive_threshold, histogram, partition_pool, percentile, scan_histogram, ThresholdResult,
    DEFAULT_BINS, FALLBACK_PERCENTILE,
};

use serde::Serialize;

use crate::error::{arg, Result};

/// One pool sample's TTA uncertainty and embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    pub id: usize,
    pub uncertainty: f64,
    pub embedding: Vec<f64>,
}

/// TTA uncertainties over the current pool; ids are unique.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UncertaintyLedger {
    entries: Vec<LedgerEntry>,
}

impl UncertaintyLedger {
    pub fn new(entries: Vec<LedgerEntry>) -> Result<Self> {
        let mut ids: Vec<usize> = entries.iter().map(|e| e.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return arg("duplicate sample id in uncertainty ledger");
        }
        if let Some(e) = entries.iter().find(|e| !(0.0..=1.0).contains(&e.uncertainty)) {
            return arg(format!("uncertainty {} of sample {} outside [0, 1]", e.uncertainty, e.id));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn uncertainties(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.uncertainty).collect()
    }

    /// Min-max normalised uncertainty of every entry, in ledger order. A
    /// constant ledger normalises to all zeros.
    pub fn normalized(&self) -> Vec<f64> {
        let (lo, hi) = self
            .entries
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(e.uncertainty), hi.max(e.uncertainty)));
        let span = hi - lo;
        self.entries
            .iter()
            .map(|e| if span > 0.0 { (e.uncertainty - lo) / span } else { 0.0 })
            .collect()
    }
}

/// Machine-readable summary of one sampling round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingReport {
    #[serde(serialize_with = "crate::config::fixed6")]
    pub threshold: f64,
    pub fallback_used: bool,
    pub degenerate_uncertainty: bool,
    pub high_uncertainty_count: usize,
    pub confident_count: usize,
    /// `ceil(ratio * pool)` before capping at the high-uncertainty count.
    pub requested_budget: usize,
    /// Number of samples actually queried.
    pub budget: usize,
    pub direct_top_uncertainty_fallback: bool,
    pub selected_ids: Vec<usize>,
    #[serde(serialize_with = "crate::config::fixed6_vec")]
    pub lambdas: Vec<f64>,
    pub augmented_count: usize,
}
