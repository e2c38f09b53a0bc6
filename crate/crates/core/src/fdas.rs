//! Pseudo-label triage from smoothed evidence.
//!
//! Each pseudo-labelled sample carries an EMA of its Dirichlet parameters.
//! The gap between the largest and second-largest smoothed parameter (the
//! evidence gap) is compared with a dynamic threshold alongside the
//! sample's confidence to sort it into reliable, ambiguous or noisy.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{arg, Result};
use crate::rng::SplitMix64;

pub const DEFAULT_MOMENTUM: f64 = 0.9;
pub const DEFAULT_THRESHOLD_MOMENTUM: f64 = 0.9;
pub const INITIAL_CONFIDENCE_THRESHOLD: f64 = 0.8;

/// EMA-smoothed Dirichlet parameters keyed by sample id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmaEvidence {
    momentum: f64,
    smoothed: BTreeMap<usize, Vec<f64>>,
}

impl EmaEvidence {
    pub fn new(momentum: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&momentum) {
            return arg(format!("EMA momentum must be in [0, 1), got {momentum}"));
        }
        Ok(Self { momentum, smoothed: BTreeMap::new() })
    }

    pub fn momentum(&self) -> f64 {
        self.momentum
    }

    /// Fold a new observation in. The first observation of an id is taken as is.
    pub fn update(&mut self, id: usize, alpha: &[f64]) -> &[f64] {
        let m = self.momentum;
        let entry = self.smoothed.entry(id).or_insert_with(|| alpha.to_vec());
        for (s, a) in entry.iter_mut().zip(alpha) {
            *s = m * *s + (1.0 - m) * a;
        }
        entry
    }

    pub fn get(&self, id: usize) -> Option<&[f64]> {
        self.smoothed.get(&id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.smoothed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.smoothed.is_empty()
    }

    pub fn clear(&mut self) {
        self.smoothed.clear();
    }
}

/// Largest minus second-largest component. Zero when the maximum is tied.
pub fn uncertainty_gap(alpha: &[f64]) -> Result<f64> {
    if alpha.len() < 2 {
        return arg(format!("evidence gap needs at least 2 classes, got {}", alpha.len()));
    }
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &a in alpha {
        if a > first {
            second = first;
            first = a;
        } else if a > second {
            second = a;
        }
    }
    Ok(first - second)
}

/// Dynamic confidence (`tau_c`) and evidence-gap (`tau_e`) thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdasThresholds {
    pub confidence: f64,
    /// `None` until the first batch seeds it with that batch's mean gap.
    pub evidence_gap: Option<f64>,
    pub momentum: f64,
}

impl Default for FdasThresholds {
    fn default() -> Self {
        Self { confidence: INITIAL_CONFIDENCE_THRESHOLD, evidence_gap: None, momentum: DEFAULT_THRESHOLD_MOMENTUM }
    }
}

impl FdasThresholds {
    pub fn new(confidence: f64, evidence_gap: f64, momentum: f64) -> Self {
        Self { confidence, evidence_gap: Some(evidence_gap), momentum }
    }

    pub fn gap(&self) -> f64 {
        self.evidence_gap.unwrap_or(0.0)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// EMA both thresholds toward the batch means.
pub fn update_thresholds(th: &FdasThresholds, confidences: &[f64], gaps: &[f64]) -> Result<FdasThresholds> {
    if confidences.is_empty() || gaps.is_empty() {
        return arg("threshold update needs a non-empty batch");
    }
    let m = th.momentum;
    let c = mean(confidences);
    let g = mean(gaps);
    let gap_prev = th.evidence_gap.unwrap_or(g);
    Ok(FdasThresholds {
        confidence: m * th.confidence + (1.0 - m) * c,
        evidence_gap: Some(m * gap_prev + (1.0 - m) * g),
        momentum: m,
    })
}

/// Confidence and evidence gap of one pseudo-labelled sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriageRecord {
    pub id: usize,
    pub confidence: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TriageResult {
    pub reliable: Vec<usize>,
    pub ambiguous: Vec<usize>,
    pub noisy: Vec<usize>,
}

/// Reliable: both statistics at or above threshold. Noisy: both strictly
/// below. Ambiguous: exactly one passes.
pub fn triage(records: &[TriageRecord], th: &FdasThresholds) -> TriageResult {
    let tau_e = th.gap();
    let mut out = TriageResult::default();
    for r in records {
        match (r.confidence >= th.confidence, r.gap >= tau_e) {
            (true, true) => out.reliable.push(r.id),
            (false, false) => out.noisy.push(r.id),
            _ => out.ambiguous.push(r.id),
        }
    }
    out
}

/// Per-epoch triage summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriageReport {
    pub epoch: usize,
    pub reliable: usize,
    pub ambiguous: usize,
    pub noisy: usize,
    #[serde(serialize_with = "crate::config::fixed6")]
    pub tau_c: f64,
    #[serde(serialize_with = "crate::config::fixed6")]
    pub tau_e: f64,
}

impl TriageReport {
    pub fn new(epoch: usize, result: &TriageResult, th: &FdasThresholds) -> Self {
        Self {
            epoch,
            reliable: result.reliable.len(),
            ambiguous: result.ambiguous.len(),
            noisy: result.noisy.len(),
            tau_c: th.confidence,
            tau_e: th.gap(),
        }
    }
}

/// A synthetic stream of Dirichlet parameters over training epochs.
///
/// "Easy" samples gain evidence for their true class at a steady rate.
/// "Hard" samples are confidently predicted every epoch, but the favoured
/// class flips at random between two candidates, so their smoothed evidence
/// stays split.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftStream {
    pub num_classes: usize,
    pub easy: usize,
    pub hard: usize,
    /// Evidence added to an easy sample's true class per epoch.
    pub easy_growth: f64,
    /// Evidence mass a hard sample puts on its favoured class.
    pub hard_evidence: f64,
    pub seed: u64,
}

impl Default for DriftStream {
    fn default() -> Self {
        Self { num_classes: 4, easy: 200, hard: 200, easy_growth: 50.0, hard_evidence: 1000.0, seed: 0 }
    }
}

/// Cohort means of one simulated epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftEpoch {
    pub epoch: usize,
    pub easy_gap: f64,
    pub hard_gap: f64,
    pub easy_confidence: f64,
    pub hard_confidence: f64,
}

impl DriftEpoch {
    pub fn separation(&self) -> f64 {
        self.easy_gap - self.hard_gap
    }
}

impl DriftStream {
    /// Raw Dirichlet parameters of every sample at `epoch` (easy first).
    pub fn alphas(&self, epoch: usize, rng: &mut SplitMix64) -> Vec<Vec<f64>> {
        let k = self.num_classes;
        let mut out = Vec::with_capacity(self.easy + self.hard);
        for i in 0..self.easy {
            let mut a = vec![1.0; k];
            a[i % k] += self.easy_growth * (epoch + 1) as f64;
            out.push(a);
        }
        for i in 0..self.hard {
            let mut a = vec![1.0; k];
            let base = i % k;
            let pick = if rng.below(2) == 0 { base } else { (base + 1) % k };
            a[pick] += self.hard_evidence;
            out.push(a);
        }
        out
    }

    /// Run the stream through [`EmaEvidence`] and [`uncertainty_gap`].
    pub fn simulate(&self, epochs: usize, momentum: f64) -> Result<Vec<DriftEpoch>> {
        let mut ema = EmaEvidence::new(momentum)?;
        let mut rng = SplitMix64::derive(self.seed, 0xD1F7);
        let mut history = Vec::with_capacity(epochs);
        for epoch in 0..epochs {
            let alphas = self.alphas(epoch, &mut rng);
            let mut gaps = Vec::with_capacity(alphas.len());
            let mut confs = Vec::with_capacity(alphas.len());
            for (id, a) in alphas.iter().enumerate() {
                let s: f64 = a.iter().sum();
                confs.push(a.iter().cloned().fold(0.0, f64::max) / s);
                gaps.push(uncertainty_gap(ema.update(id, a))?);
            }
            let (ge, gh) = gaps.split_at(self.easy);
            let (ce, ch) = confs.split_at(self.easy);
            history.push(DriftEpoch {
                epoch,
                easy_gap: mean(ge),
                hard_gap: mean(gh),
                easy_confidence: mean(ce),
                hard_confidence: mean(ch),
            });
        }
        Ok(history)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ema_one_step_and_fixpoint() {
        let mut ema = EmaEvidence::new(0.5).unwrap();
        ema.update(7, &[2.0, 2.0]);
        assert_eq!(ema.update(7, &[5.0, 1.0]), &[3.5, 1.5]);
        let mut fixed = EmaEvidence::new(0.9).unwrap();
        for _ in 0..10 {
            fixed.update(1, &[3.0, 1.0, 2.0]);
        }
        assert_eq!(fixed.get(1).unwrap(), &[3.0, 1.0, 2.0]);
    }

    #[test]
    fn ema_without_momentum_tracks_latest() {
        let mut ema = EmaEvidence::new(0.0).unwrap();
        ema.update(0, &[4.0, 1.0]);
        assert_eq!(ema.update(0, &[1.0, 9.0]), &[1.0, 9.0]);
        assert!(EmaEvidence::new(1.0).is_err());
        assert!(EmaEvidence::new(-0.1).is_err());
    }

    #[test]
    fn gap_values() {
        assert_eq!(uncertainty_gap(&[3.0, 1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(uncertainty_gap(&[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(uncertainty_gap(&[1.0, 5.0, 5.0]).unwrap(), 0.0);
        assert_eq!(uncertainty_gap(&[1.0, 1.0, 3.0]).unwrap(), 2.0);
        assert!(uncertainty_gap(&[3.0]).is_err());
    }

    #[test]
    fn thresholds_without_momentum_equal_means() {
        let th = FdasThresholds::new(0.8, 1.0, 0.0);
        let next = update_thresholds(&th, &[0.5, 0.7], &[2.0, 4.0]).unwrap();
        assert!((next.confidence - 0.6).abs() < 1e-15);
        assert_eq!(next.gap(), 3.0);
    }

    #[test]
    fn first_batch_seeds_gap_threshold() {
        let th = FdasThresholds::default();
        let next = update_thresholds(&th, &[0.9], &[6.0]).unwrap();
        assert_eq!(next.gap(), 6.0);
        assert!((next.confidence - (0.9 * 0.8 + 0.1 * 0.9)).abs() < 1e-15);
    }

    #[test]
    fn thresholds_converge_geometrically() {
        let mut th = FdasThresholds::new(0.2, 10.0, 0.9);
        for t in 1..=30 {
            th = update_thresholds(&th, &[0.7], &[4.0]).unwrap();
            let expect_c = 0.7 + (0.2 - 0.7) * 0.9f64.powi(t);
            let expect_e = 4.0 + (10.0 - 4.0) * 0.9f64.powi(t);
            assert!((th.confidence - expect_c).abs() < 1e-12);
            assert!((th.gap() - expect_e).abs() < 1e-12);
        }
    }

    #[test]
    fn threshold_fixpoint() {
        let th = FdasThresholds::new(0.8, 1.0, 0.9);
        let next = update_thresholds(&th, &[0.8], &[1.0]).unwrap();
        assert_eq!(next.confidence, 0.8);
        assert!(update_thresholds(&th, &[], &[]).is_err());
    }

    #[test]
    fn triage_truth_table() {
        let th = FdasThresholds::new(0.8, 1.0, 0.9);
        let recs = [
            TriageRecord { id: 0, confidence: 0.9, gap: 2.0 },
            TriageRecord { id: 1, confidence: 0.5, gap: 0.2 },
            TriageRecord { id: 2, confidence: 0.9, gap: 0.2 },
            TriageRecord { id: 3, confidence: 0.5, gap: 2.0 },
            TriageRecord { id: 4, confidence: 0.8, gap: 1.0 },
        ];
        let r = triage(&recs, &th);
        assert_eq!(r.reliable, vec![0, 4]);
        assert_eq!(r.noisy, vec![1]);
        assert_eq!(r.ambiguous, vec![2, 3]);
    }
}
