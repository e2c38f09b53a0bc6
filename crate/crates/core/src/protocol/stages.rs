use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::train::{train_epoch, ObjectiveWeights, Term, TrainItem};
use super::{PreparedData, ProtocolConfig, Selection};
use crate::error::{Error, Result};
use crate::evidential::{forward, tta_uncertainty, EvidenceOutput, MlpParams, OptimState};
use crate::fdas::{triage, uncertainty_gap, update_thresholds, EmaEvidence, FdasThresholds, TriageRecord, TriageReport, TriageResult};
use crate::rng::SplitMix64;
use crate::ugdss::{
    adaptive_threshold, drqs_select, feature_variance, gfp_augment, partition_pool, perturbation_scale,
    AugmentedSample, GfpSource, GfpStats, LedgerEntry, SamplingReport, UncertaintyLedger,
};

// Sub-stream tags for SplitMix64::derive.
const STREAM_INIT: u64 = 0x10;
const STREAM_SEEDS: u64 = 0x20;
const STREAM_PRETRAIN: u64 = 0x30;
const STREAM_TTA: u64 = 0x40;
const STREAM_DRQS: u64 = 0x50;
const STREAM_GFP: u64 = 0x60;
const STREAM_RANDOM_QUERY: u64 = 0x70;
const STREAM_RETRAIN: u64 = 0x80;

/// `ceil(ratio * pool)`, tolerant of binary rounding in the product.
pub fn annotation_budget(ratio: f64, pool: usize) -> usize {
    let raw = ratio * pool as f64;
    let rounded = raw.round();
    if (raw - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        raw.ceil() as usize
    }
}

/// Output of the pretraining stage.
#[derive(Debug, Clone)]
pub struct Pretrained {
    pub params: MlpParams,
    pub seed_ids: Vec<usize>,
    pub pool_ids: Vec<usize>,
    pub ledger: UncertaintyLedger,
    pub loss_curve: Vec<f64>,
    pub warnings: Vec<String>,
}

fn layer_dims(config: &ProtocolConfig, data: &PreparedData) -> Vec<usize> {
    let mut dims = vec![data.dim()];
    dims.extend(&config.hidden);
    dims.push(data.num_classes());
    dims
}

/// Draw the labeled seed set, train the evidential network on it with the
/// EDL loss, and score the remaining training pixels with TTA uncertainty.
pub fn pretrain(config: &ProtocolConfig, data: &PreparedData) -> Result<Pretrained> {
    let mut seed_ids = Vec::new();
    let mut warnings = Vec::new();
    for class in 0..data.num_classes() {
        let mut members: Vec<usize> =
            data.split.train_ids.iter().copied().filter(|&i| data.class_of(i) == Some(class)).collect();
        let take = if members.len() < config.pretrain_per_class {
            let take = members.len().saturating_sub(1);
            warnings.push(format!(
                "class {} has {} training pixels (< {}); pretraining on {take}",
                class + 1,
                members.len(),
                config.pretrain_per_class
            ));
            take
        } else {
            config.pretrain_per_class
        };
        SplitMix64::derive(config.seed, STREAM_SEEDS + class as u64).shuffle(&mut members);
        seed_ids.extend_from_slice(&members[..take]);
    }
    seed_ids.sort_unstable();
    let pool_ids: Vec<usize> =
        data.split.train_ids.iter().copied().filter(|i| seed_ids.binary_search(i).is_err()).collect();

    let mut params = MlpParams::init(&layer_dims(config, data), SplitMix64::derive(config.seed, STREAM_INIT).next_u64())?;
    let mut optim = OptimState::new(&params, config.adamw(config.weight_decay_pretrain));
    let items: Vec<TrainItem> = seed_ids
        .iter()
        .map(|&id| TrainItem { features: data.features(id), target: data.class_of(id).expect("labeled"), term: Term::Labeled })
        .collect();
    let weights = ObjectiveWeights::from(config);
    let mut rng = SplitMix64::derive(config.seed, STREAM_PRETRAIN);
    let mut loss_curve = Vec::with_capacity(config.pretrain_epochs);
    for _ in 0..config.pretrain_epochs {
        loss_curve.push(train_epoch(&mut params, &mut optim, &items, config.batch_size, weights, &mut rng)?);
    }

    let ledger = score_pool(config, data, &params, &pool_ids)?;
    Ok(Pretrained { params, seed_ids, pool_ids, ledger, loss_curve, warnings })
}

/// TTA uncertainty and embedding of every pool pixel.
pub fn score_pool(
    config: &ProtocolConfig,
    data: &PreparedData,
    params: &MlpParams,
    pool_ids: &[usize],
) -> Result<UncertaintyLedger> {
    let entries = pool_ids
        .par_iter()
        .map(|&id| {
            let x = data.features(id);
            let tta = config.tta(SplitMix64::derive(config.seed ^ STREAM_TTA, id as u64).next_u64());
            let uncertainty = tta_uncertainty(params, x, data.shape, &tta)?.clamp(0.0, 1.0);
            let (_, embedding) = forward(params, x)?;
            Ok(LedgerEntry { id, uncertainty, embedding })
        })
        .collect::<Result<Vec<_>>>()?;
    UncertaintyLedger::new(entries)
}

/// Result of the single sampling round.
#[derive(Debug, Clone)]
pub struct SamplingOutcome {
    /// Pool pixels whose ground truth is revealed, ascending.
    pub annotated: Vec<usize>,
    pub augmented: Vec<AugmentedSample>,
    /// Pseudo-labelled pool pixels and their zero-based classes.
    pub pseudo: BTreeMap<usize, usize>,
    pub high: Vec<usize>,
    pub confident: Vec<usize>,
    pub report: SamplingReport,
}

fn empty_report() -> SamplingReport {
    SamplingReport {
        threshold: 0.0,
        fallback_used: false,
        degenerate_uncertainty: false,
        high_uncertainty_count: 0,
        confident_count: 0,
        requested_budget: 0,
        budget: 0,
        direct_top_uncertainty_fallback: false,
        selected_ids: Vec::new(),
        lambdas: Vec::new(),
        augmented_count: 0,
    }
}

fn predict(params: &MlpParams, x: &[f64]) -> Result<EvidenceOutput> {
    forward(params, x).map(|(o, _)| o)
}

/// Threshold the pool, choose the annotation query, perturb it, and
/// pseudo-label everything else with the current model.
pub fn sampling_round(
    config: &ProtocolConfig,
    data: &PreparedData,
    params: &MlpParams,
    ledger: &UncertaintyLedger,
) -> Result<SamplingOutcome> {
    if ledger.is_empty() {
        return Ok(SamplingOutcome {
            annotated: Vec::new(),
            augmented: Vec::new(),
            pseudo: BTreeMap::new(),
            high: Vec::new(),
            confident: Vec::new(),
            report: empty_report(),
        });
    }
    let mut report = empty_report();
    let threshold = match adaptive_threshold(ledger, config.threshold_bins, config.threshold_delta) {
        Ok(t) => {
            report.fallback_used = t.fallback_used;
            t.threshold
        }
        Err(Error::Degenerate(_)) => {
            report.fallback_used = true;
            report.degenerate_uncertainty = true;
            ledger.uncertainties().into_iter().fold(f64::INFINITY, f64::min)
        }
        Err(e) => return Err(e),
    };
    report.threshold = threshold;
    let (high, confident) = partition_pool(ledger, threshold);
    report.high_uncertainty_count = high.len();
    report.confident_count = confident.len();

    let requested = annotation_budget(config.annotation_ratio, ledger.len());
    report.requested_budget = requested;
    let by_id: BTreeMap<usize, &LedgerEntry> = ledger.entries().iter().map(|e| (e.id, e)).collect();
    let normalized: BTreeMap<usize, f64> =
        ledger.entries().iter().map(|e| e.id).zip(ledger.normalized()).collect();

    // (selected ids, cluster members per selected id)
    let (selected, clusters): (Vec<usize>, Vec<Vec<usize>>) = if high.is_empty() && requested > 0 {
        report.direct_top_uncertainty_fallback = true;
        let mut ranked: Vec<&LedgerEntry> = ledger.entries().iter().collect();
        ranked.sort_by(|a, b| b.uncertainty.total_cmp(&a.uncertainty).then(a.id.cmp(&b.id)));
        let picked: Vec<usize> = ranked.iter().take(requested).map(|e| e.id).collect();
        let clusters = picked.iter().map(|&id| vec![id]).collect();
        (picked, clusters)
    } else {
        let budget = requested.min(high.len());
        if budget == 0 {
            (Vec::new(), Vec::new())
        } else {
            match config.selection {
                Selection::Cabin => {
                    let candidates: Vec<(usize, Vec<f64>)> =
                        high.iter().map(|id| (*id, by_id[id].embedding.clone())).collect();
                    let sel = drqs_select(&candidates, budget, SplitMix64::derive(config.seed, STREAM_DRQS).next_u64())?;
                    let clusters = sel.clusters.clone();
                    (sel.selected_ids, clusters)
                }
                Selection::Random => {
                    let mut ids: Vec<usize> = ledger.entries().iter().map(|e| e.id).collect();
                    SplitMix64::derive(config.seed, STREAM_RANDOM_QUERY).shuffle(&mut ids);
                    ids.truncate(budget);
                    let clusters = ids.iter().map(|&id| vec![id]).collect();
                    (ids, clusters)
                }
            }
        }
    };
    report.budget = selected.len();
    report.selected_ids = selected.clone();

    let augmented = if config.selection == Selection::Cabin && !selected.is_empty() {
        let gfp = config.gfp(SplitMix64::derive(config.seed, STREAM_GFP).next_u64());
        let pool_rows: Vec<&[f64]> = ledger.entries().iter().map(|e| data.features(e.id)).collect();
        let annotated_rows: Vec<&[f64]> = selected.iter().map(|&id| data.features(id)).collect();
        let stats = GfpStats::new(&pool_rows, &annotated_rows)?;
        let sources: Vec<GfpSource> = selected
            .iter()
            .zip(&clusters)
            .map(|(&id, members)| {
                let rows: Vec<&[f64]> = members.iter().map(|&m| data.features(m)).collect();
                GfpSource {
                    id,
                    uncertainty: normalized[&id],
                    features: data.features(id).to_vec(),
                    label: data.class_of(id).expect("training pixels are labeled"),
                    local_var: feature_variance(&rows, data.dim()),
                }
            })
            .collect();
        report.lambdas = sources.iter().map(|s| perturbation_scale(&gfp, s.uncertainty)).collect();
        gfp_augment(&sources, &stats, &gfp)?
    } else {
        Vec::new()
    };
    report.augmented_count = augmented.len();

    let mut annotated = selected;
    annotated.sort_unstable();
    let rest: Vec<usize> =
        ledger.entries().iter().map(|e| e.id).filter(|id| annotated.binary_search(id).is_err()).collect();
    let labels = rest
        .par_iter()
        .map(|&id| predict(params, data.features(id)).map(|o| o.argmax()))
        .collect::<Result<Vec<_>>>()?;
    let pseudo = rest.into_iter().zip(labels).collect();
    Ok(SamplingOutcome { annotated, augmented, pseudo, high, confident, report })
}

/// One retraining epoch's bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    #[serde(serialize_with = "crate::config::fixed6")]
    pub loss: f64,
    #[serde(serialize_with = "crate::config::fixed6")]
    pub val_oa: f64,
    pub triage: Option<TriageReport>,
}

/// Mutable state of the retraining stage.
#[derive(Debug, Clone)]
pub struct RoundState {
    pub params: MlpParams,
    pub optim: OptimState,
    /// Ground-truth supervised pixels `(id, class)`: seeds plus annotations.
    pub labeled: Vec<(usize, usize)>,
    pub augmented: Vec<AugmentedSample>,
    pub pseudo: BTreeMap<usize, usize>,
    pub triage: TriageResult,
    pub ema: EmaEvidence,
    pub thresholds: FdasThresholds,
    pub history: Vec<EpochRecord>,
    /// Minibatch shuffling stream of the retraining stage.
    pub rng: SplitMix64,
}

impl RoundState {
    pub fn new(
        config: &ProtocolConfig,
        data: &PreparedData,
        params: MlpParams,
        seed_ids: &[usize],
        outcome: &SamplingOutcome,
    ) -> Result<Self> {
        let mut labeled: Vec<(usize, usize)> = seed_ids
            .iter()
            .chain(&outcome.annotated)
            .map(|&id| (id, data.class_of(id).expect("training pixels are labeled")))
            .collect();
        labeled.sort_unstable();
        let optim = OptimState::new(&params, config.adamw(config.weight_decay_retrain));
        Ok(Self {
            params,
            optim,
            labeled,
            augmented: outcome.augmented.clone(),
            pseudo: outcome.pseudo.clone(),
            triage: TriageResult::default(),
            ema: EmaEvidence::new(config.ema_momentum)?,
            thresholds: FdasThresholds {
                confidence: config.tau_c_init,
                evidence_gap: None,
                momentum: config.threshold_momentum,
            },
            history: Vec::new(),
            rng: SplitMix64::derive(config.seed, STREAM_RETRAIN),
        })
    }

    /// True when every pseudo-labelled id sits in exactly one triage set.
    pub fn triage_covers_pseudo(&self) -> bool {
        let mut all: Vec<usize> = self
            .triage
            .reliable
            .iter()
            .chain(&self.triage.ambiguous)
            .chain(&self.triage.noisy)
            .copied()
            .collect();
        all.sort_unstable();
        all == self.pseudo.keys().copied().collect::<Vec<_>>()
    }
}

/// Refresh evidence statistics of the pseudo-labelled set, re-triage it, and
/// run one pass of minibatch training on the three-term objective.
pub fn retrain_epoch(state: &mut RoundState, config: &ProtocolConfig, data: &PreparedData) -> Result<()> {
    let epoch = state.history.len();
    let ids: Vec<usize> = state.pseudo.keys().copied().collect();
    let outputs = ids
        .par_iter()
        .map(|&id| predict(&state.params, data.features(id)))
        .collect::<Result<Vec<_>>>()?;

    let mut triage_report = None;
    if !ids.is_empty() {
        match config.selection {
            Selection::Cabin => {
                let mut records = Vec::with_capacity(ids.len());
                for (&id, out) in ids.iter().zip(&outputs) {
                    let smoothed = state.ema.update(id, &out.alpha);
                    records.push(TriageRecord { id, confidence: out.confidence(), gap: uncertainty_gap(smoothed)? });
                }
                for batch in records.chunks(config.batch_size) {
                    let c: Vec<f64> = batch.iter().map(|r| r.confidence).collect();
                    let g: Vec<f64> = batch.iter().map(|r| r.gap).collect();
                    state.thresholds = update_thresholds(&state.thresholds, &c, &g)?;
                }
                state.triage = triage(&records, &state.thresholds);
                triage_report = Some(TriageReport::new(epoch, &state.triage, &state.thresholds));
            }
            Selection::Random => {
                state.triage = TriageResult { reliable: ids.clone(), ..TriageResult::default() };
            }
        }
        if config.refresh_pseudo_labels {
            for (&id, out) in ids.iter().zip(&outputs) {
                state.pseudo.insert(id, out.argmax());
            }
        }
    } else {
        state.triage = TriageResult::default();
    }

    let mut items: Vec<TrainItem> = Vec::new();
    for &(id, class) in &state.labeled {
        items.push(TrainItem { features: data.features(id), target: class, term: Term::Labeled });
    }
    for a in &state.augmented {
        items.push(TrainItem { features: &a.features, target: a.label, term: Term::Labeled });
    }
    for &id in &state.triage.reliable {
        items.push(TrainItem { features: data.features(id), target: state.pseudo[&id], term: Term::Reliable });
    }
    for &id in &state.triage.ambiguous {
        items.push(TrainItem { features: data.features(id), target: state.pseudo[&id], term: Term::Ambiguous });
    }
    let weights = ObjectiveWeights::from(config);
    let loss = train_epoch(&mut state.params, &mut state.optim, &items, config.batch_size, weights, &mut state.rng)?;
    let val_oa = accuracy(&state.params, data, &data.split.val_ids)?;
    state.history.push(EpochRecord { epoch, loss, val_oa, triage: triage_report });
    Ok(())
}

/// Fraction of `ids` whose argmax matches the ground truth (0 when empty).
pub fn accuracy(params: &MlpParams, data: &PreparedData, ids: &[usize]) -> Result<f64> {
    if ids.is_empty() {
        return Ok(0.0);
    }
    let hits = ids
        .par_iter()
        .map(|&id| predict(params, data.features(id)).map(|o| Some(o.argmax()) == data.class_of(id)))
        .collect::<Result<Vec<bool>>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / ids.len() as f64)
}
