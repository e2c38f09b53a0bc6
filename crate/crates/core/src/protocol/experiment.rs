use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::stages::{pretrain, retrain_epoch, sampling_round, EpochRecord, RoundState};
use super::{PreparedData, ProtocolConfig};
use crate::datacube::{HyperCube, LabelMap};
use crate::error::Result;
use crate::evidential::{forward, MlpParams};
use crate::metrics::{compute_metrics, confusion, default_palette, render_class_map, render_uncertainty_map, MetricReport};
use crate::ugdss::SamplingReport;

/// Everything a run reports. Serializes deterministically: no timings, and
/// every float is printed with six decimals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: BTreeMap<String, String>,
    pub config_hash: String,
    pub seed: u64,
    pub selection: String,
    pub zero_budget: bool,
    pub pool_size: usize,
    pub seed_count: usize,
    pub annotation_count: usize,
    pub augmented_count: usize,
    pub pseudo_count: usize,
    pub warnings: Vec<String>,
    #[serde(serialize_with = "crate::config::fixed6_vec")]
    pub pretrain_loss: Vec<f64>,
    #[serde(serialize_with = "crate::config::fixed6")]
    pub pretrain_test_oa: f64,
    pub sampling: SamplingReport,
    pub epochs: Vec<EpochRecord>,
    /// Retraining epoch with the best validation OA (bookkeeping only).
    pub best_val_epoch: Option<usize>,
    pub metrics: MetricReport,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    /// One-based predicted class of every pixel.
    pub predictions: LabelMap,
    /// Single-pass `u = K/S` of every pixel, row-major.
    pub uncertainty: Vec<f64>,
    pub params: MlpParams,
}

impl ExperimentOutput {
    pub fn class_map_ppm(&self) -> Result<String> {
        let p = &self.predictions;
        render_class_map(p.labels(), p.width(), p.height(), &default_palette(p.num_classes()))
    }

    pub fn uncertainty_map_ppm(&self) -> Result<String> {
        let p = &self.predictions;
        render_uncertainty_map(&self.uncertainty, p.width(), p.height())
    }
}

/// Pretrain, run one sampling round, retrain for the configured epochs and
/// evaluate on the test split.
pub fn run_experiment(config: &ProtocolConfig, cube: &HyperCube, labels: &LabelMap) -> Result<ExperimentOutput> {
    config.validate()?;
    let data = PreparedData::prepare(cube, labels, config)?;
    run_prepared(config, &data)
}

/// [`run_experiment`] on data that has already been reduced and patched.
pub fn run_prepared(config: &ProtocolConfig, data: &PreparedData) -> Result<ExperimentOutput> {
    config.validate()?;
    let pre = pretrain(config, data)?;
    let pretrain_test_oa = super::stages::accuracy(&pre.params, data, &data.split.test_ids)?;
    let outcome = sampling_round(config, data, &pre.params, &pre.ledger)?;
    let mut state = RoundState::new(config, data, pre.params, &pre.seed_ids, &outcome)?;
    for _ in 0..config.retrain_epochs {
        retrain_epoch(&mut state, config, data)?;
    }

    let (predicted, uncertainty): (Vec<usize>, Vec<f64>) = (0..data.pixels())
        .into_par_iter()
        .map(|id| forward(&state.params, data.features(id)).map(|(o, _)| (o.argmax() + 1, o.uncertainty)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let truth: Vec<usize> = data.split.test_ids.iter().map(|&i| data.labels.get(i)).collect();
    let pred: Vec<usize> = data.split.test_ids.iter().map(|&i| predicted[i]).collect();
    let metrics = compute_metrics(&confusion(&truth, &pred, data.num_classes())?)?;

    let best_val_epoch = state
        .history
        .iter()
        .fold(None::<&EpochRecord>, |best, r| match best {
            Some(b) if b.val_oa >= r.val_oa => Some(b),
            _ => Some(r),
        })
        .map(|r| r.epoch);
    let predictions =
        LabelMap::new(data.labels.height(), data.labels.width(), data.num_classes(), predicted)?;
    let report = ExperimentReport {
        config: config.to_pairs(),
        config_hash: config.hash(),
        seed: config.seed,
        selection: config.selection.to_string(),
        zero_budget: outcome.report.budget == 0,
        pool_size: pre.pool_ids.len(),
        seed_count: pre.seed_ids.len(),
        annotation_count: outcome.annotated.len(),
        augmented_count: outcome.augmented.len(),
        pseudo_count: outcome.pseudo.len(),
        warnings: pre.warnings,
        pretrain_loss: pre.loss_curve,
        pretrain_test_oa,
        sampling: outcome.report,
        epochs: state.history,
        best_val_epoch,
        metrics,
    };
    Ok(ExperimentOutput { report, predictions, uncertainty, params: state.params })
}
