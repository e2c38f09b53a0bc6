use std::collections::BTreeMap;
use std::fmt;

use sha2::{Digest, Sha256};

use crate::config::{parse_bool, parse_list, parse_pairs, parse_value};
use crate::datacube::SplitSpec;
use crate::error::{Error, Result};
use crate::evidential::{AdamWConfig, TransformKind, TtaConfig, DEFAULT_GCE_Q};
use crate::fdas::{DEFAULT_MOMENTUM, DEFAULT_THRESHOLD_MOMENTUM, INITIAL_CONFIDENCE_THRESHOLD};
use crate::ugdss::{GfpConfig, DEFAULT_BINS};

/// How the annotation query and pseudo-labels are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// Adaptive threshold, diverse query, feature perturbation, triage.
    Cabin,
    /// Random query of the same size; every pseudo-label is trusted; no
    /// perturbation.
    Random,
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Selection::Cabin => "cabin",
            Selection::Random => "random",
        })
    }
}

impl std::str::FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cabin" => Ok(Selection::Cabin),
            "random" => Ok(Selection::Random),
            _ => Err(Error::Config(format!("unknown selection mode {s:?} (cabin|random)"))),
        }
    }
}

/// Every knob of one experiment. See [`ProtocolConfig::KEYS`] for the
/// config-file names.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub seed: u64,
    pub train_per_class: usize,
    pub val_per_class: usize,
    pub small_class_test: usize,
    pub small_class_val: usize,
    /// Capped at the band count.
    pub pca_components: usize,
    pub patch_window: usize,
    pub hidden: Vec<usize>,
    pub pretrain_per_class: usize,
    pub annotation_ratio: f64,
    pub lambda_r: f64,
    pub lambda_a: f64,
    pub gce_q: f64,
    pub pretrain_epochs: usize,
    pub retrain_epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay_pretrain: f64,
    pub weight_decay_retrain: f64,
    pub tta_transforms: usize,
    pub tta_jitter: f64,
    pub threshold_bins: usize,
    pub threshold_delta: f64,
    pub gfp_lambda_min: f64,
    pub gfp_lambda_max: f64,
    pub gfp_mix_weight: f64,
    pub gfp_copies: usize,
    pub ema_momentum: f64,
    pub threshold_momentum: f64,
    pub tau_c_init: f64,
    /// Re-derive pseudo-labels from the current model every retraining epoch;
    /// when false the labels assigned at sampling time are kept.
    pub refresh_pseudo_labels: bool,
    pub selection: Selection,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        let split = SplitSpec::default();
        let gfp = GfpConfig::default();
        Self {
            seed: 0,
            train_per_class: split.train_per_class,
            val_per_class: split.val_per_class,
            small_class_test: split.small_class_test,
            small_class_val: split.small_class_val,
            pca_components: 30,
            patch_window: 5,
            hidden: vec![128, 64],
            pretrain_per_class: 10,
            annotation_ratio: 0.5,
            lambda_r: 0.3,
            lambda_a: 0.3,
            gce_q: DEFAULT_GCE_Q,
            pretrain_epochs: 100,
            retrain_epochs: 100,
            batch_size: 48,
            lr: 1e-3,
            weight_decay_pretrain: 0.0,
            weight_decay_retrain: 5e-3,
            tta_transforms: 8,
            tta_jitter: 0.01,
            threshold_bins: DEFAULT_BINS,
            threshold_delta: 0.0,
            gfp_lambda_min: gfp.lambda_min,
            gfp_lambda_max: gfp.lambda_max,
            gfp_mix_weight: gfp.mix_weight,
            gfp_copies: gfp.copies_per_sample,
            ema_momentum: DEFAULT_MOMENTUM,
            threshold_momentum: DEFAULT_THRESHOLD_MOMENTUM,
            tau_c_init: INITIAL_CONFIDENCE_THRESHOLD,
            refresh_pseudo_labels: true,
            selection: Selection::Cabin,
        }
    }
}

impl ProtocolConfig {
    pub const KEYS: [&'static str; 32] = [
        "seed",
        "train_per_class",
        "val_per_class",
        "small_class_test",
        "small_class_val",
        "pca_components",
        "patch_window",
        "hidden",
        "pretrain_per_class",
        "annotation_ratio",
        "lambda_r",
        "lambda_a",
        "gce_q",
        "pretrain_epochs",
        "retrain_epochs",
        "batch_size",
        "lr",
        "weight_decay_pretrain",
        "weight_decay_retrain",
        "tta_transforms",
        "tta_jitter",
        "threshold_bins",
        "threshold_delta",
        "gfp_lambda_min",
        "gfp_lambda_max",
        "gfp_mix_weight",
        "gfp_copies",
        "ema_momentum",
        "threshold_momentum",
        "tau_c_init",
        "refresh_pseudo_labels",
        "selection",
    ];

    /// Set one field from its config-file spelling.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse_value(key, value)?,
            "train_per_class" => self.train_per_class = parse_value(key, value)?,
            "val_per_class" => self.val_per_class = parse_value(key, value)?,
            "small_class_test" => self.small_class_test = parse_value(key, value)?,
            "small_class_val" => self.small_class_val = parse_value(key, value)?,
            "pca_components" => self.pca_components = parse_value(key, value)?,
            "patch_window" => self.patch_window = parse_value(key, value)?,
            "hidden" => self.hidden = parse_list(key, value)?,
            "pretrain_per_class" => self.pretrain_per_class = parse_value(key, value)?,
            "annotation_ratio" | "ratio" => self.annotation_ratio = parse_value(key, value)?,
            "lambda_r" => self.lambda_r = parse_value(key, value)?,
            "lambda_a" => self.lambda_a = parse_value(key, value)?,
            "gce_q" => self.gce_q = parse_value(key, value)?,
            "pretrain_epochs" => self.pretrain_epochs = parse_value(key, value)?,
            "retrain_epochs" => self.retrain_epochs = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "lr" => self.lr = parse_value(key, value)?,
            "weight_decay_pretrain" => self.weight_decay_pretrain = parse_value(key, value)?,
            "weight_decay_retrain" => self.weight_decay_retrain = parse_value(key, value)?,
            "tta_transforms" => self.tta_transforms = parse_value(key, value)?,
            "tta_jitter" => self.tta_jitter = parse_value(key, value)?,
            "threshold_bins" => self.threshold_bins = parse_value(key, value)?,
            "threshold_delta" => self.threshold_delta = parse_value(key, value)?,
            "gfp_lambda_min" => self.gfp_lambda_min = parse_value(key, value)?,
            "gfp_lambda_max" => self.gfp_lambda_max = parse_value(key, value)?,
            "gfp_mix_weight" => self.gfp_mix_weight = parse_value(key, value)?,
            "gfp_copies" | "copies" => self.gfp_copies = parse_value(key, value)?,
            "ema_momentum" => self.ema_momentum = parse_value(key, value)?,
            "threshold_momentum" => self.threshold_momentum = parse_value(key, value)?,
            "tau_c_init" => self.tau_c_init = parse_value(key, value)?,
            "refresh_pseudo_labels" => self.refresh_pseudo_labels = parse_bool(key, value)?,
            "selection" | "baseline" => {
                self.selection = match value {
                    "none" | "cabin" => Selection::Cabin,
                    other => other.parse()?,
                }
            }
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Apply a `key = value` file on top of `self`.
    pub fn apply_file_text(&mut self, text: &str) -> Result<()> {
        for (k, v) in parse_pairs(text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    /// Canonical `(key, value)` listing of every field.
    pub fn to_pairs(&self) -> BTreeMap<String, String> {
        let hidden: Vec<String> = self.hidden.iter().map(|h| h.to_string()).collect();
        let f = |x: f64| format!("{x:?}");
        [
            ("seed", self.seed.to_string()),
            ("train_per_class", self.train_per_class.to_string()),
            ("val_per_class", self.val_per_class.to_string()),
            ("small_class_test", self.small_class_test.to_string()),
            ("small_class_val", self.small_class_val.to_string()),
            ("pca_components", self.pca_components.to_string()),
            ("patch_window", self.patch_window.to_string()),
            ("hidden", hidden.join(",")),
            ("pretrain_per_class", self.pretrain_per_class.to_string()),
            ("annotation_ratio", f(self.annotation_ratio)),
            ("lambda_r", f(self.lambda_r)),
            ("lambda_a", f(self.lambda_a)),
            ("gce_q", f(self.gce_q)),
            ("pretrain_epochs", self.pretrain_epochs.to_string()),
            ("retrain_epochs", self.retrain_epochs.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("lr", f(self.lr)),
            ("weight_decay_pretrain", f(self.weight_decay_pretrain)),
            ("weight_decay_retrain", f(self.weight_decay_retrain)),
            ("tta_transforms", self.tta_transforms.to_string()),
            ("tta_jitter", f(self.tta_jitter)),
            ("threshold_bins", self.threshold_bins.to_string()),
            ("threshold_delta", f(self.threshold_delta)),
            ("gfp_lambda_min", f(self.gfp_lambda_min)),
            ("gfp_lambda_max", f(self.gfp_lambda_max)),
            ("gfp_mix_weight", f(self.gfp_mix_weight)),
            ("gfp_copies", self.gfp_copies.to_string()),
            ("ema_momentum", f(self.ema_momentum)),
            ("threshold_momentum", f(self.threshold_momentum)),
            ("tau_c_init", f(self.tau_c_init)),
            ("refresh_pseudo_labels", self.refresh_pseudo_labels.to_string()),
            ("selection", self.selection.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    /// Short hex digest of every field except the seed.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.to_pairs() {
            if k != "seed" {
                h.update(format!("{k} = {v}\n"));
            }
        }
        h.finalize().iter().take(6).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..=1.0).contains(&self.annotation_ratio) {
            return bad(format!("annotation_ratio must be in [0, 1], got {}", self.annotation_ratio));
        }
        if !(self.lambda_r >= 0.0 && self.lambda_a >= 0.0) {
            return bad("lambda_r and lambda_a must be >= 0".into());
        }
        if !(self.gce_q > 0.0 && self.gce_q <= 1.0) {
            return bad(format!("gce_q must be in (0, 1], got {}", self.gce_q));
        }
        if self.patch_window.is_multiple_of(2) {
            return bad(format!("patch_window must be odd, got {}", self.patch_window));
        }
        if self.batch_size == 0 || self.pca_components == 0 || self.tta_transforms == 0 {
            return bad("batch_size, pca_components and tta_transforms must be >= 1".into());
        }
        if self.threshold_bins < 3 {
            return bad("threshold_bins must be >= 3".into());
        }
        if !(0.0..1.0).contains(&self.ema_momentum) || !(0.0..1.0).contains(&self.threshold_momentum) {
            return bad("momenta must be in [0, 1)".into());
        }
        if !(0.0..=1.0).contains(&self.tau_c_init) {
            return bad("tau_c_init must be in [0, 1]".into());
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be >= 1".into());
        }
        if !(0.0 <= self.gfp_lambda_min && self.gfp_lambda_min <= self.gfp_lambda_max) {
            return bad("need 0 <= gfp_lambda_min <= gfp_lambda_max".into());
        }
        if !(0.0..=1.0).contains(&self.gfp_mix_weight) {
            return bad("gfp_mix_weight must be in [0, 1]".into());
        }
        Ok(())
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_per_class: self.train_per_class,
            val_per_class: self.val_per_class,
            small_class_test: self.small_class_test,
            small_class_val: self.small_class_val,
            seed: self.seed,
        }
    }

    pub fn adamw(&self, weight_decay: f64) -> AdamWConfig {
        AdamWConfig { lr: self.lr, weight_decay, ..AdamWConfig::default() }
    }

    pub fn tta(&self, seed: u64) -> TtaConfig {
        TtaConfig {
            num_transforms: self.tta_transforms,
            kinds: TransformKind::ALL.to_vec(),
            jitter_sigma: self.tta_jitter,
            seed,
        }
    }

    pub fn gfp(&self, seed: u64) -> GfpConfig {
        GfpConfig {
            lambda_min: self.gfp_lambda_min,
            lambda_max: self.gfp_lambda_max,
            mix_weight: self.gfp_mix_weight,
            copies_per_sample: self.gfp_copies,
            seed,
        }
    }
}
