use crate::error::{arg, Result};
use crate::rng::SplitMix64;

/// Gaussian feature perturbation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GfpConfig {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Weight of the local (cluster) variance against the global one.
    pub mix_weight: f64,
    pub copies_per_sample: usize,
    pub seed: u64,
}

impl Default for GfpConfig {
    fn default() -> Self {
        Self { lambda_min: 0.05, lambda_max: 0.5, mix_weight: 0.5, copies_per_sample: 4, seed: 0 }
    }
}

impl GfpConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0 <= self.lambda_min && self.lambda_min <= self.lambda_max && self.lambda_max.is_finite()) {
            return arg(format!("need 0 <= lambda_min <= lambda_max, got {} and {}", self.lambda_min, self.lambda_max));
        }
        if !(0.0..=1.0).contains(&self.mix_weight) {
            return arg(format!("mix weight must be in [0, 1], got {}", self.mix_weight));
        }
        Ok(())
    }
}

/// `lambda_min + (lambda_max - lambda_min) * u` for normalised uncertainty `u`.
pub fn perturbation_scale(cfg: &GfpConfig, normalized_uncertainty: f64) -> f64 {
    cfg.lambda_min + (cfg.lambda_max - cfg.lambda_min) * normalized_uncertainty
}

/// Noise statistics and clamp range shared by every perturbed sample.
#[derive(Debug, Clone, PartialEq)]
pub struct GfpStats {
    /// Per-feature variance over all annotated samples.
    pub global_var: Vec<f64>,
    /// Per-feature minimum over the original pool.
    pub feature_min: Vec<f64>,
    /// Per-feature maximum over the original pool.
    pub feature_max: Vec<f64>,
}

/// Per-feature population variance of a set of rows; zeros for an empty set.
pub fn feature_variance(rows: &[&[f64]], dim: usize) -> Vec<f64> {
    if rows.is_empty() {
        return vec![0.0; dim];
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for r in rows {
        mean.iter_mut().zip(r.iter()).for_each(|(m, x)| *m += x / n);
    }
    let mut var = vec![0.0; dim];
    for r in rows {
        var.iter_mut().zip(r.iter()).zip(&mean).for_each(|((v, x), m)| *v += (x - m) * (x - m) / n);
    }
    var
}

impl GfpStats {
    pub fn new(pool: &[&[f64]], annotated: &[&[f64]]) -> Result<Self> {
        let dim = match pool.first() {
            Some(r) => r.len(),
            None => return arg("GFP statistics need a non-empty pool"),
        };
        let mut feature_min = vec![f64::INFINITY; dim];
        let mut feature_max = vec![f64::NEG_INFINITY; dim];
        for r in pool {
            for ((lo, hi), x) in feature_min.iter_mut().zip(feature_max.iter_mut()).zip(r.iter()) {
                *lo = lo.min(*x);
                *hi = hi.max(*x);
            }
        }
        Ok(Self { global_var: feature_variance(annotated, dim), feature_min, feature_max })
    }
}

/// One annotated sample fed to GFP.
#[derive(Debug, Clone, PartialEq)]
pub struct GfpSource {
    pub id: usize,
    /// Uncertainty min-max normalised over the pool.
    pub uncertainty: f64,
    pub features: Vec<f64>,
    pub label: usize,
    /// Per-feature variance over the sample's cluster.
    pub local_var: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSample {
    pub source_id: usize,
    pub features: Vec<f64>,
    pub label: usize,
    pub lambda: f64,
}

/// Produce `copies_per_sample` perturbed copies of every source:
/// `x' = clamp(x + lambda * eta)`, `eta ~ N(0, w var_local + (1 - w) var_global)`.
pub fn gfp_augment(sources: &[GfpSource], stats: &GfpStats, cfg: &GfpConfig) -> Result<Vec<AugmentedSample>> {
    cfg.validate()?;
    let dim = stats.feature_min.len();
    let mut rng = SplitMix64::derive(cfg.seed, 0x6F9);
    let mut out = Vec::with_capacity(sources.len() * cfg.copies_per_sample);
    for src in sources {
        if src.features.len() != dim || src.local_var.len() != dim {
            return arg(format!("GFP source {} has wrong feature length", src.id));
        }
        let lambda = perturbation_scale(cfg, src.uncertainty.clamp(0.0, 1.0));
        let std: Vec<f64> = src
            .local_var
            .iter()
            .zip(&stats.global_var)
            .map(|(l, g)| (cfg.mix_weight * l + (1.0 - cfg.mix_weight) * g).max(0.0).sqrt())
            .collect();
        for _ in 0..cfg.copies_per_sample {
            let features = src
                .features
                .iter()
                .zip(&std)
                .zip(stats.feature_min.iter().zip(&stats.feature_max))
                .map(|((x, s), (lo, hi))| {
                    let noisy = if lambda == 0.0 { *x } else { x + lambda * s * rng.normal() };
                    noisy.clamp(*lo, *hi)
                })
                .collect();
            out.push(AugmentedSample { source_id: src.id, features, label: src.label, lambda });
        }
    }
    Ok(out)
}
