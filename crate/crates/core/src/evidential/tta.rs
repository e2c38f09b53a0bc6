use super::{forward, MlpParams};
use crate::error::{arg, Result};
use crate::rng::SplitMix64;

/// Geometry of a flattened `(row, col, band)` patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchShape {
    pub window: usize,
    pub bands: usize,
}

impl PatchShape {
    pub fn len(&self) -> usize {
        self.window * self.window * self.bands
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransformKind {
    Identity,
    HFlip,
    VFlip,
    Rot90,
    Jitter,
}

impl TransformKind {
    pub const ALL: [TransformKind; 5] =
        [Self::Identity, Self::HFlip, Self::VFlip, Self::Rot90, Self::Jitter];
}

/// A concrete transform; jitter carries its pre-drawn per-band offsets.
#[derive(Debug, Clone, PartialEq)]
pub enum Transform {
    Identity,
    HFlip,
    VFlip,
    Rot90,
    Jitter(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TtaConfig {
    pub num_transforms: usize,
    pub kinds: Vec<TransformKind>,
    /// Standard deviation of the per-band spectral offset.
    pub jitter_sigma: f64,
    pub seed: u64,
}

impl Default for TtaConfig {
    fn default() -> Self {
        Self { num_transforms: 8, kinds: TransformKind::ALL.to_vec(), jitter_sigma: 0.01, seed: 0 }
    }
}

impl TtaConfig {
    pub fn identity() -> Self {
        Self { num_transforms: 1, kinds: vec![TransformKind::Identity], ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.num_transforms == 0 {
            return arg("TTA needs at least one transform");
        }
        if self.kinds.is_empty() {
            return arg("TTA transform kind set is empty");
        }
        if !(self.jitter_sigma >= 0.0 && self.jitter_sigma.is_finite()) {
            return arg(format!("jitter sigma must be >= 0, got {}", self.jitter_sigma));
        }
        Ok(())
    }
}

/// Draw `cfg.num_transforms` transforms uniformly from `cfg.kinds`.
pub fn draw_transforms(cfg: &TtaConfig, shape: PatchShape) -> Result<Vec<Transform>> {
    cfg.validate()?;
    let mut rng = SplitMix64::derive(cfg.seed, 0x77A);
    Ok((0..cfg.num_transforms)
        .map(|_| match cfg.kinds[rng.below(cfg.kinds.len() as u64) as usize] {
            TransformKind::Identity => Transform::Identity,
            TransformKind::HFlip => Transform::HFlip,
            TransformKind::VFlip => Transform::VFlip,
            TransformKind::Rot90 => Transform::Rot90,
            TransformKind::Jitter => {
                Transform::Jitter((0..shape.bands).map(|_| cfg.jitter_sigma * rng.normal()).collect())
            }
        })
        .collect())
}

/// Apply a transform to a flattened patch. Spatial transforms permute pixel
/// positions on the `S x S` grid; jitter adds its offset to every pixel's band.
pub fn apply_transform(t: &Transform, patch: &[f64], shape: PatchShape) -> Vec<f64> {
    let s = shape.window;
    let b = shape.bands;
    let remap = |src: &dyn Fn(usize, usize) -> (usize, usize)| {
        let mut out = Vec::with_capacity(patch.len());
        for r in 0..s {
            for c in 0..s {
                let (sr, sc) = src(r, c);
                let at = (sr * s + sc) * b;
                out.extend_from_slice(&patch[at..at + b]);
            }
        }
        out
    };
    match t {
        Transform::Identity => patch.to_vec(),
        Transform::HFlip => remap(&|r, c| (r, s - 1 - c)),
        Transform::VFlip => remap(&|r, c| (s - 1 - r, c)),
        Transform::Rot90 => remap(&|r, c| (c, s - 1 - r)),
        Transform::Jitter(offsets) => patch
            .chunks_exact(b)
            .flat_map(|px| px.iter().zip(offsets).map(|(x, o)| x + o))
            .collect(),
    }
}

/// Mean epistemic uncertainty over an explicit transform list. The values are
/// summed in sorted order, so the result does not depend on list order.
pub fn tta_uncertainty_with(
    params: &MlpParams,
    patch: &[f64],
    shape: PatchShape,
    transforms: &[Transform],
) -> Result<f64> {
    if transforms.is_empty() {
        return arg("TTA needs at least one transform");
    }
    if patch.len() != shape.len() {
        return arg(format!("patch length {} does not match shape {shape:?}", patch.len()));
    }
    let mut us = transforms
        .iter()
        .map(|t| forward(params, &apply_transform(t, patch, shape)).map(|(o, _)| o.uncertainty))
        .collect::<Result<Vec<f64>>>()?;
    us.sort_by(f64::total_cmp);
    Ok(us.iter().sum::<f64>() / us.len() as f64)
}

/// Uncertainty averaged over `cfg.num_transforms` seeded spectral-spatial
/// variants of `patch`.
pub fn tta_uncertainty(params: &MlpParams, patch: &[f64], shape: PatchShape, cfg: &TtaConfig) -> Result<f64> {
    let transforms = draw_transforms(cfg, shape)?;
    tta_uncertainty_with(params, patch, shape, &transforms)
}
