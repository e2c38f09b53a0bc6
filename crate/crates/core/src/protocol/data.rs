use rayon::prelude::*;

use super::ProtocolConfig;
use crate::datacube::{extract_patch, make_split, DatasetSplit, HyperCube, LabelMap, PcaModel};
use crate::error::{arg, Result};
use crate::evidential::PatchShape;

/// A scene ready for training: PCA-reduced, rescaled, patched and split.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub labels: LabelMap,
    pub split: DatasetSplit,
    pub shape: PatchShape,
    /// Band count actually kept after capping `pca_components`.
    pub components: usize,
    features: Vec<f64>,
}

impl PreparedData {
    /// Reduce to the leading principal components (capped at the band count),
    /// divide by the root mean retained variance, and extract a mirror-padded
    /// patch around every pixel.
    pub fn prepare(cube: &HyperCube, labels: &LabelMap, config: &ProtocolConfig) -> Result<Self> {
        if cube.height() != labels.height() || cube.width() != labels.width() {
            return arg(format!(
                "cube is {}x{} but labels are {}x{}",
                cube.height(),
                cube.width(),
                labels.height(),
                labels.width()
            ));
        }
        let components = config.pca_components.min(cube.bands()).min(cube.pixels());
        let model = PcaModel::fit(cube)?;
        let reduced = model.project(cube, components)?;
        let retained: f64 = model.eigen.values[..components].iter().map(|v| v.max(0.0)).sum();
        let scale = (retained / components as f64).sqrt();
        let scale = if scale > 0.0 { scale } else { 1.0 };
        let scaled = HyperCube::new(
            reduced.height(),
            reduced.width(),
            components,
            reduced.values().iter().map(|v| v / scale).collect(),
        )?;
        let shape = PatchShape { window: config.patch_window, bands: components };
        let patches = (0..scaled.pixels())
            .into_par_iter()
            .map(|p| extract_patch(&scaled, labels.row_col(p), config.patch_window).map(|x| x.values))
            .collect::<Result<Vec<_>>>()?;
        let features = patches.concat();
        let split = make_split(labels, &config.split_spec())?;
        Ok(Self { labels: labels.clone(), split, shape, components, features })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.num_classes()
    }

    pub fn pixels(&self) -> usize {
        self.labels.height() * self.labels.width()
    }

    /// Flattened patch of pixel `id`.
    pub fn features(&self, id: usize) -> &[f64] {
        let d = self.dim();
        &self.features[id * d..(id + 1) * d]
    }

    /// Zero-based class of pixel `id`; `None` for unlabeled pixels.
    pub fn class_of(&self, id: usize) -> Option<usize> {
        self.labels.get(id).checked_sub(1)
    }
}
