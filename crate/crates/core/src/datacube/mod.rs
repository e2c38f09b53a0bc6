//! Hyperspectral cubes, label maps, and everything needed to turn them into
//! per-pixel training samples.

mod io;
mod patch;
mod pca;
mod split;
mod synth;

pub use io::{load_cube, load_labels, parse_cube, parse_labels, save_cube, save_labels, write_cube, write_labels};
pub use patch::{extract_patch, Patch};
pub use pca::{jacobi_eigen, pca_reduce, Eigen, PcaModel};
pub use split::{make_split, DatasetSplit, SplitSpec};
pub use synth::{class_template, generate_synthetic, SynthSpec};

use crate::error::{Error, Result};

/// An `height x width x bands` reflectance cube, row-major by `(row, col, band)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperCube {
    height: usize,
    width: usize,
    bands: usize,
    values: Vec<f64>,
}

impl HyperCube {
    pub fn new(height: usize, width: usize, bands: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || bands == 0 {
            return Err(Error::Format(format!("empty cube shape {height}x{width}x{bands}")));
        }
        if values.len() != height * width * bands {
            return Err(Error::Format(format!(
                "cube {height}x{width}x{bands} needs {} values, got {}",
                height * width * bands,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!("non-finite value at index {i}")));
        }
        Ok(Self { height, width, bands, values })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Spectrum of pixel `(row, col)`.
    pub fn spectrum(&self, row: usize, col: usize) -> &[f64] {
        let start = (row * self.width + col) * self.bands;
        &self.values[start..start + self.bands]
    }

    /// Spectrum of the pixel with flat index `row * width + col`.
    pub fn pixel(&self, index: usize) -> &[f64] {
        &self.values[index * self.bands..(index + 1) * self.bands]
    }
}

/// Per-pixel class labels; `0` is unlabeled and `1..=num_classes` are classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    num_classes: usize,
    labels: Vec<usize>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, num_classes: usize, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != height * width {
            return Err(Error::Format(format!(
                "label map {height}x{width} needs {} labels, got {}",
                height * width,
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > num_classes) {
            return Err(Error::Format(format!("label {bad} exceeds class count {num_classes}")));
        }
        Ok(Self { height, width, num_classes, labels })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn get(&self, index: usize) -> usize {
        self.labels[index]
    }

    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.width, index % self.width)
    }

    /// Flat pixel indices of every pixel with class `class`, ascending.
    pub fn class_members(&self, class: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect()
    }
}
