use super::HyperCube;
use crate::error::{arg, Result};

/// An `S x S x B` window around a pixel, flattened in `(row, col, band)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub center: (usize, usize),
    pub window: usize,
    pub bands: usize,
    pub values: Vec<f64>,
    pub label: Option<usize>,
}

/// Reflect an out-of-range coordinate back into `0..len` without repeating
/// the edge sample (`-1 -> 1`, `len -> len - 2`).
fn mirror(i: isize, len: usize) -> usize {
    let n = len as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - m;
    }
    m as usize
}

/// Extract the window of odd size `window` centred on `center`, mirror-padding
/// at the image borders.
pub fn extract_patch(cube: &HyperCube, center: (usize, usize), window: usize) -> Result<Patch> {
    if window.is_multiple_of(2) {
        return arg(format!("patch window must be odd, got {window}"));
    }
    let (row, col) = center;
    if row >= cube.height() || col >= cube.width() {
        return arg(format!("center {center:?} outside {}x{} image", cube.height(), cube.width()));
    }
    let half = (window / 2) as isize;
    let mut values = Vec::with_capacity(window * window * cube.bands());
    for dr in -half..=half {
        let r = mirror(row as isize + dr, cube.height());
        for dc in -half..=half {
            let c = mirror(col as isize + dc, cube.width());
            values.extend_from_slice(cube.spectrum(r, c));
        }
    }
    Ok(Patch { center, window, bands: cube.bands(), values, label: None })
}
