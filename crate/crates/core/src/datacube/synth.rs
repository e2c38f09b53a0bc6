use super::{HyperCube, LabelMap};
use crate::error::{arg, Result};
use crate::rng::SplitMix64;

const MAX_SITE_DRAWS: usize = 1000;

/// Parameters of a synthetic Voronoi scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub num_classes: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Mean spectrum of class `class` (0-based): a half-sine bump over the
/// class's own contiguous block of bands, zero elsewhere. Blocks are
/// disjoint, so templates are mutually orthogonal.
pub fn class_template(class: usize, num_classes: usize, bands: usize) -> Vec<f64> {
    let start = class * bands / num_classes;
    let end = (class + 1) * bands / num_classes;
    let len = end - start;
    let mut t = vec![0.0; bands];
    for (j, v) in t[start..end].iter_mut().enumerate() {
        *v = (std::f64::consts::PI * (j + 1) as f64 / (len + 1) as f64).sin();
    }
    t
}

/// Generate a scene of `num_classes` Voronoi regions with class templates
/// plus i.i.d. Gaussian noise. Every class covers at least 1% of the pixels.
pub fn generate_synthetic(spec: SynthSpec) -> Result<(HyperCube, LabelMap)> {
    let SynthSpec { height, width, bands, num_classes, noise_sigma, seed } = spec;
    if num_classes < 2 {
        return arg(format!("num_classes must be >= 2, got {num_classes}"));
    }
    if height == 0 || width == 0 || num_classes > height * width {
        return arg(format!("cannot place {num_classes} classes in a {height}x{width} grid"));
    }
    if bands < num_classes {
        return arg(format!("bands ({bands}) must be >= num_classes ({num_classes})"));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return arg(format!("noise_sigma must be finite and >= 0, got {noise_sigma}"));
    }

    let pixels = height * width;
    let min_share = (pixels as f64 * 0.01).ceil().max(1.0) as usize;
    let mut site_rng = SplitMix64::derive(seed, 1);
    let mut labels = None;
    for _ in 0..MAX_SITE_DRAWS {
        let sites: Vec<(f64, f64)> = (0..num_classes)
            .map(|_| (site_rng.next_f64() * height as f64, site_rng.next_f64() * width as f64))
            .collect();
        let map = voronoi(height, width, &sites);
        let mut counts = vec![0usize; num_classes + 1];
        for &l in &map {
            counts[l] += 1;
        }
        if counts[1..].iter().all(|&c| c >= min_share) {
            labels = Some(map);
            break;
        }
    }
    let labels = match labels {
        Some(l) => l,
        None => return arg("could not draw Voronoi sites giving every class >= 1% of pixels"),
    };

    let templates: Vec<Vec<f64>> =
        (0..num_classes).map(|k| class_template(k, num_classes, bands)).collect();
    let mut noise_rng = SplitMix64::derive(seed, 2);
    let mut values = Vec::with_capacity(pixels * bands);
    for &l in &labels {
        for &t in &templates[l - 1] {
            let eps = if noise_sigma > 0.0 { noise_sigma * noise_rng.normal() } else { 0.0 };
            values.push(t + eps);
        }
    }
    Ok((
        HyperCube::new(height, width, bands, values)?,
        LabelMap::new(height, width, num_classes, labels)?,
    ))
}

fn voronoi(height: usize, width: usize, sites: &[(f64, f64)]) -> Vec<usize> {
    let mut out = Vec::with_capacity(height * width);
    for r in 0..height {
        for c in 0..width {
            let (y, x) = (r as f64 + 0.5, c as f64 + 0.5);
            let mut best = (f64::INFINITY, 0);
            for (k, &(sy, sx)) in sites.iter().enumerate() {
                let d = (y - sy).powi(2) + (x - sx).powi(2);
                if d < best.0 {
                    best = (d, k);
                }
            }
            out.push(best.1 + 1);
        }
    }
    out
}
