//! Score a noisy prediction map and render both maps as PPM images.
//!
//! ```text
//! cargo run --example metrics_and_maps -- [out_dir]
//! ```

use std::fs;
use std::path::PathBuf;

use cabin::datacube::{generate_synthetic, SynthSpec};
use cabin::metrics::{compute_metrics, confusion, default_palette, render_class_map, render_uncertainty_map};
use cabin::rng::SplitMix64;

fn main() -> cabin::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "maps".into()));
    let (_, labels) = generate_synthetic(SynthSpec {
        height: 32,
        width: 32,
        bands: 4,
        num_classes: 4,
        noise_sigma: 0.0,
        seed: 3,
    })?;
    // Flip 15% of pixels to a random class.
    let mut rng = SplitMix64::new(3);
    let mut flipped = vec![0.0; labels.labels().len()];
    let pred: Vec<usize> = labels
        .labels()
        .iter()
        .zip(flipped.iter_mut())
        .map(|(&l, f)| {
            if rng.next_f64() < 0.15 {
                *f = 1.0;
                1 + rng.below(4) as usize
            } else {
                l
            }
        })
        .collect();
    let report = compute_metrics(&confusion(labels.labels(), &pred, 4)?)?;
    println!("{}", serde_json::to_string_pretty(&report)?);

    fs::create_dir_all(&out)?;
    let palette = default_palette(4);
    fs::write(out.join("truth.ppm"), render_class_map(labels.labels(), 32, 32, &palette)?)?;
    fs::write(out.join("pred.ppm"), render_class_map(&pred, 32, 32, &palette)?)?;
    fs::write(out.join("flipped.ppm"), render_uncertainty_map(&flipped, 32, 32)?)?;
    println!("wrote truth.ppm, pred.ppm, flipped.ppm to {}", out.display());
    Ok(())
}
