//! Generate a synthetic Voronoi scene, reduce it with PCA, and cut a patch.
//!
//! ```text
//! cargo run --example synthetic_scene
//! ```

use cabin::datacube::{extract_patch, generate_synthetic, make_split, PcaModel, SplitSpec, SynthSpec};

fn main() -> cabin::Result<()> {
    let spec = SynthSpec { height: 32, width: 32, bands: 16, num_classes: 4, noise_sigma: 0.5, seed: 1 };
    let (cube, labels) = generate_synthetic(spec)?;
    for c in 1..=labels.num_classes() {
        println!("class {c}: {} pixels", labels.class_members(c).len());
    }

    let pca = PcaModel::fit(&cube)?;
    let total: f64 = pca.eigen.values.iter().sum();
    let lead: f64 = pca.eigen.values[..4].iter().sum();
    println!("top 4 of {} components keep {:.1}% of the variance", cube.bands(), 100.0 * lead / total);
    let reduced = pca.project(&cube, 4)?;

    let patch = extract_patch(&reduced, (0, 0), 5)?;
    println!("corner patch: {} values ({}x{}x{})", patch.values.len(), patch.window, patch.window, patch.bands);

    let split = make_split(&labels, &SplitSpec { seed: 1, ..SplitSpec::default() })?;
    println!(
        "split: {} train, {} val, {} test",
        split.train_ids.len(),
        split.val_ids.len(),
        split.test_ids.len()
    );
    Ok(())
}
