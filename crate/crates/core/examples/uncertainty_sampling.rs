//! One sampling round on a pretrained model: adaptive threshold, diverse
//! query, and perturbed copies of the queried samples.
//!
//! ```text
//! cargo run --release --example uncertainty_sampling
//! ```

use cabin::datacube::{generate_synthetic, SynthSpec};
use cabin::protocol::{pretrain, sampling_round, PreparedData, ProtocolConfig};

fn main() -> cabin::Result<()> {
    let (cube, labels) = generate_synthetic(SynthSpec {
        height: 48,
        width: 48,
        bands: 16,
        num_classes: 4,
        noise_sigma: 1.2,
        seed: 2,
    })?;
    let config = ProtocolConfig { seed: 2, train_per_class: 40, pretrain_epochs: 40, ..ProtocolConfig::default() };
    let data = PreparedData::prepare(&cube, &labels, &config)?;
    let pre = pretrain(&config, &data)?;
    let us = pre.ledger.uncertainties();
    let (lo, hi) = us.iter().fold((1.0f64, 0.0f64), |(lo, hi), &u| (lo.min(u), hi.max(u)));
    println!("pool of {} pixels, TTA uncertainty in [{lo:.3}, {hi:.3}]", us.len());

    let out = sampling_round(&config, &data, &pre.params, &pre.ledger)?;
    let r = &out.report;
    println!("threshold {:.4} (fallback: {})", r.threshold, r.fallback_used);
    println!("{} high-uncertainty, {} confident", r.high_uncertainty_count, r.confident_count);
    println!("requested {} annotations, queried {}: {:?}", r.requested_budget, r.budget, r.selected_ids);
    let (lmin, lmax) = r.lambdas.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &l| (a.min(l), b.max(l)));
    println!("{} perturbed copies, lambda in [{lmin:.3}, {lmax:.3}]", out.augmented.len());
    println!("{} pixels pseudo-labelled", out.pseudo.len());
    Ok(())
}
