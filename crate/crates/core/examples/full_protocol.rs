//! The whole pipeline on one synthetic scene: pretrain, sample, retrain with
//! pseudo-label triage, and evaluate.
//!
//! ```text
//! cargo run --release --example full_protocol -- [seed]
//! ```

use cabin::datacube::{generate_synthetic, SynthSpec};
use cabin::protocol::{run_experiment, ProtocolConfig};

fn main() -> cabin::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(Ok(0), |s| s.parse()).expect("seed must be an integer");
    let (cube, labels) = generate_synthetic(SynthSpec {
        height: 64,
        width: 64,
        bands: 16,
        num_classes: 4,
        noise_sigma: 1.8,
        seed,
    })?;
    let config = ProtocolConfig { seed, ..ProtocolConfig::default() };
    let out = run_experiment(&config, &cube, &labels)?;
    let r = &out.report;
    println!(
        "pool {} | seeds {} | annotated {} | copies {} | pseudo {}",
        r.pool_size, r.seed_count, r.annotation_count, r.augmented_count, r.pseudo_count
    );
    println!("pretrain test OA {:.4}", r.pretrain_test_oa);
    for e in r.epochs.iter().step_by(20) {
        let triage = e
            .triage
            .as_ref()
            .map_or("-".to_string(), |t| format!("{}/{}/{}", t.reliable, t.ambiguous, t.noisy));
        println!("epoch {:3} loss {:.4} val {:.4} reliable/ambiguous/noisy {triage}", e.epoch, e.loss, e.val_oa);
    }
    println!("final OA {:.4} AA {:.4} kappa {:.4}", r.metrics.oa, r.metrics.aa, r.metrics.kappa);
    Ok(())
}
