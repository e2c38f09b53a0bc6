//! Mean test OA over seeds at several annotation ratios, plus the matched
//! random baseline.
//!
//! ```text
//! cargo run --release --example budget_sweep -- [sigma] [seeds]
//! ```

use std::time::Instant;

use cabin::datacube::{generate_synthetic, SynthSpec};
use cabin::protocol::{run_prepared, PreparedData, ProtocolConfig, Selection};

fn main() -> cabin::Result<()> {
    let mut args = std::env::args().skip(1);
    let sigma: f64 = args.next().map_or(Ok(1.0), |s| s.parse()).expect("sigma");
    let seeds: u64 = args.next().map_or(Ok(5), |s| s.parse()).expect("seeds");
    let start = Instant::now();
    let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
    for seed in 0..seeds {
        let (cube, labels) = generate_synthetic(SynthSpec {
            height: 64,
            width: 64,
            bands: 16,
            num_classes: 4,
            noise_sigma: sigma,
            seed,
        })?;
        let mut config = ProtocolConfig { seed, ..ProtocolConfig::default() };
        let data = PreparedData::prepare(&cube, &labels, &config)?;
        let runs = [
            ("ratio 0.00", 0.0, Selection::Cabin),
            ("ratio 0.25", 0.25, Selection::Cabin),
            ("ratio 0.50", 0.5, Selection::Cabin),
            ("ratio 1.00", 1.0, Selection::Cabin),
            ("random 0.50", 0.5, Selection::Random),
        ];
        for (i, (name, ratio, selection)) in runs.into_iter().enumerate() {
            config.annotation_ratio = ratio;
            config.selection = selection;
            let out = run_prepared(&config, &data)?;
            if i == 0 {
                if rows.is_empty() {
                    rows.push(("pretrain".into(), Vec::new()));
                }
                rows[0].1.push(out.report.pretrain_test_oa);
            }
            match rows.iter_mut().find(|r| r.0 == name) {
                Some(r) => r.1.push(out.report.metrics.oa),
                None => rows.push((name.into(), vec![out.report.metrics.oa])),
            }
        }
    }
    println!("sigma {sigma}, {seeds} seeds, {:.1}s", start.elapsed().as_secs_f64());
    for (name, oas) in &rows {
        let mean = oas.iter().sum::<f64>() / oas.len() as f64;
        println!("{name:<12} mean OA {:6.2}%", 100.0 * mean);
    }
    Ok(())
}
