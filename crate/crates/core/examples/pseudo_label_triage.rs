//! Sort pseudo-labels with smoothed evidence gaps, first on a synthetic
//! drift stream and then on a handful of explicit records.
//!
//! ```text
//! cargo run --example pseudo_label_triage
//! ```

use cabin::fdas::{triage, update_thresholds, DriftStream, FdasThresholds, TriageRecord};

fn main() -> cabin::Result<()> {
    let stream = DriftStream::default();
    println!("easy vs hard samples, mean smoothed evidence gap");
    for e in stream.simulate(30, 0.9)?.iter().step_by(5) {
        println!("epoch {:2}  easy {:7.3}  hard {:7.3}", e.epoch, e.easy_gap, e.hard_gap);
    }

    let records = [
        TriageRecord { id: 0, confidence: 0.95, gap: 12.0 },
        TriageRecord { id: 1, confidence: 0.93, gap: 0.4 },
        TriageRecord { id: 2, confidence: 0.55, gap: 9.0 },
        TriageRecord { id: 3, confidence: 0.40, gap: 0.2 },
    ];
    let c: Vec<f64> = records.iter().map(|r| r.confidence).collect();
    let g: Vec<f64> = records.iter().map(|r| r.gap).collect();
    let th = update_thresholds(&FdasThresholds::default(), &c, &g)?;
    println!("tau_c {:.3}  tau_e {:.3}", th.confidence, th.gap());
    let t = triage(&records, &th);
    println!("reliable {:?}  ambiguous {:?}  noisy {:?}", t.reliable, t.ambiguous, t.noisy);
    Ok(())
}
