mod common;

use cabin::rng::SplitMix64;
use cabin::ugdss::{
    adaptive_threshold, drqs_select, feature_variance, gfp_augment, histogram, kmeans, partition_pool, percentile,
    perturbation_scale, scan_histogram, GfpConfig, GfpSource, GfpStats, LedgerEntry, UncertaintyLedger, DEFAULT_BINS,
};
use cabin::Error;
use common::{exhaustive_clustering, scan_oracle};
use proptest::prelude::*;

fn ledger(us: &[f64]) -> UncertaintyLedger {
    UncertaintyLedger::new(
        us.iter().enumerate().map(|(id, &u)| LedgerEntry { id, uncertainty: u, embedding: vec![u] }).collect(),
    )
    .unwrap()
}

#[test]
fn scan_examples() {
    // Falls at n = 1, where the first difference is positive, so nothing qualifies.
    assert_eq!(scan_histogram(&[6, 1, 4, 2, 1], 0.0), None);
    assert_eq!(scan_histogram(&[10, 9, 7], 0.0), Some(0));
    assert_eq!(scan_histogram(&[1, 2, 3, 4, 5], 0.0), None);
    assert_eq!(scan_histogram(&[1, 2, 3, 4, 5], 2.0), None);
    assert_eq!(scan_histogram(&[3, 3, 2, 0], 0.5), Some(0));
    assert_eq!(scan_histogram(&[5, 5], 0.0), None);
}

#[test]
fn fallback_uses_seventy_fifth_percentile() {
    let us: Vec<f64> = (0..40).map(|i| i as f64 / 39.0).collect();
    let t = adaptive_threshold(&ledger(&us), DEFAULT_BINS, 0.0).unwrap();
    assert!(t.fallback_used && t.bin.is_none());
    assert!((t.threshold - 0.75).abs() < 1e-12);
    assert_eq!(percentile(&[4.0, 1.0, 3.0, 2.0], 0.75), 3.25);
}

#[test]
fn threshold_is_right_edge_of_qualifying_bin() {
    // Counts fall 4 -> 3 -> 1: the drop accelerates after bin 0.
    let us = [0.0, 0.05, 0.1, 0.15, 0.3, 0.35, 0.4, 0.6, 1.0];
    let t = adaptive_threshold(&ledger(&us), 4, 0.0).unwrap();
    assert_eq!(t.bin_counts, vec![4, 3, 1, 1]);
    assert_eq!(t.bin, Some(0));
    assert_eq!(t.threshold, t.bin_edges[1]);
    assert_eq!(t.threshold, 0.25);
}

#[test]
fn degenerate_and_bad_inputs() {
    assert!(matches!(adaptive_threshold(&ledger(&[0.4; 5]), 32, 0.0), Err(Error::Degenerate(_))));
    assert!(adaptive_threshold(&ledger(&[0.1, 0.2]), 2, 0.0).is_err());
    let dup = vec![
        LedgerEntry { id: 1, uncertainty: 0.1, embedding: vec![] },
        LedgerEntry { id: 1, uncertainty: 0.2, embedding: vec![] },
    ];
    assert!(UncertaintyLedger::new(dup).is_err());
    assert!(UncertaintyLedger::new(vec![LedgerEntry { id: 0, uncertainty: 1.5, embedding: vec![] }]).is_err());
}

#[test]
fn partition_example() {
    let (high, confident) = partition_pool(&ledger(&[0.1, 0.5, 0.9]), 0.5);
    assert_eq!(high, vec![1, 2]);
    assert_eq!(confident, vec![0]);
}

#[test]
fn normalized_uncertainty() {
    let n = ledger(&[0.2, 0.6, 0.4]).normalized();
    assert_eq!(&n[..2], &[0.0, 1.0]);
    assert!((n[2] - 0.5).abs() < 1e-15);
    assert_eq!(ledger(&[0.3, 0.3]).normalized(), vec![0.0, 0.0]);
}

fn cands(points: &[(f64, f64)]) -> Vec<(usize, Vec<f64>)> {
    points.iter().enumerate().map(|(i, &(x, y))| (i * 10, vec![x, y])).collect()
}

#[test]
fn drqs_examples() {
    let c = cands(&[(0.0, 0.0), (0.1, 0.0), (5.0, 5.0), (5.1, 5.0)]);
    let mut s = drqs_select(&c, 2, 3).unwrap().selected_ids;
    s.sort_unstable();
    // Both members of each pair are equidistant from its centroid; the smaller id wins.
    assert_eq!(s, vec![0, 20]);
    assert_eq!(drqs_select(&c, 4, 3).unwrap().selected_ids, vec![0, 10, 20, 30]);
    // Mean (3.275, 2.25) is nearest (3, 0).
    let one = drqs_select(&cands(&[(0.0, 0.0), (3.0, 0.0), (1.1, 0.0), (9.0, 9.0)]), 1, 0).unwrap();
    assert_eq!(one.selected_ids, vec![10]);
    assert!(matches!(drqs_select(&c, 0, 0), Err(Error::Selection(_))));
    assert!(matches!(drqs_select(&[], 1, 0), Err(Error::Selection(_))));
}

#[test]
fn kmeans_is_seed_deterministic() {
    let mut rng = SplitMix64::new(4);
    let pts: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.normal(), rng.normal()]).collect();
    assert_eq!(kmeans(&pts, 4, 9, 5).unwrap(), kmeans(&pts, 4, 9, 5).unwrap());
}

fn stats_for(pool: &[Vec<f64>]) -> GfpStats {
    let rows: Vec<&[f64]> = pool.iter().map(|r| r.as_slice()).collect();
    GfpStats::new(&rows, &rows).unwrap()
}

fn source(id: usize, u: f64, features: Vec<f64>) -> GfpSource {
    let dim = features.len();
    GfpSource { id, uncertainty: u, features, label: 2, local_var: vec![0.5; dim] }
}

#[test]
fn perturbation_scale_examples() {
    let cfg = GfpConfig { lambda_min: 0.1, lambda_max: 0.5, ..GfpConfig::default() };
    assert_eq!(perturbation_scale(&cfg, 0.0), 0.1);
    assert_eq!(perturbation_scale(&cfg, 1.0), 0.5);
    assert!((perturbation_scale(&cfg, 0.5) - 0.3).abs() < 1e-15);
}

#[test]
fn zero_lambda_and_zero_copies() {
    let pool = vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![-1.0, 1.0]];
    let stats = stats_for(&pool);
    let src = [source(3, 0.7, vec![0.5, 1.0])];
    let cfg = GfpConfig { lambda_min: 0.0, lambda_max: 0.0, copies_per_sample: 3, ..GfpConfig::default() };
    let out = gfp_augment(&src, &stats, &cfg).unwrap();
    assert_eq!(out.len(), 3);
    for a in &out {
        assert_eq!(a.features, src[0].features);
        assert_eq!((a.source_id, a.label, a.lambda), (3, 2, 0.0));
    }
    let none = GfpConfig { copies_per_sample: 0, ..GfpConfig::default() };
    assert!(gfp_augment(&src, &stats, &none).unwrap().is_empty());
    let bad = GfpConfig { lambda_min: 0.6, lambda_max: 0.5, ..GfpConfig::default() };
    assert!(gfp_augment(&src, &stats, &bad).is_err());
}

#[test]
fn larger_uncertainty_spreads_copies_further() {
    let pool = vec![vec![-100.0; 3], vec![100.0; 3]];
    let stats = GfpStats { global_var: vec![1.0; 3], ..stats_for(&pool) };
    let spread = |u: f64| {
        let cfg = GfpConfig { copies_per_sample: 400, seed: 5, ..GfpConfig::default() };
        let out = gfp_augment(&[source(0, u, vec![0.0; 3])], &stats, &cfg).unwrap();
        out.iter().flat_map(|a| a.features.iter()).map(|x| x * x).sum::<f64>() / 1200.0
    };
    let (lo, mid, hi) = (spread(0.0), spread(0.5), spread(1.0));
    assert!(lo < mid && mid < hi);
    // Expected variance is lambda^2 * (0.5 * 0.5 + 0.5 * 1.0).
    assert!((hi / (0.25 * 0.75) - 1.0).abs() < 0.15);
}

#[test]
fn feature_variance_is_population_variance() {
    let rows: Vec<&[f64]> = vec![&[1.0, 0.0], &[3.0, 0.0]];
    assert_eq!(feature_variance(&rows, 2), vec![1.0, 0.0]);
    assert_eq!(feature_variance(&[], 3), vec![0.0; 3]);
}

#[test]
fn histogram_puts_max_in_last_bin() {
    let (edges, counts) = histogram(&[0.0, 0.5, 1.0], 4);
    assert_eq!(edges, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    assert_eq!(counts, vec![1, 0, 1, 1]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn scan_agrees_with_integer_oracle(h in prop::collection::vec(0usize..20, 0..12), delta in -3.0f64..3.0) {
        prop_assert_eq!(scan_histogram(&h, delta), scan_oracle(&h, delta));
    }

    #[test]
    fn partition_is_exact(us in prop::collection::vec(0.0f64..=1.0, 1..60), t in 0.0f64..=1.0) {
        let l = ledger(&us);
        let (high, confident) = partition_pool(&l, t);
        prop_assert_eq!(high.len() + confident.len(), us.len());
        prop_assert!(high.iter().all(|&i| us[i] >= t));
        prop_assert!(confident.iter().all(|&i| us[i] < t));
    }

    #[test]
    fn threshold_within_range(us in prop::collection::vec(0.0f64..=1.0, 2..80)) {
        let lo = us.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = us.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assume!(lo < hi);
        let t = adaptive_threshold(&ledger(&us), DEFAULT_BINS, 0.0).unwrap();
        prop_assert!(t.threshold >= lo && t.threshold <= hi);
        prop_assert_eq!(t.bin_counts.iter().sum::<usize>(), us.len());
        prop_assert_eq!(t.fallback_used, t.bin.is_none());
    }

    #[test]
    fn drqs_matches_exhaustive_on_tiny_sets(seed in 0u64..100_000) {
        let mut rng = SplitMix64::new(seed);
        let n = 2 + rng.below(5) as usize;
        let m = 1 + rng.below(n.min(3) as u64) as usize;
        let points: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.normal(), rng.normal()]).collect();
        let ids: Vec<usize> = (0..n).map(|i| 3 * i + 1).collect();
        let cands: Vec<(usize, Vec<f64>)> = ids.iter().cloned().zip(points.iter().cloned()).collect();
        let mut got = drqs_select(&cands, m, seed).unwrap().selected_ids;
        got.sort_unstable();
        let (_, want) = exhaustive_clustering(&ids, &points, m);
        prop_assert_eq!(got, want);
    }

    #[test]
    fn gfp_copies_stay_in_pool_range(seed in 0u64..10_000, u in 0.0f64..=1.0, copies in 0usize..6) {
        let mut rng = SplitMix64::new(seed);
        let pool: Vec<Vec<f64>> = (0..8).map(|_| (0..4).map(|_| rng.normal()).collect()).collect();
        let stats = GfpStats { global_var: vec![25.0; 4], ..stats_for(&pool) };
        let cfg = GfpConfig { copies_per_sample: copies, seed, lambda_max: 1.0, ..GfpConfig::default() };
        let out = gfp_augment(&[source(0, u, pool[0].clone())], &stats, &cfg).unwrap();
        prop_assert_eq!(out.len(), copies);
        for a in &out {
            for (j, x) in a.features.iter().enumerate() {
                prop_assert!(*x >= stats.feature_min[j] && *x <= stats.feature_max[j]);
            }
        }
    }
}
