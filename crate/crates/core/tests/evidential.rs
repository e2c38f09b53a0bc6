mod common;

use cabin::evidential::{
    apply_transform, backward, draw_transforms, edl_loss, forward, gce_loss, optim_step, read_checkpoint,
    tta_uncertainty, tta_uncertainty_with, value_and_grad, write_checkpoint, AdamWConfig, EvidenceOutput, Example,
    LossKind, MlpParams, OptimState, PatchShape, Transform, TransformKind, TtaConfig,
};
use cabin::rng::SplitMix64;
use common::{random_params, random_vec};
use proptest::prelude::*;

#[test]
fn injected_evidence() {
    let out = EvidenceOutput::from_evidence(vec![9.0, 0.0, 0.0]).unwrap();
    assert_eq!(out.alpha, vec![10.0, 1.0, 1.0]);
    assert_eq!(out.total, 12.0);
    assert_eq!(out.probs, vec![10.0 / 12.0, 1.0 / 12.0, 1.0 / 12.0]);
    assert_eq!(out.uncertainty, 0.25);
}

#[test]
fn zero_network_is_uniform() {
    let params = MlpParams::zeros(&[4, 3, 3]).unwrap();
    let (out, _) = forward(&params, &[1.0, -2.0, 0.5, 3.0]).unwrap();
    let e = 2f64.ln();
    assert!(out.evidence.iter().all(|&v| (v - e).abs() < 1e-15));
    assert!((out.uncertainty - 3.0 / (3.0 + 3.0 * e)).abs() < 1e-15);
    assert!((out.uncertainty - 0.5906).abs() < 5e-5);
}

#[test]
fn loss_examples() {
    let uniform = EvidenceOutput::from_evidence(vec![0.0; 3]).unwrap();
    assert!((edl_loss(&uniform, 0) - 1.09861).abs() < 5e-6);
    let half = EvidenceOutput::from_evidence(vec![1.0, 1.0]).unwrap();
    let gce = gce_loss(&half, 1, 0.7).unwrap();
    // Independent scalar evaluation: 0.5^0.7 = exp(0.7 ln 0.5).
    let expected = (1.0 - (0.7 * 0.5f64.ln()).exp()) / 0.7;
    assert!((gce - expected).abs() < 1e-15);
    assert!((gce - 0.54918).abs() < 5e-6);
    let skewed = EvidenceOutput::from_evidence(vec![3.0, 0.0, 1.0]).unwrap();
    let p = skewed.probs[2];
    assert!((gce_loss(&skewed, 2, 1.0).unwrap() - (1.0 - p)).abs() < 1e-15);
    assert!(gce_loss(&skewed, 2, 0.0).is_err());
}

#[test]
fn backward_is_mean_gradient_with_unit_over_n_weights() {
    let params = random_params(&[5, 4, 3], 8);
    let mut rng = SplitMix64::new(8);
    let xs: Vec<Vec<f64>> = (0..4).map(|_| random_vec(&mut rng, 5, 1.0)).collect();
    let batch: Vec<Example> = xs.iter().enumerate().map(|(i, x)| Example::new(x, i % 3, LossKind::Edl, 0.25)).collect();
    let g = backward(&params, &batch).unwrap();
    let mut sum = params.zeros_like();
    for ex in &batch {
        let gi = backward(&params, &[Example { weight: 1.0, ..*ex }]).unwrap();
        sum.iter_mut().zip(gi.iter()).for_each(|(s, v)| *s += v / 4.0);
    }
    for (a, b) in g.iter().zip(sum.iter()) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn zero_input_gives_zero_first_layer_gradient() {
    let mut params = random_params(&[7, 5, 4], 2);
    params.layers[0].bias.iter_mut().for_each(|b| *b = 0.0);
    let x = vec![0.0; 7];
    for loss in [LossKind::Edl, LossKind::Gce { q: 0.7 }] {
        let g = backward(&params, &[Example::new(&x, 2, loss, 1.0)]).unwrap();
        assert!(g.layers[0].weights.iter().all(|&w| w == 0.0));
    }
}

#[test]
fn empty_batch_is_rejected() {
    let params = random_params(&[3, 2], 0);
    assert!(value_and_grad(&params, &[]).is_err());
}

#[test]
fn optimizer_fixed_point_and_decay() {
    let mut params = random_params(&[3, 4, 2], 1);
    let before = params.clone();
    let zero = params.zeros_like();
    let mut state = OptimState::new(&params, AdamWConfig::default());
    for _ in 0..5 {
        optim_step(&mut params, &zero, &mut state).unwrap();
    }
    assert_eq!(params, before);

    let cfg = AdamWConfig { lr: 0.01, weight_decay: 0.5, ..AdamWConfig::default() };
    let mut state = OptimState::new(&params, cfg);
    optim_step(&mut params, &zero, &mut state).unwrap();
    for (a, b) in params.iter().zip(before.iter()) {
        assert!((a - b * (1.0 - 0.01 * 0.5)).abs() < 1e-15);
    }
}

#[test]
fn optimizer_matches_scalar_reference() {
    // Scalar AdamW written out longhand, three steps with varying gradients.
    let cfg = AdamWConfig { lr: 0.05, weight_decay: 0.1, ..AdamWConfig::default() };
    let grads = [0.3, -1.2, 0.007];
    let mut params = MlpParams::zeros(&[1, 1]).unwrap();
    params.layers[0].weights[0] = 0.8;
    params.layers[0].bias[0] = -0.4;
    let mut state = OptimState::new(&params, cfg);
    let mut refs = [(0.8f64, 0.0f64, 0.0f64), (-0.4, 0.0, 0.0)];
    for (t, &g) in grads.iter().enumerate() {
        let mut gp = params.zeros_like();
        gp.layers[0].weights[0] = g;
        gp.layers[0].bias[0] = 2.0 * g;
        optim_step(&mut params, &gp, &mut state).unwrap();
        for (i, r) in refs.iter_mut().enumerate() {
            let gi = if i == 0 { g } else { 2.0 * g };
            let (theta, m, v) = *r;
            let theta = theta - 0.05 * 0.1 * theta;
            let m = 0.9 * m + 0.1 * gi;
            let v = 0.999 * v + 0.001 * gi * gi;
            let mhat = m / (1.0 - 0.9f64.powi(t as i32 + 1));
            let vhat = v / (1.0 - 0.999f64.powi(t as i32 + 1));
            *r = (theta - 0.05 * mhat / (vhat.sqrt() + 1e-8), m, v);
        }
        assert!((params.layers[0].weights[0] - refs[0].0).abs() < 1e-15);
        assert!((params.layers[0].bias[0] - refs[1].0).abs() < 1e-15);
    }
    // First step from zero moments moves each parameter by about lr * sign(g).
    let mut p = MlpParams::zeros(&[1, 1]).unwrap();
    let mut st = OptimState::new(&p, AdamWConfig { lr: 0.01, ..AdamWConfig::default() });
    let mut g = p.zeros_like();
    g.layers[0].weights[0] = -3.0;
    g.layers[0].bias[0] = 1e-3;
    optim_step(&mut p, &g, &mut st).unwrap();
    assert!((p.layers[0].weights[0] - 0.01 * 3.0 / (3.0 + 1e-8)).abs() < 1e-15);
    assert!((p.layers[0].bias[0] + 0.01 * 1e-3 / (1e-3 + 1e-8)).abs() < 1e-15);
}

#[test]
fn separable_toy_training_decreases_smoothed_loss() {
    let mut rng = SplitMix64::new(3);
    let xs: Vec<(Vec<f64>, usize)> = (0..40)
        .map(|i| {
            let y = i % 2;
            let centre = if y == 0 { -1.5 } else { 1.5 };
            (vec![centre + 0.3 * rng.normal(), 0.3 * rng.normal()], y)
        })
        .collect();
    let mut params = MlpParams::init(&[2, 8, 2], 5).unwrap();
    let mut state = OptimState::new(&params, AdamWConfig { lr: 1e-2, ..AdamWConfig::default() });
    let batch: Vec<Example> = xs.iter().map(|(x, y)| Example::new(x, *y, LossKind::Edl, 1.0 / 40.0)).collect();
    let mut losses = Vec::new();
    for _ in 0..200 {
        let (v, g) = value_and_grad(&params, &batch).unwrap();
        losses.push(v);
        optim_step(&mut params, &g, &mut state).unwrap();
    }
    let smooth: Vec<f64> = losses.windows(10).map(|w| w.iter().sum::<f64>() / 10.0).collect();
    assert!(smooth.windows(2).all(|w| w[1] <= w[0]), "smoothed loss rose");
    assert!(smooth.last().unwrap() < &(0.5 * smooth[0]));
}

fn patch(rng: &mut SplitMix64, shape: PatchShape) -> Vec<f64> {
    random_vec(rng, shape.len(), 1.0)
}

#[test]
fn tta_identity_cases() {
    let shape = PatchShape { window: 3, bands: 2 };
    let params = random_params(&[shape.len(), 6, 4], 12);
    let mut rng = SplitMix64::new(12);
    let x = patch(&mut rng, shape);
    let single = forward(&params, &x).unwrap().0.uncertainty;
    assert_eq!(tta_uncertainty(&params, &x, shape, &TtaConfig::identity()).unwrap(), single);
    let many = TtaConfig { num_transforms: 6, ..TtaConfig::identity() };
    // Six equal terms summed then divided by six can differ in the last ulp.
    assert!((tta_uncertainty(&params, &x, shape, &many).unwrap() - single).abs() < 1e-15);
}

#[test]
fn tta_matches_unrolled_loop() {
    let shape = PatchShape { window: 5, bands: 3 };
    let params = random_params(&[shape.len(), 8, 3], 21);
    let mut rng = SplitMix64::new(21);
    let x = patch(&mut rng, shape);
    let cfg = TtaConfig { seed: 99, ..TtaConfig::default() };
    let transforms = draw_transforms(&cfg, shape).unwrap();
    assert_eq!(transforms.len(), 8);
    let s = shape.window;
    let b = shape.bands;
    let at = |v: &[f64], r: usize, c: usize, k: usize| v[(r * s + c) * b + k];
    let mut total = Vec::new();
    for t in &transforms {
        let mut y = vec![0.0; x.len()];
        for r in 0..s {
            for c in 0..s {
                for k in 0..b {
                    y[(r * s + c) * b + k] = match t {
                        Transform::Identity => at(&x, r, c, k),
                        Transform::HFlip => at(&x, r, s - 1 - c, k),
                        Transform::VFlip => at(&x, s - 1 - r, c, k),
                        Transform::Rot90 => at(&x, c, s - 1 - r, k),
                        Transform::Jitter(o) => at(&x, r, c, k) + o[k],
                    };
                }
            }
        }
        assert_eq!(y, apply_transform(t, &x, shape));
        total.push(forward(&params, &y).unwrap().0.uncertainty);
    }
    let loop_mean = total.iter().sum::<f64>() / total.len() as f64;
    let got = tta_uncertainty(&params, &x, shape, &cfg).unwrap();
    assert!((got - loop_mean).abs() < 1e-15);
    assert_eq!(got, tta_uncertainty(&params, &x, shape, &cfg).unwrap());
}

#[test]
fn tta_kind_subset_is_respected() {
    let shape = PatchShape { window: 3, bands: 4 };
    let cfg = TtaConfig { num_transforms: 50, kinds: vec![TransformKind::Jitter], jitter_sigma: 0.0, seed: 1 };
    for t in draw_transforms(&cfg, shape).unwrap() {
        assert_eq!(t, Transform::Jitter(vec![0.0; 4]));
    }
    let bad = TtaConfig { num_transforms: 0, ..TtaConfig::default() };
    assert!(draw_transforms(&bad, shape).is_err());
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let params = random_params(&[9, 7, 5, 3], 4);
    let bytes = write_checkpoint(&params);
    assert!(bytes.starts_with(b"cabin-mlp 9 7 5 3\n"));
    let back = read_checkpoint(&bytes).unwrap();
    assert!(params.iter().zip(back.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert!(read_checkpoint(&bytes[..bytes.len() - 3]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dirichlet_identities(seed in 0u64..10_000, k in 2usize..9, scale in 0.01f64..50.0) {
        let params = random_params(&[5, 6, k], seed);
        let mut rng = SplitMix64::new(seed);
        let x = random_vec(&mut rng, 5, scale);
        let (out, emb) = forward(&params, &x).unwrap();
        prop_assert!(out.alpha.iter().all(|&a| a >= 1.0));
        prop_assert!((out.total - out.alpha.iter().sum::<f64>()).abs() < 1e-9);
        prop_assert!((out.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!((out.uncertainty - k as f64 / out.total).abs() < 1e-12);
        prop_assert!(out.uncertainty > 0.0 && out.uncertainty <= 1.0);
        prop_assert_eq!(emb.len(), 6);
        prop_assert!(emb.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn edl_invariant_to_alpha_scaling(a in prop::collection::vec(1.0f64..30.0, 2..7), c in 1.0f64..40.0, y in 0usize..7) {
        let y = y % a.len();
        let base = EvidenceOutput::from_evidence(a.iter().map(|v| v - 1.0).collect()).unwrap();
        let scaled = EvidenceOutput::from_evidence(a.iter().map(|v| c * v - 1.0).collect()).unwrap();
        prop_assert!((edl_loss(&base, y) - edl_loss(&scaled, y)).abs() < 1e-10);
    }

    #[test]
    fn tta_is_order_invariant(seed in 0u64..1000, rot in 0usize..8) {
        let shape = PatchShape { window: 3, bands: 2 };
        let params = random_params(&[shape.len(), 5, 3], seed);
        let mut rng = SplitMix64::new(seed);
        let x = patch(&mut rng, shape);
        let cfg = TtaConfig { seed, ..TtaConfig::default() };
        let mut ts = draw_transforms(&cfg, shape).unwrap();
        let a = tta_uncertainty_with(&params, &x, shape, &ts).unwrap();
        let n = ts.len();
        ts.rotate_left(rot % n);
        ts.reverse();
        prop_assert_eq!(a, tta_uncertainty_with(&params, &x, shape, &ts).unwrap());
        prop_assert!((0.0..=1.0).contains(&a));
    }
}
