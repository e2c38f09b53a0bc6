//! Train the evidential MLP on two Gaussian blobs and watch uncertainty drop
//! on the training data while staying high far from it.
//!
//! ```text
//! cargo run --example evidential_training
//! ```

use cabin::evidential::{forward, optim_step, value_and_grad, AdamWConfig, Example, LossKind, MlpParams, OptimState};
use cabin::rng::SplitMix64;

fn main() -> cabin::Result<()> {
    let mut rng = SplitMix64::new(0);
    let data: Vec<(Vec<f64>, usize)> = (0..100)
        .map(|i| {
            let y = i % 2;
            let c = if y == 0 { -1.0 } else { 1.0 };
            (vec![c + 0.4 * rng.normal(), c + 0.4 * rng.normal()], y)
        })
        .collect();
    let batch: Vec<Example> =
        data.iter().map(|(x, y)| Example::new(x, *y, LossKind::Edl, 1.0 / data.len() as f64)).collect();

    let mut params = MlpParams::init(&[2, 32, 2], 0)?;
    let mut optim = OptimState::new(&params, AdamWConfig { lr: 1e-2, ..AdamWConfig::default() });
    for step in 0..=300 {
        let (loss, grads) = value_and_grad(&params, &batch)?;
        if step % 50 == 0 {
            println!("step {step:3}  loss {loss:.4}");
        }
        optim_step(&mut params, &grads, &mut optim)?;
    }

    for x in [[-1.0, -1.0], [1.0, 1.0], [0.0, 0.0]] {
        let (out, _) = forward(&params, &x)?;
        println!("x = {x:?}: class {} p = {:.3} u = {:.3}", out.argmax(), out.confidence(), out.uncertainty);
    }
    Ok(())
}
