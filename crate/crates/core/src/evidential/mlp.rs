use super::loss::{edl_grad_alpha, edl_loss, gce_grad_alpha, gce_loss, LossKind};
use super::EvidenceOutput;
use crate::error::{arg, Error, Result};
use crate::rng::SplitMix64;

/// A fully connected layer; `weights` is `out_dim x in_dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self { in_dim, out_dim, weights: vec![0.0; in_dim * out_dim], bias: vec![0.0; out_dim] }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (row, b) in self.weights.chunks_exact(self.in_dim).zip(&self.bias) {
            out.push(b + dot(row, x));
        }
    }
}

/// Dot product with four independent accumulators so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ac, bc) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ac.remainder().iter().zip(bc.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ac.zip(bc) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Parameters of the evidential MLP: ReLU hidden layers, softplus evidence head.
///
/// Gradients share this type so the optimizer can walk both in lockstep.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Dense>,
}

impl MlpParams {
    /// He-normal weights, zero biases.
    pub fn init(dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return arg(format!("invalid layer dims {dims:?}"));
        }
        let mut rng = SplitMix64::derive(seed, 0x1417);
        let layers = dims
            .windows(2)
            .map(|w| {
                let mut layer = Dense::zeros(w[0], w[1]);
                let scale = (2.0 / w[0] as f64).sqrt();
                layer.weights.iter_mut().for_each(|x| *x = rng.normal() * scale);
                layer
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return arg(format!("invalid layer dims {dims:?}"));
        }
        Ok(Self { layers: dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect() })
    }

    pub fn zeros_like(&self) -> Self {
        Self { layers: self.layers.iter().map(|l| Dense::zeros(l.in_dim, l.out_dim)).collect() }
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].in_dim];
        d.extend(self.layers.iter().map(|l| l.out_dim));
        d
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().map(|l| l.out_dim).unwrap_or(0)
    }

    /// Every scalar parameter in a fixed order (per layer: weights, then bias).
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dims() == other.dims()
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Pre-activations of every layer plus post-activation inputs to each layer.
struct Trace {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

fn run(params: &MlpParams, x: &[f64]) -> Result<Trace> {
    if x.len() != params.input_dim() {
        return arg(format!("input has length {}, expected {}", x.len(), params.input_dim()));
    }
    let n = params.layers.len();
    let mut inputs = Vec::with_capacity(n);
    let mut pre = Vec::with_capacity(n);
    let mut current = x.to_vec();
    for (i, layer) in params.layers.iter().enumerate() {
        let mut z = Vec::with_capacity(layer.out_dim);
        layer.apply(&current, &mut z);
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite activation in layer {i}")));
        }
        let next = if i + 1 < n { z.iter().map(|v| v.max(0.0)).collect() } else { Vec::new() };
        inputs.push(std::mem::replace(&mut current, next));
        pre.push(z);
    }
    Ok(Trace { inputs, pre })
}

/// Evaluate the network. Returns the Dirichlet output and the last hidden
/// activation (the input itself when there is no hidden layer).
pub fn forward(params: &MlpParams, x: &[f64]) -> Result<(EvidenceOutput, Vec<f64>)> {
    let trace = run(params, x)?;
    let logits = trace.pre.last().expect("at least one layer");
    let out = EvidenceOutput::from_evidence(logits.iter().map(|&z| softplus(z)).collect())?;
    let embedding = trace.inputs.last().expect("at least one layer").clone();
    Ok((out, embedding))
}

/// One weighted training example.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub input: &'a [f64],
    pub target: usize,
    pub loss: LossKind,
    pub weight: f64,
}

impl<'a> Example<'a> {
    pub fn new(input: &'a [f64], target: usize, loss: LossKind, weight: f64) -> Self {
        Self { input, target, loss, weight }
    }
}

fn sample_loss(out: &EvidenceOutput, ex: &Example) -> Result<f64> {
    match ex.loss {
        LossKind::Edl => Ok(edl_loss(out, ex.target)),
        LossKind::Gce { q } => gce_loss(out, ex.target, q),
    }
}

fn check_target(params: &MlpParams, ex: &Example) -> Result<()> {
    if ex.target >= params.num_classes() {
        return arg(format!("target {} out of range for {} classes", ex.target, params.num_classes()));
    }
    Ok(())
}

/// `sum_i weight_i * loss_i` over the batch. With weights `1/n` this is the
/// batch mean.
pub fn objective(params: &MlpParams, batch: &[Example]) -> Result<f64> {
    let mut total = 0.0;
    for ex in batch {
        check_target(params, ex)?;
        let (out, _) = forward(params, ex.input)?;
        total += ex.weight * sample_loss(&out, ex)?;
    }
    Ok(total)
}

/// Analytic gradient of [`objective`], accumulated in batch order.
pub fn backward(params: &MlpParams, batch: &[Example]) -> Result<MlpParams> {
    value_and_grad(params, batch).map(|(_, g)| g)
}

/// [`objective`] and its gradient from a single pass over the batch.
pub fn value_and_grad(params: &MlpParams, batch: &[Example]) -> Result<(f64, MlpParams)> {
    if batch.is_empty() {
        return arg("backward on an empty batch");
    }
    let mut grads = params.zeros_like();
    let mut value = 0.0;
    let last = params.layers.len() - 1;
    for ex in batch {
        check_target(params, ex)?;
        let trace = run(params, ex.input)?;
        let logits = &trace.pre[last];
        let out = EvidenceOutput::from_evidence(logits.iter().map(|&z| softplus(z)).collect())?;
        value += ex.weight * sample_loss(&out, ex)?;
        let d_alpha = match ex.loss {
            LossKind::Edl => edl_grad_alpha(&out, ex.target),
            LossKind::Gce { q } => gce_grad_alpha(&out, ex.target, q)?,
        };
        // alpha = softplus(z) + 1, so d alpha / d z = sigmoid(z).
        let mut delta: Vec<f64> =
            d_alpha.iter().zip(logits).map(|(g, &z)| ex.weight * g * sigmoid(z)).collect();
        for l in (0..=last).rev() {
            let layer = &params.layers[l];
            let input = &trace.inputs[l];
            let g = &mut grads.layers[l];
            for (o, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                g.bias[o] += d;
                let row = &mut g.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (w, x) in row.iter_mut().zip(input) {
                    *w += d * x;
                }
            }
            if l == 0 {
                break;
            }
            let prev_pre = &trace.pre[l - 1];
            let mut next = vec![0.0; layer.in_dim];
            for (o, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (acc, w) in next.iter_mut().zip(row) {
                    *acc += d * w;
                }
            }
            for (acc, z) in next.iter_mut().zip(prev_pre) {
                if *z <= 0.0 {
                    *acc = 0.0;
                }
            }
            delta = next;
        }
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numeric("non-finite gradient".into()));
    }
    Ok((value, grads))
}
