use super::ProtocolConfig;
use crate::error::Result;
use crate::evidential::{objective, optim_step, value_and_grad, Example, LossKind, MlpParams, OptimState};
use crate::rng::SplitMix64;

/// Which term of the total objective a training item belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    /// Ground-truth labels and their perturbed copies (EDL, weight 1).
    Labeled,
    /// Reliable pseudo-labels (EDL, weight `lambda_r`).
    Reliable,
    /// Ambiguous pseudo-labels (GCE, weight `lambda_a`).
    Ambiguous,
}

#[derive(Debug, Clone, Copy)]
pub struct TrainItem<'a> {
    pub features: &'a [f64],
    pub target: usize,
    pub term: Term,
}

/// Loss weights of the three-term objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveWeights {
    pub lambda_r: f64,
    pub lambda_a: f64,
    pub gce_q: f64,
}

impl From<&ProtocolConfig> for ObjectiveWeights {
    fn from(c: &ProtocolConfig) -> Self {
        Self { lambda_r: c.lambda_r, lambda_a: c.lambda_a, gce_q: c.gce_q }
    }
}

/// Weighted examples whose [`objective`] is
/// `mean EDL(labeled) + lambda_r mean EDL(reliable) + lambda_a mean GCE(ambiguous)`
/// over `items`; empty terms contribute nothing.
pub fn objective_examples<'a>(items: &[TrainItem<'a>], w: ObjectiveWeights) -> Vec<Example<'a>> {
    let count = |t: Term| items.iter().filter(|i| i.term == t).count().max(1) as f64;
    let (nl, nr, na) = (count(Term::Labeled), count(Term::Reliable), count(Term::Ambiguous));
    items
        .iter()
        .map(|i| match i.term {
            Term::Labeled => Example::new(i.features, i.target, LossKind::Edl, 1.0 / nl),
            Term::Reliable => Example::new(i.features, i.target, LossKind::Edl, w.lambda_r / nr),
            Term::Ambiguous => {
                Example::new(i.features, i.target, LossKind::Gce { q: w.gce_q }, w.lambda_a / na)
            }
        })
        .collect()
}

pub fn total_objective(params: &MlpParams, items: &[TrainItem], w: ObjectiveWeights) -> Result<f64> {
    objective(params, &objective_examples(items, w))
}

/// One shuffled pass of minibatch AdamW over `items`. Each minibatch
/// minimises the three-term objective restricted to its own members. Returns
/// the mean minibatch objective.
pub fn train_epoch(
    params: &mut MlpParams,
    optim: &mut OptimState,
    items: &[TrainItem],
    batch_size: usize,
    weights: ObjectiveWeights,
    rng: &mut SplitMix64,
) -> Result<f64> {
    if items.is_empty() {
        return Ok(0.0);
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    rng.shuffle(&mut order);
    let mut total = 0.0;
    let mut batches = 0;
    for chunk in order.chunks(batch_size) {
        let batch: Vec<TrainItem> = chunk.iter().map(|&i| items[i]).collect();
        let examples = objective_examples(&batch, weights);
        let (value, grads) = value_and_grad(params, &examples)?;
        total += value;
        optim_step(params, &grads, optim)?;
        batches += 1;
    }
    Ok(total / batches as f64)
}
