//! The evidential classifier: an MLP whose softplus head emits non-negative
//! class evidence parameterising a Dirichlet, the losses trained on it, the
//! optimizer, and test-time-augmented uncertainty.

mod checkpoint;
mod evidence;
mod loss;
mod mlp;
mod optim;
mod tta;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use evidence::EvidenceOutput;
pub use loss::{edl_grad_alpha, edl_loss, gce_grad_alpha, gce_loss, LossKind, DEFAULT_GCE_Q};
pub use mlp::{backward, forward, objective, value_and_grad, Dense, Example, MlpParams};
pub use optim::{optim_step, AdamWConfig, OptimState};
pub use tta::{
    apply_transform, draw_transforms, tta_uncertainty, tta_uncertainty_with, PatchShape, Transform,
    TransformKind, TtaConfig,
};
