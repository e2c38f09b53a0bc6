//! The three-stage protocol: pretraining on a labeled seed, one
//! uncertainty-guided sampling round, and retraining with pseudo-label triage.

mod config;
mod data;
mod experiment;
mod stages;
mod train;

pub use config::{ProtocolConfig, Selection};
pub use data::PreparedData;
pub use experiment::{run_experiment, run_prepared, ExperimentOutput, ExperimentReport};
pub use stages::{
    accuracy, annotation_budget, pretrain, retrain_epoch, sampling_round, score_pool, EpochRecord, Pretrained,
    RoundState, SamplingOutcome,
};
pub use train::{objective_examples, total_objective, train_epoch, ObjectiveWeights, Term, TrainItem};
