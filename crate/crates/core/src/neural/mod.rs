//! Learned two-stage proxy: an assignment classifier followed by a
//! start-time regressor conditioned on the chosen assignment.
//!
//! Both stages share one architecture (convolutional encoders over the
//! machine-task and job-task duration matrices, fully connected decoder) and
//! differ only in their output head and input conditioning. A joint head
//! predicting both at once serves as the one-stage baseline.

mod checkpoint;
mod features;
mod loss;
mod network;
mod pipeline;
mod train;

pub use checkpoint::{Checkpoint, FORMAT_VERSION};
pub use features::{max_duration, FeatureTensors, Shape};
pub use loss::{
    assignment_loss, entropy_branch, masked_softmax, scheduling_loss, AssignmentDistribution, BranchSet, LossConfig,
    ScheduleStructure,
};
pub use network::{Cache, Head, Mode, Network, NetworkConfig};
pub use pipeline::{predict_distribution, predict_encoder, predict_pipeline, predict_starts, predict_with_branching};
pub use train::{
    evaluate_loss, grid_search, sample_loss, train, write_history, EpochRecord, Grid, GridResult, Plateau, Sample,
    TrainConfig, TrainOutcome, Trial, Verdict, LR_DECAY,
};
