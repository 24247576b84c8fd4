//! Losses, task scheduling and the mini-batch training loop.

mod loss;
mod profile;
mod schedule;
mod trainer;

pub use loss::{cox_loss, nll_loss, SurvivalLabels};
pub use profile::{TrainingProfile, PRESETS};
pub use schedule::{select_task, Schedule, Task};
pub use trainer::{evaluation_loss, train, EpochSummary, IterationRecord, TrainOutcome, TrainingHistory, TrainingSet};
