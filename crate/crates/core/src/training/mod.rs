//! Loss, optimiser, data split, the epoch loop, checkpoint selection and
//! evaluation metrics.

mod adam;
mod metrics;
mod select;
mod split;
mod trainer;

pub use adam::Adam;
pub use metrics::{ClassMetrics, EvalReport, CLASS_NAMES};
pub use select::{select_checkpoint, select_index};
pub use split::{split_dataset, Split};
pub use trainer::{
    cross_entropy, epoch_log_csv, evaluate, fit, loss_and_gradients, parse_epoch_log, predict_all, train,
    CheckpointSink, DirectoryCheckpoints, EpochRecord, Example, MemoryCheckpoints, NoCheckpoints, TrainConfig,
    TrainRun, PROB_FLOOR,
};
