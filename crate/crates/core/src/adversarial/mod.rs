//! Label-distribution alignment: neighbor-difference matrices, the
//! adversarial and regression losses, and the alternating training loop.

mod alignment;
mod losses;
mod trainer;

pub use alignment::{alignment_matrix, alignment_neighbors, alignment_rows, AlignmentMatrix};
pub use losses::{composite_generator_loss, discriminator_loss, generator_adv_loss, mse_loss};
pub use trainer::{
    evaluate_set, train, train_step, EpochRecord, LossRecord, Optimizers, SetMetrics, TrainConfig, TrainOutcome,
};
