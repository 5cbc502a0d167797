//! The four embedding models: word-level SGNS, PPMI-SVD, and the two
//! character-level encoders trained against a pretrained context table.

mod encoder;
mod model;
mod objective;
pub mod persist;
pub mod ppmi;
mod sgns;
mod train;

pub use encoder::{
    Attention, AttentionResult, CharEncoder, EncoderDims, EncoderPass, EncoderStates,
};
pub use model::{Model, ModelKind, TrainConfig};
pub use objective::{pair_loss, PairLoss};
pub use persist::{load_model, save_model, write_text_vectors};
pub use ppmi::ppmi_svd;
pub use train::{
    train, train_file, train_ids, EpochLoss, LossPoint, LossTrace, Progress, Stage, TrainOutput,
};
