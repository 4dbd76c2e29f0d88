//! Local neural classifier: syndrome windows in, most likely Pauli out.

mod mask;
mod mlp;
mod model_io;
mod train;

pub use mask::{extract_mask, MaskInput, MASK_CONVENTION};
pub(crate) use mask::{check_window, write_mask_row};
pub use mlp::{argmax, count_parameters, Dense, MlpConfig, MlpModel, N_CLASSES};
pub use model_io::{
    file_checksum, load_model, model_from_json, model_to_json, save_model, MODEL_FORMAT, MODEL_VERSION,
};
pub use train::{generate_training_batch, train, train_with, Adam, TrainOutcome, TrainSpec};
