//! BreathNet: a 1-D CNN → self-attention → LSTM classifier over 2×100
//! magnitude/phase windows, trained from scratch with a hand-written backward
//! pass.
//!
//! With the default [`ModelConfig`] the unpadded convolutions shrink the
//! time axis 100 → 98 → 48 → 46 → 22, attention and the LSTM run over those
//! 22 steps, and the flattened LSTM states (22 × 100 = 2200) feed Linear2.
//! ReLU follows every convolution, Linear1 and Linear2.

mod adam;
mod attention;
mod io;
mod layers;
mod loss;
mod lstm;
mod model;
mod tensor;
mod train;

pub use adam::{adam_step, AdamState};
pub use attention::SelfAttention;
pub use io::{decode_weights, encode_weights, load_weights, save_weights, WEIGHTS_FORMAT_VERSION};
pub use layers::{conv_output_len, Conv1d, Linear};
pub use loss::{log_softmax, softmax, weighted_cross_entropy, weighted_cross_entropy_grad};
pub use lstm::Lstm;
pub use model::{argmax, BreathNet, ModelConfig, Params, TrainingMeta};
pub use tensor::Tensor;
pub use train::{
    predict_timesteps, predict_timesteps_with_step, stratified_split, train, train_from, EpochRecord, History,
    TrainConfig,
};
