//! Dense numeric layers with hand-written backward passes.

pub mod adam;
pub mod attention;
pub mod dense;
pub mod dropout;
pub mod embedding;
pub mod gradcheck;
pub mod lstm;
pub mod rng;
pub mod softmax;
pub mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use attention::{dot_attention, dot_attention_backward, AttentionCache};
pub use dense::{dense_forward, Activation, Dense};
pub use dropout::{apply_mask, dropout_forward, Mode};
pub use embedding::{embedding_backward, embedding_forward};
pub use gradcheck::{grad_check, GradCheckReport};
pub use lstm::{bidirectional_forward, lstm_backward, lstm_forward, lstm_step, Bidirectional, LstmCache, LstmCell};
pub use rng::RngState;
pub use softmax::{argmax, cross_entropy_loss, softmax, softmax_cross_entropy_grad, CrossEntropy};
pub use tensor::{Float, ParamTensor, Tensor};
