//! Minimal tensor math, reverse-mode gradients, recurrent/dense layers, and Adam.

mod adam;
pub mod checkpoint;
mod graph;
mod layers;
mod params;
mod tensor;

pub use adam::AdamState;
pub use graph::{Graph, Var};
pub use layers::{bigru_encode, bigru_encode_tokens, softmax, Activation, Dense, GruParams, MlpParams};
pub use params::{Gradients, ParamId, ParamStore};
pub use tensor::Tensor;

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("backward already ran on this graph")]
    AlreadyBackpropagated,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
