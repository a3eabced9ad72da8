//! Minimal dense-tensor engine with reverse-mode autodiff.
//!
//! Supplies every differentiable operation the learnable rendering stages
//! need: conv2d, normalization, attention, resampling, the loss primitives,
//! Adam, and a named parameter store with checkpoint I/O. f32 for training
//! and inference, f64 for finite-difference verification; both run the same
//! generic op code. Single-threaded with fixed reduction order, so results
//! are bit-reproducible.

pub mod adam;
pub mod checkpoint;
pub mod element;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod nn;
mod ops;
pub mod params;
pub mod rng;
pub mod tensor;

pub use adam::{adam_step, AdamState};
pub use element::Element;
pub use error::{Result, TensorError};
pub use graph::{Graph, NodeId};
pub use ops::{attention_reference, SampleTap};
pub use params::{LrGroups, Optimizer, Param, ParamGraph, ParamStore};
pub use tensor::Tensor;
