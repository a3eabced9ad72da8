mod act;
mod attn;
mod basic;
mod conv;
mod matmul;
mod norm;
mod resize;

pub use attn::attention_reference;
pub use basic::SampleTap;
