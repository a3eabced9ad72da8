//! Thin layer descriptors over the parameter store: each layer owns its
//! parameter names and shapes; weights live in the store.
//!
//! Initialization: Kaiming-uniform for conv/linear weights, zeros for biases
//! and norm shifts, ones for norm scales.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::element::Element;
use crate::error::Result;
use crate::graph::NodeId;
use crate::params::{ParamGraph, ParamStore};
use crate::tensor::Tensor;

pub const NORM_EPS: f64 = 1e-5;

/// Kaiming-uniform draw: U(-b, b) with b = sqrt(2) * sqrt(3 / fan_in).
pub fn kaiming_uniform<T: Element>(
    rng: &mut ChaCha8Rng,
    shape: &[usize],
    fan_in: usize,
) -> Tensor<T> {
    let bound = (2.0f64).sqrt() * (3.0 / fan_in as f64).sqrt();
    Tensor::from_fn(shape, |_| {
        T::from_f64(rng.gen_range(-bound..bound))
    })
}

#[derive(Clone, Debug)]
pub struct Linear {
    pub w: String,
    pub b: String,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn init<T: Element>(
        store: &mut ParamStore<T>,
        rng: &mut ChaCha8Rng,
        prefix: &str,
        in_dim: usize,
        out_dim: usize,
        trainable: bool,
    ) -> Self {
        let w = format!("{prefix}.weight");
        let b = format!("{prefix}.bias");
        store.insert(
            &w,
            kaiming_uniform(rng, &[in_dim, out_dim], in_dim),
            trainable,
        );
        store.insert(&b, Tensor::zeros(&[out_dim]), trainable);
        Self {
            w,
            b,
            in_dim,
            out_dim,
        }
    }

    /// x [M, in] -> [M, out]
    pub fn forward<T: Element>(&self, pg: &mut ParamGraph<T>, x: NodeId) -> Result<NodeId> {
        let w = pg.param(&self.w);
        let b = pg.param(&self.b);
        let y = pg.g.matmul(x, w)?;
        pg.g.bias_rows(y, b)
    }
}

#[derive(Clone, Debug)]
pub struct Conv2d {
    pub w: String,
    pub b: String,
    pub stride: usize,
    pub pad: usize,
    pub in_ch: usize,
    pub out_ch: usize,
    pub k: usize,
}

impl Conv2d {
    #[allow(clippy::too_many_arguments)]
    pub fn init<T: Element>(
        store: &mut ParamStore<T>,
        rng: &mut ChaCha8Rng,
        prefix: &str,
        in_ch: usize,
        out_ch: usize,
        k: usize,
        stride: usize,
        pad: usize,
        trainable: bool,
    ) -> Self {
        let w = format!("{prefix}.weight");
        let b = format!("{prefix}.bias");
        let fan_in = in_ch * k * k;
        store.insert(
            &w,
            kaiming_uniform(rng, &[out_ch, in_ch, k, k], fan_in),
            trainable,
        );
        store.insert(&b, Tensor::zeros(&[out_ch]), trainable);
        Self {
            w,
            b,
            stride,
            pad,
            in_ch,
            out_ch,
            k,
        }
    }

    pub fn forward<T: Element>(&self, pg: &mut ParamGraph<T>, x: NodeId) -> Result<NodeId> {
        let w = pg.param(&self.w);
        let b = pg.param(&self.b);
        let y = pg.g.conv2d(x, w, self.stride, self.pad)?;
        pg.g.bias_channels(y, b)
    }
}

#[derive(Clone, Debug)]
pub struct GroupNorm {
    pub gamma: String,
    pub beta: String,
    pub groups: usize,
    pub channels: usize,
}

impl GroupNorm {
    pub fn init<T: Element>(
        store: &mut ParamStore<T>,
        prefix: &str,
        groups: usize,
        channels: usize,
        trainable: bool,
    ) -> Self {
        let gamma = format!("{prefix}.scale");
        let beta = format!("{prefix}.shift");
        store.insert(&gamma, Tensor::full(&[channels], T::ONE), trainable);
        store.insert(&beta, Tensor::zeros(&[channels]), trainable);
        Self {
            gamma,
            beta,
            groups,
            channels,
        }
    }

    pub fn forward<T: Element>(&self, pg: &mut ParamGraph<T>, x: NodeId) -> Result<NodeId> {
        let gamma = pg.param(&self.gamma);
        let beta = pg.param(&self.beta);
        pg.g
            .group_norm(x, self.groups, gamma, beta, T::from_f64(NORM_EPS))
    }
}

#[derive(Clone, Debug)]
pub struct LayerNorm {
    pub gamma: String,
    pub beta: String,
    pub dim: usize,
}

impl LayerNorm {
    pub fn init<T: Element>(
        store: &mut ParamStore<T>,
        prefix: &str,
        dim: usize,
        trainable: bool,
    ) -> Self {
        let gamma = format!("{prefix}.scale");
        let beta = format!("{prefix}.shift");
        store.insert(&gamma, Tensor::full(&[dim], T::ONE), trainable);
        store.insert(&beta, Tensor::zeros(&[dim]), trainable);
        Self { gamma, beta, dim }
    }

    pub fn forward<T: Element>(&self, pg: &mut ParamGraph<T>, x: NodeId) -> Result<NodeId> {
        let gamma = pg.param(&self.gamma);
        let beta = pg.param(&self.beta);
        pg.g.layer_norm(x, gamma, beta, T::from_f64(NORM_EPS))
    }
}
