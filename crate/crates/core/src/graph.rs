//! Reverse-mode autodiff over a linear tape of tensor nodes.
//!
//! Ops append nodes during the forward pass; `backward` replays the tape in
//! reverse, accumulating gradients into every `requires_grad` leaf. Gradient
//! accumulation is sequential in node order, so runs are bit-reproducible.

use crate::element::Element;
use crate::error::{Result, TensorError};
use crate::tensor::Tensor;

/// Handle to a node on a [`Graph`] tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub(crate) usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Backward context handed to op kernels: read-only values, grad accumulation.
pub(crate) struct BackwardCtx<'a, T: Element> {
    pub values: &'a [Tensor<T>],
    pub requires: &'a [bool],
    pub grads: &'a mut [Option<Tensor<T>>],
}

impl<'a, T: Element> BackwardCtx<'a, T> {
    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        &self.values[id.0]
    }

    pub fn needs(&self, id: NodeId) -> bool {
        self.requires[id.0]
    }

    /// Accumulate `g` into the gradient of `id` (no-op when grad not needed).
    pub fn add_grad(&mut self, id: NodeId, g: Tensor<T>) {
        if !self.requires[id.0] {
            return;
        }
        debug_assert_eq!(g.shape(), self.values[id.0].shape());
        match &mut self.grads[id.0] {
            Some(acc) => acc.add_assign(&g).expect("grad shape fixed"),
            slot => *slot = Some(g),
        }
    }

    /// Mutable gradient buffer for `id`, zero-initialized on first use.
    /// Returns None when the node does not need gradients.
    pub fn grad_mut(&mut self, id: NodeId) -> Option<&mut [T]> {
        if !self.requires[id.0] {
            return None;
        }
        let shape = self.values[id.0].shape().to_vec();
        let slot = &mut self.grads[id.0];
        if slot.is_none() {
            *slot = Some(Tensor::zeros(&shape));
        }
        slot.as_mut().map(|t| t.data_mut())
    }
}

/// Op kernel: owns parent ids plus whatever forward state backward needs.
pub(crate) trait Op<T: Element>: std::fmt::Debug {
    fn backward(&self, out: NodeId, out_grad: &Tensor<T>, ctx: &mut BackwardCtx<T>);
}

/// Autodiff tape. One graph per forward/backward transaction.
pub struct Graph<T: Element> {
    pub(crate) values: Vec<Tensor<T>>,
    pub(crate) ops: Vec<Option<Box<dyn Op<T>>>>,
    pub(crate) requires: Vec<bool>,
    pub(crate) grads: Vec<Option<Tensor<T>>>,
}

impl<T: Element> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Element> Graph<T> {
    pub fn new() -> Self {
        Self {
            values: Vec::new(),
            ops: Vec::new(),
            requires: Vec::new(),
            grads: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// New leaf node holding `value`.
    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> NodeId {
        self.push(value, None, requires_grad)
    }

    /// Leaf that never receives gradients.
    pub fn constant(&mut self, value: Tensor<T>) -> NodeId {
        self.leaf(value, false)
    }

    pub fn scalar(&mut self, v: T) -> NodeId {
        self.constant(Tensor::scalar(v))
    }

    pub(crate) fn push(
        &mut self,
        value: Tensor<T>,
        op: Option<Box<dyn Op<T>>>,
        requires: bool,
    ) -> NodeId {
        self.values.push(value);
        self.ops.push(op);
        self.requires.push(requires);
        self.grads.push(None);
        NodeId(self.values.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        &self.values[id.0]
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        self.values[id.0].shape()
    }

    pub fn requires_grad(&self, id: NodeId) -> bool {
        self.requires[id.0]
    }

    /// Gradient of the last `backward` call w.r.t. node `id`.
    pub fn grad(&self, id: NodeId) -> Option<&Tensor<T>> {
        self.grads[id.0].as_ref()
    }

    /// Take the gradient buffer, leaving None.
    pub fn take_grad(&mut self, id: NodeId) -> Option<Tensor<T>> {
        self.grads[id.0].take()
    }

    pub(crate) fn requires_any(&self, ids: &[NodeId]) -> bool {
        ids.iter().any(|id| self.requires[id.0])
    }

    /// Reverse sweep from scalar `root`; populates gradients of every
    /// contributing `requires_grad` leaf. Intermediate gradients are freed as
    /// soon as they are consumed.
    pub fn backward(&mut self, root: NodeId) -> Result<()> {
        if !self.values[root.0].is_scalar() {
            return Err(TensorError::Usage(format!(
                "backward root must be scalar, got shape {:?}",
                self.values[root.0].shape()
            )));
        }
        for g in self.grads.iter_mut() {
            *g = None;
        }
        if !self.requires[root.0] {
            return Ok(());
        }
        self.grads[root.0] = Some(Tensor::scalar(T::ONE));
        for id in (0..=root.0).rev() {
            if self.ops[id].is_none() {
                continue;
            }
            let Some(gout) = self.grads[id].take() else {
                continue;
            };
            let op = self.ops[id].as_ref().unwrap();
            let mut ctx = BackwardCtx {
                values: &self.values,
                requires: &self.requires,
                grads: &mut self.grads,
            };
            op.backward(NodeId(id), &gout, &mut ctx);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backward_requires_scalar_root() {
        let mut g = Graph::<f64>::new();
        let x = g.leaf(Tensor::from_fn(&[2], |i| i as f64), true);
        assert!(matches!(g.backward(x), Err(TensorError::Usage(_))));
    }

    #[test]
    fn square_gradient_via_mul() {
        // y = x*x at x=3 -> dy/dx = 6
        let mut g = Graph::<f64>::new();
        let x = g.leaf(Tensor::scalar(3.0), true);
        let y = g.mul(x, x).unwrap();
        g.backward(y).unwrap();
        assert_eq!(g.grad(x).unwrap().item(), 6.0);
    }

    #[test]
    fn disconnected_leaf_gets_no_grad() {
        let mut g = Graph::<f64>::new();
        let x = g.leaf(Tensor::scalar(3.0), true);
        let z = g.leaf(Tensor::scalar(5.0), true);
        let y = g.mul(x, x).unwrap();
        g.backward(y).unwrap();
        assert!(g.grad(z).is_none());
    }
}
