//! Pointwise activations and the stable logistic-loss primitives.

use crate::element::Element;
use crate::error::{Result, TensorError};
use crate::graph::{BackwardCtx, Graph, NodeId, Op};
use crate::tensor::Tensor;

fn sigmoid_scalar<T: Element>(x: T) -> T {
    if x >= T::ZERO {
        T::ONE / (T::ONE + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::ONE + e)
    }
}

/// log(1 + e^x) without overflow.
fn softplus<T: Element>(x: T) -> T {
    if x > T::ZERO {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[derive(Debug)]
struct LeakyReluOp<T> {
    x: NodeId,
    slope: T,
}

impl<T: Element> Op<T> for LeakyReluOp<T> {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let s = self.slope;
        let gx = g
            .zip_map(ctx.value(self.x), |gv, xv| {
                if xv > T::ZERO {
                    gv
                } else {
                    gv * s
                }
            })
            .unwrap();
        ctx.add_grad(self.x, gx);
    }
}

#[derive(Debug)]
struct SigmoidOp {
    x: NodeId,
}

impl<T: Element> Op<T> for SigmoidOp {
    fn backward(&self, out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        // d sigma = sigma (1 - sigma); reuse the forward output
        let gx = g
            .zip_map(ctx.value(out), |gv, y| gv * y * (T::ONE - y))
            .unwrap();
        ctx.add_grad(self.x, gx);
    }
}

#[derive(Debug)]
struct LogSigmoidOp {
    x: NodeId,
    negate_input: bool, // true computes log(1 - sigmoid(x)) = log sigmoid(-x)
}

impl<T: Element> Op<T> for LogSigmoidOp {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let neg = self.negate_input;
        let gx = g
            .zip_map(ctx.value(self.x), |gv, xv| {
                if neg {
                    // d/dx log sigma(-x) = -sigma(x)
                    -gv * sigmoid_scalar(xv)
                } else {
                    // d/dx log sigma(x) = sigma(-x)
                    gv * sigmoid_scalar(-xv)
                }
            })
            .unwrap();
        ctx.add_grad(self.x, gx);
    }
}

#[derive(Debug)]
struct BceWithLogitsOp<T> {
    logits: NodeId,
    target: T,
}

impl<T: Element> Op<T> for BceWithLogitsOp<T> {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let x = ctx.value(self.logits);
        let inv_n = T::ONE / T::from_f64(x.numel() as f64);
        let scale = g.item() * inv_n;
        let t = self.target;
        let gx = x.map(|xv| (sigmoid_scalar(xv) - t) * scale);
        ctx.add_grad(self.logits, gx);
    }
}

#[derive(Debug)]
struct BceOp<T> {
    pred: NodeId,
    target: NodeId,
    eps: T,
}

impl<T: Element> Op<T> for BceOp<T> {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let values = ctx.values;
        let p = &values[self.pred.index()];
        let t = &values[self.target.index()];
        let inv_n = T::ONE / T::from_f64(p.numel() as f64);
        let scale = g.item() * inv_n;
        let eps = self.eps;
        if ctx.needs(self.pred) {
            let gp = p
                .zip_map(t, |pv, tv| {
                    // gradient is zero where the clamp is active
                    if pv <= eps || pv >= T::ONE - eps {
                        T::ZERO
                    } else {
                        (pv - tv) / (pv * (T::ONE - pv)) * scale
                    }
                })
                .unwrap();
            ctx.add_grad(self.pred, gp);
        }
        if ctx.needs(self.target) {
            let gt = p.map(|pv| {
                let pc = pv.maxv(eps).minv(T::ONE - eps);
                -(pc.ln() - (T::ONE - pc).ln()) * scale
            });
            ctx.add_grad(self.target, gt);
        }
    }
}

impl<T: Element> Graph<T> {
    pub fn leaky_relu(&mut self, x: NodeId, slope: T) -> Result<NodeId> {
        let v = self
            .value(x)
            .map(|v| if v > T::ZERO { v } else { v * slope });
        let req = self.requires[x.0];
        Ok(self.push(v, Some(Box::new(LeakyReluOp { x, slope })), req))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> Result<NodeId> {
        let v = self.value(x).map(sigmoid_scalar);
        let req = self.requires[x.0];
        Ok(self.push(v, Some(Box::new(SigmoidOp { x })), req))
    }

    /// log(sigmoid(x)), elementwise, overflow-safe.
    pub fn log_sigmoid(&mut self, x: NodeId) -> Result<NodeId> {
        let v = self.value(x).map(|xv| -softplus(-xv));
        let req = self.requires[x.0];
        Ok(self.push(
            v,
            Some(Box::new(LogSigmoidOp {
                x,
                negate_input: false,
            })),
            req,
        ))
    }

    /// log(1 - sigmoid(x)), elementwise, overflow-safe.
    pub fn log_one_minus_sigmoid(&mut self, x: NodeId) -> Result<NodeId> {
        let v = self.value(x).map(|xv| -softplus(xv));
        let req = self.requires[x.0];
        Ok(self.push(
            v,
            Some(Box::new(LogSigmoidOp {
                x,
                negate_input: true,
            })),
            req,
        ))
    }

    /// Mean binary cross-entropy on raw logits against a constant target
    /// (1.0 for real, 0.0 for fake).
    pub fn bce_with_logits(&mut self, logits: NodeId, target: T) -> Result<NodeId> {
        let x = self.value(logits);
        let mut acc = T::ZERO;
        for &xv in x.data() {
            acc += softplus(xv) - target * xv;
        }
        let v = acc / T::from_f64(x.numel() as f64);
        let req = self.requires[logits.0];
        Ok(self.push(
            Tensor::scalar(v),
            Some(Box::new(BceWithLogitsOp { logits, target })),
            req,
        ))
    }

    /// Mean binary cross-entropy on probabilities, eps-clamped for stability.
    pub fn binary_cross_entropy(&mut self, pred: NodeId, target: NodeId) -> Result<NodeId> {
        if self.value(pred).shape() != self.value(target).shape() {
            return Err(TensorError::Shape(format!(
                "bce {:?} vs {:?}",
                self.value(pred).shape(),
                self.value(target).shape()
            )));
        }
        let eps = T::from_f64(1e-7);
        let p = self.value(pred);
        let t = self.value(target);
        let mut acc = T::ZERO;
        for (&pv, &tv) in p.data().iter().zip(t.data()) {
            let pc = pv.maxv(eps).minv(T::ONE - eps);
            acc += -(tv * pc.ln() + (T::ONE - tv) * (T::ONE - pc).ln());
        }
        let v = acc / T::from_f64(p.numel() as f64);
        let req = self.requires_any(&[pred, target]);
        Ok(self.push(
            Tensor::scalar(v),
            Some(Box::new(BceOp { pred, target, eps })),
            req,
        ))
    }
}
