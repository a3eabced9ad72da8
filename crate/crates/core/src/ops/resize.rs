//! Spatial resampling: bilinear resize and non-overlapping average pooling.

use crate::element::Element;
use crate::error::{Result, TensorError};
use crate::graph::{BackwardCtx, Graph, NodeId, Op};
use crate::tensor::Tensor;

/// Source taps for one output coordinate along one axis.
/// Convention: src = dst * (in/out), clamped; corner sample 0 maps to 0
/// exactly, so same-size resize is the identity.
fn axis_taps(out_len: usize, in_len: usize) -> Vec<(usize, usize, f64)> {
    let scale = in_len as f64 / out_len as f64;
    (0..out_len)
        .map(|o| {
            let src = (o as f64 * scale).min((in_len - 1) as f64);
            let i0 = src.floor() as usize;
            let i1 = (i0 + 1).min(in_len - 1);
            (i0, i1, src - i0 as f64)
        })
        .collect()
}

#[derive(Debug)]
struct BilinearResizeOp {
    x: NodeId,
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    oh: usize,
    ow: usize,
}

impl<T: Element> Op<T> for BilinearResizeOp {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let ty = axis_taps(self.oh, self.h);
        let tx = axis_taps(self.ow, self.w);
        let gd = g.data();
        let (h, w) = (self.h, self.w);
        let mut dx = Tensor::zeros(&[self.n, self.c, h, w]);
        {
            let d = dx.data_mut();
            for plane in 0..self.n * self.c {
                let src_base = plane * h * w;
                let out_base = plane * self.oh * self.ow;
                for (oy, &(y0, y1, wy)) in ty.iter().enumerate() {
                    for (ox, &(x0, x1, wx)) in tx.iter().enumerate() {
                        let gv = gd[out_base + oy * self.ow + ox];
                        let wy1 = T::from_f64(wy);
                        let wy0 = T::ONE - wy1;
                        let wx1 = T::from_f64(wx);
                        let wx0 = T::ONE - wx1;
                        d[src_base + y0 * w + x0] += gv * wy0 * wx0;
                        d[src_base + y0 * w + x1] += gv * wy0 * wx1;
                        d[src_base + y1 * w + x0] += gv * wy1 * wx0;
                        d[src_base + y1 * w + x1] += gv * wy1 * wx1;
                    }
                }
            }
        }
        ctx.add_grad(self.x, dx);
    }
}

#[derive(Debug)]
struct AvgPoolOp {
    x: NodeId,
    k: usize,
    n: usize,
    c: usize,
    h: usize,
    w: usize,
}

impl<T: Element> Op<T> for AvgPoolOp {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let k = self.k;
        let (oh, ow) = (self.h / k, self.w / k);
        let inv = T::ONE / T::from_f64((k * k) as f64);
        let gd = g.data();
        let mut dx = Tensor::zeros(&[self.n, self.c, self.h, self.w]);
        {
            let d = dx.data_mut();
            for plane in 0..self.n * self.c {
                let in_base = plane * self.h * self.w;
                let out_base = plane * oh * ow;
                for oy in 0..oh {
                    for ox in 0..ow {
                        let gv = gd[out_base + oy * ow + ox] * inv;
                        for dy in 0..k {
                            let row = in_base + (oy * k + dy) * self.w + ox * k;
                            for dxk in 0..k {
                                d[row + dxk] += gv;
                            }
                        }
                    }
                }
            }
        }
        ctx.add_grad(self.x, dx);
    }
}

impl<T: Element> Graph<T> {
    /// Bilinear resample of an NCHW tensor to (out_h, out_w).
    pub fn bilinear_resize(&mut self, x: NodeId, out_h: usize, out_w: usize) -> Result<NodeId> {
        let (n, c, h, w) = self.value(x).dims4()?;
        if out_h == 0 || out_w == 0 {
            return Err(TensorError::Dim("resize to empty output".into()));
        }
        let ty = axis_taps(out_h, h);
        let tx = axis_taps(out_w, w);
        let xd = self.value(x).data();
        let mut data = vec![T::ZERO; n * c * out_h * out_w];
        for plane in 0..n * c {
            let src_base = plane * h * w;
            let out_base = plane * out_h * out_w;
            for (oy, &(y0, y1, wy)) in ty.iter().enumerate() {
                let wy1 = T::from_f64(wy);
                let wy0 = T::ONE - wy1;
                for (ox, &(x0, x1, wx)) in tx.iter().enumerate() {
                    let wx1 = T::from_f64(wx);
                    let wx0 = T::ONE - wx1;
                    let v = xd[src_base + y0 * w + x0] * wy0 * wx0
                        + xd[src_base + y0 * w + x1] * wy0 * wx1
                        + xd[src_base + y1 * w + x0] * wy1 * wx0
                        + xd[src_base + y1 * w + x1] * wy1 * wx1;
                    data[out_base + oy * out_w + ox] = v;
                }
            }
        }
        let req = self.requires[x.0];
        Ok(self.push(
            Tensor::new(&[n, c, out_h, out_w], data)?,
            Some(Box::new(BilinearResizeOp {
                x,
                n,
                c,
                h,
                w,
                oh: out_h,
                ow: out_w,
            })),
            req,
        ))
    }

    /// Non-overlapping k x k average pooling; spatial dims must divide by k.
    pub fn avg_pool2d(&mut self, x: NodeId, k: usize) -> Result<NodeId> {
        let (n, c, h, w) = self.value(x).dims4()?;
        if k == 0 {
            return Err(TensorError::Config("avg_pool2d k must be >= 1".into()));
        }
        if h % k != 0 || w % k != 0 {
            return Err(TensorError::Dim(format!(
                "avg_pool2d: {}x{} not divisible by {}",
                h, w, k
            )));
        }
        let (oh, ow) = (h / k, w / k);
        let inv = T::ONE / T::from_f64((k * k) as f64);
        let xd = self.value(x).data();
        let mut data = vec![T::ZERO; n * c * oh * ow];
        for plane in 0..n * c {
            let in_base = plane * h * w;
            let out_base = plane * oh * ow;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = T::ZERO;
                    for dy in 0..k {
                        let row = in_base + (oy * k + dy) * w + ox * k;
                        for dx in 0..k {
                            acc += xd[row + dx];
                        }
                    }
                    data[out_base + oy * ow + ox] = acc * inv;
                }
            }
        }
        let req = self.requires[x.0];
        Ok(self.push(
            Tensor::new(&[n, c, oh, ow], data)?,
            Some(Box::new(AvgPoolOp { x, k, n, c, h, w })),
            req,
        ))
    }
}
