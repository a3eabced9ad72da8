//! Normalization ops: softmax, layer norm, group norm, per-location channel
//! unit normalization.

use crate::element::Element;
use crate::error::{Result, TensorError};
use crate::graph::{BackwardCtx, Graph, NodeId, Op};
use crate::tensor::Tensor;

#[derive(Debug)]
struct SoftmaxOp {
    x: NodeId,
    cols: usize,
}

impl<T: Element> Op<T> for SoftmaxOp {
    fn backward(&self, out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let y = ctx.value(out);
        let cols = self.cols;
        let rows = y.numel() / cols;
        let yd = y.data();
        let gd = g.data();
        let mut dx = Tensor::zeros(&[rows, cols]);
        {
            let d = dx.data_mut();
            for r in 0..rows {
                let base = r * cols;
                let mut dot = T::ZERO;
                for c in 0..cols {
                    dot += gd[base + c] * yd[base + c];
                }
                for c in 0..cols {
                    d[base + c] = yd[base + c] * (gd[base + c] - dot);
                }
            }
        }
        let dx = dx.reshape(ctx.value(self.x).shape()).unwrap();
        ctx.add_grad(self.x, dx);
    }
}

#[derive(Debug)]
struct LayerNormOp<T> {
    x: NodeId,
    gamma: NodeId,
    beta: NodeId,
    rows: usize,
    cols: usize,
    eps: T,
}

impl<T: Element> Op<T> for LayerNormOp<T> {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let (rows, cols) = (self.rows, self.cols);
        let xd = ctx.values[self.x.index()].data();
        let gam = ctx.values[self.gamma.index()].data();
        let gd = g.data();
        let inv_c = T::ONE / T::from_f64(cols as f64);

        let mut dx = Tensor::zeros(&[rows, cols]);
        let mut dgamma = vec![T::ZERO; cols];
        let mut dbeta = vec![T::ZERO; cols];
        for r in 0..rows {
            let base = r * cols;
            let row = &xd[base..base + cols];
            let mut mean = T::ZERO;
            for &v in row {
                mean += v;
            }
            mean = mean * inv_c;
            let mut var = T::ZERO;
            for &v in row {
                var += (v - mean) * (v - mean);
            }
            var = var * inv_c;
            let inv_std = T::ONE / (var + self.eps).sqrt();

            let mut mean_dxh = T::ZERO;
            let mut mean_dxh_xh = T::ZERO;
            for c in 0..cols {
                let xh = (row[c] - mean) * inv_std;
                let dxh = gd[base + c] * gam[c];
                mean_dxh += dxh;
                mean_dxh_xh += dxh * xh;
                dgamma[c] += gd[base + c] * xh;
                dbeta[c] += gd[base + c];
            }
            mean_dxh = mean_dxh * inv_c;
            mean_dxh_xh = mean_dxh_xh * inv_c;
            let d = dx.data_mut();
            for c in 0..cols {
                let xh = (row[c] - mean) * inv_std;
                let dxh = gd[base + c] * gam[c];
                d[base + c] = inv_std * (dxh - mean_dxh - xh * mean_dxh_xh);
            }
        }
        let dx = dx.reshape(ctx.value(self.x).shape()).unwrap();
        ctx.add_grad(self.x, dx);
        ctx.add_grad(self.gamma, Tensor::new(&[cols], dgamma).unwrap());
        ctx.add_grad(self.beta, Tensor::new(&[cols], dbeta).unwrap());
    }
}

#[derive(Debug)]
struct GroupNormOp<T> {
    x: NodeId,
    gamma: NodeId,
    beta: NodeId,
    n: usize,
    c: usize,
    hw: usize,
    groups: usize,
    eps: T,
}

impl<T: Element> Op<T> for GroupNormOp<T> {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let (n, c, hw, groups) = (self.n, self.c, self.hw, self.groups);
        let cg = c / groups;
        let m = cg * hw;
        let inv_m = T::ONE / T::from_f64(m as f64);
        let xd = ctx.values[self.x.index()].data();
        let gam = ctx.values[self.gamma.index()].data();
        let gd = g.data();

        let mut dx_data = vec![T::ZERO; n * c * hw];
        let mut dgamma = vec![T::ZERO; c];
        let mut dbeta = vec![T::ZERO; c];

        for ni in 0..n {
            for gi in 0..groups {
                let c0 = gi * cg;
                let mut mean = T::ZERO;
                for ci in c0..c0 + cg {
                    let base = (ni * c + ci) * hw;
                    for i in 0..hw {
                        mean += xd[base + i];
                    }
                }
                mean = mean * inv_m;
                let mut var = T::ZERO;
                for ci in c0..c0 + cg {
                    let base = (ni * c + ci) * hw;
                    for i in 0..hw {
                        let d = xd[base + i] - mean;
                        var += d * d;
                    }
                }
                var = var * inv_m;
                let inv_std = T::ONE / (var + self.eps).sqrt();

                let mut mean_dxh = T::ZERO;
                let mut mean_dxh_xh = T::ZERO;
                for ci in c0..c0 + cg {
                    let base = (ni * c + ci) * hw;
                    for i in 0..hw {
                        let xh = (xd[base + i] - mean) * inv_std;
                        let dxh = gd[base + i] * gam[ci];
                        mean_dxh += dxh;
                        mean_dxh_xh += dxh * xh;
                        dgamma[ci] += gd[base + i] * xh;
                        dbeta[ci] += gd[base + i];
                    }
                }
                mean_dxh = mean_dxh * inv_m;
                mean_dxh_xh = mean_dxh_xh * inv_m;
                for ci in c0..c0 + cg {
                    let base = (ni * c + ci) * hw;
                    for i in 0..hw {
                        let xh = (xd[base + i] - mean) * inv_std;
                        let dxh = gd[base + i] * gam[ci];
                        dx_data[base + i] = inv_std * (dxh - mean_dxh - xh * mean_dxh_xh);
                    }
                }
            }
        }
        let shape = ctx.value(self.x).shape().to_vec();
        ctx.add_grad(self.x, Tensor::new(&shape, dx_data).unwrap());
        ctx.add_grad(self.gamma, Tensor::new(&[c], dgamma).unwrap());
        ctx.add_grad(self.beta, Tensor::new(&[c], dbeta).unwrap());
    }
}

#[derive(Debug)]
struct UnitNormalizeChannelsOp<T> {
    x: NodeId,
    n: usize,
    c: usize,
    hw: usize,
    eps: T,
}

impl<T: Element> Op<T> for UnitNormalizeChannelsOp<T> {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let (n, c, hw) = (self.n, self.c, self.hw);
        let xd = ctx.values[self.x.index()].data();
        let gd = g.data();
        let mut dx = vec![T::ZERO; xd.len()];
        for ni in 0..n {
            for i in 0..hw {
                let mut sq = T::ZERO;
                for ci in 0..c {
                    let v = xd[(ni * c + ci) * hw + i];
                    sq += v * v;
                }
                let r = T::ONE / (sq + self.eps).sqrt();
                let mut dot = T::ZERO;
                for ci in 0..c {
                    let idx = (ni * c + ci) * hw + i;
                    dot += gd[idx] * xd[idx] * r;
                }
                for ci in 0..c {
                    let idx = (ni * c + ci) * hw + i;
                    let y = xd[idx] * r;
                    dx[idx] = r * (gd[idx] - y * dot);
                }
            }
        }
        let shape = ctx.value(self.x).shape().to_vec();
        ctx.add_grad(self.x, Tensor::new(&shape, dx).unwrap());
    }
}

impl<T: Element> Graph<T> {
    /// Softmax over the last dimension.
    pub fn softmax(&mut self, x: NodeId) -> Result<NodeId> {
        let shape = self.value(x).shape().to_vec();
        let cols = *shape
            .last()
            .ok_or_else(|| TensorError::Dim("softmax on rank-0".into()))?;
        let xd = self.value(x).data();
        let rows = xd.len() / cols;
        let mut data = vec![T::ZERO; xd.len()];
        for r in 0..rows {
            let base = r * cols;
            let mut maxv = xd[base];
            for c in 1..cols {
                maxv = maxv.maxv(xd[base + c]);
            }
            let mut sum = T::ZERO;
            for c in 0..cols {
                let e = (xd[base + c] - maxv).exp();
                data[base + c] = e;
                sum += e;
            }
            let inv = T::ONE / sum;
            for c in 0..cols {
                data[base + c] = data[base + c] * inv;
            }
        }
        let req = self.requires[x.0];
        Ok(self.push(
            Tensor::new(&shape, data)?,
            Some(Box::new(SoftmaxOp { x, cols })),
            req,
        ))
    }

    /// Layer norm over the last dimension of a [M, C] tensor with per-channel
    /// scale/shift.
    pub fn layer_norm(
        &mut self,
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
        eps: T,
    ) -> Result<NodeId> {
        let (rows, cols) = self.value(x).dims2()?;
        if self.value(gamma).shape() != [cols] || self.value(beta).shape() != [cols] {
            return Err(TensorError::Shape(format!(
                "layer_norm scale/shift must be [{}]",
                cols
            )));
        }
        let xd = self.value(x).data();
        let gam = self.value(gamma).data();
        let bet = self.value(beta).data();
        let inv_c = T::ONE / T::from_f64(cols as f64);
        let mut data = vec![T::ZERO; xd.len()];
        for r in 0..rows {
            let base = r * cols;
            let mut mean = T::ZERO;
            for c in 0..cols {
                mean += xd[base + c];
            }
            mean = mean * inv_c;
            let mut var = T::ZERO;
            for c in 0..cols {
                let d = xd[base + c] - mean;
                var += d * d;
            }
            var = var * inv_c;
            let inv_std = T::ONE / (var + eps).sqrt();
            for c in 0..cols {
                data[base + c] = (xd[base + c] - mean) * inv_std * gam[c] + bet[c];
            }
        }
        let req = self.requires_any(&[x, gamma, beta]);
        Ok(self.push(
            Tensor::new(&[rows, cols], data)?,
            Some(Box::new(LayerNormOp {
                x,
                gamma,
                beta,
                rows,
                cols,
                eps,
            })),
            req,
        ))
    }

    /// Group normalization over NCHW input. C must be divisible by `groups`.
    pub fn group_norm(
        &mut self,
        x: NodeId,
        groups: usize,
        gamma: NodeId,
        beta: NodeId,
        eps: T,
    ) -> Result<NodeId> {
        let (n, c, h, w) = self.value(x).dims4()?;
        if groups == 0 || c % groups != 0 {
            return Err(TensorError::Config(format!(
                "group_norm: {} channels not divisible by {} groups",
                c, groups
            )));
        }
        if self.value(gamma).shape() != [c] || self.value(beta).shape() != [c] {
            return Err(TensorError::Shape(format!(
                "group_norm scale/shift must be [{}]",
                c
            )));
        }
        let hw = h * w;
        let cg = c / groups;
        let m = cg * hw;
        let inv_m = T::ONE / T::from_f64(m as f64);
        let xd = self.value(x).data();
        let gam = self.value(gamma).data();
        let bet = self.value(beta).data();
        let mut data = vec![T::ZERO; xd.len()];
        for ni in 0..n {
            for gi in 0..groups {
                let c0 = gi * cg;
                let mut mean = T::ZERO;
                for ci in c0..c0 + cg {
                    let base = (ni * c + ci) * hw;
                    for i in 0..hw {
                        mean += xd[base + i];
                    }
                }
                mean = mean * inv_m;
                let mut var = T::ZERO;
                for ci in c0..c0 + cg {
                    let base = (ni * c + ci) * hw;
                    for i in 0..hw {
                        let d = xd[base + i] - mean;
                        var += d * d;
                    }
                }
                var = var * inv_m;
                let inv_std = T::ONE / (var + eps).sqrt();
                for ci in c0..c0 + cg {
                    let base = (ni * c + ci) * hw;
                    for i in 0..hw {
                        data[base + i] = (xd[base + i] - mean) * inv_std * gam[ci] + bet[ci];
                    }
                }
            }
        }
        let req = self.requires_any(&[x, gamma, beta]);
        Ok(self.push(
            Tensor::new(&[n, c, h, w], data)?,
            Some(Box::new(GroupNormOp {
                x,
                gamma,
                beta,
                n,
                c,
                hw,
                groups,
                eps,
            })),
            req,
        ))
    }

    /// Normalize the channel vector at every (n, h, w) location to unit
    /// length (eps-regularized).
    pub fn unit_normalize_channels(&mut self, x: NodeId, eps: T) -> Result<NodeId> {
        let (n, c, h, w) = self.value(x).dims4()?;
        let hw = h * w;
        let xd = self.value(x).data();
        let mut data = vec![T::ZERO; xd.len()];
        for ni in 0..n {
            for i in 0..hw {
                let mut sq = T::ZERO;
                for ci in 0..c {
                    let v = xd[(ni * c + ci) * hw + i];
                    sq += v * v;
                }
                let r = T::ONE / (sq + eps).sqrt();
                for ci in 0..c {
                    let idx = (ni * c + ci) * hw + i;
                    data[idx] = xd[idx] * r;
                }
            }
        }
        let req = self.requires[x.0];
        Ok(self.push(
            Tensor::new(&[n, c, h, w], data)?,
            Some(Box::new(UnitNormalizeChannelsOp { x, n, c, hw, eps })),
            req,
        ))
    }
}
