//! 2D convolution over NCHW tensors via im2col + gemm.

use crate::element::Element;
use crate::error::{Result, TensorError};
use crate::graph::{BackwardCtx, Graph, NodeId, Op};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug)]
struct ConvDims {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    oc: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
}

impl ConvDims {
    fn ckk(&self) -> usize {
        self.c * self.kh * self.kw
    }
}

/// Unpack one batch item into a [C*kh*kw, oh*ow] column matrix.
fn im2col<T: Element>(x: &[T], d: &ConvDims, col: &mut [T]) {
    let (h, w, s, p) = (d.h, d.w, d.stride, d.pad);
    let ohw = d.oh * d.ow;
    let mut row = 0usize;
    for c in 0..d.c {
        let plane = &x[c * h * w..(c + 1) * h * w];
        for ky in 0..d.kh {
            for kx in 0..d.kw {
                let dst = &mut col[row * ohw..(row + 1) * ohw];
                for oy in 0..d.oh {
                    let iy = (oy * s + ky) as isize - p as isize;
                    let out_base = oy * d.ow;
                    if iy < 0 || iy >= h as isize {
                        dst[out_base..out_base + d.ow].fill(T::ZERO);
                        continue;
                    }
                    let src_base = iy as usize * w;
                    for ox in 0..d.ow {
                        let ix = (ox * s + kx) as isize - p as isize;
                        dst[out_base + ox] = if ix < 0 || ix >= w as isize {
                            T::ZERO
                        } else {
                            plane[src_base + ix as usize]
                        };
                    }
                }
                row += 1;
            }
        }
    }
}

/// Scatter-add a column-matrix gradient back onto one input batch item.
fn col2im_add<T: Element>(col: &[T], d: &ConvDims, dx: &mut [T]) {
    let (h, w, s, p) = (d.h, d.w, d.stride, d.pad);
    let ohw = d.oh * d.ow;
    let mut row = 0usize;
    for c in 0..d.c {
        let plane = &mut dx[c * h * w..(c + 1) * h * w];
        for ky in 0..d.kh {
            for kx in 0..d.kw {
                let src = &col[row * ohw..(row + 1) * ohw];
                for oy in 0..d.oh {
                    let iy = (oy * s + ky) as isize - p as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let dst_base = iy as usize * w;
                    let src_base = oy * d.ow;
                    for ox in 0..d.ow {
                        let ix = (ox * s + kx) as isize - p as isize;
                        if ix >= 0 && ix < w as isize {
                            plane[dst_base + ix as usize] += src[src_base + ox];
                        }
                    }
                }
                row += 1;
            }
        }
    }
}

#[derive(Debug)]
struct Conv2dOp {
    x: NodeId,
    kernel: NodeId,
    dims: ConvDims,
}

impl<T: Element> Op<T> for Conv2dOp {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let d = self.dims;
        let ckk = d.ckk();
        let ohw = d.oh * d.ow;
        let gd = g.data();
        let mut col = vec![T::ZERO; ckk * ohw];

        if ctx.needs(self.kernel) {
            let xd = ctx.values[self.x.index()].data();
            let mut dw = Tensor::zeros(&[d.oc, d.c, d.kh, d.kw]);
            for n in 0..d.n {
                im2col(&xd[n * d.c * d.h * d.w..], &d, &mut col);
                // dW += g_n [oc, ohw] . col^T [ohw, ckk]
                T::gemm_strided(
                    d.oc,
                    ohw,
                    ckk,
                    T::ONE,
                    &gd[n * d.oc * ohw..],
                    ohw as isize,
                    1,
                    &col,
                    1,
                    ohw as isize,
                    T::ONE,
                    dw.data_mut(),
                    ckk as isize,
                    1,
                );
            }
            ctx.add_grad(self.kernel, dw);
        }

        if ctx.needs(self.x) {
            let wd = ctx.values[self.kernel.index()].data();
            let mut dx = Tensor::zeros(&[d.n, d.c, d.h, d.w]);
            for n in 0..d.n {
                // dcol = W^T [ckk, oc] . g_n [oc, ohw]
                T::gemm_strided(
                    ckk,
                    d.oc,
                    ohw,
                    T::ONE,
                    wd,
                    1,
                    ckk as isize,
                    &gd[n * d.oc * ohw..],
                    ohw as isize,
                    1,
                    T::ZERO,
                    &mut col,
                    ohw as isize,
                    1,
                );
                col2im_add(&col, &d, &mut dx.data_mut()[n * d.c * d.h * d.w..]);
            }
            ctx.add_grad(self.x, dx);
        }
    }
}

impl<T: Element> Graph<T> {
    /// conv2d over NCHW input with an [OC, C, kh, kw] kernel.
    /// Output spatial dims: floor((H + 2p - k) / s) + 1.
    pub fn conv2d(
        &mut self,
        x: NodeId,
        kernel: NodeId,
        stride: usize,
        pad: usize,
    ) -> Result<NodeId> {
        let (n, c, h, w) = self.value(x).dims4()?;
        let (oc, kc, kh, kw) = self.value(kernel).dims4()?;
        if kc != c {
            return Err(TensorError::Dim(format!(
                "conv2d kernel expects {} input channels, input has {}",
                kc, c
            )));
        }
        if stride == 0 {
            return Err(TensorError::Config("conv2d stride must be >= 1".into()));
        }
        if h + 2 * pad < kh || w + 2 * pad < kw {
            return Err(TensorError::Dim(format!(
                "conv2d spatial dims {}x{} (+2*{} pad) smaller than kernel {}x{}",
                h, w, pad, kh, kw
            )));
        }
        let oh = (h + 2 * pad - kh) / stride + 1;
        let ow = (w + 2 * pad - kw) / stride + 1;
        let dims = ConvDims {
            n,
            c,
            h,
            w,
            oc,
            kh,
            kw,
            stride,
            pad,
            oh,
            ow,
        };
        let ckk = dims.ckk();
        let ohw = oh * ow;
        let mut col = vec![T::ZERO; ckk * ohw];
        let mut out = Tensor::zeros(&[n, oc, oh, ow]);
        for ni in 0..n {
            im2col(&self.value(x).data()[ni * c * h * w..], &dims, &mut col);
            T::gemm_strided(
                oc,
                ckk,
                ohw,
                T::ONE,
                self.value(kernel).data(),
                ckk as isize,
                1,
                &col,
                ohw as isize,
                1,
                T::ZERO,
                &mut out.data_mut()[ni * oc * ohw..],
                ohw as isize,
                1,
            );
        }
        let req = self.requires_any(&[x, kernel]);
        Ok(self.push(out, Some(Box::new(Conv2dOp { x, kernel, dims })), req))
    }

    /// Non-overlapping patch embedding: conv2d with stride == kernel size.
    pub fn patch_embed(&mut self, x: NodeId, kernel: NodeId, patch: usize) -> Result<NodeId> {
        let (_, _, kh, kw) = self.value(kernel).dims4()?;
        if kh != patch || kw != patch {
            return Err(TensorError::Config(format!(
                "patch_embed kernel {}x{} must match patch size {}",
                kh, kw, patch
            )));
        }
        self.conv2d(x, kernel, patch, 0)
    }
}
