//! Elementwise and structural ops: arithmetic, reductions, reshapes,
//! concatenation, row gather/scatter and bilinear row sampling.

use crate::element::Element;
use crate::error::{Result, TensorError};
use crate::graph::{BackwardCtx, Graph, NodeId, Op};
use crate::tensor::Tensor;

fn check_same_shape<T: Element>(a: &Tensor<T>, b: &Tensor<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(TensorError::Shape(format!(
            "operands {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

#[derive(Debug)]
struct AddOp {
    a: NodeId,
    b: NodeId,
}

impl<T: Element> Op<T> for AddOp {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        ctx.add_grad(self.a, g.clone());
        ctx.add_grad(self.b, g.clone());
    }
}

#[derive(Debug)]
struct SubOp {
    a: NodeId,
    b: NodeId,
}

impl<T: Element> Op<T> for SubOp {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        ctx.add_grad(self.a, g.clone());
        ctx.add_grad(self.b, g.map(|x| -x));
    }
}

#[derive(Debug)]
struct MulOp {
    a: NodeId,
    b: NodeId,
}

impl<T: Element> Op<T> for MulOp {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        if ctx.needs(self.a) {
            let gb = g.zip_map(ctx.value(self.b), |x, y| x * y).unwrap();
            ctx.add_grad(self.a, gb);
        }
        if ctx.needs(self.b) {
            let ga = g.zip_map(ctx.value(self.a), |x, y| x * y).unwrap();
            ctx.add_grad(self.b, ga);
        }
    }
}

#[derive(Debug)]
struct AffineOp<T> {
    x: NodeId,
    scale: T,
}

impl<T: Element> Op<T> for AffineOp<T> {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let s = self.scale;
        ctx.add_grad(self.x, g.map(|v| v * s));
    }
}

#[derive(Debug)]
struct AbsOp {
    x: NodeId,
}

impl<T: Element> Op<T> for AbsOp {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        // subgradient 0 at x == 0
        let gx = g
            .zip_map(ctx.value(self.x), |gv, xv| {
                if xv > T::ZERO {
                    gv
                } else if xv < T::ZERO {
                    -gv
                } else {
                    T::ZERO
                }
            })
            .unwrap();
        ctx.add_grad(self.x, gx);
    }
}

#[derive(Debug)]
struct SumOp {
    x: NodeId,
    mean: bool,
}

impl<T: Element> Op<T> for SumOp {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let n = ctx.value(self.x).numel();
        let scale = if self.mean {
            T::ONE / T::from_f64(n as f64)
        } else {
            T::ONE
        };
        let gv = g.item() * scale;
        let shape = ctx.value(self.x).shape().to_vec();
        ctx.add_grad(self.x, Tensor::full(&shape, gv));
    }
}

#[derive(Debug)]
struct ReshapeOp {
    x: NodeId,
}

impl<T: Element> Op<T> for ReshapeOp {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let shape = ctx.value(self.x).shape().to_vec();
        ctx.add_grad(self.x, g.reshape(&shape).unwrap());
    }
}

#[derive(Debug)]
struct ConcatRowsOp {
    parts: Vec<(NodeId, usize)>, // (node, row count)
    cols: usize,
}

impl<T: Element> Op<T> for ConcatRowsOp {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let gd = g.data();
        let mut row = 0usize;
        for &(id, rows) in &self.parts {
            if ctx.needs(id) {
                let chunk = &gd[row * self.cols..(row + rows) * self.cols];
                ctx.add_grad(id, Tensor::new(&[rows, self.cols], chunk.to_vec()).unwrap());
            }
            row += rows;
        }
    }
}

#[derive(Debug)]
struct ConcatColsOp {
    a: NodeId,
    b: NodeId,
    rows: usize,
    ca: usize,
    cb: usize,
}

impl<T: Element> Op<T> for ConcatColsOp {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let gd = g.data();
        let cols = self.ca + self.cb;
        if ctx.needs(self.a) {
            let mut da = Tensor::zeros(&[self.rows, self.ca]);
            for r in 0..self.rows {
                da.data_mut()[r * self.ca..(r + 1) * self.ca]
                    .copy_from_slice(&gd[r * cols..r * cols + self.ca]);
            }
            ctx.add_grad(self.a, da);
        }
        if ctx.needs(self.b) {
            let mut db = Tensor::zeros(&[self.rows, self.cb]);
            for r in 0..self.rows {
                db.data_mut()[r * self.cb..(r + 1) * self.cb]
                    .copy_from_slice(&gd[r * cols + self.ca..(r + 1) * cols]);
            }
            ctx.add_grad(self.b, db);
        }
    }
}

#[derive(Debug)]
struct ConcatChannelsOp {
    a: NodeId,
    b: NodeId,
    n: usize,
    ca: usize,
    cb: usize,
    hw: usize,
}

impl<T: Element> Op<T> for ConcatChannelsOp {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let gd = g.data();
        let (ca, cb, hw) = (self.ca, self.cb, self.hw);
        let cs = ca + cb;
        if ctx.needs(self.a) {
            let mut da = vec![T::ZERO; self.n * ca * hw];
            for n in 0..self.n {
                da[n * ca * hw..(n + 1) * ca * hw]
                    .copy_from_slice(&gd[n * cs * hw..n * cs * hw + ca * hw]);
            }
            let shape = ctx.value(self.a).shape().to_vec();
            ctx.add_grad(self.a, Tensor::new(&shape, da).unwrap());
        }
        if ctx.needs(self.b) {
            let mut db = vec![T::ZERO; self.n * cb * hw];
            for n in 0..self.n {
                db[n * cb * hw..(n + 1) * cb * hw]
                    .copy_from_slice(&gd[n * cs * hw + ca * hw..(n + 1) * cs * hw]);
            }
            let shape = ctx.value(self.b).shape().to_vec();
            ctx.add_grad(self.b, Tensor::new(&shape, db).unwrap());
        }
    }
}

#[derive(Debug)]
struct BiasRowsOp {
    x: NodeId,
    b: NodeId,
    rows: usize,
    cols: usize,
}

impl<T: Element> Op<T> for BiasRowsOp {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        ctx.add_grad(self.x, g.clone());
        if ctx.needs(self.b) {
            let gd = g.data();
            let mut db = vec![T::ZERO; self.cols];
            for r in 0..self.rows {
                for c in 0..self.cols {
                    db[c] += gd[r * self.cols + c];
                }
            }
            ctx.add_grad(self.b, Tensor::new(&[self.cols], db).unwrap());
        }
    }
}

#[derive(Debug)]
struct BiasChannelsOp {
    x: NodeId,
    b: NodeId,
    n: usize,
    c: usize,
    hw: usize,
}

impl<T: Element> Op<T> for BiasChannelsOp {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        ctx.add_grad(self.x, g.clone());
        if ctx.needs(self.b) {
            let gd = g.data();
            let mut db = vec![T::ZERO; self.c];
            for n in 0..self.n {
                for c in 0..self.c {
                    let base = (n * self.c + c) * self.hw;
                    let mut acc = T::ZERO;
                    for i in 0..self.hw {
                        acc += gd[base + i];
                    }
                    db[c] += acc;
                }
            }
            ctx.add_grad(self.b, Tensor::new(&[self.c], db).unwrap());
        }
    }
}

#[derive(Debug)]
struct GatherRowsOp {
    x: NodeId,
    idx: Vec<usize>,
    cols: usize,
}

impl<T: Element> Op<T> for GatherRowsOp {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let gd = g.data();
        let cols = self.cols;
        if let Some(dx) = ctx.grad_mut(self.x) {
            for (k, &src) in self.idx.iter().enumerate() {
                for c in 0..cols {
                    dx[src * cols + c] += gd[k * cols + c];
                }
            }
        }
    }
}

#[derive(Debug)]
struct ScatterRowsToImageOp {
    rows: NodeId,
    pixels: Vec<usize>,
    cols: usize,
    hw: usize,
}

impl<T: Element> Op<T> for ScatterRowsToImageOp {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        if !ctx.needs(self.rows) {
            return;
        }
        let gd = g.data();
        let mut dr = Tensor::zeros(&[self.pixels.len(), self.cols]);
        {
            let d = dr.data_mut();
            for (p, &pix) in self.pixels.iter().enumerate() {
                for c in 0..self.cols {
                    d[p * self.cols + c] = gd[c * self.hw + pix];
                }
            }
        }
        ctx.add_grad(self.rows, dr);
    }
}

#[derive(Debug)]
struct SegmentMeanOp {
    x: NodeId,
    segs: Vec<(usize, usize)>,
    cols: usize,
}

impl<T: Element> Op<T> for SegmentMeanOp {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let gd = g.data();
        let cols = self.cols;
        if let Some(dx) = ctx.grad_mut(self.x) {
            for (p, &(start, len)) in self.segs.iter().enumerate() {
                let inv = T::ONE / T::from_f64(len as f64);
                for r in start..start + len {
                    for c in 0..cols {
                        dx[r * cols + c] += gd[p * cols + c] * inv;
                    }
                }
            }
        }
    }
}

/// One bilinear tap: source texel plus blend weight.
#[derive(Clone, Copy, Debug)]
pub struct SampleTap {
    pub y: usize,
    pub x: usize,
    pub w: f64,
}

#[derive(Debug)]
struct SampleRowsOp {
    map: NodeId,
    taps: Vec<Vec<SampleTap>>,
    c: usize,
    h: usize,
    w: usize,
}

impl<T: Element> Op<T> for SampleRowsOp {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let gd = g.data();
        let (c, hw, w) = (self.c, self.h * self.w, self.w);
        if let Some(dm) = ctx.grad_mut(self.map) {
            for (k, taps) in self.taps.iter().enumerate() {
                for tap in taps {
                    let tw = T::from_f64(tap.w);
                    let base = tap.y * w + tap.x;
                    for ch in 0..c {
                        dm[ch * hw + base] += gd[k * c + ch] * tw;
                    }
                }
            }
        }
    }
}

impl<T: Element> Graph<T> {
    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        check_same_shape(self.value(a), self.value(b))?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y)?;
        let req = self.requires_any(&[a, b]);
        Ok(self.push(v, Some(Box::new(AddOp { a, b })), req))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        check_same_shape(self.value(a), self.value(b))?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x - y)?;
        let req = self.requires_any(&[a, b]);
        Ok(self.push(v, Some(Box::new(SubOp { a, b })), req))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        check_same_shape(self.value(a), self.value(b))?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y)?;
        let req = self.requires_any(&[a, b]);
        Ok(self.push(v, Some(Box::new(MulOp { a, b })), req))
    }

    /// y = scale * x + shift, scalar coefficients.
    pub fn affine(&mut self, x: NodeId, scale: T, shift: T) -> Result<NodeId> {
        let v = self.value(x).map(|v| scale * v + shift);
        let req = self.requires[x.0];
        Ok(self.push(v, Some(Box::new(AffineOp { x, scale })), req))
    }

    pub fn neg(&mut self, x: NodeId) -> Result<NodeId> {
        self.affine(x, -T::ONE, T::ZERO)
    }

    pub fn abs(&mut self, x: NodeId) -> Result<NodeId> {
        let v = self.value(x).map(|v| v.abs());
        let req = self.requires[x.0];
        Ok(self.push(v, Some(Box::new(AbsOp { x })), req))
    }

    pub fn sum(&mut self, x: NodeId) -> Result<NodeId> {
        let mut acc = T::ZERO;
        for &v in self.value(x).data() {
            acc += v;
        }
        let req = self.requires[x.0];
        Ok(self.push(
            Tensor::scalar(acc),
            Some(Box::new(SumOp { x, mean: false })),
            req,
        ))
    }

    pub fn mean(&mut self, x: NodeId) -> Result<NodeId> {
        let n = self.value(x).numel();
        if n == 0 {
            return Err(TensorError::Dim("mean of empty tensor".into()));
        }
        let mut acc = T::ZERO;
        for &v in self.value(x).data() {
            acc += v;
        }
        let v = acc / T::from_f64(n as f64);
        let req = self.requires[x.0];
        Ok(self.push(
            Tensor::scalar(v),
            Some(Box::new(SumOp { x, mean: true })),
            req,
        ))
    }

    pub fn reshape(&mut self, x: NodeId, shape: &[usize]) -> Result<NodeId> {
        let v = self.value(x).reshape(shape)?;
        let req = self.requires[x.0];
        Ok(self.push(v, Some(Box::new(ReshapeOp { x })), req))
    }

    /// Vertical stack of 2D blocks sharing a column count.
    pub fn concat_rows(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(TensorError::Dim("concat_rows of zero parts".into()));
        }
        let (_, cols) = self.value(parts[0]).dims2()?;
        let mut total = 0usize;
        let mut meta = Vec::with_capacity(parts.len());
        for &p in parts {
            let (r, c) = self.value(p).dims2()?;
            if c != cols {
                return Err(TensorError::Shape(format!(
                    "concat_rows column mismatch {} vs {}",
                    c, cols
                )));
            }
            meta.push((p, r));
            total += r;
        }
        let mut data = Vec::with_capacity(total * cols);
        for &p in parts {
            data.extend_from_slice(self.value(p).data());
        }
        let req = self.requires_any(parts);
        Ok(self.push(
            Tensor::new(&[total, cols], data)?,
            Some(Box::new(ConcatRowsOp { parts: meta, cols })),
            req,
        ))
    }

    /// Last-dim concat of two 2D tensors with equal row counts.
    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ra, ca) = self.value(a).dims2()?;
        let (rb, cb) = self.value(b).dims2()?;
        if ra != rb {
            return Err(TensorError::Shape(format!(
                "concat_cols rows {} vs {}",
                ra, rb
            )));
        }
        let mut data = Vec::with_capacity(ra * (ca + cb));
        let ad = self.value(a).data();
        let bd = self.value(b).data();
        for r in 0..ra {
            data.extend_from_slice(&ad[r * ca..(r + 1) * ca]);
            data.extend_from_slice(&bd[r * cb..(r + 1) * cb]);
        }
        let req = self.requires_any(&[a, b]);
        Ok(self.push(
            Tensor::new(&[ra, ca + cb], data)?,
            Some(Box::new(ConcatColsOp {
                a,
                b,
                rows: ra,
                ca,
                cb,
            })),
            req,
        ))
    }

    /// Channel concat of two NCHW tensors; channel order is a-then-b.
    pub fn concat_channels(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (na, ca, ha, wa) = self.value(a).dims4()?;
        let (nb, cb, hb, wb) = self.value(b).dims4()?;
        if (na, ha, wa) != (nb, hb, wb) {
            return Err(TensorError::Shape(format!(
                "concat_channels {:?} vs {:?}",
                self.value(a).shape(),
                self.value(b).shape()
            )));
        }
        let hw = ha * wa;
        let mut data = Vec::with_capacity(na * (ca + cb) * hw);
        let ad = self.value(a).data();
        let bd = self.value(b).data();
        for n in 0..na {
            data.extend_from_slice(&ad[n * ca * hw..(n + 1) * ca * hw]);
            data.extend_from_slice(&bd[n * cb * hw..(n + 1) * cb * hw]);
        }
        let req = self.requires_any(&[a, b]);
        Ok(self.push(
            Tensor::new(&[na, ca + cb, ha, wa], data)?,
            Some(Box::new(ConcatChannelsOp {
                a,
                b,
                n: na,
                ca,
                cb,
                hw,
            })),
            req,
        ))
    }

    /// Broadcast-add a [C] bias over the rows of a [M, C] tensor.
    pub fn bias_rows(&mut self, x: NodeId, b: NodeId) -> Result<NodeId> {
        let (rows, cols) = self.value(x).dims2()?;
        if self.value(b).shape() != [cols] {
            return Err(TensorError::Shape(format!(
                "bias_rows bias {:?} for {} cols",
                self.value(b).shape(),
                cols
            )));
        }
        let xd = self.value(x).data();
        let bd = self.value(b).data();
        let mut data = Vec::with_capacity(xd.len());
        for r in 0..rows {
            for c in 0..cols {
                data.push(xd[r * cols + c] + bd[c]);
            }
        }
        let req = self.requires_any(&[x, b]);
        Ok(self.push(
            Tensor::new(&[rows, cols], data)?,
            Some(Box::new(BiasRowsOp { x, b, rows, cols })),
            req,
        ))
    }

    /// Broadcast-add a [C] bias over channels of an NCHW tensor.
    pub fn bias_channels(&mut self, x: NodeId, b: NodeId) -> Result<NodeId> {
        let (n, c, h, w) = self.value(x).dims4()?;
        if self.value(b).shape() != [c] {
            return Err(TensorError::Shape(format!(
                "bias_channels bias {:?} for {} channels",
                self.value(b).shape(),
                c
            )));
        }
        let hw = h * w;
        let xd = self.value(x).data();
        let bd = self.value(b).data();
        let mut data = Vec::with_capacity(xd.len());
        for ni in 0..n {
            for ci in 0..c {
                let base = (ni * c + ci) * hw;
                let bias = bd[ci];
                for i in 0..hw {
                    data.push(xd[base + i] + bias);
                }
            }
        }
        let req = self.requires_any(&[x, b]);
        Ok(self.push(
            Tensor::new(&[n, c, h, w], data)?,
            Some(Box::new(BiasChannelsOp { x, b, n, c, hw })),
            req,
        ))
    }

    /// y[k] = x[idx[k]] over rows of a 2D tensor. Duplicate indices allowed.
    pub fn gather_rows(&mut self, x: NodeId, idx: &[usize]) -> Result<NodeId> {
        let (rows, cols) = self.value(x).dims2()?;
        if let Some(&bad) = idx.iter().find(|&&i| i >= rows) {
            return Err(TensorError::Dim(format!(
                "gather_rows index {} out of {} rows",
                bad, rows
            )));
        }
        let xd = self.value(x).data();
        let mut data = Vec::with_capacity(idx.len() * cols);
        for &i in idx {
            data.extend_from_slice(&xd[i * cols..(i + 1) * cols]);
        }
        let req = self.requires[x.0];
        Ok(self.push(
            Tensor::new(&[idx.len(), cols], data)?,
            Some(Box::new(GatherRowsOp {
                x,
                idx: idx.to_vec(),
                cols,
            })),
            req,
        ))
    }

    /// Write row p of `rows` into pixel `pixels[p]` of a [1, C, H, W] image;
    /// untouched pixels stay exactly zero. Pixel indices must be unique.
    pub fn scatter_rows_to_image(
        &mut self,
        rows: NodeId,
        pixels: &[usize],
        h: usize,
        w: usize,
    ) -> Result<NodeId> {
        let (p, c) = self.value(rows).dims2()?;
        if p != pixels.len() {
            return Err(TensorError::Shape(format!(
                "{} rows vs {} pixels",
                p,
                pixels.len()
            )));
        }
        let hw = h * w;
        if let Some(&bad) = pixels.iter().find(|&&i| i >= hw) {
            return Err(TensorError::Dim(format!(
                "pixel {} outside {}x{} image",
                bad, h, w
            )));
        }
        let rd = self.value(rows).data();
        let mut data = vec![T::ZERO; c * hw];
        for (k, &pix) in pixels.iter().enumerate() {
            for ch in 0..c {
                data[ch * hw + pix] = rd[k * c + ch];
            }
        }
        let req = self.requires[rows.0];
        Ok(self.push(
            Tensor::new(&[1, c, h, w], data)?,
            Some(Box::new(ScatterRowsToImageOp {
                rows,
                pixels: pixels.to_vec(),
                cols: c,
                hw,
            })),
            req,
        ))
    }

    /// Mean over each row segment of a packed [M, C] tensor -> [len(segs), C].
    /// Segments are (start, len) with len >= 1.
    pub fn segment_mean(&mut self, x: NodeId, segs: &[(usize, usize)]) -> Result<NodeId> {
        let (rows, cols) = self.value(x).dims2()?;
        for &(start, len) in segs {
            if len == 0 || start + len > rows {
                return Err(TensorError::Dim(format!(
                    "segment ({start},{len}) outside {rows} rows"
                )));
            }
        }
        let xd = self.value(x).data();
        let mut data = Vec::with_capacity(segs.len() * cols);
        for &(start, len) in segs {
            let inv = T::ONE / T::from_f64(len as f64);
            for c in 0..cols {
                let mut acc = T::ZERO;
                for r in start..start + len {
                    acc += xd[r * cols + c];
                }
                data.push(acc * inv);
            }
        }
        let req = self.requires[x.0];
        Ok(self.push(
            Tensor::new(&[segs.len(), cols], data)?,
            Some(Box::new(SegmentMeanOp {
                x,
                segs: segs.to_vec(),
                cols,
            })),
            req,
        ))
    }

    /// Bilinear row sampling from a [1, C, H, W] (or [C, H, W]) feature map.
    /// Each output row blends the given taps; an empty tap list yields a zero
    /// row (out-of-bounds sample). Gradients flow into map values only.
    pub fn sample_rows(&mut self, map: NodeId, taps: &[Vec<SampleTap>]) -> Result<NodeId> {
        let (c, h, w) = match *self.value(map).shape() {
            [1, c, h, w] => (c, h, w),
            [c, h, w] => (c, h, w),
            ref s => {
                return Err(TensorError::Dim(format!(
                    "sample_rows wants [1,C,H,W] or [C,H,W], got {:?}",
                    s
                )))
            }
        };
        for row in taps {
            for tap in row {
                if tap.y >= h || tap.x >= w {
                    return Err(TensorError::Dim(format!(
                        "tap ({},{}) outside {}x{} map",
                        tap.y, tap.x, h, w
                    )));
                }
            }
        }
        let md = self.value(map).data();
        let hw = h * w;
        let mut data = vec![T::ZERO; taps.len() * c];
        for (k, row) in taps.iter().enumerate() {
            for tap in row {
                let tw = T::from_f64(tap.w);
                let base = tap.y * w + tap.x;
                for ch in 0..c {
                    data[k * c + ch] += md[ch * hw + base] * tw;
                }
            }
        }
        let req = self.requires[map.0];
        Ok(self.push(
            Tensor::new(&[taps.len(), c], data)?,
            Some(Box::new(SampleRowsOp {
                map,
                taps: taps.to_vec(),
                c,
                h,
                w,
            })),
            req,
        ))
    }
}
