//! Dense matrix products. The 2D path goes through the blocked gemm kernel;
//! batched 3D products use it per batch item.

use crate::element::Element;
use crate::error::{Result, TensorError};
use crate::graph::{BackwardCtx, Graph, NodeId, Op};
use crate::tensor::Tensor;

#[derive(Debug)]
struct MatMulOp {
    a: NodeId,
    b: NodeId,
    m: usize,
    k: usize,
    n: usize,
}

impl<T: Element> Op<T> for MatMulOp {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let (m, k, n) = (self.m, self.k, self.n);
        let gd = g.data();
        if ctx.needs(self.a) {
            // dA = g . B^T
            let bd = ctx.value(self.b).data();
            let mut da = Tensor::zeros(&[m, k]);
            T::gemm_strided(
                m,
                n,
                k,
                T::ONE,
                gd,
                n as isize,
                1,
                bd,
                1,
                n as isize,
                T::ZERO,
                da.data_mut(),
                k as isize,
                1,
            );
            ctx.add_grad(self.a, da);
        }
        if ctx.needs(self.b) {
            // dB = A^T . g
            let ad = ctx.value(self.a).data();
            let mut db = Tensor::zeros(&[k, n]);
            T::gemm_strided(
                k,
                m,
                n,
                T::ONE,
                ad,
                1,
                k as isize,
                gd,
                n as isize,
                1,
                T::ZERO,
                db.data_mut(),
                n as isize,
                1,
            );
            ctx.add_grad(self.b, db);
        }
    }
}

#[derive(Debug)]
struct BmmOp {
    a: NodeId,
    b: NodeId,
    batch: usize,
    m: usize,
    k: usize,
    n: usize,
}

impl<T: Element> Op<T> for BmmOp {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let (m, k, n) = (self.m, self.k, self.n);
        let gd = g.data();
        if ctx.needs(self.a) {
            let bd = ctx.value(self.b).data();
            let mut da = Tensor::zeros(&[self.batch, m, k]);
            for i in 0..self.batch {
                T::gemm_strided(
                    m,
                    n,
                    k,
                    T::ONE,
                    &gd[i * m * n..],
                    n as isize,
                    1,
                    &bd[i * k * n..],
                    1,
                    n as isize,
                    T::ZERO,
                    &mut da.data_mut()[i * m * k..],
                    k as isize,
                    1,
                );
            }
            ctx.add_grad(self.a, da);
        }
        if ctx.needs(self.b) {
            let ad = ctx.value(self.a).data();
            let mut db = Tensor::zeros(&[self.batch, k, n]);
            for i in 0..self.batch {
                T::gemm_strided(
                    k,
                    m,
                    n,
                    T::ONE,
                    &ad[i * m * k..],
                    1,
                    k as isize,
                    &gd[i * m * n..],
                    n as isize,
                    1,
                    T::ZERO,
                    &mut db.data_mut()[i * k * n..],
                    n as isize,
                    1,
                );
            }
            ctx.add_grad(self.b, db);
        }
    }
}

#[derive(Debug)]
struct Transpose2Op {
    x: NodeId,
    rows: usize,
    cols: usize,
}

impl<T: Element> Op<T> for Transpose2Op {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        // g is [cols, rows]; transpose back
        let gd = g.data();
        let mut dx = Tensor::zeros(&[self.rows, self.cols]);
        {
            let d = dx.data_mut();
            for r in 0..self.rows {
                for c in 0..self.cols {
                    d[r * self.cols + c] = gd[c * self.rows + r];
                }
            }
        }
        ctx.add_grad(self.x, dx);
    }
}

impl<T: Element> Graph<T> {
    /// C = A[m,k] . B[k,n].
    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (m, ka) = self.value(a).dims2()?;
        let (kb, n) = self.value(b).dims2()?;
        if ka != kb {
            return Err(TensorError::Dim(format!(
                "matmul inner dims {} vs {}",
                ka, kb
            )));
        }
        let mut out = Tensor::zeros(&[m, n]);
        crate::element::gemm(
            m,
            ka,
            n,
            T::ONE,
            self.value(a).data(),
            self.value(b).data(),
            T::ZERO,
            out.data_mut(),
        );
        let req = self.requires_any(&[a, b]);
        Ok(self.push(
            out,
            Some(Box::new(MatMulOp { a, b, m, k: ka, n })),
            req,
        ))
    }

    /// Batched matmul: [B,m,k] . [B,k,n] -> [B,m,n].
    pub fn bmm(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ba, m, ka) = self.value(a).dims3()?;
        let (bb, kb, n) = self.value(b).dims3()?;
        if ba != bb || ka != kb {
            return Err(TensorError::Dim(format!(
                "bmm {:?} vs {:?}",
                self.value(a).shape(),
                self.value(b).shape()
            )));
        }
        let mut out = Tensor::zeros(&[ba, m, n]);
        for i in 0..ba {
            T::gemm_strided(
                m,
                ka,
                n,
                T::ONE,
                &self.value(a).data()[i * m * ka..],
                ka as isize,
                1,
                &self.value(b).data()[i * ka * n..],
                n as isize,
                1,
                T::ZERO,
                &mut out.data_mut()[i * m * n..],
                n as isize,
                1,
            );
        }
        let req = self.requires_any(&[a, b]);
        Ok(self.push(
            out,
            Some(Box::new(BmmOp {
                a,
                b,
                batch: ba,
                m,
                k: ka,
                n,
            })),
            req,
        ))
    }

    pub fn transpose2(&mut self, x: NodeId) -> Result<NodeId> {
        let (rows, cols) = self.value(x).dims2()?;
        let xd = self.value(x).data();
        let mut out = Tensor::zeros(&[cols, rows]);
        {
            let d = out.data_mut();
            for r in 0..rows {
                for c in 0..cols {
                    d[c * rows + r] = xd[r * cols + c];
                }
            }
        }
        let req = self.requires[x.0];
        Ok(self.push(out, Some(Box::new(Transpose2Op { x, rows, cols })), req))
    }
}
