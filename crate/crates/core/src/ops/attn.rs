//! Scaled dot-product attention over packed row segments.
//!
//! Query rows attend only to key/value rows of their own segment, so one call
//! serves both a plain [T, d] attention and the per-pixel ragged case where
//! every pixel owns a variable-length token run.

use crate::element::Element;
use crate::error::{Result, TensorError};
use crate::graph::{BackwardCtx, Graph, NodeId, Op};
use crate::tensor::Tensor;

/// (start, len) row segments; query and key/value segments are paired.
pub type Segments = Vec<(usize, usize)>;

fn softmax_row<T: Element>(row: &mut [T]) {
    let mut maxv = row[0];
    for &v in row.iter().skip(1) {
        maxv = maxv.maxv(v);
    }
    let mut sum = T::ZERO;
    for v in row.iter_mut() {
        *v = (*v - maxv).exp();
        sum += *v;
    }
    let inv = T::ONE / sum;
    for v in row.iter_mut() {
        *v = *v * inv;
    }
}

/// Attention forward on one segment; returns flattened weights [tq, tk].
fn segment_forward<T: Element>(
    q: &[T],
    k: &[T],
    v: &[T],
    tq: usize,
    tk: usize,
    d: usize,
    scale: T,
    out: &mut [T],
) -> Vec<T> {
    let mut w = vec![T::ZERO; tq * tk];
    for i in 0..tq {
        for j in 0..tk {
            let mut dot = T::ZERO;
            for e in 0..d {
                dot += q[i * d + e] * k[j * d + e];
            }
            w[i * tk + j] = dot * scale;
        }
        softmax_row(&mut w[i * tk..(i + 1) * tk]);
    }
    for i in 0..tq {
        for e in 0..d {
            let mut acc = T::ZERO;
            for j in 0..tk {
                acc += w[i * tk + j] * v[j * d + e];
            }
            out[i * d + e] = acc;
        }
    }
    w
}

#[derive(Debug)]
struct AttentionOp<T> {
    q: NodeId,
    k: NodeId,
    v: NodeId,
    q_segs: Segments,
    kv_segs: Segments,
    d: usize,
    scale: T,
    /// Saved softmax weights, one [tq*tk] block per segment.
    weights: Vec<Vec<T>>,
}

impl<T: Element> Op<T> for AttentionOp<T> {
    fn backward(&self, _out: NodeId, g: &Tensor<T>, ctx: &mut BackwardCtx<T>) {
        let d = self.d;
        let qd = ctx.values[self.q.index()].data();
        let kd = ctx.values[self.k.index()].data();
        let vd = ctx.values[self.v.index()].data();
        let gd = g.data();

        let mut dq = vec![T::ZERO; qd.len()];
        let mut dk = vec![T::ZERO; kd.len()];
        let mut dv = vec![T::ZERO; vd.len()];

        for (si, (&(qs, tq), &(ks, tk))) in
            self.q_segs.iter().zip(self.kv_segs.iter()).enumerate()
        {
            let w = &self.weights[si];
            // dV[j] += sum_i w[i,j] * dO[i]
            for j in 0..tk {
                for e in 0..d {
                    let mut acc = T::ZERO;
                    for i in 0..tq {
                        acc += w[i * tk + j] * gd[(qs + i) * d + e];
                    }
                    dv[(ks + j) * d + e] += acc;
                }
            }
            // dS = w .* (dA - rowdot(dA, w)), dA[i,j] = dO[i] . V[j]
            let mut ds = vec![T::ZERO; tq * tk];
            for i in 0..tq {
                let mut da_row = vec![T::ZERO; tk];
                let mut rowdot = T::ZERO;
                for j in 0..tk {
                    let mut dot = T::ZERO;
                    for e in 0..d {
                        dot += gd[(qs + i) * d + e] * vd[(ks + j) * d + e];
                    }
                    da_row[j] = dot;
                    rowdot += dot * w[i * tk + j];
                }
                for j in 0..tk {
                    ds[i * tk + j] = w[i * tk + j] * (da_row[j] - rowdot);
                }
            }
            // dQ[i] += scale * sum_j dS[i,j] K[j];  dK[j] += scale * sum_i dS[i,j] Q[i]
            for i in 0..tq {
                for j in 0..tk {
                    let s = ds[i * tk + j] * self.scale;
                    for e in 0..d {
                        dq[(qs + i) * d + e] += s * kd[(ks + j) * d + e];
                        dk[(ks + j) * d + e] += s * qd[(qs + i) * d + e];
                    }
                }
            }
        }
        let qshape = ctx.value(self.q).shape().to_vec();
        let kshape = ctx.value(self.k).shape().to_vec();
        let vshape = ctx.value(self.v).shape().to_vec();
        ctx.add_grad(self.q, Tensor::new(&qshape, dq).unwrap());
        ctx.add_grad(self.k, Tensor::new(&kshape, dk).unwrap());
        ctx.add_grad(self.v, Tensor::new(&vshape, dv).unwrap());
    }
}

impl<T: Element> Graph<T> {
    /// Scaled dot-product attention on [T, d] tensors (single segment).
    /// Softmax runs over the key axis with 1/sqrt(d) scaling; every output
    /// row is a convex combination of `v` rows.
    pub fn attention(&mut self, q: NodeId, k: NodeId, v: NodeId) -> Result<NodeId> {
        let (tq, _) = self.value(q).dims2()?;
        let (tk, _) = self.value(k).dims2()?;
        self.attention_segments(q, k, v, &[(0, tq)], &[(0, tk)])
    }

    /// Segmented attention: query rows of `q_segs[i]` attend to key/value rows
    /// of `kv_segs[i]`. Output rows align with `q`.
    pub fn attention_segments(
        &mut self,
        q: NodeId,
        k: NodeId,
        v: NodeId,
        q_segs: &[(usize, usize)],
        kv_segs: &[(usize, usize)],
    ) -> Result<NodeId> {
        let (mq, d) = self.value(q).dims2()?;
        let (mk, dk) = self.value(k).dims2()?;
        let (mv, dv) = self.value(v).dims2()?;
        if d != dk || d != dv || mk != mv {
            return Err(TensorError::Dim(format!(
                "attention q {:?}, k {:?}, v {:?}",
                self.value(q).shape(),
                self.value(k).shape(),
                self.value(v).shape()
            )));
        }
        if q_segs.len() != kv_segs.len() {
            return Err(TensorError::Dim(format!(
                "{} query segments vs {} key segments",
                q_segs.len(),
                kv_segs.len()
            )));
        }
        for &(s, l) in q_segs {
            if l == 0 || s + l > mq {
                return Err(TensorError::Dim(format!(
                    "query segment ({s},{l}) outside {mq} rows"
                )));
            }
        }
        for &(s, l) in kv_segs {
            if l == 0 || s + l > mk {
                return Err(TensorError::Dim(format!(
                    "key segment ({s},{l}) outside {mk} rows"
                )));
            }
        }
        let scale = T::ONE / T::from_f64(d as f64).sqrt();
        let mut out = Tensor::zeros(&[mq, d]);
        let mut weights = Vec::with_capacity(q_segs.len());
        {
            let od = out.data_mut();
            let qd = self.values[q.0].data();
            let kd = self.values[k.0].data();
            let vd = self.values[v.0].data();
            for (&(qs, tq), &(ks, tk)) in q_segs.iter().zip(kv_segs.iter()) {
                let w = segment_forward(
                    &qd[qs * d..(qs + tq) * d],
                    &kd[ks * d..(ks + tk) * d],
                    &vd[ks * d..(ks + tk) * d],
                    tq,
                    tk,
                    d,
                    scale,
                    &mut od[qs * d..(qs + tq) * d],
                );
                weights.push(w);
            }
        }
        let req = self.requires_any(&[q, k, v]);
        Ok(self.push(
            out,
            Some(Box::new(AttentionOp {
                q,
                k,
                v,
                q_segs: q_segs.to_vec(),
                kv_segs: kv_segs.to_vec(),
                d,
                scale,
                weights,
            })),
            req,
        ))
    }
}

/// Plain attention forward returning (output, softmax weights); the weights
/// let tests check convexity / permutation behaviour directly.
pub fn attention_reference<T: Element>(
    q: &Tensor<T>,
    k: &Tensor<T>,
    v: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let (tq, d) = q.dims2()?;
    let (tk, dk) = k.dims2()?;
    let (tv, dv) = v.dims2()?;
    if d != dk || d != dv || tk != tv {
        return Err(TensorError::Dim("attention_reference dims".into()));
    }
    let scale = T::ONE / T::from_f64(d as f64).sqrt();
    let mut out = Tensor::zeros(&[tq, d]);
    let w = segment_forward(
        q.data(),
        k.data(),
        v.data(),
        tq,
        tk,
        d,
        scale,
        out.data_mut(),
    );
    Ok((out, Tensor::new(&[tq, tk], w)?))
}
