//! Adam with bias correction.

use crate::element::Element;
use crate::error::{Result, TensorError};
use crate::tensor::Tensor;

/// Per-parameter Adam state. beta1 = 0.9, beta2 = 0.999, eps = 1e-7.
#[derive(Clone, Debug)]
pub struct AdamState<T: Element> {
    pub m: Tensor<T>,
    pub v: Tensor<T>,
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl<T: Element> AdamState<T> {
    pub fn new(shape: &[usize], lr: f64) -> Self {
        Self {
            m: Tensor::zeros(shape),
            v: Tensor::zeros(shape),
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-7,
        }
    }
}

/// One bias-corrected Adam update; increments the step counter.
pub fn adam_step<T: Element>(
    param: &mut Tensor<T>,
    grad: &Tensor<T>,
    state: &mut AdamState<T>,
) -> Result<()> {
    if param.shape() != grad.shape() || param.shape() != state.m.shape() {
        return Err(TensorError::Shape(format!(
            "adam_step param {:?}, grad {:?}, state {:?}",
            param.shape(),
            grad.shape(),
            state.m.shape()
        )));
    }
    state.step += 1;
    let b1 = T::from_f64(state.beta1);
    let b2 = T::from_f64(state.beta2);
    let one_m_b1 = T::ONE - b1;
    let one_m_b2 = T::ONE - b2;
    let corr1 = T::from_f64(1.0 - state.beta1.powi(state.step as i32));
    let corr2 = T::from_f64(1.0 - state.beta2.powi(state.step as i32));
    let lr = T::from_f64(state.lr);
    let eps = T::from_f64(state.eps);

    let pd = param.data_mut();
    let gd = grad.data();
    let md = state.m.data_mut();
    let vd = state.v.data_mut();
    for i in 0..pd.len() {
        let g = gd[i];
        md[i] = b1 * md[i] + one_m_b1 * g;
        vd[i] = b2 * vd[i] + one_m_b2 * g * g;
        let mhat = md[i] / corr1;
        let vhat = vd[i] / corr2;
        pd[i] = pd[i] - lr * mhat / (vhat.sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_grad_keeps_param() {
        let mut p = Tensor::<f64>::from_fn(&[3], |i| i as f64);
        let g = Tensor::zeros(&[3]);
        let mut st = AdamState::new(&[3], 0.01);
        let before = p.clone();
        adam_step(&mut p, &g, &mut st).unwrap();
        assert_eq!(p, before);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn first_step_closed_form() {
        // mhat = g, vhat = g^2 -> update = -lr * g / (|g| + eps)
        let mut p = Tensor::<f64>::from_fn(&[4], |_| 0.0);
        let g = Tensor::new(&[4], vec![0.5, -2.0, 1e-3, -7.0]).unwrap();
        let lr = 0.1;
        let mut st = AdamState::new(&[4], lr);
        adam_step(&mut p, &g, &mut st).unwrap();
        for (pv, gv) in p.data().iter().zip(g.data()) {
            let expect = -lr * gv / (gv.abs() + st.eps);
            assert!((pv - expect).abs() < 1e-12, "{pv} vs {expect}");
        }
    }

    #[test]
    fn zero_lr_keeps_param() {
        let mut p = Tensor::<f64>::from_fn(&[3], |i| i as f64 + 1.0);
        let g = Tensor::full(&[3], 2.0);
        let mut st = AdamState::new(&[3], 0.0);
        let before = p.clone();
        adam_step(&mut p, &g, &mut st).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = Tensor::<f64>::zeros(&[3]);
        let g = Tensor::zeros(&[4]);
        let mut st = AdamState::new(&[3], 0.01);
        assert!(adam_step(&mut p, &g, &mut st).is_err());
    }
}
