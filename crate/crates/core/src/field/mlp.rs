//! Dense layers over a flat parameter slice, batched as `samples x features` matrices.

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};

/// Affine map `y = x M + b`, `M` stored column-major as `inputs x outputs` at `offset`,
/// followed by the bias.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Linear {
    pub inputs: usize,
    pub outputs: usize,
    pub offset: usize,
}

impl Linear {
    pub fn new(inputs: usize, outputs: usize, offset: usize) -> Self {
        Self {
            inputs,
            outputs,
            offset,
        }
    }

    pub fn param_len(&self) -> usize {
        self.inputs * self.outputs + self.outputs
    }

    pub fn end(&self) -> usize {
        self.offset + self.param_len()
    }

    pub fn weights<'a>(&self, params: &'a [f64]) -> DMatrixView<'a, f64> {
        DMatrixView::from_slice(&params[self.offset..self.offset + self.inputs * self.outputs], self.inputs, self.outputs)
    }

    pub fn bias<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.offset + self.inputs * self.outputs..self.end()]
    }

    pub fn forward(&self, params: &[f64], x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = x * self.weights(params);
        let b = self.bias(params);
        for (j, mut col) in y.column_iter_mut().enumerate() {
            col.add_scalar_mut(b[j]);
        }
        y
    }

    /// Accumulates parameter gradients into `grad` and returns the input gradient.
    pub fn backward(&self, params: &[f64], x: &DMatrix<f64>, dy: &DMatrix<f64>, grad: &mut [f64]) -> DMatrix<f64> {
        let nw = self.inputs * self.outputs;
        {
            let mut gw = DMatrixViewMut::from_slice(&mut grad[self.offset..self.offset + nw], self.inputs, self.outputs);
            gw.gemm_tr(1.0, x, dy, 1.0);
        }
        let gb = &mut grad[self.offset + nw..self.end()];
        for (j, col) in dy.column_iter().enumerate() {
            gb[j] += col.sum();
        }
        dy * self.weights(params).transpose()
    }
}

#[inline]
pub fn relu_in_place(m: &mut DMatrix<f64>) {
    m.apply(|v| *v = v.max(0.0));
}

/// Zeroes gradient entries where the forward activation was clipped.
#[inline]
pub fn relu_backward(activated: &DMatrix<f64>, grad: &mut DMatrix<f64>) {
    grad.zip_apply(activated, |g, a| {
        if a <= 0.0 {
            *g = 0.0
        }
    });
}

#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_matches_hand_computation() {
        // M = [[1, 2], [3, 4], [5, 6]] (3 inputs, 2 outputs), b = [0.5, -1]
        let params = vec![1.0, 3.0, 5.0, 2.0, 4.0, 6.0, 0.5, -1.0];
        let l = Linear::new(3, 2, 0);
        let x = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, -1.0]);
        let y = l.forward(&params, &x);
        assert_eq!(y[(0, 0)], 1.0 - 5.0 + 0.5);
        assert_eq!(y[(0, 1)], 2.0 - 6.0 - 1.0);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let l = Linear::new(3, 2, 1);
        let mut params: Vec<f64> = (0..l.end()).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = DMatrix::from_row_slice(2, 3, &[0.1, -0.2, 0.3, 0.7, 0.5, -0.4]);
        let target = |y: &DMatrix<f64>| y.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * v * v).sum::<f64>();
        let y = l.forward(&params, &x);
        let dy = DMatrix::from_iterator(2, 2, y.iter().enumerate().map(|(i, v)| 2.0 * (i as f64 + 1.0) * v));
        let mut grad = vec![0.0; l.end()];
        let dx = l.backward(&params, &x, &dy, &mut grad);
        for i in 1..l.end() {
            let orig = params[i];
            params[i] = orig + 1e-6;
            let fp = target(&l.forward(&params, &x));
            params[i] = orig - 1e-6;
            let fm = target(&l.forward(&params, &x));
            params[i] = orig;
            assert!(((fp - fm) / 2e-6 - grad[i]).abs() < 1e-6);
        }
        assert_eq!(grad[0], 0.0);
        let mut xp = x.clone();
        xp[(1, 2)] += 1e-6;
        let mut xm = x.clone();
        xm[(1, 2)] -= 1e-6;
        let fd = (target(&l.forward(&params, &xp)) - target(&l.forward(&params, &xm))) / 2e-6;
        assert!((fd - dx[(1, 2)]).abs() < 1e-6);
    }

    #[test]
    fn activations() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(100.0), 100.0);
        assert_eq!(sigmoid(0.0), 0.5);
    }
}
