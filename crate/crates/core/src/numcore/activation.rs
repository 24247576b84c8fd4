use serde::{Deserialize, Serialize};

use super::Matrix;

pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;
pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    Selu,
    Sigmoid,
    /// Row-wise log-softmax.
    LogSoftmaxRows,
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn selu(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA * x
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp_m1()
    }
}

/// Numerically stable `ln Σ exp(v)`.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl Activation {
    pub fn apply(self, x: &Matrix) -> Matrix {
        match self {
            Activation::Identity => x.clone(),
            Activation::Relu => x.map(|v| v.max(0.0)),
            Activation::Selu => x.map(selu),
            Activation::Sigmoid => x.map(sigmoid),
            Activation::LogSoftmaxRows => {
                let mut out = x.clone();
                for r in 0..out.rows() {
                    let row = out.row_mut(r);
                    let lse = logsumexp(row);
                    row.iter_mut().for_each(|v| *v -= lse);
                }
                out
            }
        }
    }

    /// Gradient with respect to the pre-activation `input`, given the forward
    /// `output` and the upstream gradient.
    pub fn backward(self, input: &Matrix, output: &Matrix, upstream: &Matrix) -> Matrix {
        debug_assert_eq!(input.shape(), upstream.shape());
        let mut grad = upstream.clone();
        match self {
            Activation::Identity => {}
            Activation::Relu => {
                for (g, &x) in grad.as_mut_slice().iter_mut().zip(input.as_slice()) {
                    if x <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            Activation::Selu => {
                for ((g, &x), &y) in grad.as_mut_slice().iter_mut().zip(input.as_slice()).zip(output.as_slice()) {
                    // for x ≤ 0, d/dx λα(eˣ−1) = y + λα
                    *g *= if x > 0.0 { SELU_LAMBDA } else { y + SELU_LAMBDA * SELU_ALPHA };
                }
            }
            Activation::Sigmoid => {
                for (g, &y) in grad.as_mut_slice().iter_mut().zip(output.as_slice()) {
                    *g *= y * (1.0 - y);
                }
            }
            Activation::LogSoftmaxRows => {
                for r in 0..grad.rows() {
                    let total: f64 = upstream.row(r).iter().sum();
                    for (g, &lp) in grad.row_mut(r).iter_mut().zip(output.row(r)) {
                        *g -= lp.exp() * total;
                    }
                }
            }
        }
        grad
    }
}
