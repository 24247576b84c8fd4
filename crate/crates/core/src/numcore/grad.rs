//! Forward/backward kernels for the two linear layer kinds.
//!
//! Activations and dropout carry their own backward rules (see
//! [`Activation::backward`](super::Activation::backward) and
//! [`DropoutRecord::backward`](super::DropoutRecord::backward)); the losses
//! return their gradients directly.

use super::Matrix;
use crate::error::{Error, Result};

/// `x·W + b` for `x: n×in`, `W: in×out`, `b: out`.
pub fn dense_forward(x: &Matrix, weight: &Matrix, bias: &[f64]) -> Result<Matrix> {
    let mut out = x.matmul(weight)?;
    out.add_row_vector(bias)?;
    Ok(out)
}

/// Gradients of `x·W + b` given upstream `g` (n×out): `(dx, dW, db)` with
/// `dx = g·Wᵀ`, `dW = xᵀ·g` and `db = Σ_rows g`.
pub fn dense_backward(x: &Matrix, weight: &Matrix, upstream: &Matrix) -> Result<(Matrix, Matrix, Vec<f64>)> {
    if upstream.rows() != x.rows() || upstream.cols() != weight.cols() {
        return Err(Error::dim(
            "dense_backward",
            format!("upstream {:?} for output {}x{}", upstream.shape(), x.rows(), weight.cols()),
        ));
    }
    let dx = upstream.matmul_t(weight)?;
    let dw = x.t_matmul(upstream)?;
    let db = upstream.column_sums();
    Ok((dx, dw, db))
}

/// `x·(A⊙W)` where the nonzero pattern of `A` is `coords` (sorted by row
/// then column) and `values[k]` is the weight at `coords[k]`. Only pattern
/// positions are ever read.
pub fn masked_forward(x: &Matrix, dim: usize, coords: &[(usize, usize)], values: &[f64]) -> Result<Matrix> {
    if x.cols() != dim {
        return Err(Error::dim("masked_forward", format!("input width {} for a {dim}x{dim} mask", x.cols())));
    }
    if coords.len() != values.len() {
        return Err(Error::dim(
            "masked_forward",
            format!("{} weights for {} mask entries", values.len(), coords.len()),
        ));
    }
    let n = x.rows();
    let mut out = Matrix::zeros(n, dim);
    for i in 0..n {
        let xi = x.row(i);
        let oi = out.row_mut(i);
        for (&(r, c), &w) in coords.iter().zip(values) {
            oi[c] += xi[r] * w;
        }
    }
    Ok(out)
}

/// Gradients of [`masked_forward`]: `(dx, dvalues)`.
pub fn masked_backward(
    x: &Matrix,
    coords: &[(usize, usize)],
    values: &[f64],
    upstream: &Matrix,
) -> Result<(Matrix, Vec<f64>)> {
    if upstream.shape() != x.shape() {
        return Err(Error::dim(
            "masked_backward",
            format!("upstream {:?} for input {:?}", upstream.shape(), x.shape()),
        ));
    }
    let mut dx = Matrix::zeros(x.rows(), x.cols());
    let mut dvalues = vec![0.0; values.len()];
    for i in 0..x.rows() {
        let xi = x.row(i);
        let gi = upstream.row(i);
        let dxi = dx.row_mut(i);
        for (k, (&(r, c), &w)) in coords.iter().zip(values).enumerate() {
            dvalues[k] += gi[c] * xi[r];
            dxi[r] += gi[c] * w;
        }
    }
    Ok((dx, dvalues))
}

/// Dense reference for [`masked_forward`]: `x·(A⊙W)` with full `p×p`
/// matrices, accumulating over the shared index in increasing order.
pub fn hadamard_dense_forward(x: &Matrix, adjacency: &Matrix, weight: &Matrix) -> Result<Matrix> {
    let effective = adjacency.hadamard(weight)?;
    if x.cols() != effective.rows() {
        return Err(Error::dim(
            "hadamard_dense_forward",
            format!("input width {} for {:?}", x.cols(), effective.shape()),
        ));
    }
    let (n, p, m) = (x.rows(), x.cols(), effective.cols());
    let mut out = Matrix::zeros(n, m);
    for i in 0..n {
        for r in 0..p {
            let xv = x.get(i, r);
            for c in 0..m {
                let v = out.get(i, c) + xv * effective.get(r, c);
                out.set(i, c, v);
            }
        }
    }
    Ok(out)
}
