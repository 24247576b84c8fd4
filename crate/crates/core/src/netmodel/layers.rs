use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::genegraph::AdjacencyMask;
use crate::numcore::{apply_dropout, grad, Activation, DropoutKind, DropoutRecord, Matrix, RngStream};

/// Dropout applied to a layer's activated output during training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropoutSpec {
    pub kind: DropoutKind,
    pub p: f64,
}

impl DropoutSpec {
    pub const NONE: DropoutSpec = DropoutSpec { kind: DropoutKind::Standard, p: 0.0 };
}

/// Named trainable tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Matrix,
}

/// Index into a network's parameter registry.
pub type ParamId = usize;

/// Everything a layer needs to run backward for one batch.
#[derive(Debug, Clone)]
pub(crate) struct LayerRecord {
    input: Matrix,
    pre: Matrix,
    activated: Matrix,
    dropout: Option<DropoutRecord>,
}

impl LayerRecord {
    pub(crate) fn activated(&self) -> &Matrix {
        &self.activated
    }
}

/// Fully connected layer `act(x·W + b)` with optional dropout on the output.
#[derive(Debug, Clone)]
pub struct DenseLayer {
    pub(crate) weight: ParamId,
    pub(crate) bias: ParamId,
    pub activation: Activation,
    pub dropout: DropoutSpec,
    pub in_dim: usize,
    pub out_dim: usize,
}

/// Graph-masked layer `act(x·(A⊙W))`; weights exist only at mask positions,
/// stored as a `1×nnz` row aligned with the mask coordinate list.
#[derive(Debug, Clone)]
pub struct MaskedSparseLayer {
    pub mask: AdjacencyMask,
    pub(crate) weight: ParamId,
    pub activation: Activation,
    pub dropout: DropoutSpec,
}

/// Which kernel evaluates the masked product.
#[derive(Clone, Copy)]
pub(crate) enum MaskedKernel<'a> {
    Sparse,
    /// Dense `p×p` weights multiplied through the dense adjacency matrix.
    DenseReference(&'a Matrix),
}

fn finish(
    input: Matrix,
    pre: Matrix,
    activation: Activation,
    dropout: DropoutSpec,
    rng: Option<&mut RngStream>,
) -> Result<(Matrix, LayerRecord)> {
    let activated = activation.apply(&pre);
    let (out, record) = match rng {
        Some(rng) if dropout.p > 0.0 => apply_dropout(&activated, dropout.kind, dropout.p, rng)?,
        _ => (activated.clone(), None),
    };
    Ok((out, LayerRecord { input, pre, activated, dropout: record }))
}

fn unwind(activation: Activation, record: &LayerRecord, upstream: &Matrix) -> Result<Matrix> {
    let g = match &record.dropout {
        Some(d) => d.backward(upstream)?,
        None => upstream.clone(),
    };
    Ok(activation.backward(&record.pre, &record.activated, &g))
}

impl DenseLayer {
    pub(crate) fn forward(
        &self,
        params: &[Parameter],
        x: Matrix,
        rng: Option<&mut RngStream>,
    ) -> Result<(Matrix, LayerRecord)> {
        let pre = grad::dense_forward(&x, &params[self.weight].value, params[self.bias].value.as_slice())?;
        finish(x, pre, self.activation, self.dropout, rng)
    }

    /// Returns `(dx, dW, db)`.
    pub(crate) fn backward(
        &self,
        params: &[Parameter],
        record: &LayerRecord,
        upstream: &Matrix,
    ) -> Result<(Matrix, Matrix, Matrix)> {
        let g = unwind(self.activation, record, upstream)?;
        let (dx, dw, db) = grad::dense_backward(&record.input, &params[self.weight].value, &g)?;
        let db = Matrix::from_vec(1, db.len(), db)?;
        Ok((dx, dw, db))
    }
}

impl MaskedSparseLayer {
    pub(crate) fn forward(
        &self,
        params: &[Parameter],
        x: Matrix,
        rng: Option<&mut RngStream>,
        kernel: MaskedKernel<'_>,
    ) -> Result<(Matrix, LayerRecord)> {
        let pre = match kernel {
            MaskedKernel::Sparse => {
                grad::masked_forward(&x, self.mask.dim(), self.mask.coords(), params[self.weight].value.as_slice())?
            }
            MaskedKernel::DenseReference(w) => grad::hadamard_dense_forward(&x, &self.mask.to_dense(), w)?,
        };
        finish(x, pre, self.activation, self.dropout, rng)
    }

    /// Returns `(dx, dW)` with `dW` shaped `1×nnz`.
    pub(crate) fn backward(
        &self,
        params: &[Parameter],
        record: &LayerRecord,
        upstream: &Matrix,
    ) -> Result<(Matrix, Matrix)> {
        let g = unwind(self.activation, record, upstream)?;
        let values = params[self.weight].value.as_slice();
        let (dx, dv) = grad::masked_backward(&record.input, self.mask.coords(), values, &g)?;
        Ok((dx, Matrix::from_vec(1, dv.len(), dv)?))
    }

    /// Dense `p×p` view of the weights, zero outside the mask.
    pub fn dense_weights(&self, params: &[Parameter]) -> Matrix {
        let p = self.mask.dim();
        let mut w = Matrix::zeros(p, p);
        for (&(r, c), &v) in self.mask.coords().iter().zip(params[self.weight].value.as_slice()) {
            w.set(r, c, v);
        }
        w
    }
}
