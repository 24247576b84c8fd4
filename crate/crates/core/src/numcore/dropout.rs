use serde::{Deserialize, Serialize};

use super::activation::{SELU_ALPHA, SELU_LAMBDA};
use super::{Matrix, RngStream};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropoutKind {
    /// Inverted dropout: zero with probability p, else scale by 1/(1−p).
    Standard,
    /// SELU-matched dropout: dropped units take −λα, then an affine
    /// correction restores zero mean and unit variance.
    Alpha,
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Range(format!("dropout probability {p} outside [0, 1)")));
    }
    Ok(())
}

/// Inverted-dropout mask with entries `0` (probability `p`) or `1/(1−p)`.
pub fn dropout_mask(rows: usize, cols: usize, p: f64, rng: &mut RngStream) -> Result<Matrix> {
    check_p(p)?;
    if p == 0.0 {
        return Ok(Matrix::filled(rows, cols, 1.0));
    }
    let keep = 1.0 / (1.0 - p);
    let data = (0..rows * cols).map(|_| if rng.uniform() < p { 0.0 } else { keep }).collect();
    Matrix::from_vec(rows, cols, data)
}

/// Cached state of one dropout application, needed for the backward pass.
#[derive(Debug, Clone)]
pub enum DropoutRecord {
    Standard { mask: Matrix },
    Alpha { keep: Matrix, scale: f64 },
}

/// `(a, b, dropped_value)` of alpha dropout with drop probability `p`.
pub fn alpha_dropout_affine(p: f64) -> (f64, f64, f64) {
    let q = 1.0 - p;
    let dropped = -SELU_LAMBDA * SELU_ALPHA;
    let a = (q + dropped * dropped * q * p).powf(-0.5);
    let b = -a * p * dropped;
    (a, b, dropped)
}

/// Training-mode dropout. Returns the transformed activations and the record;
/// `None` record means the layer passed through unchanged.
pub fn apply_dropout(
    x: &Matrix,
    kind: DropoutKind,
    p: f64,
    rng: &mut RngStream,
) -> Result<(Matrix, Option<DropoutRecord>)> {
    check_p(p)?;
    if p == 0.0 {
        return Ok((x.clone(), None));
    }
    match kind {
        DropoutKind::Standard => {
            let mask = dropout_mask(x.rows(), x.cols(), p, rng)?;
            let y = x.hadamard(&mask)?;
            Ok((y, Some(DropoutRecord::Standard { mask })))
        }
        DropoutKind::Alpha => {
            let (a, b, dropped) = alpha_dropout_affine(p);
            let keep_data: Vec<f64> = (0..x.len()).map(|_| if rng.uniform() < p { 0.0 } else { 1.0 }).collect();
            let keep = Matrix::from_vec(x.rows(), x.cols(), keep_data)?;
            let mut y = x.clone();
            for (v, &k) in y.as_mut_slice().iter_mut().zip(keep.as_slice()) {
                *v = a * if k == 1.0 { *v } else { dropped } + b;
            }
            Ok((y, Some(DropoutRecord::Alpha { keep, scale: a })))
        }
    }
}

impl DropoutRecord {
    pub fn backward(&self, upstream: &Matrix) -> Result<Matrix> {
        match self {
            DropoutRecord::Standard { mask } => upstream.hadamard(mask),
            DropoutRecord::Alpha { keep, scale } => Ok(upstream.hadamard(keep)?.scale(*scale)),
        }
    }
}
