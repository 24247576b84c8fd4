use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Moment estimates for a list of parameters.
///
/// Step counts are tracked per parameter: under alternate training a head that
/// receives no gradient in an iteration is not stepped, so its bias correction
/// must only count the updates it actually received.
#[derive(Debug, Clone)]
pub struct AdamState {
    first: Vec<Matrix>,
    second: Vec<Matrix>,
    steps: Vec<u64>,
}

impl AdamState {
    pub fn new(shapes: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let (first, second): (Vec<_>, Vec<_>) =
            shapes.into_iter().map(|(r, c)| (Matrix::zeros(r, c), Matrix::zeros(r, c))).unzip();
        let steps = vec![0; first.len()];
        AdamState { first, second, steps }
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    pub fn step_count(&self, index: usize) -> u64 {
        self.steps[index]
    }

    pub fn first_moment(&self, index: usize) -> &Matrix {
        &self.first[index]
    }

    pub fn second_moment(&self, index: usize) -> &Matrix {
        &self.second[index]
    }
}

/// One parameter slot handed to [`adam_step`].
pub struct AdamSlot<'a> {
    pub name: &'a str,
    pub value: &'a mut Matrix,
    /// `None` leaves the parameter, its moments and its step count untouched.
    pub grad: Option<&'a Matrix>,
}

/// Adam with decoupled weight decay:
/// `w ← w − rate·(m̂/(√v̂+ε) + weight_decay·w)`.
pub fn adam_step(slots: &mut [AdamSlot<'_>], state: &mut AdamState, rate: f64, weight_decay: f64) -> Result<()> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::Range(format!("learning rate {rate} must be positive")));
    }
    if slots.len() != state.len() {
        return Err(Error::dim("adam_step", format!("{} parameters for a state of {}", slots.len(), state.len())));
    }
    // Validate before touching anything so a failed step leaves no partial update.
    for (i, slot) in slots.iter().enumerate() {
        let Some(g) = slot.grad else { continue };
        if g.shape() != slot.value.shape() || g.shape() != state.first[i].shape() {
            return Err(Error::dim(
                "adam_step",
                format!("parameter {} is {:?}, gradient {:?}", slot.name, slot.value.shape(), g.shape()),
            ));
        }
        if !g.is_finite() {
            return Err(Error::Numeric { context: format!("gradient of parameter {}", slot.name) });
        }
    }
    for (i, slot) in slots.iter_mut().enumerate() {
        let Some(g) = slot.grad else { continue };
        state.steps[i] += 1;
        let t = state.steps[i] as i32;
        let c1 = 1.0 - ADAM_BETA1.powi(t);
        let c2 = 1.0 - ADAM_BETA2.powi(t);
        let m = state.first[i].as_mut_slice();
        let v = state.second[i].as_mut_slice();
        for (((w, &gj), mj), vj) in
            slot.value.as_mut_slice().iter_mut().zip(g.as_slice()).zip(m.iter_mut()).zip(v.iter_mut())
        {
            *mj = ADAM_BETA1 * *mj + (1.0 - ADAM_BETA1) * gj;
            *vj = ADAM_BETA2 * *vj + (1.0 - ADAM_BETA2) * gj * gj;
            let m_hat = *mj / c1;
            let v_hat = *vj / c2;
            *w -= rate * (m_hat / (v_hat.sqrt() + ADAM_EPS) + weight_decay * *w);
        }
    }
    Ok(())
}

/// Linear decay `base × (1 − epoch/total)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub base_rate: f64,
    pub total_epochs: usize,
}

impl LrSchedule {
    pub fn new(base_rate: f64, total_epochs: usize) -> Result<Self> {
        if !(base_rate > 0.0) || !base_rate.is_finite() {
            return Err(Error::Range(format!("base learning rate {base_rate}")));
        }
        Ok(LrSchedule { base_rate, total_epochs })
    }

    pub fn lr_at(&self, epoch: usize) -> Result<f64> {
        if epoch >= self.total_epochs {
            return Err(Error::Range(format!("epoch {epoch} outside schedule of {} epochs", self.total_epochs)));
        }
        Ok(self.base_rate * (1.0 - epoch as f64 / self.total_epochs as f64))
    }
}
