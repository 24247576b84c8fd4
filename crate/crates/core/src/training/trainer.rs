use std::fmt::Write as _;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use super::loss::{cox_loss, nll_loss, SurvivalLabels};
use super::profile::TrainingProfile;
use super::schedule::{select_task, Task};
use crate::error::{Error, Result};
use crate::netmodel::{ModelInput, ModelOutput, Network};
use crate::numcore::{adam_step, AdamSlot, AdamState, LrSchedule, Matrix, RngStream};

/// Stream ids; shuffling uses one stream per epoch starting at `SHUFFLE_STREAM`.
const DROPOUT_STREAM: u64 = 1;
const SHUFFLE_STREAM: u64 = 1 << 32;

/// Row-aligned model inputs and labels.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub expression: Option<Matrix>,
    pub image: Option<Matrix>,
    pub times: Vec<f64>,
    pub events: Vec<bool>,
    pub grades: Vec<usize>,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn check(&self) -> Result<()> {
        let n = self.len();
        let rows_ok = |m: &Option<Matrix>| m.as_ref().is_none_or(|m| m.rows() == n);
        if self.events.len() != n || self.grades.len() != n || !rows_ok(&self.expression) || !rows_ok(&self.image) {
            return Err(Error::dim("TrainingSet", "modalities and labels differ in row count"));
        }
        Ok(())
    }

    /// Rows `idx` in the given order.
    pub fn subset(&self, idx: &[usize]) -> Result<TrainingSet> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.len()) {
            return Err(Error::Range(format!("sample index {bad} outside [0, {})", self.len())));
        }
        Ok(TrainingSet {
            expression: self.expression.as_ref().map(|m| m.select_rows(idx)),
            image: self.image.as_ref().map(|m| m.select_rows(idx)),
            times: idx.iter().map(|&i| self.times[i]).collect(),
            events: idx.iter().map(|&i| self.events[i]).collect(),
            grades: idx.iter().map(|&i| self.grades[i]).collect(),
        })
    }

    pub fn input(&self) -> ModelInput<'_> {
        ModelInput { expression: self.expression.as_ref(), image: self.image.as_ref() }
    }

    pub fn survival_labels(&self) -> SurvivalLabels<'_> {
        SurvivalLabels { times: &self.times, events: &self.events }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u64,
    pub epoch: usize,
    pub task: Task,
    /// `None` when the step was skipped (survival batch with no events).
    pub loss: Option<f64>,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSummary {
    pub epoch: usize,
    pub survival_loss: Option<f64>,
    pub grade_loss: Option<f64>,
    pub validation_loss: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub iterations: Vec<IterationRecord>,
    pub epochs: Vec<EpochSummary>,
}

impl TrainingHistory {
    pub fn task_counts(&self) -> (usize, usize) {
        let s = self.iterations.iter().filter(|r| r.task.survival()).count();
        let g = self.iterations.iter().filter(|r| r.task.grade()).count();
        (s, g)
    }

    pub fn skipped(&self) -> usize {
        self.iterations.iter().filter(|r| r.loss.is_none()).count()
    }

    /// CSV with columns `iteration,epoch,task,loss,lr`; skipped losses are `NA`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,epoch,task,loss,lr\n");
        for r in &self.iterations {
            let loss = r.loss.map_or_else(|| "NA".to_string(), |l| l.to_string());
            let _ = writeln!(out, "{},{},{},{},{}", r.iteration, r.epoch, r.task.name(), loss, r.lr);
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: Network,
    /// Lowest validation loss seen after an epoch, with that epoch.
    pub best: Option<(usize, Network)>,
    pub history: TrainingHistory,
}

struct BatchLoss {
    survival: Option<(f64, Matrix)>,
    grade: Option<(f64, Matrix)>,
}

fn batch_loss(out: &ModelOutput, batch: &TrainingSet, task: Task) -> Result<BatchLoss> {
    let survival = if task.survival() && batch.events.iter().any(|&e| e) {
        let risk = out.risk.as_ref().ok_or_else(|| Error::Usage("schedule needs a survival head".into()))?;
        Some(cox_loss(risk, batch.survival_labels())?)
    } else {
        None
    };
    let grade = if task.grade() {
        let lp = out.log_probs.as_ref().ok_or_else(|| Error::Usage("schedule needs a grade head".into()))?;
        Some(nll_loss(lp, &batch.grades)?)
    } else {
        None
    };
    Ok(BatchLoss { survival, grade })
}

/// Loss of the schedule's tasks on `set` in evaluation mode.
pub fn evaluation_loss(network: &Network, set: &TrainingSet, profile: &TrainingProfile) -> Result<f64> {
    let out = network.predict(set.input())?;
    let need = profile.schedule.required_heads();
    let losses = batch_loss(
        &out,
        set,
        match (need.survival(), need.grade()) {
            (true, true) => Task::Both,
            (true, false) => Task::Survival,
            _ => Task::Grade,
        },
    )?;
    Ok(losses.survival.map_or(0.0, |l| l.0) + losses.grade.map_or(0.0, |l| l.0))
}

/// Mini-batch training under `profile`.
///
/// Every iteration consumes the next batch of the epoch's shuffled order and
/// advances the global counter `c`, including iterations skipped because a
/// survival batch held no events.
pub fn train(
    mut network: Network,
    data: &TrainingSet,
    train_idx: &[usize],
    validation_idx: Option<&[usize]>,
    profile: &TrainingProfile,
) -> Result<TrainOutcome> {
    profile.validate()?;
    data.check()?;
    let heads = network.config().heads;
    if !profile.schedule.compatible_with(heads) {
        return Err(Error::Config(format!("schedule {} needs heads the network does not have", profile.schedule)));
    }
    if network.config().dropout_p != profile.dropout_p {
        return Err(Error::Config(format!(
            "network built with dropout {} but profile asks for {}",
            network.config().dropout_p,
            profile.dropout_p
        )));
    }
    if train_idx.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let validation = validation_idx.map(|v| data.subset(v)).transpose()?;

    let mut history = TrainingHistory::default();
    let mut best: Option<(f64, usize, Network)> = None;
    if profile.epochs == 0 {
        return Ok(TrainOutcome { network, best: None, history });
    }
    let lr_schedule = LrSchedule::new(profile.base_lr, profile.epochs)?;
    let mut adam = AdamState::new(network.params().iter().map(|p| p.value.shape()));
    let mut dropout_rng = RngStream::new(profile.seed, DROPOUT_STREAM);
    let mut c = 0u64;

    for epoch in 0..profile.epochs {
        let lr = lr_schedule.lr_at(epoch)?;
        let mut order = train_idx.to_vec();
        RngStream::new(profile.seed, SHUFFLE_STREAM + epoch as u64).shuffle(&mut order);
        let (mut s_sum, mut s_n, mut g_sum, mut g_n) = (0.0, 0usize, 0.0, 0usize);

        for chunk in order.chunks(profile.batch_size) {
            c += 1;
            let task = select_task(c, profile.schedule)?;
            let batch = data.subset(chunk)?;
            if !task.grade() && !batch.events.iter().any(|&e| e) {
                debug!("iteration {c}: survival batch without events skipped");
                history.iterations.push(IterationRecord { iteration: c, epoch, task, loss: None, lr });
                continue;
            }
            let (out, trace) = network.forward_train(batch.input(), &mut dropout_rng)?;
            let losses = batch_loss(&out, &batch, task)?;
            let total = losses.survival.as_ref().map_or(0.0, |l| l.0) + losses.grade.as_ref().map_or(0.0, |l| l.0);
            if !total.is_finite() {
                return Err(Error::Numeric {
                    context: format!("{} loss at iteration {c} (epoch {epoch})", task.name()),
                });
            }
            if let Some((l, _)) = &losses.survival {
                s_sum += l;
                s_n += 1;
            }
            if let Some((l, _)) = &losses.grade {
                g_sum += l;
                g_n += 1;
            }
            let grads =
                network.backward(trace, losses.survival.as_ref().map(|l| &l.1), losses.grade.as_ref().map(|l| &l.1))?;
            let mut slots: Vec<AdamSlot<'_>> = network
                .params_mut()
                .iter_mut()
                .zip(&grads.grads)
                .map(|(p, g)| AdamSlot { name: &p.name, value: &mut p.value, grad: g.as_ref() })
                .collect();
            adam_step(&mut slots, &mut adam, lr, profile.weight_decay).map_err(|e| match e {
                Error::Numeric { context } => {
                    Error::Numeric { context: format!("{context} at iteration {c} (epoch {epoch})") }
                }
                other => other,
            })?;
            history.iterations.push(IterationRecord { iteration: c, epoch, task, loss: Some(total), lr });
        }

        let validation_loss = validation.as_ref().map(|v| evaluation_loss(&network, v, profile)).transpose()?;
        if let Some(vl) = validation_loss {
            if best.as_ref().is_none_or(|b| vl < b.0) {
                best = Some((vl, epoch, network.clone()));
            }
        }
        let summary = EpochSummary {
            epoch,
            survival_loss: (s_n > 0).then(|| s_sum / s_n as f64),
            grade_loss: (g_n > 0).then(|| g_sum / g_n as f64),
            validation_loss,
        };
        info!(
            "epoch {epoch}: survival {:?} grade {:?} validation {:?}",
            summary.survival_loss, summary.grade_loss, summary.validation_loss
        );
        history.epochs.push(summary);
    }

    Ok(TrainOutcome { network, best: best.map(|(_, e, n)| (e, n)), history })
}
