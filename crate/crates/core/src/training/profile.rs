use serde::{Deserialize, Serialize};

use super::schedule::Schedule;
use crate::error::{Error, Result};

/// Optimizer and loop settings for one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingProfile {
    pub epochs: usize,
    pub base_lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub dropout_p: f64,
    pub schedule: Schedule,
    pub seed: u64,
}

/// Named presets: `(name, epochs, base_lr, weight_decay, batch_size)`.
pub const PRESETS: [(&str, usize, f64, f64, usize); 3] =
    [("mmmt-default", 30, 1e-4, 4e-4, 32), ("smst-image", 50, 5e-4, 4e-4, 8), ("smst-gene", 50, 2e-3, 5e-4, 64)];

impl TrainingProfile {
    pub fn preset(name: &str) -> Result<Self> {
        let &(_, epochs, base_lr, weight_decay, batch_size) =
            PRESETS.iter().find(|p| p.0 == name).ok_or_else(|| Error::Config(format!("unknown preset '{name}'")))?;
        Ok(TrainingProfile {
            epochs,
            base_lr,
            weight_decay,
            batch_size,
            dropout_p: 0.25,
            schedule: Schedule::Alternate,
            seed: 0,
        })
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.base_lr)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config(format!("weight decay {} must be non-negative", self.weight_decay)));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout_p)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_carry_published_settings() {
        let p = TrainingProfile::preset("mmmt-default").unwrap();
        assert_eq!((p.epochs, p.base_lr, p.weight_decay, p.batch_size), (30, 0.0001, 0.0004, 32));
        let p = TrainingProfile::preset("smst-image").unwrap();
        assert_eq!((p.epochs, p.base_lr, p.weight_decay, p.batch_size), (50, 0.0005, 0.0004, 8));
        let p = TrainingProfile::preset("smst-gene").unwrap();
        assert_eq!((p.epochs, p.base_lr, p.weight_decay, p.batch_size), (50, 0.002, 0.0005, 64));
        assert!(TrainingProfile::preset("nope").is_err());
    }

    #[test]
    fn validation_rejects_bad_values() {
        let ok = TrainingProfile::preset("mmmt-default").unwrap();
        assert!(ok.validate().is_ok());
        let mut p = ok.clone();
        p.batch_size = 0;
        assert!(p.validate().is_err());
        let mut p = ok.clone();
        p.dropout_p = 1.0;
        assert!(p.validate().is_err());
        let mut p = ok;
        p.base_lr = 0.0;
        assert!(p.validate().is_err());
    }
}
