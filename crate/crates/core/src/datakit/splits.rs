use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::cohort::Cohort;
use crate::error::{Error, Result};
use crate::numcore::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grouping {
    /// All samples of a patient land on the same side.
    #[default]
    Patient,
    Sample,
}

impl fmt::Display for Grouping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Grouping::Patient => "patient",
            Grouping::Sample => "sample",
        })
    }
}

impl FromStr for Grouping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "patient" => Ok(Grouping::Patient),
            "sample" => Ok(Grouping::Sample),
            _ => Err(Error::Config(format!("unknown grouping '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Repetition {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSet {
    pub seed: u64,
    pub train_frac: f64,
    pub grouping: Grouping,
    pub repetitions: Vec<Repetition>,
}

impl SplitSet {
    pub fn repetition(&self, rep: usize) -> Result<&Repetition> {
        self.repetitions.get(rep).ok_or_else(|| {
            Error::Config(format!("repetition {rep} outside the split file's {} repetitions", self.repetitions.len()))
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Randomized train/test partitions, one RNG stream per repetition. Group
/// units are shuffled from sorted order and the first
/// `round(train_frac × units)` go to training. Ids keep cohort order within
/// each side.
pub fn gen_splits(cohort: &Cohort, reps: usize, train_frac: f64, grouping: Grouping, seed: u64) -> Result<SplitSet> {
    gen_splits_for_ids(&cohort.sample_ids(), &cohort.patient_ids(), reps, train_frac, grouping, seed)
}

/// [`gen_splits`] over bare `(sample, patient)` id columns.
pub fn gen_splits_for_ids(
    sample_ids: &[String],
    patient_ids: &[String],
    reps: usize,
    train_frac: f64,
    grouping: Grouping,
    seed: u64,
) -> Result<SplitSet> {
    if sample_ids.len() != patient_ids.len() {
        return Err(Error::dim("gen_splits", "sample and patient id columns differ in length"));
    }
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::Config(format!("train fraction {train_frac} must lie strictly between 0 and 1")));
    }
    if reps == 0 {
        return Err(Error::Config("at least one repetition is required".into()));
    }
    let keys_of: &[String] = match grouping {
        Grouping::Patient => patient_ids,
        Grouping::Sample => sample_ids,
    };
    let units: BTreeSet<&str> = keys_of.iter().map(String::as_str).collect();
    let keys: Vec<&str> = units.into_iter().collect();
    let cut = (train_frac * keys.len() as f64).round() as usize;
    if cut == 0 || cut == keys.len() {
        return Err(Error::Config(format!(
            "train fraction {train_frac} over {} {grouping} units leaves one side empty",
            keys.len()
        )));
    }

    let mut repetitions = Vec::with_capacity(reps);
    for rep in 0..reps {
        let mut order = keys.clone();
        RngStream::new(seed, rep as u64).shuffle(&mut order);
        let train_units: BTreeSet<&str> = order[..cut].iter().copied().collect();
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for (id, key) in sample_ids.iter().zip(keys_of) {
            if train_units.contains(key.as_str()) {
                train.push(id.clone());
            } else {
                test.push(id.clone());
            }
        }
        repetitions.push(Repetition { train, test });
    }
    Ok(SplitSet { seed, train_frac, grouping, repetitions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datakit::{Sample, DEFAULT_GRADE_NAMES};
    use proptest::prelude::*;

    fn cohort(patients: usize, per_patient: usize) -> Cohort {
        let mut samples = Vec::new();
        for p in 0..patients {
            for k in 0..per_patient {
                samples.push(Sample {
                    patient_id: format!("P{p:03}"),
                    sample_id: format!("P{p:03}-{k}"),
                    image: None,
                    expression: Some(vec![0.0]),
                    time: 1.0,
                    event: false,
                    grade: 0,
                });
            }
        }
        Cohort::new(samples, vec!["G".into()], 0, DEFAULT_GRADE_NAMES.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn ten_patients_split_eight_two() {
        let s = gen_splits(&cohort(10, 2), 3, 0.8, Grouping::Patient, 1).unwrap();
        for rep in &s.repetitions {
            assert_eq!(rep.train.len(), 16);
            assert_eq!(rep.test.len(), 4);
        }
    }

    #[test]
    fn fifteen_repetitions_and_determinism() {
        let c = cohort(40, 1);
        let a = gen_splits(&c, 15, 0.8, Grouping::Patient, 9).unwrap();
        assert_eq!(a.repetitions.len(), 15);
        assert_eq!(a, gen_splits(&c, 15, 0.8, Grouping::Patient, 9).unwrap());
        assert_ne!(a.repetitions[0], a.repetitions[1]);
        assert_ne!(a, gen_splits(&c, 15, 0.8, Grouping::Patient, 10).unwrap());
        assert_eq!(SplitSet::from_json(&a.to_json().unwrap()).unwrap(), a);
    }

    #[test]
    fn rejects_bad_parameters() {
        let c = cohort(10, 1);
        assert!(gen_splits(&c, 1, 1.5, Grouping::Patient, 0).is_err());
        assert!(gen_splits(&c, 1, 0.0, Grouping::Patient, 0).is_err());
        assert!(gen_splits(&c, 0, 0.8, Grouping::Patient, 0).is_err());
        assert!(gen_splits(&cohort(1, 3), 1, 0.8, Grouping::Patient, 0).is_err());
        assert!(gen_splits(&c, 1, 0.01, Grouping::Patient, 0).is_err());
    }

    proptest! {
        #[test]
        fn partitions_exactly_without_patient_leakage(
            patients in 2usize..30, per in 1usize..4, frac in 0.2f64..0.8, seed in any::<u64>()
        ) {
            let c = cohort(patients, per);
            for grouping in [Grouping::Patient, Grouping::Sample] {
                let Ok(s) = gen_splits(&c, 3, frac, grouping, seed) else { continue };
                for rep in &s.repetitions {
                    let train: BTreeSet<&String> = rep.train.iter().collect();
                    let test: BTreeSet<&String> = rep.test.iter().collect();
                    prop_assert!(train.is_disjoint(&test));
                    prop_assert_eq!(train.len() + test.len(), c.len());
                    prop_assert!(!train.is_empty() && !test.is_empty());
                    if grouping == Grouping::Patient {
                        let patient = |id: &String| id.split('-').next().unwrap().to_string();
                        let tp: BTreeSet<String> = rep.train.iter().map(patient).collect();
                        let sp: BTreeSet<String> = rep.test.iter().map(patient).collect();
                        prop_assert!(tp.is_disjoint(&sp));
                    }
                }
            }
        }
    }
}
