use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::Variant;
use crate::numcore::Matrix;
use crate::training::TrainingSet;

/// One region of interest with its patient's clinical labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub patient_id: String,
    pub sample_id: String,
    pub image: Option<Vec<f64>>,
    pub expression: Option<Vec<f64>>,
    pub time: f64,
    pub event: bool,
    pub grade: usize,
}

/// Ordered samples with a shared gene order and grade-class names.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    samples: Vec<Sample>,
    genes: Vec<String>,
    image_dim: usize,
    grade_names: Vec<String>,
}

pub const DEFAULT_GRADE_NAMES: [&str; 3] = ["II", "III", "IV"];

impl Cohort {
    /// Validates unique ids, uniform modality widths and label ranges.
    pub fn new(samples: Vec<Sample>, genes: Vec<String>, image_dim: usize, grade_names: Vec<String>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for s in &samples {
            if !seen.insert(s.sample_id.as_str()) {
                return Err(Error::data("cohort", format!("duplicate sample id {}", s.sample_id)));
            }
            if s.image.is_none() && s.expression.is_none() {
                return Err(Error::data("cohort", format!("sample {} has no modality", s.sample_id)));
            }
            if let Some(x) = &s.expression {
                if x.len() != genes.len() {
                    return Err(Error::data(
                        "cohort",
                        format!("sample {}: {} expression values for {} genes", s.sample_id, x.len(), genes.len()),
                    ));
                }
            }
            if let Some(x) = &s.image {
                if x.len() != image_dim {
                    return Err(Error::data(
                        "cohort",
                        format!("sample {}: embedding width {} instead of {image_dim}", s.sample_id, x.len()),
                    ));
                }
            }
            if s.grade >= grade_names.len() {
                return Err(Error::data(
                    "cohort",
                    format!("sample {}: grade {} outside [0, {})", s.sample_id, s.grade, grade_names.len()),
                ));
            }
            if !(s.time.is_finite() && s.time >= 0.0) {
                return Err(Error::data("cohort", format!("sample {}: survival time {}", s.sample_id, s.time)));
            }
        }
        Ok(Cohort { samples, genes, image_dim, grade_names })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn genes(&self) -> &[String] {
        &self.genes
    }

    pub fn image_dim(&self) -> usize {
        self.image_dim
    }

    pub fn grade_names(&self) -> &[String] {
        &self.grade_names
    }

    pub fn sample_ids(&self) -> Vec<String> {
        self.samples.iter().map(|s| s.sample_id.clone()).collect()
    }

    pub fn patient_ids(&self) -> Vec<String> {
        self.samples.iter().map(|s| s.patient_id.clone()).collect()
    }

    pub fn patient_count(&self) -> usize {
        self.samples.iter().map(|s| s.patient_id.as_str()).collect::<BTreeSet<_>>().len()
    }

    pub fn has_expression(&self) -> bool {
        self.samples.iter().any(|s| s.expression.is_some())
    }

    pub fn has_image(&self) -> bool {
        self.samples.iter().any(|s| s.image.is_some())
    }

    /// Row indices of `ids`, in the given order.
    pub fn indices_of(&self, ids: &[String]) -> Result<Vec<usize>> {
        let index: HashMap<&str, usize> =
            self.samples.iter().enumerate().map(|(i, s)| (s.sample_id.as_str(), i)).collect();
        ids.iter()
            .map(|id| {
                index.get(id.as_str()).copied().ok_or_else(|| Error::data("cohort", format!("unknown sample id {id}")))
            })
            .collect()
    }

    /// Keeps only samples carrying every modality `variant` needs; returns the
    /// reduced cohort and the ids that were dropped.
    pub fn for_variant(&self, variant: Variant) -> (Cohort, Vec<String>) {
        let (mut kept, mut dropped) = (Vec::new(), Vec::new());
        for s in &self.samples {
            let ok = (!variant.uses_genes() || s.expression.is_some()) && (!variant.uses_image() || s.image.is_some());
            if ok {
                kept.push(s.clone());
            } else {
                dropped.push(s.sample_id.clone());
            }
        }
        let cohort = Cohort {
            samples: kept,
            genes: self.genes.clone(),
            image_dim: self.image_dim,
            grade_names: self.grade_names.clone(),
        };
        (cohort, dropped)
    }

    /// Restricts expression to `genes` (a subset of the cohort's genes), in
    /// that order.
    pub fn select_genes(&self, genes: &[String]) -> Result<Cohort> {
        let pos: HashMap<&str, usize> = self.genes.iter().enumerate().map(|(i, g)| (g.as_str(), i)).collect();
        let cols: Vec<usize> = genes
            .iter()
            .map(|g| {
                pos.get(g.as_str())
                    .copied()
                    .ok_or_else(|| Error::data("cohort", format!("gene {g} not in expression data")))
            })
            .collect::<Result<_>>()?;
        let samples = self
            .samples
            .iter()
            .map(|s| Sample {
                expression: s.expression.as_ref().map(|x| cols.iter().map(|&c| x[c]).collect()),
                ..s.clone()
            })
            .collect();
        Ok(Cohort { samples, genes: genes.to_vec(), image_dim: self.image_dim, grade_names: self.grade_names.clone() })
    }

    /// Model inputs for every sample. Modalities the variant ignores are left
    /// out; a needed modality missing on any sample is a data error.
    pub fn training_set(&self, variant: Variant) -> Result<TrainingSet> {
        let gather = |name: &str, width: usize, get: &dyn Fn(&Sample) -> Option<&Vec<f64>>| -> Result<Matrix> {
            let mut data = Vec::with_capacity(self.len() * width);
            for s in &self.samples {
                let row =
                    get(s).ok_or_else(|| Error::data("cohort", format!("sample {} lacks {name}", s.sample_id)))?;
                data.extend_from_slice(row);
            }
            Matrix::from_vec(self.len(), width, data)
        };
        Ok(TrainingSet {
            expression: variant
                .uses_genes()
                .then(|| gather("expression", self.genes.len(), &|s| s.expression.as_ref()))
                .transpose()?,
            image: variant
                .uses_image()
                .then(|| gather("an image embedding", self.image_dim, &|s| s.image.as_ref()))
                .transpose()?,
            times: self.samples.iter().map(|s| s.time).collect(),
            events: self.samples.iter().map(|s| s.event).collect(),
            grades: self.samples.iter().map(|s| s.grade).collect(),
        })
    }

    pub(crate) fn samples_mut(&mut self) -> &mut [Sample] {
        &mut self.samples
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(id: &str, patient: &str, expr: Option<Vec<f64>>, image: Option<Vec<f64>>) -> Sample {
        Sample {
            patient_id: patient.into(),
            sample_id: id.into(),
            image,
            expression: expr,
            time: 10.0,
            event: true,
            grade: 1,
        }
    }

    fn names() -> Vec<String> {
        DEFAULT_GRADE_NAMES.iter().map(|s| s.to_string()).collect()
    }

    fn genes(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("G{i}")).collect()
    }

    #[test]
    fn rejects_duplicates_and_bad_widths() {
        let a = sample("s1", "p1", Some(vec![1.0, 2.0]), None);
        assert!(Cohort::new(vec![a.clone(), a.clone()], genes(2), 0, names()).is_err());
        let b = sample("s2", "p1", Some(vec![1.0]), None);
        assert!(Cohort::new(vec![a.clone(), b], genes(2), 0, names()).is_err());
        let none = sample("s3", "p1", None, None);
        assert!(Cohort::new(vec![none], genes(2), 0, names()).is_err());
        let mut g = a;
        g.grade = 3;
        assert!(Cohort::new(vec![g], genes(2), 0, names()).is_err());
    }

    #[test]
    fn variant_filter_drops_missing_modalities() {
        let c = Cohort::new(
            vec![
                sample("s1", "p1", Some(vec![1.0]), Some(vec![0.5, 0.5])),
                sample("s2", "p2", None, Some(vec![0.1, 0.2])),
            ],
            genes(1),
            2,
            names(),
        )
        .unwrap();
        let (fused, dropped) = c.for_variant(Variant::Fused);
        assert_eq!(fused.len(), 1);
        assert_eq!(dropped, vec!["s2".to_string()]);
        assert_eq!(c.for_variant(Variant::ImageOnly).0.len(), 2);
        assert!(c.training_set(Variant::Fused).is_err());
        let set = fused.training_set(Variant::Fused).unwrap();
        assert_eq!(set.image.unwrap().shape(), (1, 2));
    }

    #[test]
    fn select_genes_reorders_columns() {
        let c = Cohort::new(vec![sample("s1", "p1", Some(vec![1.0, 2.0, 3.0]), None)], genes(3), 0, names()).unwrap();
        let sub = c.select_genes(&["G2".to_string(), "G0".to_string()]).unwrap();
        assert_eq!(sub.samples()[0].expression.as_deref(), Some(&[3.0, 1.0][..]));
        assert!(c.select_genes(&["X".to_string()]).is_err());
    }
}
