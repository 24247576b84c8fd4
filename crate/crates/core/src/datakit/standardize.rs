use serde::{Deserialize, Serialize};

use super::cohort::Cohort;
use crate::error::{Error, Result};

/// Per-gene z-score parameters estimated on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub genes: Vec<String>,
    pub mean: Vec<f64>,
    /// Population standard deviation; 0 marks a constant gene.
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Estimates statistics from the rows `train` that carry expression.
    pub fn fit(cohort: &Cohort, train: &[usize]) -> Result<Self> {
        let p = cohort.genes().len();
        let rows: Vec<&Vec<f64>> =
            train.iter().filter_map(|&i| cohort.samples().get(i).and_then(|s| s.expression.as_ref())).collect();
        if rows.is_empty() {
            return Err(Error::Config("no training samples with expression to standardize on".into()));
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; p];
        for r in &rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; p];
        for r in &rows {
            for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Ok(Standardizer { genes: cohort.genes().to_vec(), mean, std })
    }

    pub fn transform_row(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = if *s > 0.0 { (*v - m) / s } else { 0.0 };
        }
    }

    /// Applies the transform to every sample of `cohort`.
    pub fn apply(&self, cohort: &Cohort) -> Result<Cohort> {
        if cohort.genes() != self.genes.as_slice() {
            return Err(Error::Config("standardizer was fitted on a different gene order".into()));
        }
        let mut out = cohort.clone();
        for s in out.samples_mut() {
            if let Some(x) = s.expression.as_mut() {
                self.transform_row(x);
            }
        }
        Ok(out)
    }
}

/// Fits on `train` and transforms the whole cohort.
pub fn standardize_expression(cohort: &Cohort, train: &[usize]) -> Result<(Cohort, Standardizer)> {
    let st = Standardizer::fit(cohort, train)?;
    Ok((st.apply(cohort)?, st))
}
