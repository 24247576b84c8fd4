use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::classify::{accuracy_and_micro_f1, argmax_rows, confusion, micro_auc_ap, per_class_f1};
use super::concordance::{c_index, TieRule};
use crate::error::{Error, Result};
use crate::numcore::Matrix;

/// Headline metrics for one evaluated sample set. Fields that do not apply
/// to the evaluated heads are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub c_index: Option<f64>,
    pub micro_auc: Option<f64>,
    pub micro_ap: Option<f64>,
    pub micro_f1: Option<f64>,
    pub accuracy: Option<f64>,
    pub f1_per_class: Option<Vec<f64>>,
    pub confusion_matrix: Option<Vec<Vec<u64>>>,
    pub n_samples: usize,
    pub n_events: usize,
}

/// How scores are pooled before evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// One score per sample.
    #[default]
    Sample,
    /// Median risk and mean class probabilities per patient.
    Patient,
}

/// Predictions and labels for one evaluation set, aligned by row.
#[derive(Debug, Clone)]
pub struct EvalInput<'a> {
    pub patient_ids: &'a [String],
    pub times: &'a [f64],
    pub events: &'a [bool],
    pub grades: &'a [usize],
    pub risks: Option<&'a [f64]>,
    /// Class log-probabilities (n×k).
    pub log_probs: Option<&'a Matrix>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

struct Pooled {
    times: Vec<f64>,
    events: Vec<bool>,
    grades: Vec<usize>,
    risks: Option<Vec<f64>>,
    probs: Option<Matrix>,
}

fn pool(input: &EvalInput<'_>, aggregation: Aggregation) -> Result<Pooled> {
    let probs = input.log_probs.map(|lp| lp.map(f64::exp));
    if aggregation == Aggregation::Sample {
        return Ok(Pooled {
            times: input.times.to_vec(),
            events: input.events.to_vec(),
            grades: input.grades.to_vec(),
            risks: input.risks.map(<[f64]>::to_vec),
            probs,
        });
    }
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, p) in input.patient_ids.iter().enumerate() {
        groups.entry(p.as_str()).or_default().push(i);
    }
    let mut pooled = Pooled {
        times: Vec::new(),
        events: Vec::new(),
        grades: Vec::new(),
        risks: input.risks.map(|_| Vec::new()),
        probs: None,
    };
    let mut prob_rows = Vec::new();
    for (patient, rows) in &groups {
        let first = rows[0];
        if rows.iter().any(|&r| {
            input.times[r] != input.times[first]
                || input.events[r] != input.events[first]
                || input.grades[r] != input.grades[first]
        }) {
            return Err(Error::data("clinical", format!("patient {patient} has samples with conflicting labels")));
        }
        pooled.times.push(input.times[first]);
        pooled.events.push(input.events[first]);
        pooled.grades.push(input.grades[first]);
        if let (Some(out), Some(risks)) = (pooled.risks.as_mut(), input.risks) {
            let mut vals: Vec<f64> = rows.iter().map(|&r| risks[r]).collect();
            out.push(median(&mut vals));
        }
        if let Some(p) = &probs {
            let mut mean = vec![0.0; p.cols()];
            for &r in rows {
                for (m, v) in mean.iter_mut().zip(p.row(r)) {
                    *m += v / rows.len() as f64;
                }
            }
            prob_rows.push(mean);
        }
    }
    if probs.is_some() {
        pooled.probs = Some(Matrix::from_rows(&prob_rows)?);
    }
    Ok(pooled)
}

/// Computes every applicable metric for `input`.
pub fn evaluate(
    input: &EvalInput<'_>,
    classes: usize,
    ties: TieRule,
    aggregation: Aggregation,
) -> Result<MetricsReport> {
    let n = input.times.len();
    if input.events.len() != n || input.grades.len() != n || input.patient_ids.len() != n {
        return Err(Error::dim("evaluate", "label vectors differ in length"));
    }
    if input.risks.is_some_and(|r| r.len() != n) || input.log_probs.is_some_and(|lp| lp.rows() != n) {
        return Err(Error::dim("evaluate", "predictions and labels differ in length"));
    }
    let pooled = pool(input, aggregation)?;
    let mut report = MetricsReport {
        c_index: None,
        micro_auc: None,
        micro_ap: None,
        micro_f1: None,
        accuracy: None,
        f1_per_class: None,
        confusion_matrix: None,
        n_samples: pooled.times.len(),
        n_events: pooled.events.iter().filter(|&&e| e).count(),
    };
    if let Some(risks) = &pooled.risks {
        report.c_index = Some(c_index(risks, &pooled.times, &pooled.events, ties)?);
    }
    if let Some(probs) = &pooled.probs {
        if probs.cols() != classes {
            return Err(Error::dim("evaluate", format!("{} score columns for {classes} classes", probs.cols())));
        }
        let (auc, ap) = micro_auc_ap(probs, &pooled.grades)?;
        let cm = confusion(&argmax_rows(probs), &pooled.grades, classes)?;
        let (acc, f1) = accuracy_and_micro_f1(&cm)?;
        report.micro_auc = Some(auc);
        report.micro_ap = Some(ap);
        report.accuracy = Some(acc);
        report.micro_f1 = Some(f1);
        report.f1_per_class = Some((0..classes).map(|c| per_class_f1(&cm, c)).collect::<Result<_>>()?);
        report.confusion_matrix = Some(cm.counts().to_vec());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn survival_only_leaves_grade_fields_null() {
        let pid = ids(&["a", "b", "c"]);
        let input = EvalInput {
            patient_ids: &pid,
            times: &[1.0, 2.0, 3.0],
            events: &[true, true, true],
            grades: &[0, 1, 2],
            risks: Some(&[3.0, 2.0, 1.0]),
            log_probs: None,
        };
        let r = evaluate(&input, 3, TieRule::Half, Aggregation::Sample).unwrap();
        assert_eq!(r.c_index, Some(1.0));
        assert!(r.micro_auc.is_none() && r.confusion_matrix.is_none());
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["micro_f1"].is_null());
        assert_eq!(json["n_events"], 3);
    }

    #[test]
    fn patient_aggregation_uses_median_risk() {
        let pid = ids(&["a", "a", "a", "b"]);
        let lp = Matrix::from_rows(&[
            vec![0.9f64.ln(), 0.1f64.ln()],
            vec![0.5f64.ln(), 0.5f64.ln()],
            vec![0.1f64.ln(), 0.9f64.ln()],
            vec![0.2f64.ln(), 0.8f64.ln()],
        ])
        .unwrap();
        let input = EvalInput {
            patient_ids: &pid,
            times: &[1.0, 1.0, 1.0, 5.0],
            events: &[true; 4],
            grades: &[0, 0, 0, 1],
            risks: Some(&[0.0, 10.0, 2.0, 1.0]),
            log_probs: Some(&lp),
        };
        let r = evaluate(&input, 2, TieRule::Half, Aggregation::Patient).unwrap();
        assert_eq!(r.n_samples, 2);
        // Median risk 2 for patient a beats 1 for b.
        assert_eq!(r.c_index, Some(1.0));
        // Mean probabilities (0.5, 0.5) tie and resolve to class 0.
        assert_eq!(r.accuracy, Some(1.0));
    }

    #[test]
    fn conflicting_patient_labels_rejected() {
        let pid = ids(&["a", "a"]);
        let input = EvalInput {
            patient_ids: &pid,
            times: &[1.0, 2.0],
            events: &[true, true],
            grades: &[0, 0],
            risks: Some(&[0.0, 1.0]),
            log_probs: None,
        };
        assert!(evaluate(&input, 3, TieRule::Half, Aggregation::Patient).is_err());
    }
}
