use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::Matrix;

/// `k×k` counts, rows = true class, columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.len();
        if counts.iter().any(|r| r.len() != k) {
            return Err(Error::dim("confusion", "confusion matrix must be square"));
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }
}

pub fn confusion(predicted: &[usize], truth: &[usize], k: usize) -> Result<ConfusionMatrix> {
    if predicted.len() != truth.len() {
        return Err(Error::dim("confusion", format!("{} predictions, {} labels", predicted.len(), truth.len())));
    }
    let mut counts = vec![vec![0u64; k]; k];
    for (i, (&p, &t)) in predicted.iter().zip(truth).enumerate() {
        if p >= k || t >= k {
            return Err(Error::data("labels", format!("sample {i}: class pair ({t}, {p}) outside [0, {k})")));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

/// Row-wise argmax; the lowest index wins ties.
pub fn argmax_rows(scores: &Matrix) -> Vec<usize> {
    (0..scores.rows())
        .map(|i| {
            let row = scores.row(i);
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Accuracy and micro-F1 from pooled true/false positives. For single-label
/// data every false positive is some other class's false negative, so the
/// two agree.
pub fn accuracy_and_micro_f1(cm: &ConfusionMatrix) -> Result<(f64, f64)> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Undefined("accuracy of an empty confusion matrix".into()));
    }
    let tp = cm.trace();
    let fp: u64 =
        (0..cm.classes()).map(|c| (0..cm.classes()).filter(|&r| r != c).map(|r| cm.counts[r][c]).sum::<u64>()).sum();
    let fn_: u64 =
        (0..cm.classes()).map(|r| (0..cm.classes()).filter(|&c| c != r).map(|c| cm.counts[r][c]).sum::<u64>()).sum();
    let accuracy = tp as f64 / total as f64;
    let micro_f1 = 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;
    Ok((accuracy, micro_f1))
}

/// F1 of one class; 0 when precision and recall are both zero or undefined.
pub fn per_class_f1(cm: &ConfusionMatrix, class: usize) -> Result<f64> {
    if class >= cm.classes() {
        return Err(Error::Range(format!("class {class} outside [0, {})", cm.classes())));
    }
    let tp = cm.counts[class][class] as f64;
    let predicted: u64 = cm.counts.iter().map(|r| r[class]).sum();
    let actual: u64 = cm.counts[class].iter().sum();
    if tp == 0.0 {
        return Ok(0.0);
    }
    let precision = tp / predicted as f64;
    let recall = tp / actual as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Micro-averaged ROC-AUC and average precision over the one-vs-rest
/// binarization of `probs` (n×k).
pub fn micro_auc_ap(probs: &Matrix, truth: &[usize]) -> Result<(f64, f64)> {
    let (n, k) = probs.shape();
    if truth.len() != n {
        return Err(Error::dim("micro_auc_ap", format!("{n} score rows, {} labels", truth.len())));
    }
    if k < 2 {
        return Err(Error::Range("micro-averaged metrics need at least 2 classes".into()));
    }
    if n == 0 {
        return Err(Error::Undefined("micro-averaged metrics of an empty sample".into()));
    }
    if !probs.is_finite() {
        return Err(Error::Numeric { context: "micro_auc_ap scores".into() });
    }
    let mut pooled: Vec<(f64, bool)> = Vec::with_capacity(n * k);
    for (i, &t) in truth.iter().enumerate() {
        if t >= k {
            return Err(Error::data("labels", format!("sample {i}: class {t} outside [0, {k})")));
        }
        for (j, &s) in probs.row(i).iter().enumerate() {
            pooled.push((s, j == t));
        }
    }
    // Descending by score; ties form one threshold group.
    pooled.sort_by(|a, b| b.0.total_cmp(&a.0));
    let positives = n as f64;
    let negatives = (n * (k - 1)) as f64;

    // AUC by the rank-sum statistic with midranks for ties, taken over the
    // ascending order.
    let total = pooled.len();
    let mut rank_sum = 0.0;
    let mut ap = 0.0;
    let (mut tp, mut seen) = (0.0, 0.0);
    let mut start = 0;
    while start < total {
        let mut end = start;
        let mut group_pos = 0.0;
        while end < total && pooled[end].0 == pooled[start].0 {
            if pooled[end].1 {
                group_pos += 1.0;
            }
            end += 1;
        }
        // Ascending ranks of this group are total-end+1 ..= total-start.
        let mid_rank = ((total - end + 1) + (total - start)) as f64 / 2.0;
        rank_sum += group_pos * mid_rank;
        tp += group_pos;
        seen += (end - start) as f64;
        ap += (group_pos / positives) * (tp / seen);
        start = end;
    }
    let auc = (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
    Ok((auc, ap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::RngStream;

    fn table1() -> ConfusionMatrix {
        ConfusionMatrix::from_counts(vec![vec![850, 232, 0], vec![418, 721, 0], vec![2, 0, 451]]).unwrap()
    }

    #[test]
    fn table_one_fixture() {
        let cm = table1();
        assert_eq!(cm.total(), 2674);
        let (acc, f1) = accuracy_and_micro_f1(&cm).unwrap();
        assert!((acc - 2022.0 / 2674.0).abs() < 1e-15);
        assert!((acc - 0.756).abs() <= 5e-4);
        assert_eq!(acc, f1);
        let f1_iv = per_class_f1(&cm, 2).unwrap();
        assert!((f1_iv - 0.9978).abs() < 1e-4);
    }

    #[test]
    fn table_two_fixture() {
        let cm = ConfusionMatrix::from_counts(vec![vec![763, 319, 0], vec![443, 693, 3], vec![1, 0, 452]]).unwrap();
        let (acc, _) = accuracy_and_micro_f1(&cm).unwrap();
        assert!((acc - 1908.0 / 2674.0).abs() < 1e-15);
        assert!((acc - 0.716).abs() <= 0.005);
    }

    #[test]
    fn perfect_predictions_are_diagonal() {
        let cm = confusion(&[0, 1, 2, 1], &[0, 1, 2, 1], 3).unwrap();
        assert_eq!(cm.counts(), &[vec![1, 0, 0], vec![0, 2, 0], vec![0, 0, 1]]);
        assert_eq!(accuracy_and_micro_f1(&cm).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn out_of_range_label_names_sample() {
        let err = confusion(&[0, 3], &[0, 1], 3).unwrap_err().to_string();
        assert!(err.contains("sample 1"), "{err}");
    }

    #[test]
    fn empty_matrix_is_undefined() {
        let cm = confusion(&[], &[], 3).unwrap();
        assert!(accuracy_and_micro_f1(&cm).is_err());
    }

    #[test]
    fn absent_class_scores_zero() {
        let cm = confusion(&[0, 1], &[0, 1], 3).unwrap();
        assert_eq!(per_class_f1(&cm, 2).unwrap(), 0.0);
    }

    #[test]
    fn random_instances_match_counting_oracle() {
        let mut rng = RngStream::new(5, 0);
        for _ in 0..100 {
            let n = 1 + rng.index(80);
            let truth: Vec<usize> = (0..n).map(|_| rng.index(3)).collect();
            let pred: Vec<usize> = (0..n).map(|_| rng.index(3)).collect();
            let cm = confusion(&pred, &truth, 3).unwrap();
            for t in 0..3 {
                for p in 0..3 {
                    let count = (0..n).filter(|&i| truth[i] == t && pred[i] == p).count() as u64;
                    assert_eq!(cm.counts()[t][p], count);
                }
            }
            let (acc, f1) = accuracy_and_micro_f1(&cm).unwrap();
            assert_eq!(acc, f1);
            for c in 0..3 {
                let tp = (0..n).filter(|&i| truth[i] == c && pred[i] == c).count() as f64;
                let pp = pred.iter().filter(|&&p| p == c).count() as f64;
                let ap = truth.iter().filter(|&&t| t == c).count() as f64;
                let expected = if tp == 0.0 {
                    0.0
                } else {
                    let (pr, rc) = (tp / pp, tp / ap);
                    2.0 * pr * rc / (pr + rc)
                };
                assert!((per_class_f1(&cm, c).unwrap() - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn argmax_breaks_ties_low() {
        let m = Matrix::from_rows(&[vec![0.2, 0.4, 0.4], vec![0.5, 0.5, 0.0]]).unwrap();
        assert_eq!(argmax_rows(&m), vec![1, 0]);
    }

    #[test]
    fn perfect_and_uniform_scores() {
        let perfect = Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(micro_auc_ap(&perfect, &[0, 2]).unwrap(), (1.0, 1.0));
        let uniform = Matrix::filled(4, 3, 1.0 / 3.0);
        let (auc, _) = micro_auc_ap(&uniform, &[0, 1, 2, 0]).unwrap();
        assert_eq!(auc, 0.5);
    }

    fn pair_oracle(probs: &Matrix, truth: &[usize]) -> (f64, f64) {
        let mut pooled = Vec::new();
        for (i, &t) in truth.iter().enumerate() {
            for j in 0..probs.cols() {
                pooled.push((probs.get(i, j), j == t));
            }
        }
        let pos: Vec<f64> = pooled.iter().filter(|p| p.1).map(|p| p.0).collect();
        let neg: Vec<f64> = pooled.iter().filter(|p| !p.1).map(|p| p.0).collect();
        let mut wins = 0.0;
        for &a in &pos {
            for &b in &neg {
                wins += if a > b {
                    1.0
                } else if a == b {
                    0.5
                } else {
                    0.0
                };
            }
        }
        let auc = wins / (pos.len() * neg.len()) as f64;
        // Precision at each distinct threshold, weighted by the recall gained.
        let mut thresholds: Vec<f64> = pooled.iter().map(|p| p.0).collect();
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let mut ap = 0.0;
        let mut prev_recall = 0.0;
        for &th in &thresholds {
            let sel: Vec<&(f64, bool)> = pooled.iter().filter(|p| p.0 >= th).collect();
            let tp = sel.iter().filter(|p| p.1).count() as f64;
            let recall = tp / pos.len() as f64;
            ap += (recall - prev_recall) * tp / sel.len() as f64;
            prev_recall = recall;
        }
        (auc, ap)
    }

    #[test]
    fn random_scores_match_pair_oracle() {
        let mut rng = RngStream::new(20, 3);
        for trial in 0..50 {
            let n = 20;
            let mut rows = Vec::new();
            for _ in 0..n {
                // Coarse values force ties in the pooled ranking.
                let raw: Vec<f64> =
                    (0..3).map(|_| if trial % 2 == 0 { rng.uniform() } else { (1 + rng.index(4)) as f64 }).collect();
                let s: f64 = raw.iter().sum();
                rows.push(raw.iter().map(|v| v / s).collect::<Vec<f64>>());
            }
            let probs = Matrix::from_rows(&rows).unwrap();
            let truth: Vec<usize> = (0..n).map(|_| rng.index(3)).collect();
            let (auc, ap) = micro_auc_ap(&probs, &truth).unwrap();
            let (oauc, oap) = pair_oracle(&probs, &truth);
            assert!((auc - oauc).abs() < 1e-12, "{auc} vs {oauc}");
            assert!((ap - oap).abs() < 1e-12, "{ap} vs {oap}");

            let warped = probs.map(|v| (3.0 * v).exp());
            assert!((micro_auc_ap(&warped, &truth).unwrap().0 - auc).abs() < 1e-12);
        }
    }
}
