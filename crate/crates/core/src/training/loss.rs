use crate::error::{Error, Result};
use crate::numcore::Matrix;

/// Survival labels of one batch.
#[derive(Debug, Clone, Copy)]
pub struct SurvivalLabels<'a> {
    pub times: &'a [f64],
    pub events: &'a [bool],
}

impl SurvivalLabels<'_> {
    pub fn event_count(&self) -> usize {
        self.events.iter().filter(|&&e| e).count()
    }
}

/// Negative Cox partial log-likelihood over the batch, divided by the number
/// of events. The risk set of sample `i` is every `j` with `t_j ≥ t_i`.
/// A batch without events yields zero loss and zero gradient.
pub fn cox_loss(risks: &Matrix, labels: SurvivalLabels<'_>) -> Result<(f64, Matrix)> {
    let n = risks.rows();
    if risks.cols() != 1 || labels.times.len() != n || labels.events.len() != n {
        return Err(Error::dim(
            "cox_loss",
            format!("risks {:?}, {} times, {} events", risks.shape(), labels.times.len(), labels.events.len()),
        ));
    }
    if n == 0 {
        return Err(Error::dim("cox_loss", "empty batch"));
    }
    let events = labels.event_count();
    let mut grad = Matrix::zeros(n, 1);
    if events == 0 {
        return Ok((0.0, grad));
    }
    let y = risks.as_slice();
    let scale = 1.0 / events as f64;

    let mut loss = 0.0;
    let g = grad.as_mut_slice();
    for i in 0..n {
        if !labels.events[i] {
            continue;
        }
        let ti = labels.times[i];
        let at_risk = || (0..n).filter(move |&j| labels.times[j] >= ti);
        // Shift by the risk set's own maximum so no set underflows to zero.
        let shift = at_risk().map(|j| y[j]).fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = at_risk().map(|j| (y[j] - shift).exp()).sum();
        loss -= y[i] - (shift + denom.ln());
        g[i] -= scale;
        for j in at_risk() {
            g[j] += scale * (y[j] - shift).exp() / denom;
        }
    }
    Ok((loss * scale, grad))
}

/// Mean negative log-likelihood of the true classes.
pub fn nll_loss(log_probs: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    let (n, k) = log_probs.shape();
    if labels.len() != n {
        return Err(Error::dim("nll_loss", format!("{n} rows, {} labels", labels.len())));
    }
    if n == 0 {
        return Err(Error::dim("nll_loss", "empty batch"));
    }
    let mut grad = Matrix::zeros(n, k);
    let mut loss = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        if y >= k {
            return Err(Error::data("grade labels", format!("sample {i}: class {y} outside [0, {k})")));
        }
        loss -= log_probs.get(i, y);
        grad.set(i, y, -1.0 / n as f64);
    }
    Ok((loss / n as f64, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::RngStream;

    fn col(v: &[f64]) -> Matrix {
        Matrix::column(v)
    }

    #[test]
    fn single_event_sample_is_zero() {
        let (l, g) = cox_loss(&col(&[0.7]), SurvivalLabels { times: &[3.0], events: &[true] }).unwrap();
        assert!(l.abs() < 1e-15);
        assert!(g.get(0, 0).abs() < 1e-15);
    }

    #[test]
    fn all_censored_is_zero() {
        let (l, g) =
            cox_loss(&col(&[0.1, 0.9]), SurvivalLabels { times: &[1.0, 2.0], events: &[false, false] }).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(g.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn two_sample_value() {
        let (l, _) = cox_loss(&col(&[0.8, 0.2]), SurvivalLabels { times: &[2.0, 5.0], events: &[true, true] }).unwrap();
        let oracle = -((0.8 - (0.8f64.exp() + 0.2f64.exp()).ln()) + 0.0) / 2.0;
        assert!((l - oracle).abs() < 1e-15);
        assert!((l - 0.218744).abs() < 1e-6);
    }

    #[test]
    fn uniform_log_probs_give_ln_k() {
        let lp = Matrix::filled(4, 3, -(3.0f64).ln());
        let (l, _) = nll_loss(&lp, &[0, 1, 2, 1]).unwrap();
        assert!((l - 3.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn confident_correct_log_probs_give_zero() {
        let lp = Matrix::from_rows(&[vec![0.0, -50.0], vec![-50.0, 0.0]]).unwrap();
        assert_eq!(nll_loss(&lp, &[0, 1]).unwrap().0, 0.0);
    }

    #[test]
    fn nll_matches_per_sample_sum() {
        let mut rng = RngStream::new(1, 1);
        let raw = Matrix::from_vec(5, 3, (0..15).map(|_| rng.normal()).collect()).unwrap();
        let lp = crate::numcore::Activation::LogSoftmaxRows.apply(&raw);
        let labels = [2, 0, 1, 1, 0];
        let mut expected = 0.0;
        for (i, &y) in labels.iter().enumerate() {
            expected += -lp.get(i, y) / 5.0;
        }
        assert!((nll_loss(&lp, &labels).unwrap().0 - expected).abs() < 1e-15);
    }

    #[test]
    fn nll_bad_label_names_sample() {
        let err = nll_loss(&Matrix::zeros(2, 3), &[0, 3]).unwrap_err().to_string();
        assert!(err.contains("sample 1"), "{err}");
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = a.iter().chain(b).map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        num / den
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = RngStream::new(2, 2);
        for _ in 0..20 {
            let n = 2 + rng.index(10);
            let y: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let times: Vec<f64> = (0..n).map(|_| rng.index(5) as f64).collect();
            let mut events: Vec<bool> = (0..n).map(|_| rng.bernoulli(0.6)).collect();
            events[0] = true;
            let labels = SurvivalLabels { times: &times, events: &events };
            let (_, g) = cox_loss(&col(&y), labels).unwrap();
            let h = 1e-6;
            let fd: Vec<f64> = (0..n)
                .map(|i| {
                    let mut up = y.clone();
                    up[i] += h;
                    let mut dn = y.clone();
                    dn[i] -= h;
                    (cox_loss(&col(&up), labels).unwrap().0 - cox_loss(&col(&dn), labels).unwrap().0) / (2.0 * h)
                })
                .collect();
            assert!(rel_err(g.as_slice(), &fd) < 1e-6);

            let raw = Matrix::from_vec(n, 3, (0..3 * n).map(|_| rng.normal()).collect()).unwrap();
            let lp = crate::numcore::Activation::LogSoftmaxRows.apply(&raw);
            let classes: Vec<usize> = (0..n).map(|_| rng.index(3)).collect();
            let (_, g) = nll_loss(&lp, &classes).unwrap();
            let mut fd = vec![0.0; 3 * n];
            for (idx, slot) in fd.iter_mut().enumerate() {
                let mut up = lp.clone();
                up.as_mut_slice()[idx] += h;
                let mut dn = lp.clone();
                dn.as_mut_slice()[idx] -= h;
                *slot = (nll_loss(&up, &classes).unwrap().0 - nll_loss(&dn, &classes).unwrap().0) / (2.0 * h);
            }
            assert!(rel_err(g.as_slice(), &fd) < 1e-6);
        }
    }

    #[test]
    fn large_risks_stay_finite() {
        let (l, g) = cox_loss(
            &col(&[800.0, 790.0, -800.0]),
            SurvivalLabels { times: &[1.0, 2.0, 3.0], events: &[true, true, true] },
        )
        .unwrap();
        assert!(l.is_finite() && g.is_finite());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn batch() -> impl Strategy<Value = Vec<(f64, f64, bool)>> {
            proptest::collection::vec((-3.0f64..3.0, 0u8..6, any::<bool>()), 1..12)
                .prop_map(|v| v.into_iter().map(|(y, t, e)| (y, t as f64, e)).collect())
        }

        proptest! {
            #[test]
            fn cox_shift_invariant_and_gradient_sums_to_zero(b in batch(), c in -10.0f64..10.0) {
                let y: Vec<f64> = b.iter().map(|s| s.0).collect();
                let t: Vec<f64> = b.iter().map(|s| s.1).collect();
                let e: Vec<bool> = b.iter().map(|s| s.2).collect();
                let labels = SurvivalLabels { times: &t, events: &e };
                let (l, g) = cox_loss(&col(&y), labels).unwrap();
                let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
                let (ls, gs) = cox_loss(&col(&shifted), labels).unwrap();
                prop_assert!((l - ls).abs() < 1e-9);
                prop_assert!(g.as_slice().iter().sum::<f64>().abs() < 1e-12);
                prop_assert!(g.max_abs_diff(&gs) < 1e-12);
            }

            #[test]
            fn cox_permutation_equivariant(b in batch(), seed in any::<u64>()) {
                let n = b.len();
                let mut perm: Vec<usize> = (0..n).collect();
                RngStream::new(seed, 0).shuffle(&mut perm);
                let pick = |order: &[usize]| {
                    let y: Vec<f64> = order.iter().map(|&i| b[i].0).collect();
                    let t: Vec<f64> = order.iter().map(|&i| b[i].1).collect();
                    let e: Vec<bool> = order.iter().map(|&i| b[i].2).collect();
                    (y, t, e)
                };
                let identity: Vec<usize> = (0..n).collect();
                let (y, t, e) = pick(&identity);
                let (yp, tp, ep) = pick(&perm);
                let (l, g) = cox_loss(&col(&y), SurvivalLabels { times: &t, events: &e }).unwrap();
                let (lp, gp) = cox_loss(&col(&yp), SurvivalLabels { times: &tp, events: &ep }).unwrap();
                prop_assert!((l - lp).abs() < 1e-12);
                for (k, &i) in perm.iter().enumerate() {
                    prop_assert!((gp.get(k, 0) - g.get(i, 0)).abs() < 1e-12);
                }
            }
        }
    }
}
