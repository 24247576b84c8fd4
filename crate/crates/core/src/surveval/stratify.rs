use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RiskGroup {
    Low,
    Mid,
    High,
}

impl RiskGroup {
    pub const ALL: [RiskGroup; 3] = [RiskGroup::Low, RiskGroup::Mid, RiskGroup::High];

    pub fn name(self) -> &'static str {
        match self {
            RiskGroup::Low => "Low",
            RiskGroup::Mid => "Mid",
            RiskGroup::High => "High",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskGroups {
    pub labels: Vec<RiskGroup>,
    pub low_cut: f64,
    pub high_cut: f64,
}

impl RiskGroups {
    pub fn members(&self, group: RiskGroup) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == group).collect()
    }
}

/// Percentile by linear interpolation between order statistics, with the
/// position `q·(n−1)` on the sorted sample.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Splits samples at the 33rd and 66th risk percentiles; samples on a cut
/// point go to the lower group.
pub fn risk_tertiles(risks: &[f64]) -> Result<RiskGroups> {
    if risks.len() < 3 {
        return Err(Error::Range(format!("risk tertiles need at least 3 samples, got {}", risks.len())));
    }
    if risks.iter().any(|r| !r.is_finite()) {
        return Err(Error::Numeric { context: "risk_tertiles input".into() });
    }
    let mut sorted = risks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let low_cut = percentile(&sorted, 0.33);
    let high_cut = percentile(&sorted, 0.66);
    let labels = risks
        .iter()
        .map(|&r| {
            if r <= low_cut {
                RiskGroup::Low
            } else if r <= high_cut {
                RiskGroup::Mid
            } else {
                RiskGroup::High
            }
        })
        .collect();
    Ok(RiskGroups { labels, low_cut, high_cut })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::RngStream;

    fn sizes(g: &RiskGroups) -> [usize; 3] {
        RiskGroup::ALL.map(|k| g.members(k).len())
    }

    #[test]
    fn nine_even_values_split_evenly() {
        let risks: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        assert_eq!(sizes(&risk_tertiles(&risks).unwrap()), [3, 3, 3]);
    }

    #[test]
    fn all_equal_is_all_low() {
        assert_eq!(sizes(&risk_tertiles(&[2.0; 7]).unwrap()), [7, 0, 0]);
    }

    #[test]
    fn too_few_samples() {
        assert!(risk_tertiles(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn interpolated_cut_points() {
        // Position 0.33·4 = 1.32 on [0,10,20,30,40].
        let g = risk_tertiles(&[40.0, 0.0, 20.0, 10.0, 30.0]).unwrap();
        assert!((g.low_cut - 13.2).abs() < 1e-12);
        assert!((g.high_cut - 26.4).abs() < 1e-12);
    }

    #[test]
    fn matches_sort_and_cut_oracle() {
        let mut rng = RngStream::new(3, 1);
        for _ in 0..200 {
            let n = 3 + rng.index(60);
            let risks: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let g = risk_tertiles(&risks).unwrap();
            // With distinct values, the group sizes follow from the cut ranks.
            let mut sorted = risks.clone();
            sorted.sort_by(f64::total_cmp);
            let lo = sorted.iter().filter(|&&r| r <= g.low_cut).count();
            let hi = sorted.iter().filter(|&&r| r <= g.high_cut).count();
            let expected_lo = (0.33 * (n - 1) as f64).floor() as usize + 1;
            let expected_hi = (0.66 * (n - 1) as f64).floor() as usize + 1;
            assert_eq!(lo, expected_lo);
            assert_eq!(hi, expected_hi);
            assert_eq!(sizes(&g), [lo, hi - lo, n - hi]);
        }
    }
}
