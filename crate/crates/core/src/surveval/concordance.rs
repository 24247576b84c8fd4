use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How pairs with equal predicted risk are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieRule {
    /// Tied risks score ½.
    #[default]
    Half,
    /// Tied risks score 0 (strict indicator).
    Strict,
}

/// Fenwick tree of counts over risk ranks.
struct CountTree {
    tree: Vec<u64>,
}

impl CountTree {
    fn new(n: usize) -> Self {
        CountTree { tree: vec![0; n + 1] }
    }

    fn add(&mut self, rank: usize) {
        let mut i = rank + 1;
        while i < self.tree.len() {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Count of inserted ranks `< rank`.
    fn below(&self, rank: usize) -> u64 {
        let mut i = rank;
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// Harrell's concordance index.
///
/// A pair `(i, j)` is comparable when `t_j < t_i` and sample `j` had the
/// event; it is concordant when `risk_j > risk_i`. Runs in `O(n log n)`.
pub fn c_index(risks: &[f64], times: &[f64], events: &[bool], ties: TieRule) -> Result<f64> {
    let n = risks.len();
    if times.len() != n || events.len() != n {
        return Err(Error::dim("c_index", format!("{n} risks, {} times, {} events", times.len(), events.len())));
    }
    if risks.iter().chain(times).any(|v| !v.is_finite()) {
        return Err(Error::Numeric { context: "c_index input".into() });
    }

    // Dense rank of each risk value.
    let mut sorted: Vec<f64> = risks.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let rank = |r: f64| sorted.partition_point(|&v| v < r);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[b].total_cmp(&times[a]));

    // Sweep from the latest time down. When a group of equal times is
    // reached, the tree holds exactly the samples with strictly later times.
    let mut tree = CountTree::new(sorted.len());
    let mut inserted = 0u64;
    let (mut concordant, mut tied, mut comparable) = (0u64, 0u64, 0u64);
    let mut start = 0;
    while start < n {
        let t = times[order[start]];
        let mut end = start;
        while end < n && times[order[end]] == t {
            end += 1;
        }
        for &j in &order[start..end] {
            if events[j] {
                let r = rank(risks[j]);
                let below = tree.below(r);
                let at_or_below = tree.below(r + 1);
                concordant += below;
                tied += at_or_below - below;
                comparable += inserted;
            }
        }
        for &j in &order[start..end] {
            tree.add(rank(risks[j]));
            inserted += 1;
        }
        start = end;
    }

    if comparable == 0 {
        return Err(Error::Undefined("no comparable pairs for the concordance index".into()));
    }
    let scored = concordant as f64
        + match ties {
            TieRule::Half => 0.5 * tied as f64,
            TieRule::Strict => 0.0,
        };
    Ok(scored / comparable as f64)
}
