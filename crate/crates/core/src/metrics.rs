//! Success criteria for a top-k estimate against the generating model.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::analysis::ScoreVector;
use crate::rank::TopKEstimate;
use crate::setfamily::{PositionSet, SetFamily};
use crate::{Error, Result};

/// Scores closer than this are one tie class: equal-by-construction scores
/// can differ in the last bits depending on summation order.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// The true ordering of the items, with tie classes.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    k: usize,
    tau: Option<ScoreVector>,
    order: Vec<usize>,
    /// One-based position of each item under `order`.
    position: Vec<usize>,
    /// Tie class of each item; classes are numbered along `order`.
    class: Vec<usize>,
    /// `[start, end)` position ranges (zero-based) of each class.
    class_span: Vec<(usize, usize)>,
}

impl GroundTruth {
    /// Truth induced by the scores: descending `tau`, ties by smaller index,
    /// scores within [`TIE_TOLERANCE`] of their neighbour grouped together.
    pub fn from_scores(tau: &ScoreVector, k: usize) -> Result<Self> {
        let order = tau.descending_order();
        let t = tau.as_slice();
        let mut breaks = vec![false; order.len()];
        for w in 1..order.len() {
            breaks[w] = t[order[w - 1]] - t[order[w]] > TIE_TOLERANCE;
        }
        Self::build(order, &breaks, k, Some(tau.clone()))
    }

    /// Truth from a strict ranking (best first), no ties.
    pub fn from_order(order: Vec<usize>, k: usize) -> Result<Self> {
        let breaks = vec![true; order.len()];
        Self::build(order, &breaks, k, None)
    }

    fn build(order: Vec<usize>, breaks: &[bool], k: usize, tau: Option<ScoreVector>) -> Result<Self> {
        let n = order.len();
        crate::model::check_permutation(&order, n)?;
        if k == 0 || k > n {
            return Err(Error::OutOfRange(format!("k = {k} must satisfy 1 <= k <= n = {n}")));
        }
        let mut position = vec![0; n];
        let mut class = vec![0; n];
        let mut class_span: Vec<(usize, usize)> = Vec::new();
        for (pos, &item) in order.iter().enumerate() {
            if pos == 0 || breaks[pos] {
                class_span.push((pos, pos));
            }
            let c = class_span.len() - 1;
            class_span[c].1 = pos + 1;
            position[item] = pos + 1;
            class[item] = c;
        }
        Ok(Self { k, tau, order, position, class, class_span })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    pub fn tau(&self) -> Option<&ScoreVector> {
        self.tau.as_ref()
    }

    pub fn true_order(&self) -> &[usize] {
        &self.order
    }

    /// The top `k` under the index tie rule.
    pub fn true_topk(&self) -> &[usize] {
        &self.order[..self.k]
    }

    pub fn tie_classes(&self) -> Vec<Vec<usize>> {
        self.class_span.iter().map(|&(a, b)| self.order[a..b].to_vec()).collect()
    }

    /// Positions of `items`, giving the chosen members of each tie class the
    /// best positions that class occupies.
    pub fn lenient_positions(&self, items: &[usize]) -> Result<PositionSet> {
        let n = self.n();
        let mut used = vec![0usize; self.class_span.len()];
        let mut seen = BTreeSet::new();
        let mut positions = Vec::with_capacity(items.len());
        for &i in items {
            if i >= n || !seen.insert(i) {
                return Err(Error::InvalidParameter(format!("item {i} invalid or repeated")));
            }
            let c = self.class[i];
            positions.push(self.class_span[c].0 + used[c] + 1);
            used[c] += 1;
        }
        PositionSet::new(positions, n)
    }

    /// Largest overlap between `items` and any valid top-k set.
    fn best_overlap(&self, items: &[usize]) -> Result<usize> {
        Ok(self.lenient_positions(items)?.as_slice().iter().filter(|&&p| p <= self.k).count())
    }
}

/// Number of items in exactly one of the two sets.
pub fn hamming_distance(a: &[usize], b: &[usize]) -> usize {
    let a: BTreeSet<usize> = a.iter().copied().collect();
    let b: BTreeSet<usize> = b.iter().copied().collect();
    a.symmetric_difference(&b).count()
}

fn check_size(est: &TopKEstimate, truth: &GroundTruth) -> Result<()> {
    if est.items.len() != truth.k {
        return Err(Error::Dimension(format!("estimate has {} items, truth has k = {}", est.items.len(), truth.k)));
    }
    Ok(())
}

/// Exact recovery, accepting any choice within a tie class straddling the
/// `k`-boundary.
pub fn exact_success(est: &TopKEstimate, truth: &GroundTruth) -> Result<bool> {
    check_size(est, truth)?;
    Ok(truth.best_overlap(&est.items)? == truth.k)
}

/// Hamming distance to the closest valid top-k set, and whether it is at
/// most `2h`.
pub fn hamming_success(est: &TopKEstimate, truth: &GroundTruth, h: usize) -> Result<(bool, usize)> {
    check_size(est, truth)?;
    let distance = 2 * (truth.k - truth.best_overlap(&est.items)?);
    Ok((distance <= 2 * h, distance))
}

/// Whether the estimate's positions (with tie leniency) form an allowed set.
pub fn allowed_success(est: &TopKEstimate, truth: &GroundTruth, family: &SetFamily) -> Result<bool> {
    check_size(est, truth)?;
    if family.n() != truth.n() || family.k() != truth.k {
        return Err(Error::Dimension(format!(
            "family over (n = {}, k = {}) vs truth (n = {}, k = {})",
            family.n(),
            family.k(),
            truth.n(),
            truth.k
        )));
    }
    family.membership(&truth.lenient_positions(&est.items)?)
}
