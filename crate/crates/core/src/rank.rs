//! Estimators: Copeland counting, and a spectral baseline (rank centrality
//! followed by coordinate-wise BTL likelihood refinement).

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::sample::ObservationSet;
use crate::special::logistic;
use crate::{Error, Result};

/// `N_i`: total comparisons won by each item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WinCountVector(pub Vec<u64>);

/// The `k` selected items, best first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopKEstimate {
    pub items: Vec<usize>,
    /// The `k`-th and `(k+1)`-th statistics were equal and the index rule decided.
    pub tie_broken: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankingEstimate {
    pub order: Vec<usize>,
}

pub fn win_counts(obs: &ObservationSet) -> WinCountVector {
    let mut wins = vec![0u64; obs.n()];
    for (i, j, c) in obs.iter_pairs() {
        wins[i] += c.wins_low;
        wins[j] += c.wins_high();
    }
    WinCountVector(wins)
}

/// Indices sorted by decreasing statistic, ties by smaller index.
fn order_desc<T: PartialOrd>(stat: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..stat.len()).collect();
    order.sort_by(|&a, &b| stat[b].partial_cmp(&stat[a]).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b)));
    order
}

/// Top `k` of any per-item statistic, with the smaller-index tie rule.
pub fn topk_by<T: PartialOrd>(stat: &[T], k: usize) -> Result<TopKEstimate> {
    let n = stat.len();
    if k == 0 || k > n {
        return Err(Error::OutOfRange(format!("k = {k} must satisfy 1 <= k <= n = {n}")));
    }
    let order = order_desc(stat);
    let tie_broken = k < n && stat[order[k - 1]] == stat[order[k]];
    Ok(TopKEstimate { items: order[..k].to_vec(), tie_broken })
}

pub fn copeland_topk(obs: &ObservationSet, k: usize) -> Result<TopKEstimate> {
    topk_by(&win_counts(obs).0, k)
}

pub fn copeland_ranking(obs: &ObservationSet) -> RankingEstimate {
    RankingEstimate { order: order_desc(&win_counts(obs).0) }
}

/// Neighbour lists `(j, comparisons, wins of j)` for pairs compared at least once.
fn adjacency(obs: &ObservationSet) -> Vec<Vec<(usize, u64, u64)>> {
    let mut adj = vec![Vec::new(); obs.n()];
    for (i, j, c) in obs.iter_pairs() {
        if c.comparisons > 0 {
            adj[i].push((j, c.comparisons, c.wins_high()));
            adj[j].push((i, c.comparisons, c.wins_low));
        }
    }
    adj
}

fn is_connected(adj: &[Vec<(usize, u64, u64)>]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(i) = queue.pop_front() {
        for &(j, _, _) in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                reached += 1;
                queue.push_back(j);
            }
        }
    }
    reached == adj.len()
}

/// Stationary distribution of the comparison random walk.
///
/// From `i` the walk moves to neighbour `j` with probability
/// `wins_j / (comparisons_ij * d_max)` and stays put otherwise. Power
/// iteration starts from the uniform vector and stops when successive
/// iterates differ by less than `tol` in max norm.
pub fn rank_centrality(obs: &ObservationSet, tol: f64, max_iters: usize) -> Result<Vec<f64>> {
    let n = obs.n();
    let adj = adjacency(obs);
    if !is_connected(&adj) {
        return Err(Error::Disconnected);
    }
    let d_max = adj.iter().map(Vec::len).max().unwrap_or(0) as f64;
    // Outgoing transition weights, and the holding probability per state.
    let moves: Vec<Vec<(usize, f64)>> =
        adj.iter().map(|nbrs| nbrs.iter().map(|&(j, c, wj)| (j, wj as f64 / (c as f64 * d_max))).collect()).collect();
    let stay: Vec<f64> = moves.iter().map(|m| 1.0 - m.iter().map(|&(_, t)| t).sum::<f64>()).collect();

    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iters {
        for (x, (&p, &s)) in next.iter_mut().zip(pi.iter().zip(&stay)) {
            *x = p * s;
        }
        for (i, out) in moves.iter().enumerate() {
            let mass = pi[i];
            for &(j, t) in out {
                next[j] += mass * t;
            }
        }
        let total: f64 = next.iter().sum();
        residual = 0.0;
        for (p, x) in pi.iter_mut().zip(&next) {
            let v = x / total;
            residual = residual.max((v - *p).abs());
            *p = v;
        }
        if residual < tol {
            return Ok(pi);
        }
    }
    Err(Error::NotConverged { iters: max_iters, residual })
}

/// BTL log-likelihood of log-strengths `w`.
pub fn log_likelihood(obs: &ObservationSet, w: &[f64]) -> f64 {
    let mut ll = 0.0;
    for (i, j, c) in obs.iter_pairs() {
        if c.comparisons == 0 {
            continue;
        }
        let d = w[i] - w[j];
        if c.wins_low > 0 {
            ll += c.wins_low as f64 * ln_logistic(d);
        }
        if c.wins_high() > 0 {
            ll += c.wins_high() as f64 * ln_logistic(-d);
        }
    }
    ll
}

/// `ln F(x)` for the logistic `F`, accurate in both tails.
fn ln_logistic(x: f64) -> f64 {
    if x >= 0.0 {
        -libm::log1p(libm::exp(-x))
    } else {
        x - libm::log1p(libm::exp(x))
    }
}

/// Bound on how far one coordinate step may move past its neighbours.
const STEP_REACH: f64 = 30.0;
/// Absolute box for log-strengths, keeping `exp(w)` representable.
const LOG_BOX: f64 = 300.0;

/// Maximise the likelihood in coordinate `i`, all others fixed.
///
/// The coordinate gradient `g(x) = W_i - sum_j c_ij F(x - w_j)` is strictly
/// decreasing, so Newton steps are safeguarded by a bracket and replaced by
/// bisection whenever they leave it or the derivative vanishes.
fn coordinate_step(nbrs: &[(usize, u64, u64)], wins_i: f64, w: &[f64], current: f64) -> f64 {
    let grad = |x: f64| -> (f64, f64) {
        let mut g = wins_i;
        let mut h = 0.0;
        for &(j, c, _) in nbrs {
            let f = logistic(x - w[j]);
            g -= c as f64 * f;
            h += c as f64 * f * (1.0 - f);
        }
        (g, h)
    };
    let (lo_nb, hi_nb) =
        nbrs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(j, _, _)| (lo.min(w[j]), hi.max(w[j])));
    let mut lo = (lo_nb - STEP_REACH).max(-LOG_BOX).min(current);
    let mut hi = (hi_nb + STEP_REACH).min(LOG_BOX).max(current);
    if grad(lo).0 <= 0.0 {
        return lo;
    }
    if grad(hi).0 >= 0.0 {
        return hi;
    }
    let mut x = current;
    for _ in 0..200 {
        let (g, h) = grad(x);
        if g == 0.0 {
            return x;
        }
        if g > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x + g / h;
        let next = if h.abs() < 1e-14 || !(newton > lo && newton < hi) { 0.5 * (lo + hi) } else { newton };
        if (next - x).abs() <= 1e-13 * (1.0 + x.abs()) || hi - lo <= 1e-13 * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}

/// Coordinate-ascent refinement of BTL strengths starting from `init`.
///
/// Each sweep maximises the log-likelihood over one log-strength at a time;
/// the likelihood never decreases. Returns strictly positive strengths
/// normalised to sum to one.
pub fn mle_refine(obs: &ObservationSet, init: &[f64], sweeps: usize) -> Result<Vec<f64>> {
    mle_refine_traced(obs, init, sweeps, |_| {})
}

/// [`mle_refine`] with a callback receiving the log-likelihood before the
/// first sweep and after every sweep.
pub fn mle_refine_traced(
    obs: &ObservationSet,
    init: &[f64],
    sweeps: usize,
    mut trace: impl FnMut(f64),
) -> Result<Vec<f64>> {
    let n = obs.n();
    if init.len() != n {
        return Err(Error::Dimension(format!("init has {} entries, expected {n}", init.len())));
    }
    if let Some(i) = init.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidParameter(format!("init[{i}] = {} is not positive", init[i])));
    }
    let adj = adjacency(obs);
    let wins: Vec<f64> = win_counts(obs).0.into_iter().map(|x| x as f64).collect();
    let mut w: Vec<f64> = init.iter().map(|&x| libm::log(x)).collect();
    let ll0 = log_likelihood(obs, &w);
    if !ll0.is_finite() {
        return Err(Error::NonFiniteLikelihood);
    }
    trace(ll0);
    for _ in 0..sweeps {
        for i in 0..n {
            if !adj[i].is_empty() {
                w[i] = coordinate_step(&adj[i], wins[i], &w, w[i]);
            }
        }
        let mean = w.iter().sum::<f64>() / n as f64;
        w.iter_mut().for_each(|x| *x -= mean);
        let ll = log_likelihood(obs, &w);
        if !ll.is_finite() {
            return Err(Error::NonFiniteLikelihood);
        }
        trace(ll);
    }
    let top = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s: Vec<f64> = w.iter().map(|&x| libm::exp(x - top)).collect();
    let total: f64 = s.iter().sum();
    s.iter_mut().for_each(|x| *x /= total);
    Ok(s)
}

/// Rank centrality followed by likelihood refinement.
///
/// A stand-in for a spectral-then-MLE comparator; labelled
/// `spectral_baseline` in benchmark output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBaseline {
    pub tol: f64,
    pub max_iters: usize,
    pub sweeps: usize,
}

impl Default for SpectralBaseline {
    fn default() -> Self {
        Self { tol: 1e-12, max_iters: 100_000, sweeps: 20 }
    }
}

impl SpectralBaseline {
    pub fn scores(&self, obs: &ObservationSet) -> Result<Vec<f64>> {
        let pi = rank_centrality(obs, self.tol, self.max_iters)?;
        // Items that never win get zero stationary mass; lift them so the
        // refinement starts from a strictly positive point.
        let floor = pi.iter().cloned().fold(0.0, f64::max) * 1e-12;
        let init: Vec<f64> = pi.iter().map(|&x| x.max(floor)).collect();
        mle_refine(obs, &init, self.sweeps)
    }

    pub fn topk(&self, obs: &ObservationSet, k: usize) -> Result<TopKEstimate> {
        topk_by(&self.scores(obs)?, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs_from_wins(n: usize, rows: &[(usize, usize, u64, u64)]) -> ObservationSet {
        let r = rows.iter().map(|x| x.2).max().unwrap_or(1);
        ObservationSet::from_pair_counts(n, r, None, rows.iter().copied()).unwrap()
    }

    #[test]
    fn win_count_basics() {
        let empty = ObservationSet::empty(4, 3, Some(1.0));
        assert_eq!(win_counts(&empty).0, vec![0, 0, 0, 0]);
        let obs = obs_from_wins(2, &[(0, 1, 3, 2)]);
        assert_eq!(win_counts(&obs).0, vec![2, 1]);
    }

    #[test]
    fn topk_tie_rule() {
        let t = topk_by(&[5u64, 3, 3, 1], 2).unwrap();
        assert_eq!(t.items, vec![0, 1]);
        assert!(t.tie_broken);
        let t = topk_by(&[5u64, 3, 3, 1], 1).unwrap();
        assert_eq!(t.items, vec![0]);
        assert!(!t.tie_broken);
        assert!(!topk_by(&[1u64, 1], 2).unwrap().tie_broken);
        assert!(topk_by(&[1u64, 1], 0).is_err());
        assert!(topk_by(&[1u64, 1], 3).is_err());
    }

    #[test]
    fn ranking_sorts_counts() {
        // N = (1, 9, 5)
        let obs = obs_from_wins(3, &[(0, 1, 9, 1), (1, 2, 1, 1), (2, 0, 5, 5)]);
        assert_eq!(win_counts(&obs).0, vec![1, 9, 5]);
        assert_eq!(copeland_ranking(&obs).order, vec![1, 2, 0]);
        let flat = ObservationSet::empty(5, 1, None);
        assert_eq!(copeland_ranking(&flat).order, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn rank_centrality_two_items() {
        let obs = obs_from_wins(2, &[(0, 1, 4, 3)]);
        let pi = rank_centrality(&obs, 1e-14, 10_000).unwrap();
        assert!((pi[0] - 0.75).abs() < 1e-12 && (pi[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn rank_centrality_balanced_is_uniform() {
        let mut rows = Vec::new();
        for i in 0..5 {
            for j in (i + 1)..5 {
                rows.push((i, j, 6, 3));
            }
        }
        let pi = rank_centrality(&obs_from_wins(5, &rows), 1e-14, 1000).unwrap();
        assert!(pi.iter().all(|&x| (x - 0.2).abs() < 1e-12));
    }

    #[test]
    fn rank_centrality_errors() {
        let obs = obs_from_wins(4, &[(0, 1, 2, 1), (2, 3, 2, 1)]);
        assert_eq!(rank_centrality(&obs, 1e-12, 100), Err(Error::Disconnected));
        let obs = obs_from_wins(3, &[(0, 1, 5, 4), (1, 2, 5, 1), (0, 2, 5, 3)]);
        assert!(matches!(rank_centrality(&obs, 1e-300, 3), Err(Error::NotConverged { iters: 3, .. })));
    }

    #[test]
    fn mle_two_items_closed_form() {
        let obs = obs_from_wins(2, &[(0, 1, 4, 3)]);
        let s = mle_refine(&obs, &[0.5, 0.5], 5).unwrap();
        assert!((libm::log(s[0] / s[1]) - libm::log(3.0)).abs() < 1e-10);
    }

    #[test]
    fn mle_balanced_fixed_point() {
        let obs = obs_from_wins(3, &[(0, 1, 4, 2), (1, 2, 6, 3), (0, 2, 2, 1)]);
        let s = mle_refine(&obs, &[1.0, 1.0, 1.0], 4).unwrap();
        assert!(s.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn mle_ascent_and_zero_win_items() {
        // Item 3 never wins: no finite maximiser, but the walk stays finite.
        let obs = obs_from_wins(4, &[(0, 1, 10, 7), (1, 2, 10, 6), (0, 2, 10, 8), (0, 3, 5, 5), (2, 3, 5, 5)]);
        let mut trace = Vec::new();
        let s = mle_refine_traced(&obs, &[0.1, 0.2, 0.3, 0.4], 10, |ll| trace.push(ll)).unwrap();
        assert!(s.iter().all(|&x| x > 0.0));
        assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(mle_refine(&obs, &[0.0, 1.0, 1.0, 1.0], 1).is_err());
        assert!(mle_refine(&obs, &[1.0, 1.0], 1).is_err());
    }
}
