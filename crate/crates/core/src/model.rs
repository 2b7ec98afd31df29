//! Pairwise win-probability matrices and their generators.
//!
//! Item indices are zero-based throughout. Every generator computes the
//! strict upper triangle and mirrors it, so `entry(i, j) + entry(j, i) == 1`
//! holds exactly in floating point and the diagonal is exactly `1/2`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::special::{logistic, normal_cdf};
use crate::{Error, Result};

/// Tolerance used when validating user-supplied matrices.
pub const VALIDATION_TOLERANCE: f64 = 1e-9;

/// An `n x n` matrix whose `(i, j)` entry is the probability that item `i`
/// beats item `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl ComparisonMatrix {
    /// Validate a square grid of probabilities and symmetrise it exactly.
    ///
    /// Rejects entries outside `[0, 1]`, diagonals away from `1/2` and pairs
    /// whose sum differs from one by more than [`VALIDATION_TOLERANCE`]. The
    /// stored lower triangle is then recomputed as `1 - upper`.
    pub fn new(grid: &[Vec<f64>]) -> Result<Self> {
        let n = grid.len();
        if n < 2 {
            return Err(Error::Dimension(format!("need at least 2 items, got {n}")));
        }
        for (i, row) in grid.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!("row {i} has {} entries, expected {n}", row.len())));
            }
        }
        for (i, row) in grid.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::NotAProbability { row: i, col: j, value: v });
                }
            }
        }
        for i in 0..n {
            let d = grid[i][i];
            if (d - 0.5).abs() > VALIDATION_TOLERANCE {
                return Err(Error::Diagonal { index: i, value: d });
            }
            for j in (i + 1)..n {
                let sum = grid[i][j] + grid[j][i];
                if (sum - 1.0).abs() > VALIDATION_TOLERANCE {
                    return Err(Error::Asymmetric { row: i, col: j, sum });
                }
            }
        }
        Ok(Self::from_upper(n, |i, j| grid[i][j]))
    }

    /// Build a matrix from a function of the strict upper triangle.
    ///
    /// `upper(i, j)` is called for `i < j` only; the caller guarantees the
    /// value lies in `[0, 1]`.
    pub(crate) fn from_upper(n: usize, mut upper: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = vec![0.5; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = upper(i, j);
                entries[i * n + j] = v;
                entries[j * n + i] = 1.0 - v;
            }
        }
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Probability that item `i` beats item `j`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks_exact(self.n)
    }

    /// The matrix with items relabelled: item `perm[i]` of the result plays
    /// the role of item `i` of `self`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n)?;
        let mut inv = vec![0; self.n];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        Ok(Self::from_upper(self.n, |a, b| self.get(inv[a], inv[b])))
    }
}

/// Per-item quality parameters of a parametric model.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityVector(Vec<f64>);

impl QualityVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.len() < 2 {
            return Err(Error::Dimension(format!("need at least 2 items, got {}", w.len())));
        }
        if let Some(i) = w.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!("quality w[{i}] is not finite")));
        }
        Ok(Self(w))
    }

    /// Equispaced qualities from `spread` (item 0) down to `0` (item n-1).
    pub fn equispaced(n: usize, spread: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Dimension(format!("need at least 2 items, got {n}")));
        }
        let step = spread / (n - 1) as f64;
        Self::new((0..n).map(|i| spread - step * i as f64).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Item indices sorted by decreasing quality, ties by smaller index.
    pub fn descending_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.0.len()).collect();
        order.sort_by(|&a, &b| self.0[b].total_cmp(&self.0[a]).then(a.cmp(&b)));
        order
    }
}

/// The link function `F` of a parametric model `M_ij = F(w_i - w_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    /// Bradley-Terry-Luce.
    Logistic,
    /// Thurstone (probit).
    Gaussian,
}

impl Link {
    pub fn cdf(self, x: f64) -> f64 {
        match self {
            Link::Logistic => logistic(x),
            Link::Gaussian => normal_cdf(x),
        }
    }
}

/// Parametric model `M_ij = F(w_i - w_j)`.
pub fn gen_parametric(w: &QualityVector, link: Link) -> ComparisonMatrix {
    let w = w.as_slice();
    ComparisonMatrix::from_upper(w.len(), |i, j| link.cdf(w[i] - w[j]))
}

/// BTL model in which one item is a non-transitive outlier: it always beats
/// the `floor(n/4)` highest-quality other items and always loses to the rest.
pub fn gen_btl_outlier(w: &QualityVector, outlier: usize) -> Result<ComparisonMatrix> {
    let n = w.len();
    if outlier >= n {
        return Err(Error::OutOfRange(format!("outlier {outlier} with n = {n}")));
    }
    let mut beats = vec![false; n];
    w.descending_order().into_iter().filter(|&i| i != outlier).take(n / 4).for_each(|i| beats[i] = true);
    let q = w.as_slice();
    Ok(ComparisonMatrix::from_upper(n, |i, j| {
        if i == outlier {
            if beats[j] {
                1.0
            } else {
                0.0
            }
        } else if j == outlier {
            if beats[i] {
                0.0
            } else {
                1.0
            }
        } else {
            logistic(q[i] - q[j])
        }
    }))
}

/// Strong-stochastic-transitivity matrix built from independent diagonal
/// increments: `entry(i, i+d) = min(1, 1/2 + u_1 + ... + u_d)` with
/// `u_d ~ Uniform[0, gap]`. Item 0 is the strongest.
pub fn gen_sst_diagonal(n: usize, gap: f64, seed: u64) -> Result<ComparisonMatrix> {
    if n < 2 {
        return Err(Error::Dimension(format!("need at least 2 items, got {n}")));
    }
    if !(gap > 0.0 && gap <= 0.5) {
        return Err(Error::InvalidParameter(format!("SST diagonal gap {gap} not in (0, 1/2]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = vec![0.5; n];
    let mut acc = 0.5;
    for slot in level.iter_mut().skip(1) {
        acc += gap * rng.random::<f64>();
        *slot = acc.min(1.0);
    }
    Ok(ComparisonMatrix::from_upper(n, |i, j| level[j - i]))
}

/// Mixture of a BTL population and one with the opposite preferences:
/// `lambda * F(w_i - w_j) + (1 - lambda) * F(w_j - w_i)`.
pub fn gen_btl_mixture(w: &QualityVector, lambda: f64) -> Result<ComparisonMatrix> {
    if !(lambda > 0.5 && lambda <= 1.0) {
        return Err(Error::InvalidParameter(format!("mixture weight {lambda} not in (1/2, 1]")));
    }
    let q = w.as_slice();
    Ok(ComparisonMatrix::from_upper(q.len(), |i, j| {
        let f = logistic(q[i] - q[j]);
        lambda * f + (1.0 - lambda) * (1.0 - f)
    }))
}

/// Two-block matrix: items in `planted` beat the rest with probability
/// `1/2 + delta`; within each block comparisons are fair coins.
pub fn gen_planted_set(n: usize, planted: &[usize], delta: f64) -> Result<ComparisonMatrix> {
    if n < 2 {
        return Err(Error::Dimension(format!("need at least 2 items, got {n}")));
    }
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::InvalidParameter(format!("planted gap {delta} not in [0, 1/2)")));
    }
    let mut inside = vec![false; n];
    for &i in planted {
        if i >= n {
            return Err(Error::OutOfRange(format!("planted item {i} with n = {n}")));
        }
        if core::mem::replace(&mut inside[i], true) {
            return Err(Error::InvalidParameter(format!("planted item {i} repeated")));
        }
    }
    Ok(ComparisonMatrix::from_upper(n, |i, j| match (inside[i], inside[j]) {
        (true, false) => 0.5 + delta,
        (false, true) => 0.5 - delta,
        _ => 0.5,
    }))
}

/// Planted model with the top set `{0, .., k-1}`.
pub fn gen_planted(n: usize, k: usize, delta: f64) -> Result<ComparisonMatrix> {
    if k == 0 || k >= n {
        return Err(Error::OutOfRange(format!("planted size k = {k} with n = {n}")));
    }
    let top: Vec<usize> = (0..k).collect();
    gen_planted_set(n, &top, delta)
}

/// Largest gap for which [`gen_adjacent_swap`] is defined.
pub fn adjacent_swap_max_gap(n: usize) -> f64 {
    1.0 / (9.0 * (n as f64 - 1.0))
}

/// Linear-in-rank matrix `M_ij = 1/2 - (pos(i) - pos(j)) * delta0` where
/// `pos` is the identity ranking with items `a` and `a + 1` swapped.
///
/// Consecutive ranked items have score gap exactly `delta0`.
pub fn gen_adjacent_swap(n: usize, delta0: f64, a: usize) -> Result<ComparisonMatrix> {
    if n < 2 {
        return Err(Error::Dimension(format!("need at least 2 items, got {n}")));
    }
    if a + 1 >= n {
        return Err(Error::OutOfRange(format!("swap index {a} with n = {n}")));
    }
    if !(delta0 >= 0.0 && delta0 <= adjacent_swap_max_gap(n)) {
        return Err(Error::InvalidParameter(format!("gap {delta0} not in [0, 1/(9(n-1))] for n = {n}")));
    }
    let pos = |i: usize| -> f64 {
        let p = if i == a {
            a + 1
        } else if i == a + 1 {
            a
        } else {
            i
        };
        p as f64
    };
    Ok(ComparisonMatrix::from_upper(n, |i, j| 0.5 - (pos(i) - pos(j)) * delta0))
}

/// Planted model whose top block is the first `k` items of `ordering`.
pub fn gen_hamming_planted(n: usize, k: usize, delta0: f64, ordering: &[usize]) -> Result<ComparisonMatrix> {
    check_permutation(ordering, n)?;
    if k == 0 || k >= n {
        return Err(Error::OutOfRange(format!("top-block size k = {k} with n = {n}")));
    }
    if !(0.0..1.0 / 3.0).contains(&delta0) {
        return Err(Error::InvalidParameter(format!("gap {delta0} not in [0, 1/3)")));
    }
    gen_planted_set(n, &ordering[..k], delta0)
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::Dimension(format!("permutation has {} entries, expected {n}", perm.len())));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || core::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidParameter(format!("not a permutation of 0..{n}")));
        }
    }
    Ok(())
}

/// A buildable description of a comparison model.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Btl { w: QualityVector },
    Thurstone { w: QualityVector },
    BtlOutlier { w: QualityVector, outlier: usize },
    SstDiagonal { n: usize, gap: f64, seed: u64 },
    BtlMixture { w: QualityVector, lambda: f64 },
    Planted { n: usize, k: usize, delta: f64 },
    AdjacentSwap { n: usize, delta0: f64, a: usize },
    HammingPlanted { n: usize, k: usize, delta0: f64, ordering: Vec<usize> },
    Explicit(ComparisonMatrix),
}

impl ModelSpec {
    /// Default mixture weight of the two opposing BTL populations.
    pub const DEFAULT_MIXTURE_WEIGHT: f64 = 0.8;

    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Btl { .. } => "btl",
            ModelSpec::Thurstone { .. } => "thurstone",
            ModelSpec::BtlOutlier { .. } => "btl_outlier",
            ModelSpec::SstDiagonal { .. } => "sst_diagonal",
            ModelSpec::BtlMixture { .. } => "btl_mixture",
            ModelSpec::Planted { .. } => "planted",
            ModelSpec::AdjacentSwap { .. } => "adjacent_swap",
            ModelSpec::HammingPlanted { .. } => "hamming_planted",
            ModelSpec::Explicit(_) => "explicit",
        }
    }

    pub fn n(&self) -> usize {
        match self {
            ModelSpec::Btl { w }
            | ModelSpec::Thurstone { w }
            | ModelSpec::BtlOutlier { w, .. }
            | ModelSpec::BtlMixture { w, .. } => w.len(),
            ModelSpec::SstDiagonal { n, .. }
            | ModelSpec::Planted { n, .. }
            | ModelSpec::AdjacentSwap { n, .. }
            | ModelSpec::HammingPlanted { n, .. } => *n,
            ModelSpec::Explicit(m) => m.n(),
        }
    }

    /// Whether building the model consumes randomness.
    pub fn is_seeded(&self) -> bool {
        matches!(self, ModelSpec::SstDiagonal { .. })
    }

    /// The same model with its internal seed replaced (no-op if unseeded).
    pub fn with_seed(&self, new_seed: u64) -> Self {
        match self {
            ModelSpec::SstDiagonal { n, gap, .. } => ModelSpec::SstDiagonal { n: *n, gap: *gap, seed: new_seed },
            other => other.clone(),
        }
    }

    pub fn build(&self) -> Result<ComparisonMatrix> {
        match self {
            ModelSpec::Btl { w } => Ok(gen_parametric(w, Link::Logistic)),
            ModelSpec::Thurstone { w } => Ok(gen_parametric(w, Link::Gaussian)),
            ModelSpec::BtlOutlier { w, outlier } => gen_btl_outlier(w, *outlier),
            ModelSpec::SstDiagonal { n, gap, seed } => gen_sst_diagonal(*n, *gap, *seed),
            ModelSpec::BtlMixture { w, lambda } => gen_btl_mixture(w, *lambda),
            ModelSpec::Planted { n, k, delta } => gen_planted(*n, *k, *delta),
            ModelSpec::AdjacentSwap { n, delta0, a } => gen_adjacent_swap(*n, *delta0, *a),
            ModelSpec::HammingPlanted { n, k, delta0, ordering } => gen_hamming_planted(*n, *k, *delta0, ordering),
            ModelSpec::Explicit(m) => Ok(m.clone()),
        }
    }
}

/// Exhaustive check that `order` (strongest first) certifies strong
/// stochastic transitivity: whenever `a` precedes `b`, row `a` dominates
/// row `b` entrywise, up to rounding in the mirrored entries.
pub fn satisfies_sst(m: &ComparisonMatrix, order: &[usize]) -> bool {
    let n = m.n();
    order.windows(2).all(|w| (0..n).all(|l| m.get(w[0], l) >= m.get(w[1], l) - 1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_valid(m: &ComparisonMatrix) {
        let n = m.n();
        for i in 0..n {
            assert_eq!(m.get(i, i), 0.5);
            for j in 0..n {
                assert!((0.0..=1.0).contains(&m.get(i, j)));
                assert_eq!(m.get(i, j) + m.get(j, i), 1.0);
            }
        }
    }

    #[test]
    fn make_matrix_accepts_and_rejects() {
        let ok = ComparisonMatrix::new(&[vec![0.5, 0.7], vec![0.3, 0.5]]).unwrap();
        assert_eq!(ok.get(0, 1), 0.7);
        assert!(matches!(ComparisonMatrix::new(&[vec![0.5, 0.7], vec![0.4, 0.5]]), Err(Error::Asymmetric { .. })));
        assert!(matches!(
            ComparisonMatrix::new(&[vec![0.6, 0.7], vec![0.3, 0.5]]),
            Err(Error::Diagonal { index: 0, .. })
        ));
        assert!(matches!(
            ComparisonMatrix::new(&[vec![0.5, 1.2], vec![-0.2, 0.5]]),
            Err(Error::NotAProbability { .. })
        ));
        assert!(matches!(ComparisonMatrix::new(&[vec![0.5, 0.7], vec![0.3]]), Err(Error::Dimension(_))));
        assert!(matches!(ComparisonMatrix::new(&[vec![0.5]]), Err(Error::Dimension(_))));
    }

    #[test]
    fn make_matrix_symmetrises_within_tolerance() {
        let m = ComparisonMatrix::new(&[vec![0.5, 0.7], vec![0.3 + 5e-10, 0.5 - 5e-10]]).unwrap();
        assert_eq!(m.get(1, 0), 1.0 - 0.7);
        assert_eq!(m.get(1, 1), 0.5);
    }

    #[test]
    fn parametric_values() {
        let w = QualityVector::new(vec![1.0, 0.0]).unwrap();
        let m = gen_parametric(&w, Link::Logistic);
        assert!((m.get(0, 1) - 0.731_059).abs() < 1e-6);
        let eq = QualityVector::new(vec![0.3, 0.3, 0.3]).unwrap();
        for link in [Link::Logistic, Link::Gaussian] {
            assert_eq!(gen_parametric(&eq, link).get(0, 2), 0.5);
        }
    }

    #[test]
    fn parametric_rows_follow_quality_order() {
        let w = QualityVector::new(vec![0.1, 2.0, -1.0, 0.7, 0.0, 1.5, -0.3, 0.9, -2.0, 0.4]).unwrap();
        for link in [Link::Logistic, Link::Gaussian] {
            let m = gen_parametric(&w, link);
            assert_valid(&m);
            assert!(satisfies_sst(&m, &w.descending_order()));
        }
    }

    #[test]
    fn outlier_beats_top_quarter_only() {
        let w = QualityVector::equispaced(8, 3.5).unwrap();
        let m = gen_btl_outlier(&w, 5).unwrap();
        assert_valid(&m);
        assert_eq!(m.get(5, 0), 1.0);
        assert_eq!(m.get(5, 1), 1.0);
        assert_eq!(m.get(5, 2), 0.0);
        assert_eq!(m.get(5, 7), 0.0);
        assert_eq!(m.get(2, 3), logistic(w.as_slice()[2] - w.as_slice()[3]));
        assert!(gen_btl_outlier(&w, 8).is_err());
    }

    #[test]
    fn sst_diagonal_is_sst_and_deterministic() {
        for seed in 0..20 {
            let m = gen_sst_diagonal(9, 0.1, seed).unwrap();
            assert_valid(&m);
            let order: Vec<usize> = (0..9).collect();
            assert!(satisfies_sst(&m, &order));
        }
        assert_eq!(gen_sst_diagonal(4, 0.2, 3).unwrap(), gen_sst_diagonal(4, 0.2, 3).unwrap());
        assert!(gen_sst_diagonal(4, 0.0, 3).is_err());
        assert!(gen_sst_diagonal(4, 0.7, 3).is_err());
    }

    #[test]
    fn mixture_values() {
        let w = QualityVector::new(vec![1.0, 0.0]).unwrap();
        let m = gen_btl_mixture(&w, 0.8).unwrap();
        // 0.8 * 0.7310585786 + 0.2 * 0.2689414214
        assert!((m.get(0, 1) - 0.638_635_147_178).abs() < 1e-12);
        assert_eq!(gen_btl_mixture(&w, 1.0).unwrap(), gen_parametric(&w, Link::Logistic));
        assert!(gen_btl_mixture(&w, 0.5).is_err());
        assert!(gen_btl_mixture(&w, 1.01).is_err());
    }

    #[test]
    fn planted_entries() {
        let m = gen_planted(5, 2, 0.1).unwrap();
        assert_valid(&m);
        assert_eq!(m.get(0, 1), 0.5);
        assert_eq!(m.get(0, 4), 0.6);
        assert_eq!(m.get(3, 1), 0.4);
        assert_eq!(m.get(3, 4), 0.5);
        assert!(satisfies_sst(&m, &[0, 1, 2, 3, 4]));
        assert!(gen_planted(5, 0, 0.1).is_err());
        assert!(gen_planted(5, 5, 0.1).is_err());
        assert!(gen_planted(5, 2, 0.5).is_err());
        assert!(gen_planted(5, 2, -0.1).is_err());
    }

    #[test]
    fn adjacent_swap_locality() {
        let d = adjacent_swap_max_gap(7);
        let m0 = gen_adjacent_swap(7, d, 0).unwrap();
        let m1 = gen_adjacent_swap(7, d, 1).unwrap();
        assert_valid(&m0);
        for i in 0..7 {
            for j in 0..7 {
                if i > 2 && j > 2 {
                    assert_eq!(m0.get(i, j), m1.get(i, j));
                }
            }
        }
        assert_ne!(m0, m1);
        assert!(gen_adjacent_swap(7, d * 1.01, 0).is_err());
        assert!(gen_adjacent_swap(7, d, 6).is_err());
    }

    #[test]
    fn hamming_planted_depends_on_top_block_only() {
        let id: Vec<usize> = (0..6).collect();
        assert_eq!(gen_hamming_planted(6, 2, 0.2, &id).unwrap(), gen_planted(6, 2, 0.2).unwrap());
        let a = gen_hamming_planted(6, 2, 0.2, &[4, 1, 0, 2, 3, 5]).unwrap();
        let b = gen_hamming_planted(6, 2, 0.2, &[1, 4, 5, 3, 2, 0]).unwrap();
        assert_eq!(a, b);
        assert!(gen_hamming_planted(6, 2, 0.2, &[0, 0, 1, 2, 3, 4]).is_err());
        assert!(gen_hamming_planted(6, 2, 0.34, &id).is_err());
    }

    #[test]
    fn relabel_roundtrip() {
        let w = QualityVector::new(vec![0.3, -0.2, 1.1, 0.0]).unwrap();
        let m = gen_parametric(&w, Link::Gaussian);
        let perm = [2, 0, 3, 1];
        let r = m.relabel(&perm).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(r.get(perm[i], perm[j]), m.get(i, j));
            }
        }
    }
}
