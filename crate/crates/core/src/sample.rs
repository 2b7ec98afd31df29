//! Random-design observations: every pair is compared `Binomial(r, p)`
//! times, independently across pairs, each comparison won by `i` with
//! probability `M_ij`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::model::ComparisonMatrix;
use crate::{Error, Result};

/// Aggregated comparison counts for one unordered pair `{i, j}`, `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairCounts {
    pub comparisons: u64,
    /// Comparisons won by the smaller-indexed item.
    pub wins_low: u64,
}

impl PairCounts {
    pub fn wins_high(&self) -> u64 {
        self.comparisons - self.wins_low
    }
}

/// Per-pair comparison and win counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    n: usize,
    r: u64,
    p: Option<f64>,
    pairs: Vec<PairCounts>,
}

#[inline]
fn pair_slot(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl ObservationSet {
    /// No comparisons at all.
    pub fn empty(n: usize, r: u64, p: Option<f64>) -> Self {
        Self { n, r, p, pairs: vec![PairCounts::default(); n * n.saturating_sub(1) / 2] }
    }

    /// Build from `(i, j, comparisons, wins_i)` rows; pairs not listed have
    /// no comparisons. Rows for the same pair accumulate.
    pub fn from_pair_counts(
        n: usize,
        r: u64,
        p: Option<f64>,
        rows: impl IntoIterator<Item = (usize, usize, u64, u64)>,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::Dimension(format!("need at least 2 items, got {n}")));
        }
        let mut obs = Self::empty(n, r, p);
        for (i, j, c, wi) in rows {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidRecord(format!("pair ({i}, {j}) with n = {n}")));
            }
            if wi > c {
                return Err(Error::InvalidRecord(format!("pair ({i}, {j}): {wi} wins out of {c} comparisons")));
            }
            let wl = if i < j { wi } else { c - wi };
            let slot = &mut obs.pairs[pair_slot(n, i.min(j), i.max(j))];
            slot.comparisons += c;
            slot.wins_low += wl;
            if slot.comparisons > r {
                return Err(Error::InvalidRecord(format!(
                    "pair ({i}, {j}) has {} comparisons, more than r = {r}",
                    slot.comparisons
                )));
            }
        }
        Ok(obs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    /// Comparison probability, unknown for ingested data.
    pub fn p(&self) -> Option<f64> {
        self.p
    }

    /// Counts for the pair `{i, j}` oriented from `i`'s side:
    /// `(comparisons, wins of i)`.
    pub fn pair(&self, i: usize, j: usize) -> (u64, u64) {
        assert!(i != j, "no self-pairs");
        let c = self.pairs[pair_slot(self.n, i.min(j), i.max(j))];
        if i < j {
            (c.comparisons, c.wins_low)
        } else {
            (c.comparisons, c.wins_high())
        }
    }

    /// All pairs `(i, j, counts)` with `i < j`, in row-major order.
    pub fn iter_pairs(&self) -> impl Iterator<Item = (usize, usize, PairCounts)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j, self.pairs[pair_slot(n, i, j)])))
    }

    pub fn total_comparisons(&self) -> u64 {
        self.pairs.iter().map(|c| c.comparisons).sum()
    }
}

fn binomial<R: rand::Rng>(rng: &mut R, trials: u64, prob: f64) -> u64 {
    if trials == 0 || prob <= 0.0 {
        0
    } else if prob >= 1.0 {
        trials
    } else {
        Binomial::new(trials, prob).expect("probability checked").sample(rng)
    }
}

fn row_rng(seed: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row as u64);
    rng
}

/// Draw one observation set from `m` under the random design `(p, r)`.
///
/// Row `i` (the pairs `(i, j > i)`) uses its own ChaCha stream, so the
/// result depends only on `(m, p, r, seed)`.
pub fn draw_observations(m: &ComparisonMatrix, p: f64, r: u64, seed: u64) -> Result<ObservationSet> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} not in (0, 1]")));
    }
    if r == 0 {
        return Err(Error::InvalidParameter("r must be at least 1".into()));
    }
    let n = m.n();
    let mut obs = ObservationSet::empty(n, r, Some(p));
    for i in 0..n {
        let mut rng = row_rng(seed, i);
        for j in (i + 1)..n {
            let c = binomial(&mut rng, r, p);
            let w = binomial(&mut rng, c, m.get(i, j));
            obs.pairs[pair_slot(n, i, j)] = PairCounts { comparisons: c, wins_low: w };
        }
    }
    Ok(obs)
}

/// Keep each individual comparison independently with probability `q`.
pub fn subsample(obs: &ObservationSet, q: f64, seed: u64) -> Result<ObservationSet> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("q = {q} not in [0, 1]")));
    }
    let n = obs.n;
    let mut out = obs.clone();
    for i in 0..n {
        let mut rng = row_rng(seed, i);
        for j in (i + 1)..n {
            let slot = &mut out.pairs[pair_slot(n, i, j)];
            let low = binomial(&mut rng, slot.wins_low, q);
            let high = binomial(&mut rng, slot.wins_high(), q);
            *slot = PairCounts { comparisons: low + high, wins_low: low };
        }
    }
    Ok(out)
}

/// One externally collected comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonRecord {
    pub item_a: String,
    pub item_b: String,
    pub winner: String,
}

impl ComparisonRecord {
    pub fn new(a: impl Into<String>, b: impl Into<String>, winner: impl Into<String>) -> Self {
        Self { item_a: a.into(), item_b: b.into(), winner: winner.into() }
    }
}

/// Aggregate raw comparison rows.
///
/// Items are indexed in order of first appearance; the returned vector maps
/// index to identifier. `r` is the largest per-pair count and `p` is unknown.
pub fn ingest_comparisons(rows: &[ComparisonRecord]) -> Result<(ObservationSet, Vec<String>)> {
    if rows.is_empty() {
        return Err(Error::InvalidRecord("no comparisons".into()));
    }
    let mut ids: Vec<String> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut intern = |name: &str| -> usize {
        if let Some(&i) = index.get(name) {
            return i;
        }
        ids.push(name.into());
        index.insert(name.into(), ids.len() - 1);
        ids.len() - 1
    };
    let mut tallies: BTreeMap<(usize, usize), (u64, u64)> = BTreeMap::new();
    for (line, rec) in rows.iter().enumerate() {
        if rec.item_a == rec.item_b {
            return Err(Error::InvalidRecord(format!("row {line}: {} compared with itself", rec.item_a)));
        }
        if rec.winner != rec.item_a && rec.winner != rec.item_b {
            return Err(Error::InvalidRecord(format!(
                "row {line}: winner {} is neither {} nor {}",
                rec.winner, rec.item_a, rec.item_b
            )));
        }
        let a = intern(&rec.item_a);
        let b = intern(&rec.item_b);
        let w = if rec.winner == rec.item_a { a } else { b };
        let key = (a.min(b), a.max(b));
        let t = tallies.entry(key).or_default();
        t.0 += 1;
        if w == key.0 {
            t.1 += 1;
        }
    }
    let n = ids.len();
    let r = tallies.values().map(|t| t.0).max().unwrap_or(0);
    let obs = ObservationSet::from_pair_counts(n, r, None, tallies.into_iter().map(|((i, j), (c, w))| (i, j, c, w)))?;
    Ok((obs, ids))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gen_parametric, gen_planted, Link, QualityVector};

    #[test]
    fn full_probability_design() {
        let m = gen_planted(6, 2, 0.2).unwrap();
        let obs = draw_observations(&m, 1.0, 7, 11).unwrap();
        assert!(obs.iter_pairs().all(|(_, _, c)| c.comparisons == 7));
        assert_eq!(obs.total_comparisons(), 15 * 7);
    }

    #[test]
    fn certain_winner() {
        let m = ComparisonMatrix::new(&[vec![0.5, 1.0, 0.0], vec![0.0, 0.5, 0.5], vec![1.0, 0.5, 0.5]]).unwrap();
        let obs = draw_observations(&m, 0.6, 30, 5).unwrap();
        let (c, w) = obs.pair(0, 1);
        assert_eq!(w, c);
        let (c, w) = obs.pair(0, 2);
        assert_eq!(w, 0);
        assert_eq!(obs.pair(2, 0), (c, c));
    }

    #[test]
    fn deterministic_given_seed() {
        let w = QualityVector::equispaced(12, 2.0).unwrap();
        let m = gen_parametric(&w, Link::Logistic);
        assert_eq!(draw_observations(&m, 0.3, 40, 99).unwrap(), draw_observations(&m, 0.3, 40, 99).unwrap());
        assert_ne!(draw_observations(&m, 0.3, 40, 99).unwrap(), draw_observations(&m, 0.3, 40, 100).unwrap());
    }

    #[test]
    fn rejects_bad_design() {
        let m = gen_planted(4, 1, 0.1).unwrap();
        assert!(draw_observations(&m, 0.0, 3, 0).is_err());
        assert!(draw_observations(&m, 1.5, 3, 0).is_err());
        assert!(draw_observations(&m, 0.5, 0, 0).is_err());
    }

    #[test]
    fn subsample_extremes() {
        let m = gen_planted(8, 3, 0.3).unwrap();
        let obs = draw_observations(&m, 0.8, 25, 1).unwrap();
        assert_eq!(subsample(&obs, 1.0, 4).unwrap(), obs);
        let none = subsample(&obs, 0.0, 4).unwrap();
        assert_eq!(none.total_comparisons(), 0);
        assert_eq!(none.r(), obs.r());
        assert!(subsample(&obs, 1.1, 4).is_err());
        let half = subsample(&obs, 0.5, 4).unwrap();
        for ((_, _, a), (_, _, b)) in half.iter_pairs().zip(obs.iter_pairs()) {
            assert!(a.wins_low <= b.wins_low && a.wins_high() <= b.wins_high());
        }
    }

    #[test]
    fn ingest_counts() {
        let rows = [
            ComparisonRecord::new("A", "B", "A"),
            ComparisonRecord::new("A", "B", "B"),
            ComparisonRecord::new("B", "A", "A"),
            ComparisonRecord::new("C", "B", "C"),
        ];
        let (obs, ids) = ingest_comparisons(&rows).unwrap();
        assert_eq!(ids, ["A", "B", "C"]);
        assert_eq!(obs.pair(0, 1), (3, 2));
        assert_eq!(obs.pair(2, 1), (1, 1));
        assert_eq!(obs.pair(0, 2), (0, 0));
        assert_eq!(obs.r(), 3);
        assert_eq!(obs.p(), None);
    }

    #[test]
    fn ingest_errors() {
        assert!(ingest_comparisons(&[]).is_err());
        assert!(ingest_comparisons(&[ComparisonRecord::new("A", "A", "A")]).is_err());
        assert!(ingest_comparisons(&[ComparisonRecord::new("A", "B", "C")]).is_err());
    }

    #[test]
    fn pair_count_validation() {
        assert!(ObservationSet::from_pair_counts(3, 5, None, [(0, 1, 3, 4)]).is_err());
        assert!(ObservationSet::from_pair_counts(3, 2, None, [(0, 1, 3, 1)]).is_err());
        assert!(ObservationSet::from_pair_counts(3, 5, None, [(1, 1, 3, 1)]).is_err());
        let obs = ObservationSet::from_pair_counts(3, 5, None, [(2, 0, 4, 1)]).unwrap();
        assert_eq!(obs.pair(0, 2), (4, 3));
    }
}
