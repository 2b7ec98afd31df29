//! Monotone families of allowed rank-position sets.
//!
//! A family says which sets of `k` positions (one-based, under the true
//! ordering) an estimate may occupy. Families here are monotone: replacing a
//! position by a better (smaller) one keeps the set allowed. Such a family is
//! the union of the down-closures `Lambda(T)` of its maximal members `T`,
//! where `s` lies in `Lambda(T)` iff sorted `s` is coordinatewise `<= T`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::analysis::ScoreVector;
use crate::{Error, Result};

/// Largest `C(n, k)` that [`SetFamily::enumerate_allowed`] and
/// [`is_monotone`] will walk.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

/// Families with more than this many items get no generator basis for the
/// predicate-defined requirements.
pub const GENERATOR_MAX_N: usize = 64;

const GENERATOR_BUDGET: usize = 2_000_000;

/// A sorted set of distinct one-based positions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PositionSet(Vec<usize>);

impl PositionSet {
    /// Sorts and validates `positions` against `[1, n]`.
    pub fn new(mut positions: Vec<usize>, n: usize) -> Result<Self> {
        positions.sort_unstable();
        if positions.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!("repeated position in {positions:?}")));
        }
        if positions.first().is_some_and(|&p| p == 0) || positions.last().is_some_and(|&p| p > n) {
            return Err(Error::OutOfRange(format!("positions {positions:?} not within [1, {n}]")));
        }
        Ok(Self(positions))
    }

    fn from_sorted(positions: Vec<usize>) -> Self {
        Self(positions)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self` lies in `Lambda(other)`.
    pub fn dominated_by(&self, other: &PositionSet) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

/// How real-valued position bounds such as `(1 + eps) k` become integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rounding {
    #[default]
    Floor,
    Ceil,
}

impl Rounding {
    fn apply(self, x: f64) -> f64 {
        // Absorb representation error in products like 1.3 * 10.
        match self {
            Rounding::Floor => libm::floor(x + 1e-9),
            Rounding::Ceil => libm::ceil(x - 1e-9),
        }
    }
}

/// The four relaxed top-k requirements, each parameterised by `eps >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Requirement {
    /// Every chosen position is within the top `(1 + eps) k`.
    TopBand,
    /// Worst chosen position is at most `(1 + eps)` times the best unchosen one.
    Multiplicative,
    /// Worst chosen position is at most the best unchosen one plus `eps`.
    Additive,
    /// Sum of chosen positions is at most `(1 + eps) k (k + 1) / 2`.
    RankSum,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    Exact,
    Hamming { h: usize },
    Requirement { variant: Requirement, eps: f64, rounding: Rounding },
    Explicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetFamily {
    n: usize,
    k: usize,
    kind: FamilyKind,
    generators: Option<Vec<PositionSet>>,
}

fn check_bounds(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::OutOfRange(format!("k = {k} must satisfy 1 <= k <= n = {n}")));
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

fn check_enumerable(n: usize, k: usize) -> Result<()> {
    let count = binomial(n, k);
    if count > ENUMERATION_LIMIT {
        return Err(Error::TooLarge(format!("C({n}, {k}) = {count} exceeds {ENUMERATION_LIMIT}")));
    }
    Ok(())
}

/// Keep only members not dominated by another member.
fn maximal_antichain(mut sets: Vec<PositionSet>) -> Vec<PositionSet> {
    sets.sort();
    sets.dedup();
    let keep: Vec<bool> = sets
        .iter()
        .enumerate()
        .map(|(a, s)| !sets.iter().enumerate().any(|(b, t)| a != b && s.dominated_by(t)))
        .collect();
    sets.into_iter().zip(keep).filter_map(|(s, k)| k.then_some(s)).collect()
}

impl SetFamily {
    /// Only the top `k` positions.
    pub fn exact(n: usize, k: usize) -> Result<Self> {
        check_bounds(n, k)?;
        Ok(Self { n, k, kind: FamilyKind::Exact, generators: Some(vec![PositionSet::from_sorted((1..=k).collect())]) })
    }

    /// Sets with at least `k - h` positions in the top `k`.
    pub fn hamming(n: usize, k: usize, h: usize) -> Result<Self> {
        check_bounds(n, k)?;
        if h >= k || k + h > n {
            return Err(Error::OutOfRange(format!("Hamming tolerance h = {h} needs h < k = {k} and k + h <= n = {n}")));
        }
        let generator: Vec<usize> = ((h + 1)..=k).chain((n - h + 1)..=n).collect();
        Ok(Self { n, k, kind: FamilyKind::Hamming { h }, generators: Some(vec![PositionSet::from_sorted(generator)]) })
    }

    pub fn requirement(n: usize, k: usize, eps: f64, variant: Requirement) -> Result<Self> {
        Self::requirement_rounded(n, k, eps, variant, Rounding::Floor)
    }

    pub fn requirement_rounded(n: usize, k: usize, eps: f64, variant: Requirement, rounding: Rounding) -> Result<Self> {
        check_bounds(n, k)?;
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps = {eps} must be finite and >= 0")));
        }
        let mut family = Self { n, k, kind: FamilyKind::Requirement { variant, eps, rounding }, generators: None };
        family.generators = match variant {
            Requirement::TopBand => {
                let top = (family.bound((1.0 + eps) * k as f64) as usize).clamp(k, n);
                Some(vec![PositionSet::from_sorted(((top - k + 1)..=top).collect())])
            }
            _ if n <= GENERATOR_MAX_N => family.search_maximal(),
            _ => None,
        };
        Ok(family)
    }

    /// The union of the down-closures of `sets`. Dominated sets are dropped
    /// so the stored generators form an antichain.
    pub fn explicit(n: usize, k: usize, sets: Vec<PositionSet>) -> Result<Self> {
        check_bounds(n, k)?;
        if sets.is_empty() {
            return Err(Error::InvalidParameter("explicit family needs at least one set".into()));
        }
        for s in &sets {
            if s.len() != k {
                return Err(Error::Dimension(format!("set {:?} has size {}, expected {k}", s.0, s.len())));
            }
            if s.0.last().is_some_and(|&p| p > n) {
                return Err(Error::OutOfRange(format!("set {:?} exceeds n = {n}", s.0)));
            }
        }
        Ok(Self { n, k, kind: FamilyKind::Explicit, generators: Some(maximal_antichain(sets)) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    /// Maximal allowed sets, when a basis is available.
    pub fn generators(&self) -> Option<&[PositionSet]> {
        self.generators.as_deref()
    }

    fn bound(&self, x: f64) -> f64 {
        match self.kind {
            FamilyKind::Requirement { rounding, .. } => rounding.apply(x),
            _ => x,
        }
    }

    /// Membership for a sorted, in-range slice of `k` positions.
    fn allows(&self, s: &[usize]) -> bool {
        let k = self.k;
        match &self.kind {
            FamilyKind::Exact => s.iter().enumerate().all(|(j, &p)| p == j + 1),
            FamilyKind::Hamming { h } => s.iter().filter(|&&p| p <= k).count() + h >= k,
            FamilyKind::Requirement { variant, eps, .. } => {
                let worst = s[k - 1] as f64;
                // Smallest position not chosen; none when all of [n] is chosen.
                let best_unchosen = s.iter().enumerate().find(|(j, &p)| p != j + 1).map_or(k + 1, |(j, _)| j + 1);
                let unchosen_exists = best_unchosen <= self.n;
                match variant {
                    Requirement::TopBand => worst <= self.bound((1.0 + eps) * k as f64),
                    Requirement::Multiplicative => {
                        !unchosen_exists || worst <= self.bound((1.0 + eps) * best_unchosen as f64)
                    }
                    Requirement::Additive => !unchosen_exists || worst <= self.bound(best_unchosen as f64 + eps),
                    Requirement::RankSum => {
                        let sum: usize = s.iter().sum();
                        sum as f64 <= self.bound((1.0 + eps) * (k * (k + 1)) as f64 / 2.0)
                    }
                }
            }
            FamilyKind::Explicit => {
                let gens = self.generators.as_deref().unwrap_or(&[]);
                gens.iter().any(|g| s.iter().zip(&g.0).all(|(a, b)| a <= b))
            }
        }
    }

    /// Whether the positions `s` form an allowed set.
    pub fn membership(&self, s: &PositionSet) -> Result<bool> {
        if s.len() != self.k {
            return Err(Error::Dimension(format!("set has size {}, expected {}", s.len(), self.k)));
        }
        if s.0.last().is_some_and(|&p| p > self.n) {
            return Err(Error::OutOfRange(format!("set {:?} exceeds n = {}", s.0, self.n)));
        }
        Ok(self.allows(&s.0))
    }

    /// All allowed sets in lexicographic order.
    pub fn enumerate_allowed(&self) -> Result<Vec<PositionSet>> {
        check_enumerable(self.n, self.k)?;
        let mut out = Vec::new();
        for_each_subset(self.n, self.k, |s| {
            if self.allows(s) {
                out.push(PositionSet::from_sorted(s.to_vec()));
            }
        });
        Ok(out)
    }

    /// Depth-first search for the maximal allowed sets, visiting larger
    /// positions first. A prefix is abandoned as soon as its smallest
    /// completion is disallowed, which by monotonicity rules out every
    /// completion. Gives up (returns `None`) past a node budget.
    fn search_maximal(&self) -> Option<Vec<PositionSet>> {
        let k = self.k;
        let mut found = Vec::new();
        let mut budget = GENERATOR_BUDGET;
        let mut prefix: Vec<usize> = Vec::with_capacity(k);
        let mut scratch = vec![0usize; k];

        fn completion_allowed(f: &SetFamily, prefix: &[usize], scratch: &mut [usize]) -> bool {
            let j = prefix.len();
            scratch[..j].copy_from_slice(prefix);
            let last = prefix.last().copied().unwrap_or(0);
            for (off, slot) in scratch[j..].iter_mut().enumerate() {
                *slot = last + off + 1;
            }
            f.allows(scratch)
        }

        fn is_maximal(f: &SetFamily, s: &[usize], scratch: &mut [usize]) -> bool {
            let (n, k) = (f.n, f.k);
            for j in 0..k {
                let cap = if j + 1 < k { s[j + 1] } else { n + 1 };
                if s[j] + 1 < cap {
                    scratch.copy_from_slice(s);
                    scratch[j] += 1;
                    if f.allows(scratch) {
                        return false;
                    }
                }
            }
            true
        }

        fn walk(
            f: &SetFamily,
            prefix: &mut Vec<usize>,
            scratch: &mut [usize],
            found: &mut Vec<PositionSet>,
            budget: &mut usize,
        ) -> bool {
            let (n, k) = (f.n, f.k);
            if *budget == 0 {
                return false;
            }
            *budget -= 1;
            if prefix.len() == k {
                if is_maximal(f, prefix, scratch) {
                    found.push(PositionSet::from_sorted(prefix.clone()));
                }
                return true;
            }
            let lo = prefix.last().map_or(1, |&p| p + 1);
            let hi = n - (k - prefix.len() - 1);
            // Completions grow with the chosen position, so the feasible
            // choices form a prefix of lo..=hi.
            let mut top = lo;
            while top <= hi && {
                prefix.push(top);
                let ok = completion_allowed(f, prefix, scratch);
                prefix.pop();
                ok
            } {
                top += 1;
            }
            for p in (lo..top).rev() {
                prefix.push(p);
                let ok = walk(f, prefix, scratch, found, budget);
                prefix.pop();
                if !ok {
                    return false;
                }
            }
            true
        }

        if !walk(self, &mut prefix, &mut scratch, &mut found, &mut budget) {
            return None;
        }
        found.sort();
        Some(found)
    }
}

/// Visit every sorted `k`-subset of `[1, n]` in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    let mut s: Vec<usize> = (1..=k).collect();
    loop {
        visit(&s);
        let Some(j) = (0..k).rev().find(|&j| s[j] < n - (k - 1 - j)) else {
            return;
        };
        s[j] += 1;
        for t in (j + 1)..k {
            s[t] = s[t - 1] + 1;
        }
    }
}

/// Whether the explicit `family` (each set of size `k` within `[1, n]`) is
/// closed under moving positions upwards.
pub fn is_monotone(family: &[PositionSet], n: usize, k: usize) -> Result<bool> {
    check_bounds(n, k)?;
    check_enumerable(n, k)?;
    for s in family {
        if s.len() != k || s.0.last().is_some_and(|&p| p > n) {
            return Err(Error::Dimension(format!("set {:?} is not a {k}-subset of [1, {n}]", s.0)));
        }
    }
    let members: BTreeSet<&[usize]> = family.iter().map(|s| s.as_slice()).collect();
    let mut closed = true;
    for t in family {
        for_each_subset(n, k, |s| {
            if closed && s.iter().zip(&t.0).all(|(a, b)| a <= b) && !members.contains(s) {
                closed = false;
            }
        });
        if !closed {
            break;
        }
    }
    Ok(closed)
}

/// `max_b min_j (tau_(j) - tau_(k + t_j - j + 1))` over the given position
/// sets, with terms whose second index exceeds `n` skipped (treated as
/// `+inf`). Redundant (dominated) sets may be included; they never win.
pub fn separation_from_generators(tau: &ScoreVector, k: usize, sets: &[PositionSet]) -> f64 {
    let sorted = tau.sorted_desc();
    let n = sorted.len();
    sets.iter()
        .map(|t| {
            t.as_slice()
                .iter()
                .enumerate()
                .filter_map(|(j0, &tj)| {
                    let idx = k + tj - j0; // one-based: k + t_j - j + 1
                    (idx <= n).then(|| sorted[j0] - sorted[idx - 1])
                })
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// The same max-min value computed from the membership predicate alone.
///
/// For a threshold `theta`, the coordinatewise-smallest position vector
/// whose every gap reaches `theta` is allowed iff some allowed set reaches
/// it (the family is down-closed). Feasibility is monotone in `theta`, so
/// the answer is found by bisection over the finite set of gap values.
pub fn separation_per_position(tau: &ScoreVector, family: &SetFamily) -> f64 {
    let sorted = tau.sorted_desc();
    let (n, k) = (family.n, family.k);
    assert_eq!(sorted.len(), n, "score vector length must match the family");
    let gap = |j: usize, t: usize| -> f64 {
        // One-based j and t.
        let idx = k + t - j + 1;
        if idx > n {
            f64::INFINITY
        } else {
            sorted[j - 1] - sorted[idx - 1]
        }
    };
    let mut candidates: Vec<f64> = Vec::new();
    for j in 1..=k {
        for t in j..=(n - (k - j)) {
            candidates.push(gap(j, t));
        }
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let mut s = vec![0usize; k];
    let mut feasible = |theta: f64| -> bool {
        let mut prev = 0;
        for j in 1..=k {
            let mut t = prev.max(j - 1) + 1;
            let hi = n - (k - j);
            while t <= hi && gap(j, t) < theta {
                t += 1;
            }
            if t > hi {
                return false;
            }
            s[j - 1] = t;
            prev = t;
        }
        family.allows(&s)
    };
    // candidates[0] is the smallest gap, feasible via the top-k positions.
    let (mut lo, mut hi) = (0usize, candidates.len());
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if feasible(candidates[mid]) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    candidates[lo]
}

/// Generalised separation threshold of `tau` for `family`.
pub fn separation_family(tau: &ScoreVector, family: &SetFamily) -> Result<f64> {
    if tau.len() != family.n {
        return Err(Error::Dimension(format!("{} scores for a family over {} items", tau.len(), family.n)));
    }
    Ok(match family.generators() {
        Some(gens) => separation_from_generators(tau, family.k, gens),
        None => separation_per_position(tau, family),
    })
}
