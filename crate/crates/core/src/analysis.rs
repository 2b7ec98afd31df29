//! Scores, separation thresholds and the information-theoretic calculators.

use alloc::format;
use alloc::vec::Vec;

use crate::model::ComparisonMatrix;
use crate::{Error, Result};

/// Per-item score: the probability of beating an item drawn uniformly at
/// random from all `n` items (itself included).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(tau: Vec<f64>) -> Result<Self> {
        if let Some(i) = tau.iter().position(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::InvalidParameter(format!("score {i} = {} not in [0, 1]", tau[i])));
        }
        Ok(Self(tau))
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

    /// Item indices by decreasing score, ties broken by smaller index.
    pub fn descending_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.0.len()).collect();
        order.sort_by(|&a, &b| self.0[b].total_cmp(&self.0[a]).then(a.cmp(&b)));
        order
    }

    /// Scores sorted in decreasing order: element `j - 1` is `tau_(j)`.
    pub fn sorted_desc(&self) -> Vec<f64> {
        let mut s = self.0.clone();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// `tau_(k) - tau_(k+1)`.
    pub fn separation_topk(&self, k: usize) -> Result<f64> {
        let n = self.len();
        if k == 0 || k >= n {
            return Err(Error::OutOfRange(format!("k = {k} must satisfy 1 <= k < n = {n}")));
        }
        let s = self.sorted_desc();
        Ok(s[k - 1] - s[k])
    }

    /// `tau_(k-h) - tau_(k+h+1)`.
    pub fn separation_hamming(&self, k: usize, h: usize) -> Result<f64> {
        let n = self.len();
        if h >= k || k + h + 1 > n {
            return Err(Error::OutOfRange(format!("need 0 <= h < k and k + h + 1 <= n (k = {k}, h = {h}, n = {n})")));
        }
        let s = self.sorted_desc();
        Ok(s[k - h - 1] - s[k + h])
    }
}

pub fn scores(m: &ComparisonMatrix) -> ScoreVector {
    let n = m.n() as f64;
    ScoreVector(m.rows().map(|row| row.iter().sum::<f64>() / n).collect())
}

pub fn separation_topk(m: &ComparisonMatrix, k: usize) -> Result<f64> {
    scores(m).separation_topk(k)
}

pub fn separation_hamming(m: &ComparisonMatrix, k: usize, h: usize) -> Result<f64> {
    scores(m).separation_hamming(k, h)
}

fn check_design(n: usize, p: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n = {n} must be at least 2")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} not in (0, 1]")));
    }
    Ok(())
}

/// The separation `alpha * sqrt(log n / (n p r))` demanded at repetition count `r`.
pub fn separation_floor(n: usize, p: f64, r: u64, alpha: f64) -> f64 {
    alpha * libm::sqrt(libm::log(n as f64) / (n as f64 * p * r as f64))
}

/// The constant `alpha` for which `delta` sits exactly at the floor.
pub fn implied_alpha(n: usize, p: f64, r: u64, delta: f64) -> f64 {
    delta / libm::sqrt(libm::log(n as f64) / (n as f64 * p * r as f64))
}

/// Smallest `r >= 1` with `delta >= alpha * sqrt(log n / (n p r))`.
pub fn required_repetitions(n: usize, p: f64, delta: f64, alpha: f64) -> Result<u64> {
    check_design(n, p)?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must be finite and >= 0")));
    }
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::InvalidParameter(format!("separation {delta} must be >= 0")));
    }
    if delta == 0.0 {
        return Err(Error::ZeroSeparation);
    }
    let raw = alpha * alpha * libm::log(n as f64) / (n as f64 * p * delta * delta);
    if raw.is_nan() || raw >= 1e18 {
        return Err(Error::InvalidParameter(format!("separation {delta} needs more than 1e18 repetitions")));
    }
    let ok = |r: u64| delta >= separation_floor(n, p, r, alpha);
    let mut r = (libm::ceil(raw) as u64).max(1);
    // The closed form can be off by one after rounding; settle it exactly.
    while !ok(r) {
        r += 1;
    }
    while r > 1 && ok(r - 1) {
        r -= 1;
    }
    Ok(r)
}

/// Separation summary for one matrix and design.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationReport {
    pub n: usize,
    pub k: usize,
    pub h: usize,
    pub delta: f64,
    /// `alpha` implied by `(n, p, r)`; absent when `r` is not fixed.
    pub alpha_implied: Option<f64>,
    /// Repetitions required for the target `alpha`; absent when `delta == 0`.
    pub r_required: Option<u64>,
}

impl SeparationReport {
    /// Report `Delta_{k,h}` (so `Delta_k` when `h == 0`) for `m`.
    pub fn compute(
        m: &ComparisonMatrix,
        k: usize,
        h: usize,
        p: f64,
        r: Option<u64>,
        target_alpha: f64,
    ) -> Result<Self> {
        check_design(m.n(), p)?;
        let delta = separation_hamming(m, k, h)?;
        let r_required = match required_repetitions(m.n(), p, delta, target_alpha) {
            Ok(r) => Some(r),
            Err(Error::ZeroSeparation) => None,
            Err(e) => return Err(e),
        };
        Ok(Self { n: m.n(), k, h, delta, alpha_implied: r.map(|r| implied_alpha(m.n(), p, r, delta)), r_required })
    }
}

/// `a ln(a/b)`, with `0 ln 0 = 0` and `+inf` when `b = 0 < a`.
fn xlogx_ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        a * libm::log(a / b)
    }
}

/// KL divergence between two Bernoulli laws.
pub fn bernoulli_kl(a: f64, b: f64) -> f64 {
    xlogx_ratio(a, b) + xlogx_ratio(1.0 - a, 1.0 - b)
}

/// Exact KL divergence between the observation laws induced by `ma` and
/// `mb` under the random design `(p, r)`.
///
/// Each pair contributes `r` copies of the three-outcome law
/// `{none: 1-p, i wins: p M_ij, j wins: p (1-M_ij)}`; the "none" outcome
/// has the same mass under both models and cancels. Returns `+inf` when
/// `mb` gives zero probability to an outcome `ma` can produce.
pub fn kl_divergence(ma: &ComparisonMatrix, mb: &ComparisonMatrix, p: f64, r: u64) -> Result<f64> {
    if ma.n() != mb.n() {
        return Err(Error::Dimension(format!("n = {} vs n = {}", ma.n(), mb.n())));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} not in [0, 1]")));
    }
    if p == 0.0 || r == 0 {
        return Ok(0.0);
    }
    let n = ma.n();
    let mut per_trial = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            per_trial += bernoulli_kl(ma.get(i, j), mb.get(i, j));
        }
    }
    Ok(r as f64 * p * per_trial)
}

/// Weakened Fano bound on the error of any test among `hypotheses`
/// distributions whose pairwise KL divergences are at most `max_kl`:
/// `max(0, 1 - (max_kl + ln 2) / ln L)`.
pub fn fano_lower_bound(hypotheses: u64, max_kl: f64) -> Result<f64> {
    if hypotheses < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 hypotheses, got {hypotheses}")));
    }
    fano_lower_bound_ln(libm::log(hypotheses as f64), max_kl)
}

/// [`fano_lower_bound`] parameterised by `ln L`, for ensembles whose size is
/// only known through its logarithm.
pub fn fano_lower_bound_ln(ln_hypotheses: f64, max_kl: f64) -> Result<f64> {
    if ln_hypotheses.is_nan() || ln_hypotheses < core::f64::consts::LN_2 {
        return Err(Error::InvalidParameter(format!("ln L = {ln_hypotheses} below ln 2")));
    }
    if max_kl.is_nan() || max_kl < 0.0 {
        return Err(Error::InvalidParameter(format!("KL bound {max_kl} must be >= 0")));
    }
    let bound = 1.0 - (max_kl + core::f64::consts::LN_2) / ln_hypotheses;
    Ok(bound.max(0.0))
}

/// Upper bound on the KL divergence between two planted models whose top
/// sets differ in one item: `2 n p r / (1/(4 delta^2) - 1)`.
pub fn planted_kl_bound(n: usize, p: f64, r: u64, delta: f64) -> f64 {
    2.0 * n as f64 * p * r as f64 / (1.0 / (4.0 * delta * delta) - 1.0)
}

/// Upper bound on the KL divergence between two adjacent-swap models:
/// `50 n p r delta0^2`.
pub fn adjacent_swap_kl_bound(n: usize, p: f64, r: u64, delta0: f64) -> f64 {
    50.0 * n as f64 * p * r as f64 * delta0 * delta0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gen_adjacent_swap, gen_hamming_planted, gen_planted, gen_planted_set};
    use alloc::vec;

    #[test]
    fn uniform_matrix_scores() {
        let m = gen_planted(6, 2, 0.0).unwrap();
        let tau = scores(&m);
        assert!(tau.as_slice().iter().all(|&t| t == 0.5));
        assert_eq!(separation_topk(&m, 3).unwrap(), 0.0);
        assert_eq!(separation_hamming(&m, 3, 1).unwrap(), 0.0);
    }

    #[test]
    fn planted_scores_and_separation() {
        let (n, k, d) = (10usize, 3usize, 0.15);
        let m = gen_planted(n, k, d).unwrap();
        let tau = scores(&m);
        // Row averages of the planted table.
        let top = 0.5 + d * (n - k) as f64 / n as f64;
        let bottom = 0.5 - d * k as f64 / n as f64;
        for (i, &t) in tau.as_slice().iter().enumerate() {
            let want = if i < k { top } else { bottom };
            assert!((t - want).abs() < 1e-15);
        }
        assert!((separation_topk(&m, k).unwrap() - d).abs() < 1e-12);
        assert!((tau.as_slice().iter().sum::<f64>() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn adjacent_swap_gaps() {
        let n = 9;
        let d = 0.01;
        for a in 0..n - 1 {
            let m = gen_adjacent_swap(n, d, a).unwrap();
            let s = scores(&m).sorted_desc();
            for j in 0..n - 1 {
                assert!((s[j] - s[j + 1] - d).abs() < 1e-12);
            }
            for k in 1..n {
                assert!((separation_topk(&m, k).unwrap() - d).abs() < 1e-12);
            }
            // tau_i = 1/2 - (pos(i) - (n+1)/2) d with one-based positions.
            let tau = scores(&m);
            for i in 0..n {
                let pos = if i == a {
                    a + 2
                } else if i == a + 1 {
                    a + 1
                } else {
                    i + 1
                };
                let want = 0.5 - (pos as f64 - (n as f64 + 1.0) / 2.0) * d;
                assert!((tau.as_slice()[i] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hamming_separation() {
        let order = [3, 0, 5, 1, 2, 4, 7, 6];
        let m = gen_hamming_planted(8, 3, 0.2, &order).unwrap();
        for h in 0..3 {
            if 3 + h < 8 {
                assert!((separation_hamming(&m, 3, h).unwrap() - 0.2).abs() < 1e-12);
            }
        }
        assert_eq!(separation_hamming(&m, 3, 0).unwrap(), separation_topk(&m, 3).unwrap());
        assert!(separation_hamming(&m, 3, 3).is_err());
        assert!(separation_hamming(&m, 6, 2).is_err());
        assert!(separation_topk(&m, 0).is_err());
        assert!(separation_topk(&m, 8).is_err());
    }

    #[test]
    fn ties_break_by_index() {
        let tau = ScoreVector::new(vec![0.4, 0.6, 0.4, 0.6]).unwrap();
        assert_eq!(tau.descending_order(), vec![1, 3, 0, 2]);
    }

    #[test]
    fn repetitions_reference() {
        assert_eq!(required_repetitions(100, 1.0, 0.1, 8.0).unwrap(), 295);
        let r8 = required_repetitions(100, 1.0, 0.05, 8.0).unwrap();
        let r4 = required_repetitions(100, 1.0, 0.05, 4.0).unwrap();
        assert!(r4 * 4 >= r8 && r4 * 4 <= r8 + 4);
        let r_double = required_repetitions(100, 1.0, 0.2, 8.0).unwrap();
        assert!(r_double * 4 >= 295 && r_double * 4 <= 295 + 4);
        assert_eq!(required_repetitions(100, 1.0, 0.0, 8.0), Err(Error::ZeroSeparation));
        assert!(required_repetitions(100, 0.0, 0.1, 8.0).is_err());
        assert!(required_repetitions(1, 1.0, 0.1, 8.0).is_err());
    }

    #[test]
    fn kl_identities() {
        let a = gen_planted_set(7, &[0, 1, 2], 0.2).unwrap();
        let b = gen_planted_set(7, &[0, 1, 5], 0.2).unwrap();
        assert_eq!(kl_divergence(&a, &a, 0.7, 9).unwrap(), 0.0);
        let one = kl_divergence(&a, &b, 0.7, 3).unwrap();
        let two = kl_divergence(&a, &b, 0.7, 6).unwrap();
        assert!(one > 0.0);
        assert!((two - 2.0 * one).abs() < 1e-12 * two);
        assert!(one <= planted_kl_bound(7, 0.7, 3, 0.2));
        let c = gen_planted(4, 1, 0.1).unwrap();
        assert!(kl_divergence(&a, &c, 1.0, 1).is_err());
    }

    #[test]
    fn kl_infinite_when_support_differs() {
        let a = ComparisonMatrix::new(&[vec![0.5, 0.9], vec![0.1, 0.5]]).unwrap();
        let b = ComparisonMatrix::new(&[vec![0.5, 1.0], vec![0.0, 0.5]]).unwrap();
        assert_eq!(kl_divergence(&a, &b, 0.5, 1).unwrap(), f64::INFINITY);
        // Zero-mass outcomes of the first law contribute nothing.
        assert!(kl_divergence(&b, &a, 0.5, 1).unwrap().is_finite());
    }

    #[test]
    fn fano_values() {
        assert_eq!(fano_lower_bound(2, 0.0).unwrap(), 0.0);
        // L = 2 e^2: 1 - ln 2 / (2 + ln 2).
        let ln_l = 2.0 + core::f64::consts::LN_2;
        let got = fano_lower_bound_ln(ln_l, 0.0).unwrap();
        assert!((got - 0.742_625_584_831).abs() < 1e-12);
        let l = libm::exp(ln_l);
        let got_lo = fano_lower_bound(libm::floor(l) as u64, 0.0).unwrap();
        let got_hi = fano_lower_bound(libm::ceil(l) as u64, 0.0).unwrap();
        assert!(got_lo <= got && got <= got_hi);
        assert_eq!(fano_lower_bound(10, 100.0).unwrap(), 0.0);
        assert!(fano_lower_bound(1, 0.0).is_err());
    }
}
