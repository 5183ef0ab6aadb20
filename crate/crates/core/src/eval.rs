//! Exact evaluation of the floor-function sum
//!
//! ```text
//! S_m(A, K) = sum_{k=0..K} sum_{T ⊆ A} (-1)^{n-|T|} floor((k + s_T) / m)
//! ```
//!
//! where `s_T` is the sum of the elements of `A` indexed by `T`.
//!
//! Two evaluators are provided. [`eval_direct`] expands the double sum and is
//! the reference every other routine is checked against. [`eval_closed`]
//! collapses the inner sum over `k` with the one-element closed form
//! `floor(s/m)(K+1) + max(0, s mod m + K - m + 1)` applied to every subset sum,
//! which costs `O(2^n)` independent of `K`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported multiset size. Subset enumeration is `2^n`.
pub const MAX_ARITY: usize = 30;

/// A problem triple `(m, A, K)` with `A` stored sorted descending.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Instance {
    m: i64,
    a: Vec<i64>,
    k: i64,
}

impl Instance {
    /// Builds an instance, sorting `a` descending.
    ///
    /// Rejects `m < 1`, an empty multiset, negative entries, negative `K`, and
    /// any instance whose largest intermediate value `sum(a) + K` would not fit
    /// in 64 bits.
    pub fn new(m: i64, mut a: Vec<i64>, k: i64) -> Result<Self> {
        validate_parts(m, &a, k)?;
        a.sort_unstable_by(|x, y| y.cmp(x));
        Ok(Self { m, a, k })
    }

    /// Like [`Instance::new`] but additionally requires every `a_i` and `K` in `[0, m-1]`.
    pub fn bounded(m: i64, a: Vec<i64>, k: i64) -> Result<Self> {
        let inst = Self::new(m, a, k)?;
        if let Some(&v) = inst.a.iter().find(|&&v| v >= m) {
            return Err(Error::ElementOutOfRange { value: v, hi: m - 1 });
        }
        if k >= m {
            return Err(Error::KOutOfRange { k, lo: 0, hi: m - 1 });
        }
        Ok(inst)
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    /// The multiset, sorted descending.
    pub fn a(&self) -> &[i64] {
        &self.a
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    /// True when every `a_i` and `K` lie in `[0, m-1]`.
    pub fn is_bounded(&self) -> bool {
        self.k < self.m && self.a.iter().all(|&v| v < self.m)
    }

    /// Same multiset and modulus with a different prefix bound.
    pub fn with_k(&self, k: i64) -> Result<Self> {
        Self::new(self.m, self.a.clone(), k)
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S_{}({{{}}}, {})", self.m, join(&self.a), self.k)
    }
}

pub(crate) fn join(a: &[i64]) -> String {
    a.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn validate_parts(m: i64, a: &[i64], k: i64) -> Result<()> {
    if m < 1 {
        return Err(Error::InvalidModulus(m));
    }
    if a.is_empty() {
        return Err(Error::EmptyMultiset);
    }
    if a.len() > MAX_ARITY {
        return Err(Error::TooLarge(format!(
            "n = {} exceeds the maximum arity {MAX_ARITY}",
            a.len()
        )));
    }
    if let Some(&v) = a.iter().find(|&&v| v < 0) {
        return Err(Error::NegativeElement(v));
    }
    if k < 0 {
        return Err(Error::NegativeK(k));
    }
    a.iter()
        .try_fold(k, |acc, &v| acc.checked_add(v))
        .ok_or_else(|| Error::TooLarge("sum of elements plus K overflows i64".into()))?;
    Ok(())
}

/// Value of a floor-function sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SumValue(pub i64);

impl SumValue {
    pub fn get(self) -> i64 {
        self.0
    }

    /// `|S| <= 2^(n-2) m`, which every bounded instance with `n >= 2` satisfies.
    ///
    /// Returns `None` for `n < 2` or when the bound itself overflows.
    pub fn magnitude_bound(n: usize, m: i64) -> Option<i64> {
        if n < 2 {
            return None;
        }
        1i64.checked_shl(u32::try_from(n - 2).ok()?)
            .filter(|&p| p > 0)?
            .checked_mul(m)
    }

    pub fn within_magnitude_bound(self, n: usize, m: i64) -> bool {
        Self::magnitude_bound(n, m).map_or(true, |b| self.0.abs() <= b)
    }
}

impl From<SumValue> for i64 {
    fn from(v: SumValue) -> i64 {
        v.0
    }
}

impl PartialEq<i64> for SumValue {
    fn eq(&self, other: &i64) -> bool {
        self.0 == *other
    }
}

impl fmt::Display for SumValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One signed term of the inclusion-exclusion expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubsetTerm {
    /// Bit `i` set iff index `i` belongs to the subset.
    pub mask: u64,
    pub subset_sum: i64,
    /// `(-1)^(n - |T|)`
    pub sign: i64,
}

/// Iterates all `2^n` subsets of `a` in Gray-code order, updating the subset
/// sum by one addition or subtraction per step.
#[derive(Debug, Clone)]
pub struct SubsetTerms<'a> {
    a: &'a [i64],
    index: u64,
    mask: u64,
    sum: i64,
}

impl Iterator for SubsetTerms<'_> {
    type Item = SubsetTerm;

    fn next(&mut self) -> Option<SubsetTerm> {
        let n = self.a.len();
        if self.index >> n != 0 {
            return None;
        }
        if self.index > 0 {
            let bit = self.index.trailing_zeros() as usize;
            self.mask ^= 1 << bit;
            if self.mask & (1 << bit) != 0 {
                self.sum += self.a[bit];
            } else {
                self.sum -= self.a[bit];
            }
        }
        self.index += 1;
        let parity = (n as u32 - self.mask.count_ones()) & 1;
        Some(SubsetTerm {
            mask: self.mask,
            subset_sum: self.sum,
            sign: if parity == 0 { 1 } else { -1 },
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = ((1u64 << self.a.len()) - self.index) as usize;
        (left, Some(left))
    }
}

/// Subsets of `a` with their sums and signs.
///
/// Callers must ensure `sum(a)` fits in `i64` and `a.len() <= MAX_ARITY`;
/// [`Instance`] guarantees both.
pub fn subset_terms(a: &[i64]) -> SubsetTerms<'_> {
    debug_assert!(a.len() <= MAX_ARITY);
    SubsetTerms {
        a,
        index: 0,
        mask: 0,
        sum: 0,
    }
}

/// The alternating subset sum `sum_T (-1)^(n-|T|) floor((k + s_T)/m)` at a single `k`.
pub fn inner_term(m: i64, a: &[i64], k: i64) -> Result<i64> {
    validate_parts(m, a, k)?;
    subset_terms(a).try_fold(0i64, |acc, t| {
        let q = (k + t.subset_sum) / m;
        acc.checked_add(t.sign * q).ok_or(Error::Overflow)
    })
}

/// Reference evaluation by the definitional double sum. Cost `O(K 2^n n)`.
pub fn eval_direct(inst: &Instance) -> Result<SumValue> {
    (0..=inst.k)
        .try_fold(0i64, |acc, k| {
            let term = inner_term(inst.m, &inst.a, k)?;
            acc.checked_add(term).ok_or(Error::Overflow)
        })
        .map(SumValue)
}

/// Closed form of the one-element sum, valid for `0 <= K <= m-1` and any `a1 >= 0`.
pub fn eval_onevar_closed(m: i64, a1: i64, k: i64) -> Result<SumValue> {
    validate_parts(m, &[a1], k)?;
    check_k_range(m, k)?;
    onevar(m, a1, k).map(SumValue)
}

fn check_k_range(m: i64, k: i64) -> Result<()> {
    if !(0..m).contains(&k) {
        return Err(Error::KOutOfRange { k, lo: 0, hi: m - 1 });
    }
    Ok(())
}

#[inline]
fn onevar(m: i64, s: i64, k: i64) -> Result<i64> {
    let tail = (s % m + k - m + 1).max(0);
    (s / m)
        .checked_mul(k + 1)
        .and_then(|v| v.checked_add(tail))
        .ok_or(Error::Overflow)
}

/// Inclusion-exclusion evaluation over subset sums. Requires `0 <= K <= m-1`.
pub fn eval_closed(inst: &Instance) -> Result<SumValue> {
    check_k_range(inst.m, inst.k)?;
    subset_terms(&inst.a)
        .try_fold(0i64, |acc, t| {
            let v = onevar(inst.m, t.subset_sum, inst.k)?;
            acc.checked_add(t.sign * v).ok_or(Error::Overflow)
        })
        .map(SumValue)
}

/// Replaces every `a_i` by `a_i mod m`. The sum is `m`-periodic in each
/// `a_i` only for `n >= 2`.
pub fn reduce_instance(inst: &Instance) -> Result<Instance> {
    if inst.n() < 2 {
        return Err(Error::NotPeriodic);
    }
    let a = inst.a.iter().map(|v| v % inst.m).collect();
    Instance::new(inst.m, a, inst.k)
}

/// Precomputed closed form for one multiset, answering `S_m(A, K)` for any
/// `K` in `[0, m-1]` in `O(K)` after an `O(2^n)` pass.
///
/// Groups the subsets by `s_T mod m`:
/// `S = (K+1) sum_T sign floor(s_T/m) + sum_r w_r max(0, r + K - m + 1)`
/// with `w_r` the signed count of subsets whose sum is `r` modulo `m`.
#[derive(Debug, Clone)]
pub struct ClosedProfile {
    m: i64,
    floor_weight: i64,
    residue_weight: Vec<i64>,
}

impl ClosedProfile {
    pub fn new(m: i64, a: &[i64]) -> Result<Self> {
        validate_parts(m, a, 0)?;
        let width = usize::try_from(m)
            .map_err(|_| Error::TooLarge(format!("modulus {m} too large for a residue table")))?;
        let mut residue_weight = vec![0i64; width];
        let mut floor_weight = 0i64;
        for t in subset_terms(a) {
            floor_weight = floor_weight
                .checked_add(t.sign * (t.subset_sum / m))
                .ok_or(Error::Overflow)?;
            residue_weight[(t.subset_sum % m) as usize] += t.sign;
        }
        Ok(Self {
            m,
            floor_weight,
            residue_weight,
        })
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn value(&self, k: i64) -> Result<SumValue> {
        check_k_range(self.m, k)?;
        let mut total = self.floor_weight.checked_mul(k + 1).ok_or(Error::Overflow)?;
        // only residues r >= m-1-K+1 have a positive tail
        let first = (self.m - k) as usize;
        for (r, &w) in self.residue_weight.iter().enumerate().skip(first) {
            if w != 0 {
                let tail = r as i64 + k - self.m + 1;
                total = total.checked_add(w * tail).ok_or(Error::Overflow)?;
            }
        }
        Ok(SumValue(total))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(m: i64, a: &[i64], k: i64) -> Instance {
        Instance::new(m, a.to_vec(), k).unwrap()
    }

    // Written straight from the definition; shares no code with the evaluators.
    fn naive(m: i64, a: &[i64], big_k: i64) -> i64 {
        let n = a.len();
        let mut total = 0;
        for k in 0..=big_k {
            for mask in 0u32..(1 << n) {
                let s: i64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| a[i]).sum();
                let size = mask.count_ones() as usize;
                let sign = if (n - size) % 2 == 0 { 1 } else { -1 };
                total += sign * (k + s).div_euclid(m);
            }
        }
        total
    }

    #[test]
    fn inner_term_examples() {
        assert_eq!(inner_term(5, &[3], 2).unwrap(), 1);
        for k in 0..20 {
            assert_eq!(inner_term(7, &[0, 0], k).unwrap(), 0);
        }
        assert_eq!(inner_term(2, &[1, 1, 1, 1], 0).unwrap(), 4);
    }

    #[test]
    fn inner_term_two_elements_is_jacobsthal() {
        for m in 1..9 {
            for a1 in 0..m {
                for a2 in 0..m {
                    for k in 0..2 * m {
                        let jac = (a1 + a2 + k) / m - (a1 + k) / m - (a2 + k) / m + k / m;
                        assert_eq!(inner_term(m, &[a1, a2], k).unwrap(), jac);
                    }
                }
            }
        }
    }

    #[test]
    fn eval_direct_examples() {
        assert_eq!(eval_direct(&inst(5, &[3], 4)).unwrap(), 3);
        assert_eq!(eval_direct(&inst(1, &[4, 2], 9)).unwrap(), 0);
        assert_eq!(eval_direct(&inst(1, &[3, 3, 1], 5)).unwrap(), 0);
        assert_eq!(eval_direct(&inst(4, &[2, 2, 2], 1)).unwrap(), -4);
        // n = 1 with m = 1 is (K+1) a_1, not zero
        assert_eq!(eval_direct(&inst(1, &[3], 4)).unwrap(), 15);
    }

    #[test]
    fn eval_direct_matches_naive() {
        for m in 1..7 {
            for a1 in 0..m + 3 {
                for a2 in 0..m {
                    for k in 0..m {
                        let a = [a1, a2, (a1 + a2) % (m + 1)];
                        assert_eq!(eval_direct(&inst(m, &a, k)).unwrap(), naive(m, &a, k));
                    }
                }
            }
        }
    }

    #[test]
    fn onevar_closed_examples() {
        assert_eq!(eval_onevar_closed(5, 7, 2).unwrap(), 3);
        assert_eq!(eval_onevar_closed(5, 4, 4).unwrap(), 4);
        for m in 1..8 {
            for k in 0..m {
                assert_eq!(eval_onevar_closed(m, 0, k).unwrap(), 0);
            }
        }
    }

    #[test]
    fn onevar_closed_rejects_large_k() {
        assert_eq!(
            eval_onevar_closed(5, 2, 5),
            Err(Error::KOutOfRange { k: 5, lo: 0, hi: 4 })
        );
    }

    #[test]
    fn onevar_closed_matches_direct_beyond_one_period() {
        for m in 1..10 {
            for a1 in 0..4 * m {
                for k in 0..m {
                    assert_eq!(
                        eval_onevar_closed(m, a1, k).unwrap(),
                        eval_direct(&inst(m, &[a1], k)).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn eval_closed_examples() {
        assert_eq!(eval_closed(&inst(4, &[2, 2], 1)).unwrap(), 2);
        assert_eq!(eval_closed(&inst(6, &[5, 2, 2], 2)).unwrap(), -2);
        assert_eq!(eval_direct(&inst(6, &[5, 2, 2], 2)).unwrap(), -2);
        assert_eq!(eval_closed(&inst(5, &[0, 0, 0], 3)).unwrap(), 0);
    }

    #[test]
    fn eval_closed_rejects_k_at_or_above_m() {
        assert!(matches!(
            eval_closed(&inst(4, &[1, 2], 4)),
            Err(Error::KOutOfRange { .. })
        ));
    }

    #[test]
    fn reduce_examples() {
        let r = reduce_instance(&inst(5, &[7, 3], 2)).unwrap();
        assert_eq!(r.a(), &[3, 2]);
        assert_eq!(
            eval_direct(&r).unwrap(),
            eval_direct(&inst(5, &[7, 3], 2)).unwrap()
        );
        let same = inst(5, &[2, 3], 2);
        assert_eq!(reduce_instance(&same).unwrap(), same);
        let z = reduce_instance(&inst(3, &[6, 6, 6], 1)).unwrap();
        assert_eq!(z.a(), &[0, 0, 0]);
        assert_eq!(eval_direct(&z).unwrap(), 0);
        assert_eq!(reduce_instance(&inst(5, &[7], 2)), Err(Error::NotPeriodic));
    }

    #[test]
    fn instance_validation() {
        assert_eq!(Instance::new(0, vec![1], 0), Err(Error::InvalidModulus(0)));
        assert_eq!(Instance::new(3, vec![], 0), Err(Error::EmptyMultiset));
        assert_eq!(Instance::new(3, vec![1, -1], 0), Err(Error::NegativeElement(-1)));
        assert_eq!(Instance::new(3, vec![1], -2), Err(Error::NegativeK(-2)));
        assert!(matches!(
            Instance::new(3, vec![i64::MAX, 1], 0),
            Err(Error::TooLarge(_))
        ));
        assert!(matches!(
            Instance::new(3, vec![0; MAX_ARITY + 1], 0),
            Err(Error::TooLarge(_))
        ));
        assert!(matches!(
            Instance::bounded(3, vec![3, 1], 0),
            Err(Error::ElementOutOfRange { value: 3, hi: 2 })
        ));
        assert!(matches!(
            Instance::bounded(3, vec![2, 1], 3),
            Err(Error::KOutOfRange { .. })
        ));
        let i = inst(9, &[1, 5, 3], 2);
        assert_eq!(i.a(), &[5, 3, 1]);
        assert!(i.is_bounded());
    }

    #[test]
    fn subset_terms_cover_every_mask_once() {
        let a = [5, 3, 2, 2];
        let mut seen: Vec<_> = subset_terms(&a).collect();
        assert_eq!(seen.len(), 16);
        seen.sort_by_key(|t| t.mask);
        for (mask, t) in seen.iter().enumerate() {
            assert_eq!(t.mask, mask as u64);
            let s: i64 = (0..4).filter(|i| mask >> i & 1 == 1).map(|i| a[i]).sum();
            assert_eq!(t.subset_sum, s);
            let expect = if (4 - mask.count_ones()) % 2 == 0 { 1 } else { -1 };
            assert_eq!(t.sign, expect);
            assert!(t.subset_sum <= a.iter().sum());
        }
    }

    #[test]
    fn closed_profile_matches_closed() {
        for m in 1..10 {
            for a1 in 0..m {
                for a2 in 0..=a1 {
                    let a = [a1 + m, a2, (a1 * a2) % m];
                    let p = ClosedProfile::new(m, &a).unwrap();
                    for k in 0..m {
                        assert_eq!(p.value(k).unwrap(), eval_closed(&inst(m, &a, k)).unwrap());
                    }
                    assert!(p.value(m).is_err());
                }
            }
        }
    }

    #[test]
    fn magnitude_bound() {
        assert_eq!(SumValue::magnitude_bound(1, 5), None);
        assert_eq!(SumValue::magnitude_bound(2, 5), Some(5));
        assert_eq!(SumValue::magnitude_bound(5, 4), Some(32));
        assert_eq!(SumValue::magnitude_bound(70, 4), None);
        assert!(SumValue(-32).within_magnitude_bound(5, 4));
        assert!(!SumValue(33).within_magnitude_bound(5, 4));
    }
}
