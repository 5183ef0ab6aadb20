//! Known and conjectured bounds, their attainment sites, and verification
//! against exhaustive search.
//!
//! For `n >= 4` the extremal value `M(n)` (max for odd `n`, min for even `n`)
//! is conjectured to equal `m f(n)` when `m` has the right divisors, where
//! `f` satisfies a ninth-order recurrence with quadratic coefficients. `f`
//! is kept as an exact rational throughout.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{eval_closed, Instance};
use crate::search::{extremes, ExtremeRecord, SearchSpace, Site, DEFAULT_SITE_CAP};

pub type Rational = BigRational;

/// Order of the recurrence.
pub const ORDER: usize = 9;

const INITIAL: [(i64, i64); 9] = [
    (0, 1),
    (1, 3),
    (-1, 1),
    (2, 1),
    (-3, 1),
    (8, 1),
    (-18, 1),
    (36, 1),
    (-65, 1),
];

/// Coefficients `c_0..c_9` with `sum_j c_j(n) f(n-j) = 0` for `n >= 11`.
pub fn recurrence_coefficients(n: i64) -> [BigInt; ORDER + 1] {
    let c = [
        5 * (n + 3) * (n - 2),
        10 * (n * n + n - 8),
        -4 * (2 * n * n - 10 * n + 3),
        -24 * (2 * n - 11),
        -32 * (2 * n * n - 10 * n - 1),
        -192 * (n - 1) * (n - 5),
        64 * (2 * n * n - 22 * n + 51),
        384 * (2 * n - 13),
        -256 * (n - 3) * (n - 8),
        512 * (n - 9) * (n - 8),
    ];
    c.map(BigInt::from)
}

/// `f(2), f(3), ..` as exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FSequence {
    values: Vec<Rational>,
}

impl FSequence {
    /// `f(n)`, or `None` outside `2..=n_max`.
    pub fn get(&self, n: usize) -> Option<&Rational> {
        n.checked_sub(2).and_then(|i| self.values.get(i))
    }

    pub fn n_max(&self) -> usize {
        self.values.len() + 1
    }

    /// `(n, f(n))` pairs in increasing `n`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Rational)> {
        self.values.iter().enumerate().map(|(i, v)| (i + 2, v))
    }

    /// `sum_j c_j(n) f(n-j)`; zero whenever `f(n)` came from the recurrence.
    pub fn recurrence_residual(&self, n: usize) -> Option<Rational> {
        if n < 11 || n > self.n_max() {
            return None;
        }
        let c = recurrence_coefficients(n as i64);
        let sum = c
            .iter()
            .enumerate()
            .map(|(j, cj)| self.get(n - j).expect("in range") * Rational::from(cj.clone()))
            .fold(Rational::zero(), |acc, t| acc + t);
        Some(sum)
    }

    /// First `n` in `from..=n_max` where the sign is not positive for odd `n`
    /// and negative for even `n`.
    pub fn sign_pattern_break(&self, from: usize) -> Option<usize> {
        self.iter().filter(|&(n, _)| n >= from).find_map(|(n, v)| {
            let ok = if n % 2 == 1 { v.is_positive() } else { v.is_negative() };
            (!ok).then_some(n)
        })
    }

    /// Indices `n >= from` whose value is not an integer.
    pub fn non_integral(&self, from: usize) -> Vec<usize> {
        self.iter()
            .filter(|&(n, v)| n >= from && !v.is_integer())
            .map(|(n, _)| n)
            .collect()
    }
}

/// Computes `f(2..=n_max)`: the nine initial values, then the recurrence.
pub fn f_sequence(n_max: usize) -> Result<FSequence> {
    if n_max < 2 {
        return Err(Error::UnsupportedArity {
            n: n_max,
            reason: "the sequence starts at n = 2",
        });
    }
    let mut values: Vec<Rational> = INITIAL
        .iter()
        .take(n_max - 1)
        .map(|&(p, q)| Rational::new(p.into(), q.into()))
        .collect();
    for n in 11..=n_max {
        let c = recurrence_coefficients(n as i64);
        let idx = n - 2;
        let rhs = (1..=ORDER)
            .map(|j| &values[idx - j] * Rational::from(c[j].clone()))
            .fold(Rational::zero(), |acc, t| acc + t);
        values.push(-rhs / Rational::from(c[0].clone()));
    }
    Ok(FSequence { values })
}

/// `m f` when it is an integer that fits in `i64`.
pub fn scaled(f: &Rational, m: i64) -> Option<i64> {
    let v = f * Rational::from_integer(m.into());
    if v.is_integer() {
        v.to_integer().to_i64()
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundStatus {
    Proven,
    Conjectured,
}

impl fmt::Display for BoundStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundStatus::Proven => "proven",
            BoundStatus::Conjectured => "conjectured",
        })
    }
}

/// One side of a bound instantiated at a modulus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bound {
    /// `None` when no value is known for this modulus.
    pub value: Option<i64>,
    pub formula: String,
    pub status: BoundStatus,
    pub note: Option<String>,
}

impl Bound {
    fn proven(value: i64, formula: &str) -> Self {
        Self {
            value: Some(value),
            formula: formula.into(),
            status: BoundStatus::Proven,
            note: None,
        }
    }

    fn noted(mut self, note: Option<String>) -> Self {
        self.note = note;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundSpec {
    pub n: usize,
    pub m: i64,
    pub lower: Bound,
    pub upper: Bound,
}

/// Divisors `m` must have for the conjectured extremal sites at arity `n >= 4`.
pub fn required_divisors(n: usize) -> Vec<i64> {
    let (k, two_blocks) = block_index(n);
    if two_blocks {
        vec![2 * k + 1, 2 * k + 3]
    } else {
        vec![2 * k + 1]
    }
}

// n = 4k-1, 4k, 4k+1 -> (k, false); n = 4k+2 -> (k, true)
fn block_index(n: usize) -> (i64, bool) {
    if n % 4 == 2 {
        (((n - 2) / 4) as i64, true)
    } else {
        (((n + 1) / 4) as i64, false)
    }
}

fn conjectured_side(n: usize, m: i64) -> Result<Bound> {
    let f = f_sequence(n.max(2))?;
    let fnv = f.get(n).expect("computed");
    let formula = format!("m*f({n}) = m*({fnv})");
    let missing = required_divisors(n).into_iter().find(|d| m % d != 0);
    let (value, note) = match missing {
        Some(d) => (None, Some(format!("unavailable: needs {d} | m"))),
        None => match scaled(fnv, m) {
            Some(v) => (Some(v), None),
            None => (None, Some("unavailable: m*f(n) is not an integer".into())),
        },
    };
    Ok(Bound {
        value,
        formula,
        status: BoundStatus::Conjectured,
        note,
    })
}

fn op_note(m: i64) -> Option<String> {
    (m % 2 == 1).then(|| "theorem hypothesis: m even".to_string())
}

/// Lower and upper bounds on `S_m` for arity `n` at modulus `m`.
pub fn known_bounds(n: usize, m: i64) -> Result<BoundSpec> {
    if n == 0 {
        return Err(Error::EmptyMultiset);
    }
    if m < 1 {
        return Err(Error::InvalidModulus(m));
    }
    let half = m / 2;
    let third = m / 3;
    let (lower, upper) = match n {
        1 => (Bound::proven(0, "0"), Bound::proven(m - 1, "m-1")),
        2 => (Bound::proven(0, "0"), Bound::proven(half, "floor(m/2)")),
        3 => (
            Bound::proven(-2 * half, "-2*floor(m/2)").noted(op_note(m)),
            Bound::proven(third, "floor(m/3)"),
        ),
        4 => (
            Bound {
                value: Some(-3 * third),
                formula: "-3*floor(m/3)".into(),
                status: BoundStatus::Conjectured,
                note: (m % 3 != 0).then(|| "not sharp: 3 does not divide m".to_string()),
            },
            Bound::proven(4 * half, "4*floor(m/2)").noted(op_note(m)),
        ),
        _ => {
            let pow = 1i64
                .checked_shl((n - 2) as u32)
                .filter(|p| *p > 0)
                .and_then(|p| p.checked_mul(half))
                .ok_or_else(|| Error::TooLarge(format!("2^{} * floor(m/2) overflows", n - 2)))?;
            let op = Bound {
                value: Some(if n % 2 == 0 { pow } else { -pow }),
                formula: format!("{}2^{}*floor(m/2)", if n % 2 == 0 { "" } else { "-" }, n - 2),
                status: BoundStatus::Proven,
                note: op_note(m),
            };
            let conj = conjectured_side(n, m)?;
            if n % 2 == 1 {
                (op, conj)
            } else {
                (conj, op)
            }
        }
    };
    Ok(BoundSpec { n, m, lower, upper })
}

/// A constant multiset `{c m/d, .., c m/d}` with `K = c m/d - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictedSite {
    pub n: usize,
    pub numerator: i64,
    pub divisor: i64,
    /// The repeated entry `numerator * m / divisor`.
    pub value: i64,
    pub k: i64,
}

impl PredictedSite {
    fn new(n: usize, m: i64, numerator: i64, divisor: i64) -> Self {
        let value = numerator * m / divisor;
        Self {
            n,
            numerator,
            divisor,
            value,
            k: value - 1,
        }
    }

    pub fn multiset(&self) -> Vec<i64> {
        vec![self.value; self.n]
    }

    pub fn site(&self) -> Site {
        Site {
            a: self.multiset(),
            k: self.k,
        }
    }

    pub fn instance(&self, m: i64) -> Result<Instance> {
        Instance::bounded(m, self.multiset(), self.k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConjecturePart {
    /// `n = 4k-1, 4k, 4k+1`: extremes occur exactly at the predicted sites.
    One,
    /// `n = 4k+2`: extremes occur at the predicted sites, among others.
    Two,
}

pub fn conjecture_part(n: usize) -> ConjecturePart {
    if block_index(n).1 {
        ConjecturePart::Two
    } else {
        ConjecturePart::One
    }
}

/// Conjectured extremal sites for `n >= 4`, two for part-one arities and four
/// for part-two arities.
pub fn predicted_extremes(n: usize, m: i64) -> Result<Vec<PredictedSite>> {
    if n < 4 {
        return Err(Error::UnsupportedArity {
            n,
            reason: "the extremal conjecture starts at n = 4",
        });
    }
    if m < 1 {
        return Err(Error::InvalidModulus(m));
    }
    for d in required_divisors(n) {
        if m % d != 0 {
            return Err(Error::Divisibility { n, m, divisor: d });
        }
    }
    let (k, two_blocks) = block_index(n);
    let mut sites = vec![
        PredictedSite::new(n, m, k, 2 * k + 1),
        PredictedSite::new(n, m, k + 1, 2 * k + 1),
    ];
    if two_blocks {
        sites.push(PredictedSite::new(n, m, k + 1, 2 * k + 3));
        sites.push(PredictedSite::new(n, m, k + 2, 2 * k + 3));
    }
    Ok(sites)
}

/// The site `A = {m/2, .., m/2}`, `K = m/2 - 1` where the `±2^(n-2) floor(m/2)`
/// bounds are attained.
pub fn op_attainment_site(n: usize, m: i64) -> Result<PredictedSite> {
    if n < 3 {
        return Err(Error::UnsupportedArity {
            n,
            reason: "the attainment theorem needs n >= 3",
        });
    }
    if m < 2 || m % 2 != 0 {
        return Err(Error::OddModulus(m));
    }
    Ok(PredictedSite::new(n, m, 1, 2))
}

/// `2^(n-2) floor(m/2)` for even `n`, its negative for odd `n`.
pub fn op_bound(n: usize, m: i64) -> Option<i64> {
    let p = 1i64.checked_shl(u32::try_from(n.checked_sub(2)?).ok()?)?;
    let v = p.checked_mul(m / 2)?;
    Some(if n % 2 == 0 { v } else { -v })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    HoldsWithEquality,
    Violated,
    Unavailable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::HoldsWithEquality => "holds-with-equality",
            Verdict::Violated => "VIOLATED",
            Verdict::Unavailable => "unavailable",
        })
    }
}

fn verdict(bound: Option<i64>, observed: i64, lower: bool) -> Verdict {
    match bound {
        None => Verdict::Unavailable,
        Some(b) if b == observed => Verdict::HoldsWithEquality,
        Some(b) if (lower && observed > b) || (!lower && observed < b) => Verdict::Holds,
        Some(_) => Verdict::Violated,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub n: usize,
    pub m: i64,
    pub min_value: i64,
    pub max_value: i64,
    pub bounds: BoundSpec,
    pub lower_verdict: Verdict,
    pub upper_verdict: Verdict,
    /// A minimizing site, for reporting a lower-bound violation.
    pub lower_witness: Option<Site>,
    /// A maximizing site, for reporting an upper-bound violation.
    pub upper_witness: Option<Site>,
}

impl BoundsReport {
    /// A proven side was exceeded. This is an implementation bug, not a finding.
    pub fn proven_violation(&self) -> bool {
        (self.lower_verdict == Verdict::Violated && self.bounds.lower.status == BoundStatus::Proven)
            || (self.upper_verdict == Verdict::Violated
                && self.bounds.upper.status == BoundStatus::Proven)
    }

    pub fn any_violation(&self) -> bool {
        self.lower_verdict == Verdict::Violated || self.upper_verdict == Verdict::Violated
    }
}

/// Exhaustive search at `(n, m)` compared against [`known_bounds`].
pub fn verify_bounds(n: usize, m: i64) -> Result<BoundsReport> {
    verify_bounds_with(n, m, extremes)
}

/// [`verify_bounds`] with a caller-supplied search, e.g. one backed by a cache.
pub fn verify_bounds_with<F>(n: usize, m: i64, search: F) -> Result<BoundsReport>
where
    F: FnOnce(&SearchSpace) -> Result<ExtremeRecord>,
{
    let bounds = known_bounds(n, m)?;
    let rec = search(&SearchSpace::new(n, m).with_cap(1))?;
    Ok(BoundsReport {
        n,
        m,
        min_value: rec.min_value,
        max_value: rec.max_value,
        lower_verdict: verdict(bounds.lower.value, rec.min_value, true),
        upper_verdict: verdict(bounds.upper.value, rec.max_value, false),
        lower_witness: rec.min_sites.first().cloned(),
        upper_witness: rec.max_sites.first().cloned(),
        bounds,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteCheck {
    pub site: PredictedSite,
    pub value: i64,
    pub attains: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjectureReport {
    pub n: usize,
    pub m: i64,
    pub part: ConjecturePart,
    /// `f(n)` as `p/q`.
    pub f: String,
    /// `m f(n)`, `None` if not an integer.
    pub predicted: Option<i64>,
    /// `M(n)` from exhaustive search.
    pub observed: i64,
    pub value_matches: bool,
    pub sites: Vec<SiteCheck>,
    /// Number of `(A, K)` cells attaining `M(n)`.
    pub attaining_count: u64,
    /// Attaining cells other than the predicted ones, up to the site cap.
    pub other_sites: Vec<Site>,
    /// Part one only: the attaining set equals the predicted set.
    pub exact_set: Option<bool>,
    pub passed: bool,
}

/// Checks `M(n) = m f(n)`, that every predicted site attains `M(n)`, and for
/// part-one arities that no other cell does.
pub fn verify_conjecture(n: usize, m: i64) -> Result<ConjectureReport> {
    verify_conjecture_with(n, m, extremes)
}

/// [`verify_conjecture`] with a caller-supplied search.
pub fn verify_conjecture_with<F>(n: usize, m: i64, search: F) -> Result<ConjectureReport>
where
    F: FnOnce(&SearchSpace) -> Result<ExtremeRecord>,
{
    let predicted_sites = predicted_extremes(n, m)?;
    let f = f_sequence(n)?;
    let fnv = f.get(n).expect("computed").clone();
    let predicted = scaled(&fnv, m);
    let rec = search(&SearchSpace::new(n, m).with_cap(DEFAULT_SITE_CAP))?;
    let odd = n % 2 == 1;
    let (observed, attaining_count, found) = if odd {
        (rec.max_value, rec.max_count, &rec.max_sites)
    } else {
        (rec.min_value, rec.min_count, &rec.min_sites)
    };

    let mut sites = Vec::with_capacity(predicted_sites.len());
    for site in predicted_sites {
        let value = eval_closed(&site.instance(m)?)?.get();
        sites.push(SiteCheck {
            attains: value == observed,
            value,
            site,
        });
    }
    let mut distinct: Vec<Site> = sites.iter().map(|s| s.site.site()).collect();
    distinct.sort();
    distinct.dedup();
    let other_sites: Vec<Site> = found.iter().filter(|s| !distinct.contains(s)).cloned().collect();

    let value_matches = predicted == Some(observed);
    let all_attain = sites.iter().all(|s| s.attains);
    let part = conjecture_part(n);
    let exact_set = (part == ConjecturePart::One)
        .then(|| all_attain && attaining_count == distinct.len() as u64);
    let passed = value_matches && all_attain && exact_set.unwrap_or(true);
    Ok(ConjectureReport {
        n,
        m,
        part,
        f: fnv.to_string(),
        predicted,
        observed,
        value_matches,
        sites,
        attaining_count,
        other_sites,
        exact_set,
        passed,
    })
}

/// Both sides of the four-element decomposition
/// `S{a1..a4} = S{a1+a2+a3,a4} - S{a1+a2,a4} - S{a1+a3,a4} - S{a2,a3,a4} + S{a1,a4}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub lhs: i64,
    /// The five right-hand sums in the order above, unsigned.
    pub terms: [i64; 5],
    pub rhs: i64,
    pub holds: bool,
    /// `-2 floor(m/2) - floor(m/3)`
    pub lower_bound: i64,
    pub above_lower_bound: bool,
}

pub fn n4_partial_lower_identity(m: i64, a: [i64; 4], k: i64) -> Result<IdentityReport> {
    let lhs = eval_closed(&Instance::bounded(m, a.to_vec(), k)?)?.get();
    let [a1, a2, a3, a4] = a;
    let s = |v: Vec<i64>| -> Result<i64> { Ok(eval_closed(&Instance::new(m, v, k)?)?.get()) };
    let terms = [
        s(vec![a1 + a2 + a3, a4])?,
        s(vec![a1 + a2, a4])?,
        s(vec![a1 + a3, a4])?,
        s(vec![a2, a3, a4])?,
        s(vec![a1, a4])?,
    ];
    let rhs = terms[0] - terms[1] - terms[2] - terms[3] + terms[4];
    let lower_bound = -2 * (m / 2) - m / 3;
    Ok(IdentityReport {
        lhs,
        terms,
        rhs,
        holds: lhs == rhs,
        lower_bound,
        above_lower_bound: lhs >= lower_bound,
    })
}
