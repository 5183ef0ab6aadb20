//! Exhaustive max/min search of `S_m(A, K)` over bounded instances.
//!
//! The sum is symmetric in the `a_i`, so only nonincreasing tuples are
//! visited: `C(m+n-1, n)` multisets instead of `m^n` tuples. Each multiset is
//! turned into a [`ClosedProfile`] once and then queried for every `K`.
//!
//! Work is split into contiguous rank ranges of the multiset enumeration and
//! the per-range partial records are merged by value and then by site order,
//! so the result does not depend on the number of workers.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{eval_direct, ClosedProfile, Instance, MAX_ARITY};

/// Default number of attaining sites kept per extreme.
pub const DEFAULT_SITE_CAP: usize = 1000;

const CHUNK: u64 = 128;

/// `C(n, k)`, or `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return None;
        }
    }
    Some(acc as u64)
}

/// Number of multisets of size `n` drawn from `{0, .., m-1}`.
pub fn multiset_count(n: usize, m: i64) -> Option<u64> {
    if n == 0 || m < 1 {
        return Some(0);
    }
    binomial(m as u64 + n as u64 - 1, n as u64)
}

/// Nonincreasing `n`-tuples over `{0, .., m-1}` in descending lexicographic
/// order, from `(m-1, .., m-1)` down to `(0, .., 0)`.
#[derive(Debug, Clone)]
pub struct Multisets {
    current: Vec<i64>,
    remaining: u64,
}

impl Multisets {
    pub fn new(n: usize, m: i64) -> Result<Self> {
        Self::starting_at(n, m, 0)
    }

    /// Enumeration positioned at `rank` (0-based).
    pub fn starting_at(n: usize, m: i64, rank: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyMultiset);
        }
        if m < 1 {
            return Err(Error::InvalidModulus(m));
        }
        let total = multiset_count(n, m)
            .ok_or_else(|| Error::TooLarge(format!("C({m}+{n}-1, {n}) overflows u64")))?;
        if rank >= total {
            return Ok(Self {
                current: Vec::new(),
                remaining: 0,
            });
        }
        Ok(Self {
            current: unrank(n, m, rank),
            remaining: total - rank,
        })
    }

    pub fn len(&self) -> u64 {
        self.remaining
    }

    pub fn is_empty(&self) -> bool {
        self.remaining == 0
    }
}

// Tuples of length L with entries <= v number C(v+L, L), so the block of tuples
// whose first entry is exactly v has C(v+L-1, L-1) members.
fn unrank(n: usize, m: i64, mut rank: u64) -> Vec<i64> {
    let mut out = Vec::with_capacity(n);
    let mut hi = m - 1;
    for pos in 0..n {
        let rest = (n - pos - 1) as u64;
        let mut v = hi;
        loop {
            let block = binomial(v as u64 + rest, rest).expect("bounded by the total count");
            if rank < block {
                break;
            }
            rank -= block;
            v -= 1;
        }
        out.push(v);
        hi = v;
    }
    out
}

impl Iterator for Multisets {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let out = self.current.clone();
        if self.remaining > 0 {
            let i = self
                .current
                .iter()
                .rposition(|&v| v > 0)
                .expect("a successor exists");
            let v = self.current[i] - 1;
            self.current[i..].iter_mut().for_each(|x| *x = v);
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (r, usize::try_from(self.remaining).ok())
    }
}

/// All sorted multisets of size `n` over `{0, .., m-1}`.
pub fn enumerate_multisets(n: usize, m: i64) -> Result<Multisets> {
    Multisets::new(n, m)
}

/// One attaining `(A, K)` pair, `A` sorted descending.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Site {
    #[serde(with = "multiset_str")]
    pub a: Vec<i64>,
    pub k: i64,
}

impl Site {
    pub fn instance(&self, m: i64) -> Result<Instance> {
        Instance::new(m, self.a.clone(), self.k)
    }
}

/// Multisets serialize as a comma-separated string, sorted descending.
pub mod multiset_str {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(a: &[i64], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&crate::eval::join(a))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<i64>, D::Error> {
        let raw = String::deserialize(d)?;
        raw.split(',')
            .map(|t| t.trim().parse::<i64>().map_err(D::Error::custom))
            .collect()
    }
}

// Enumeration order: multisets in descending lexicographic order, then K ascending.
impl Ord for Site {
    fn cmp(&self, other: &Self) -> Ordering {
        other.a.cmp(&self.a).then(self.k.cmp(&other.k))
    }
}

impl PartialOrd for Site {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pruning {
    /// Every K in the requested range.
    None,
    /// Half the K range plus `K = m-1`, completed through the mirror map.
    /// Only valid for `n = 2, 3`.
    Mirror,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub n: usize,
    pub m: i64,
    pub k_min: i64,
    pub k_max: i64,
    pub cap: usize,
    pub pruning: Pruning,
}

impl SearchSpace {
    /// Full K range `[0, m-1]`, default site cap, no pruning.
    pub fn new(n: usize, m: i64) -> Self {
        Self {
            n,
            m,
            k_min: 0,
            k_max: m - 1,
            cap: DEFAULT_SITE_CAP,
            pruning: Pruning::None,
        }
    }

    pub fn with_k_range(mut self, k_min: i64, k_max: i64) -> Self {
        self.k_min = k_min;
        self.k_max = k_max;
        self
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn with_pruning(mut self, pruning: Pruning) -> Self {
        self.pruning = pruning;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::EmptyMultiset);
        }
        if self.n > MAX_ARITY {
            return Err(Error::UnsupportedArity {
                n: self.n,
                reason: "exceeds the maximum arity",
            });
        }
        if self.m < 1 {
            return Err(Error::InvalidModulus(self.m));
        }
        for k in [self.k_min, self.k_max] {
            if !(0..self.m).contains(&k) {
                return Err(Error::KOutOfRange {
                    k,
                    lo: 0,
                    hi: self.m - 1,
                });
            }
        }
        if self.k_min > self.k_max {
            return Err(Error::KOutOfRange {
                k: self.k_min,
                lo: 0,
                hi: self.k_max,
            });
        }
        if self.pruning == Pruning::Mirror
            && (!(2..=3).contains(&self.n) || self.k_min != 0 || self.k_max != self.m - 1)
        {
            return Err(Error::MirrorPruningUnproven);
        }
        multiset_count(self.n, self.m)
            .ok_or_else(|| Error::TooLarge("multiset count overflows u64".into()))?;
        Ok(())
    }

    /// Number of `(A, K)` cells in the space.
    pub fn cells(&self) -> Option<u64> {
        multiset_count(self.n, self.m)?.checked_mul((self.k_max - self.k_min + 1) as u64)
    }
}

/// Extremes of the sum over a [`SearchSpace`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtremeRecord {
    pub n: usize,
    pub m: i64,
    pub k_min: i64,
    pub k_max: i64,
    pub cap: usize,
    pub max_value: i64,
    pub min_value: i64,
    /// Total number of cells attaining the maximum, recorded or not.
    pub max_count: u64,
    pub min_count: u64,
    pub max_sites: Vec<Site>,
    pub min_sites: Vec<Site>,
    /// True when either site list was cut at `cap`.
    pub truncated: bool,
}

impl ExtremeRecord {
    /// Re-evaluates every recorded site with the reference evaluator.
    pub fn verify_sites(&self) -> Result<bool> {
        for (sites, want) in [(&self.max_sites, self.max_value), (&self.min_sites, self.min_value)] {
            for s in sites {
                if eval_direct(&s.instance(self.m)?)?.get() != want {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

#[derive(Debug, Clone)]
struct Extreme {
    value: i64,
    count: u64,
    sites: Vec<Site>,
    truncated: bool,
}

impl Extreme {
    fn offer<I>(&mut self, value: i64, weight: u64, sites: impl FnOnce() -> I, cap: usize, better: Ordering)
    where
        I: IntoIterator<Item = Site>,
    {
        match value.cmp(&self.value) {
            o if o == better => {
                self.value = value;
                self.count = weight;
                self.sites.clear();
                self.truncated = false;
                self.push(sites(), cap);
            }
            Ordering::Equal => {
                self.count += weight;
                self.push(sites(), cap);
            }
            _ => {}
        }
    }

    // Sites may arrive out of order (mirror images), so the list is kept
    // loosely and trimmed to the `cap` smallest whenever it doubles.
    fn push(&mut self, sites: impl IntoIterator<Item = Site>, cap: usize) {
        for site in sites {
            if cap == 0 {
                self.truncated = true;
                return;
            }
            self.sites.push(site);
            if self.sites.len() >= 2 * cap {
                self.compact(cap);
            }
        }
    }

    fn compact(&mut self, cap: usize) {
        self.sites.sort();
        self.sites.dedup();
        if self.sites.len() > cap {
            self.sites.truncate(cap);
            self.truncated = true;
        }
    }

    fn merge(self, other: Self, cap: usize, better: Ordering) -> Self {
        match other.value.cmp(&self.value) {
            o if o == better => other,
            Ordering::Equal => {
                let mut sites = self.sites;
                sites.extend(other.sites);
                let mut e = Extreme {
                    value: self.value,
                    count: self.count + other.count,
                    sites,
                    truncated: self.truncated || other.truncated,
                };
                e.compact(cap);
                e
            }
            _ => self,
        }
    }
}

#[derive(Debug, Clone)]
struct Partial {
    max: Extreme,
    min: Extreme,
}

impl Partial {
    fn empty() -> Self {
        let e = |value| Extreme {
            value,
            count: 0,
            sites: Vec::new(),
            truncated: false,
        };
        Self {
            max: e(i64::MIN),
            min: e(i64::MAX),
        }
    }

    fn merge(self, other: Self, cap: usize) -> Self {
        Self {
            max: self.max.merge(other.max, cap, Ordering::Greater),
            min: self.min.merge(other.min, cap, Ordering::Less),
        }
    }
}

fn k_values(space: &SearchSpace) -> Vec<i64> {
    match space.pruning {
        Pruning::None => (space.k_min..=space.k_max).collect(),
        Pruning::Mirror => {
            let m = space.m;
            let mut ks: Vec<i64> = if m >= 2 { (0..=(m - 2) / 2).collect() } else { Vec::new() };
            ks.push(m - 1);
            ks
        }
    }
}

fn scan_range(space: &SearchSpace, ks: &[i64], start: u64, len: u64) -> Result<Partial> {
    let mut part = Partial::empty();
    let m = space.m;
    for a in Multisets::starting_at(space.n, m, start)?.take(len as usize) {
        let profile = ClosedProfile::new(m, &a)?;
        for &k in ks {
            let v = profile.value(k)?.get();
            let weight = match space.pruning {
                Pruning::Mirror if k != m - 1 && k != m - 2 - k => 2,
                _ => 1,
            };
            // the unscanned half of a mirror pair is recorded alongside
            let sites = || {
                let s = Site { a: a.clone(), k };
                let image = (weight == 2).then(|| mirror_site(m, &s));
                std::iter::once(s).chain(image)
            };
            part.max.offer(v, weight, sites, space.cap, Ordering::Greater);
            part.min.offer(v, weight, sites, space.cap, Ordering::Less);
        }
    }
    Ok(part)
}

fn mirror_site(m: i64, s: &Site) -> Site {
    let mut a: Vec<i64> = s.a.iter().map(|&v| (m - v) % m).collect();
    a.sort_unstable_by(|x, y| y.cmp(x));
    Site { a, k: m - 2 - s.k }
}

fn run(space: &SearchSpace) -> Result<ExtremeRecord> {
    space.validate()?;
    let ks = k_values(space);
    let total = multiset_count(space.n, space.m).expect("validated");
    let chunks = total.div_ceil(CHUNK);
    let part = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            scan_range(space, &ks, start, CHUNK.min(total - start))
        })
        .try_reduce_with(|a, b| Ok(a.merge(b, space.cap)))
        .expect("at least one multiset")?;
    let Partial { mut max, mut min } = part;
    max.compact(space.cap);
    min.compact(space.cap);
    Ok(ExtremeRecord {
        n: space.n,
        m: space.m,
        k_min: space.k_min,
        k_max: space.k_max,
        cap: space.cap,
        max_value: max.value,
        min_value: min.value,
        max_count: max.count,
        min_count: min.count,
        truncated: max.truncated || min.truncated,
        max_sites: max.sites,
        min_sites: min.sites,
    })
}

/// Exact max and min of the closed-form evaluator over the space, on the
/// global rayon pool.
pub fn extremes(space: &SearchSpace) -> Result<ExtremeRecord> {
    run(space)
}

/// [`extremes`] on a dedicated pool with `workers` threads (0 = rayon default).
pub fn extremes_with_workers(space: &SearchSpace, workers: usize) -> Result<ExtremeRecord> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Inconsistent(format!("thread pool: {e}")))?;
    pool.install(|| run(space))
}

/// Max and min sequences indexed by `m = 1..=m_max`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceTable {
    pub n: usize,
    pub max: Vec<i64>,
    pub min: Vec<i64>,
}

pub fn sequence_table(n: usize, m_max: i64) -> Result<SequenceTable> {
    if m_max < 1 {
        return Err(Error::InvalidModulus(m_max));
    }
    let mut max = Vec::new();
    let mut min = Vec::new();
    for m in 1..=m_max {
        let rec = extremes(&SearchSpace::new(n, m).with_cap(0))?;
        max.push(rec.max_value);
        min.push(rec.min_value);
    }
    Ok(SequenceTable { n, max, min })
}
