//! Mirrored sums and the difference operators used in the `n = 2, 3` bound proofs.
//!
//! The two-element difference `delta = S({a1,a2},K) - S({a1+1,a2},K-1)` takes
//! one of four cases depending on whether `a1 + a2 >= m` and whether
//! `a2 + K - m + 1 > 0`. The three-element difference `box` splits into three
//! two-element differences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{eval_closed, Instance};

/// Maps `(A, K)` to `((m - a_i) mod m, m - 2 - K)`.
///
/// Requires a bounded instance with `K <= m - 2`. The sum is unchanged for
/// `n = 2, 3`; for larger `n` the equality is only checked empirically.
pub fn mirror(inst: &Instance) -> Result<Instance> {
    let m = inst.m();
    if let Some(&v) = inst.a().iter().find(|&&v| v >= m) {
        return Err(Error::ElementOutOfRange { value: v, hi: m - 1 });
    }
    if inst.k() > m - 2 {
        return Err(Error::KOutOfRange {
            k: inst.k(),
            lo: 0,
            hi: m - 2,
        });
    }
    let a = inst.a().iter().map(|&v| (m - v) % m).collect();
    Instance::new(m, a, m - 2 - inst.k())
}

/// Classification of a two-element difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeltaCase {
    pub case_id: u8,
    /// `a1 + a2 >= m`
    pub cond_sum: bool,
    /// `a2 + K - m + 1 > 0`
    pub cond_tail: bool,
}

impl DeltaCase {
    pub fn classify(m: i64, a1: i64, a2: i64, k: i64) -> Self {
        Self::from_conditions(a1 + a2 >= m, a2 + k - m + 1 > 0)
    }

    pub fn from_conditions(cond_sum: bool, cond_tail: bool) -> Self {
        let case_id = match (cond_sum, cond_tail) {
            (false, false) => 1,
            (false, true) => 2,
            (true, false) => 3,
            (true, true) => 4,
        };
        Self {
            case_id,
            cond_sum,
            cond_tail,
        }
    }

    /// The difference value the case table predicts.
    pub fn table_value(self) -> i64 {
        match self.case_id {
            2 => -1,
            3 => 1,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaRecord {
    pub value: i64,
    pub case: DeltaCase,
}

impl DeltaRecord {
    pub fn matches_table(&self) -> bool {
        self.value == self.case.table_value()
    }
}

fn check_delta_domain(m: i64, elems: &[i64], k: i64) -> Result<()> {
    if m < 1 {
        return Err(Error::InvalidModulus(m));
    }
    for &v in elems {
        if !(0..m).contains(&v) {
            return Err(Error::ElementOutOfRange { value: v, hi: m - 1 });
        }
    }
    let hi = m / 2 - 1;
    if k < 1 || k > hi {
        return Err(Error::KOutOfRange { k, lo: 1, hi });
    }
    Ok(())
}

fn closed(m: i64, a: Vec<i64>, k: i64) -> Result<i64> {
    Ok(eval_closed(&Instance::new(m, a, k)?)?.get())
}

/// `S_m({a1,a2},K) - S_m({a1+1,a2},K-1)` for `0 <= a1,a2 <= m-1` and
/// `1 <= K <= floor(m/2) - 1`.
pub fn delta(m: i64, a1: i64, a2: i64, k: i64) -> Result<DeltaRecord> {
    check_delta_domain(m, &[a1, a2], k)?;
    let value = closed(m, vec![a1, a2], k)? - closed(m, vec![a1 + 1, a2], k - 1)?;
    Ok(DeltaRecord {
        value,
        case: DeltaCase::classify(m, a1, a2, k),
    })
}

/// Three-element difference together with its two-element decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxRecord {
    pub value: i64,
    /// `delta(a1, (a2+a3) mod m)`, `delta(a1, a2)`, `delta(a1, a3)`
    pub components: [DeltaRecord; 3],
}

impl BoxRecord {
    pub fn decomposed_value(&self) -> i64 {
        let [d0, d1, d2] = self.components;
        d0.value - d1.value - d2.value
    }
}

/// `S_m({a1,a2,a3},K) - S_m({a1+1,a2,a3},K-1)`, computed directly and via
/// three two-element differences. Fails with [`Error::Inconsistent`] if the
/// two routes disagree.
pub fn box_difference(m: i64, a1: i64, a2: i64, a3: i64, k: i64) -> Result<BoxRecord> {
    check_delta_domain(m, &[a1, a2, a3], k)?;
    let value = closed(m, vec![a1, a2, a3], k)? - closed(m, vec![a1 + 1, a2, a3], k - 1)?;
    let components = [
        delta(m, a1, (a2 + a3) % m, k)?,
        delta(m, a1, a2, k)?,
        delta(m, a1, a3, k)?,
    ];
    let rec = BoxRecord { value, components };
    if rec.decomposed_value() != value {
        return Err(Error::Inconsistent(format!(
            "box({m}; {a1},{a2},{a3}; {k}) = {value} but decomposition gives {}",
            rec.decomposed_value()
        )));
    }
    Ok(rec)
}

/// Subcases of the `box = +1` configuration, split on `a2 + a3 < m` (B1) or
/// `m <= a2 + a3 < 2m` (B2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseBSubcase {
    B1_1,
    B1_2,
    B1_3,
    B1_4,
    B2_1,
    B2_2,
    B2_3,
}

/// Truth values of the six conditions under which `box = +1` can occur.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseBReport {
    /// `a1 + (a2+a3) mod m >= m`
    pub c1a: bool,
    /// `(a2+a3) mod m + K - m + 1 <= 0`
    pub c1b: bool,
    /// `a1 + a2 >= m`
    pub c2a: bool,
    /// `a2 + K - m + 1 <= 0`
    pub c2b: bool,
    /// `a1 + a3 >= m`
    pub c3a: bool,
    /// `a3 + K - m + 1 <= 0`
    pub c3b: bool,
    pub subcase: Option<CaseBSubcase>,
    /// Value of the sum given by the subcase's simplified formula.
    pub formula_value: Option<i64>,
}

impl CaseBReport {
    /// `(1a AND 1b)`, `(2a XOR 2b)`, `(3a XOR 3b)`: the only layout giving
    /// `delta(a1,a2+a3) = +1` with the other two differences zero.
    pub fn is_plus_one_configuration(&self) -> bool {
        self.c1a && self.c1b && (self.c2a ^ self.c2b) && (self.c3a ^ self.c3b)
    }
}

/// Evaluates the case-B conditions for sorted `a1 >= a2 >= a3` and
/// `floor(m/3) <= K <= floor(m/2) - 1`. Inputs outside that range still
/// produce a report but the subcase formulas no longer describe the sum.
pub fn case_b_conditions(m: i64, a1: i64, a2: i64, a3: i64, k: i64) -> CaseBReport {
    let r = (a2 + a3) % m;
    let mut rep = CaseBReport {
        c1a: a1 + r >= m,
        c1b: r + k - m + 1 <= 0,
        c2a: a1 + a2 >= m,
        c2b: a2 + k - m + 1 <= 0,
        c3a: a1 + a3 >= m,
        c3b: a3 + k - m + 1 <= 0,
        subcase: None,
        formula_value: None,
    };
    if !rep.is_plus_one_configuration() {
        return rep;
    }
    let pos = |x: i64| x.max(0);
    if a2 + a3 < m {
        let x12 = a1 + a2 + k - m + 1;
        let x13 = a1 + a3 + k - m + 1;
        let x1 = a1 + k - m + 1;
        rep.subcase = Some(if x1 > 0 {
            CaseBSubcase::B1_1
        } else if x13 > 0 {
            CaseBSubcase::B1_2
        } else if x12 > 0 {
            CaseBSubcase::B1_3
        } else {
            CaseBSubcase::B1_4
        });
        rep.formula_value = Some(k + 1 - pos(x12) - pos(x13) + pos(x1));
    } else {
        let y12 = a1 + a2 + k - 2 * m + 1;
        let y13 = a1 + a3 + k - 2 * m + 1;
        rep.subcase = Some(if y12 <= 0 {
            CaseBSubcase::B2_3
        } else if y13 > 0 {
            CaseBSubcase::B2_1
        } else {
            CaseBSubcase::B2_2
        });
        rep.formula_value = Some(
            -(k + 1) - pos(y12) - pos(y13)
                + (a1 + k - m + 1)
                + (a2 + k - m + 1)
                + (a3 + k - m + 1),
        );
    }
    rep
}

/// Tally of [`delta`] over every legal `(a1, a2, K)` at one modulus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaScan {
    pub m: i64,
    /// Occurrences of cases 1..=4.
    pub case_counts: [u64; 4],
    /// `(a1, a2, K)` whose value left `{-1, 0, 1}` or disagreed with its case.
    pub mismatches: Vec<(i64, i64, i64)>,
    /// Case 2 occurrences with `a1 >= a2`; the lower-bound argument rules these out.
    pub sorted_case2: Vec<(i64, i64, i64)>,
}

impl DeltaScan {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty() && self.sorted_case2.is_empty()
    }
}

pub fn delta_scan(m: i64) -> Result<DeltaScan> {
    if m < 1 {
        return Err(Error::InvalidModulus(m));
    }
    let mut scan = DeltaScan {
        m,
        case_counts: [0; 4],
        mismatches: Vec::new(),
        sorted_case2: Vec::new(),
    };
    for k in 1..m / 2 {
        for a1 in 0..m {
            for a2 in 0..m {
                let d = delta(m, a1, a2, k)?;
                scan.case_counts[d.case.case_id as usize - 1] += 1;
                if !(-1..=1).contains(&d.value) || !d.matches_table() {
                    scan.mismatches.push((a1, a2, k));
                }
                if d.case.case_id == 2 && a1 >= a2 {
                    scan.sorted_case2.push((a1, a2, k));
                }
            }
        }
    }
    Ok(scan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::eval_direct;

    fn direct(m: i64, a: &[i64], k: i64) -> i64 {
        eval_direct(&Instance::new(m, a.to_vec(), k).unwrap()).unwrap().get()
    }

    #[test]
    fn mirror_examples() {
        let i = Instance::new(5, vec![2, 3], 1).unwrap();
        let j = mirror(&i).unwrap();
        assert_eq!(j.a(), &[3, 2]);
        assert_eq!(j.k(), 2);
        assert_eq!(direct(5, &[2, 3], 1), 2);
        assert_eq!(eval_direct(&j).unwrap(), 2);

        let i = Instance::new(5, vec![0, 4], 1).unwrap();
        let j = mirror(&i).unwrap();
        assert_eq!(j.a(), &[1, 0]);
        assert_eq!(j.k(), 2);
        assert_eq!(eval_direct(&i).unwrap(), 0);
        assert_eq!(eval_direct(&j).unwrap(), 0);

        let i = Instance::new(4, vec![2, 2], 1).unwrap();
        assert_eq!(mirror(&i).unwrap(), i);
    }

    #[test]
    fn mirror_rejects_terminal_k_and_unbounded() {
        let i = Instance::new(5, vec![2, 3], 4).unwrap();
        assert_eq!(
            mirror(&i),
            Err(Error::KOutOfRange { k: 4, lo: 0, hi: 3 })
        );
        let i = Instance::new(5, vec![7, 3], 1).unwrap();
        assert!(matches!(mirror(&i), Err(Error::ElementOutOfRange { .. })));
    }

    #[test]
    fn mirror_is_an_involution() {
        for m in 2..9 {
            for a1 in 0..m {
                for a2 in 0..m {
                    for k in 0..=m - 2 {
                        let i = Instance::new(m, vec![a1, a2], k).unwrap();
                        assert_eq!(mirror(&mirror(&i).unwrap()).unwrap(), i);
                    }
                }
            }
        }
    }

    #[test]
    fn delta_examples() {
        let d = delta(6, 5, 2, 2).unwrap();
        assert_eq!(d.value, 1);
        assert_eq!(d.case.case_id, 3);
        assert_eq!(direct(6, &[5, 2], 2) - direct(6, &[6, 2], 1), 1);

        let d = delta(6, 1, 4, 2).unwrap();
        assert_eq!(d.value, -1);
        assert_eq!(d.case.case_id, 2);
        assert_eq!(direct(6, &[1, 4], 2), 1);
        assert_eq!(direct(6, &[2, 4], 1), 2);

        let d = delta(10, 5, 2, 2).unwrap();
        assert_eq!(d.value, 0);
        assert_eq!(d.case.case_id, 1);
        assert!(d.matches_table());
    }

    #[test]
    fn delta_domain() {
        assert!(matches!(delta(6, 1, 1, 0), Err(Error::KOutOfRange { .. })));
        assert!(matches!(delta(6, 1, 1, 3), Err(Error::KOutOfRange { .. })));
        assert!(matches!(delta(6, 6, 1, 1), Err(Error::ElementOutOfRange { .. })));
        // floor(m/2) - 1 < 1 leaves no legal K
        assert!(delta(3, 1, 1, 1).is_err());
    }

    #[test]
    fn case_table() {
        let cases: Vec<_> = [(false, false), (false, true), (true, false), (true, true)]
            .into_iter()
            .map(|(s, t)| DeltaCase::from_conditions(s, t))
            .map(|c| (c.case_id, c.table_value()))
            .collect();
        assert_eq!(cases, vec![(1, 0), (2, -1), (3, 1), (4, 0)]);
    }

    #[test]
    fn box_examples() {
        let b = box_difference(6, 5, 2, 2, 2).unwrap();
        assert_eq!(b.value, -2);
        assert_eq!(b.components.map(|d| d.value), [0, 1, 1]);
        assert_eq!(direct(6, &[5, 2, 2], 2) - direct(6, &[6, 2, 2], 1), -2);

        for m in 4..12 {
            for a1 in 0..m {
                for k in 1..m / 2 {
                    assert_eq!(box_difference(m, a1, 0, 0, k).unwrap().value, 0);
                }
            }
        }

        let b = box_difference(7, 3, 2, 1, 1).unwrap();
        assert_eq!(b.value, direct(7, &[3, 2, 1], 1) - direct(7, &[4, 2, 1], 0));
        assert_eq!(b.value, b.decomposed_value());
    }

    #[test]
    fn case_b_example() {
        let r = case_b_conditions(6, 3, 2, 1, 2);
        assert_eq!(
            (r.c1a, r.c1b, r.c2a, r.c2b, r.c3a, r.c3b),
            (true, true, false, true, false, true)
        );
        assert!(r.is_plus_one_configuration());
        assert_eq!(r.subcase, Some(CaseBSubcase::B1_2));
        assert_eq!(r.formula_value, Some(direct(6, &[3, 2, 1], 2)));
        assert_eq!(box_difference(6, 3, 2, 1, 2).unwrap().value, 1);
    }

    #[test]
    fn delta_scan_small() {
        let s = delta_scan(6).unwrap();
        // K in {1, 2}, 36 pairs each
        assert_eq!(s.case_counts.iter().sum::<u64>(), 72);
        assert!(s.is_clean());
        assert_eq!(delta_scan(3).unwrap().case_counts, [0; 4]);
    }

    #[test]
    fn case_b_all_zero() {
        let r = case_b_conditions(9, 0, 0, 0, 3);
        assert!(!r.c1a);
        assert!(!r.is_plus_one_configuration());
        assert_eq!(r.subcase, None);
    }

    #[test]
    fn box_plus_one_implies_configuration() {
        for m in 3..16 {
            for k in (m / 3).max(1)..m / 2 {
                for a1 in 0..m {
                    for a2 in 0..=a1 {
                        for a3 in 0..=a2 {
                            let b = box_difference(m, a1, a2, a3, k).unwrap();
                            let r = case_b_conditions(m, a1, a2, a3, k);
                            if b.value == 1 {
                                assert!(r.is_plus_one_configuration(), "m={m} a=({a1},{a2},{a3}) k={k}");
                            }
                            if r.is_plus_one_configuration() {
                                assert_ne!(r.subcase, Some(CaseBSubcase::B1_4));
                                let s = direct(m, &[a1, a2, a3], k);
                                assert_eq!(r.formula_value, Some(s));
                                assert!(s <= m / 3);
                            }
                        }
                    }
                }
            }
        }
    }
}
