use floorsum::symmetry::mirror;
use floorsum::{eval_closed, eval_direct, Instance};
use proptest::prelude::*;

fn instance(n: std::ops::RangeInclusive<usize>, max_m: i64, reach: i64) -> impl Strategy<Value = (i64, Vec<i64>, i64)> {
    (1..=max_m, n).prop_flat_map(move |(m, n)| {
        (Just(m), prop::collection::vec(0..reach * m, n), 0..m)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn closed_matches_direct((m, a, k) in instance(1..=7, 24, 3)) {
        let inst = Instance::new(m, a, k).unwrap();
        prop_assert_eq!(eval_closed(&inst).unwrap(), eval_direct(&inst).unwrap());
    }

    #[test]
    fn periodic_in_each_element((m, a, k) in instance(2..=6, 20, 3), i in 0usize..6, shift in 1i64..4) {
        let i = i % a.len();
        let mut b = a.clone();
        b[i] += shift * m;
        let s = eval_closed(&Instance::new(m, a, k).unwrap()).unwrap();
        let t = eval_closed(&Instance::new(m, b, k).unwrap()).unwrap();
        prop_assert_eq!(s, t);
    }

    #[test]
    fn order_does_not_matter((m, a, k) in instance(1..=6, 20, 2), seed in any::<u64>()) {
        let mut b = a.clone();
        let len = b.len();
        b.rotate_left((seed % len as u64) as usize);
        b.swap(0, len - 1);
        let s = eval_direct(&Instance::new(m, a, k).unwrap()).unwrap();
        let t = eval_direct(&Instance::new(m, b, k).unwrap()).unwrap();
        prop_assert_eq!(s, t);
    }

    #[test]
    fn vanishes_at_last_k((m, a, _k) in instance(2..=7, 20, 3)) {
        let inst = Instance::new(m, a, m - 1).unwrap();
        prop_assert_eq!(eval_closed(&inst).unwrap().get(), 0);
    }

    #[test]
    fn single_element_range((m, a, k) in instance(1..=1, 30, 1)) {
        let v = eval_closed(&Instance::new(m, a, k).unwrap()).unwrap().get();
        prop_assert!((0..m).contains(&v));
    }

    #[test]
    fn mirror_invariant_small_n((m, a, k) in instance(2..=3, 30, 1)) {
        prop_assume!(m >= 2 && k <= m - 2);
        let inst = Instance::bounded(m, a, k).unwrap();
        let image = mirror(&inst).unwrap();
        prop_assert_eq!(eval_closed(&inst).unwrap(), eval_closed(&image).unwrap());
        prop_assert_eq!(mirror(&image).unwrap(), inst);
    }
}

// No proof covers n >= 4; this only reports how often the mirror map moves the sum.
#[test]
fn mirror_report_n4_n5() {
    use floorsum::search::enumerate_multisets;
    for n in 4..=5 {
        for m in 2..=8i64 {
            let (mut cells, mut moved) = (0u64, 0u64);
            for a in enumerate_multisets(n, m).unwrap() {
                for k in 0..=m - 2 {
                    let inst = Instance::bounded(m, a.clone(), k).unwrap();
                    let image = mirror(&inst).unwrap();
                    cells += 1;
                    if eval_closed(&inst).unwrap() != eval_closed(&image).unwrap() {
                        moved += 1;
                    }
                }
            }
            println!("mirror n = {n}, m = {m}: {moved} of {cells} cells change value");
        }
    }
}
