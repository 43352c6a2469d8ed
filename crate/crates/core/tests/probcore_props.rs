mod common;

use proptest::prelude::*;
use tricorr::probcore::{variational_distance, JointDist, ProductHandle};

fn table(cards: &[usize]) -> impl Strategy<Value = Vec<f64>> {
    let len: usize = cards.iter().product();
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.01f64..1.0], len)
        .prop_filter("nonzero", |t| t.iter().sum::<f64>() > 0.0)
}

fn joint3() -> impl Strategy<Value = JointDist> {
    prop::collection::vec(1usize..=3, 3).prop_flat_map(|cards| {
        table(&cards).prop_map(move |mut t| {
            let s: f64 = t.iter().sum();
            t.iter_mut().for_each(|x| *x /= s);
            JointDist::from_dense(&["A", "B", "C"], &cards, &t).unwrap()
        })
    })
}

fn normalized(mut t: Vec<f64>) -> Vec<f64> {
    let s: f64 = t.iter().sum();
    t.iter_mut().for_each(|x| *x /= s);
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn information_measures_are_nonnegative(j in joint3()) {
        let sets: [&[&str]; 3] = [&["A"], &["B"], &["C"]];
        for (i, a) in sets.iter().enumerate() {
            prop_assert!(j.entropy(a).unwrap() >= 0.0);
            let (b, c) = (sets[(i + 1) % 3], sets[(i + 2) % 3]);
            prop_assert!(j.mutual_information(a, b).unwrap() >= 0.0);
            prop_assert!(j.conditional_entropy(a, b).unwrap() >= 0.0);
            prop_assert!(j.conditional_mutual_information(a, b, c).unwrap() >= 0.0);
        }
    }

    #[test]
    fn chain_rule(j in joint3()) {
        let lhs = j.mutual_information(&["A", "B"], &["C"]).unwrap();
        let rhs = j.mutual_information(&["A"], &["C"]).unwrap()
            + j.conditional_mutual_information(&["B"], &["C"], &["A"]).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn product_entropy_is_additive(j in joint3(), n in 1usize..=3) {
        let h = j.entropy(&["A", "B", "C"]).unwrap();
        let p = ProductHandle::new(j, n).unwrap();
        prop_assert!((p.entropy_by_enumeration() - n as f64 * h).abs() <= 1e-9);
    }

    #[test]
    fn variational_distance_is_a_metric(
        a in table(&[2, 3]), b in table(&[2, 3]), c in table(&[2, 3])
    ) {
        let mk = |t: Vec<f64>| JointDist::from_dense(&["X", "Y"], &[2, 3], &normalized(t)).unwrap();
        let (p, q, r) = (mk(a), mk(b), mk(c));
        let pq = variational_distance(&p, &q).unwrap();
        prop_assert!((pq - variational_distance(&q, &p).unwrap()).abs() <= 1e-15);
        prop_assert!(pq <= variational_distance(&p, &r).unwrap() + variational_distance(&r, &q).unwrap() + 1e-12);
        prop_assert!((0.0..=2.0 + 1e-12).contains(&pq));
        prop_assert!(variational_distance(&p, &p).unwrap() == 0.0);
    }

    #[test]
    fn json_round_trip(j in joint3()) {
        let back = JointDist::from_json_str(&j.to_json_string()).unwrap();
        prop_assert_eq!(back, j);
    }

    #[test]
    fn reduced_variables_stay_conditionally_independent(seed in 0u64..1000, n in 1usize..=3) {
        let j = common::conditionally_independent(seed, n);
        prop_assert!(common::worst_reduced_cmi(&j, n) <= 1e-9);
    }
}
