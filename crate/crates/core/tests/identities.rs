use num_bigint::BigUint;

use spherevar_core::identities::{count_increasing_ordered_trees, enumerate_increasing_ordered_trees, identity_sweep};
use spherevar_core::sphere::double_factorial;

#[test]
fn full_sweep_has_no_failures() {
    let all = identity_sweep(8, 9).unwrap();
    assert_eq!(all.len(), 9 * 9 * 9);
    let failures: Vec<_> = all.iter().filter(|i| !i.holds()).collect();
    assert!(failures.is_empty(), "{failures:?}");
    // both parities of d are present
    assert!(all.iter().any(|i| i.d % 2 == 0) && all.iter().any(|i| i.d % 2 == 1));
}

#[test]
fn tree_counts_are_odd_double_factorials() {
    let want = [1u64, 3, 15, 105, 945, 10395];
    for (n, &w) in (1..=6).zip(&want) {
        assert_eq!(count_increasing_ordered_trees(n).unwrap(), w);
        assert_eq!(double_factorial(2 * n as i64 - 1).unwrap(), BigUint::from(w));
    }
}

#[test]
fn each_insertion_has_two_n_plus_one_slots() {
    for n in 1..6 {
        let trees = enumerate_increasing_ordered_trees(n).unwrap();
        assert!(trees.iter().all(|t| t.is_increasing() && t.slots() == 2 * n + 1));
        let next = enumerate_increasing_ordered_trees(n + 1).unwrap();
        assert_eq!(next.len(), (2 * n + 1) * trees.len());
    }
}
