//! Deterministic top-n selection. Ties always go to the lower index.

use std::cmp::Ordering;

fn select(values: &[f64], n: usize, cmp: impl Fn(f64, f64) -> Ordering) -> Vec<usize> {
    let n = n.min(values.len());
    if n == 0 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    let order = |&a: &usize, &b: &usize| cmp(values[a], values[b]).then(a.cmp(&b));
    if n < idx.len() {
        idx.select_nth_unstable_by(n - 1, order);
        idx.truncate(n);
    }
    idx.sort_unstable_by(order);
    idx
}

/// Indices of the `n` largest values, in descending order.
pub fn top_n(values: &[f64], n: usize) -> Vec<usize> {
    select(values, n, |a, b| b.total_cmp(&a))
}

/// Indices of the `n` smallest values, in ascending order.
pub fn bottom_n(values: &[f64], n: usize) -> Vec<usize> {
    select(values, n, |a, b| a.total_cmp(&b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ties_prefer_lower_index() {
        let v = [0.0, 1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 2.0];
        assert_eq!(top_n(&v, 1), vec![4]);
        assert_eq!(top_n(&v, 3), vec![4, 7, 1]);
        assert_eq!(bottom_n(&v, 2), vec![0, 2]);
    }

    proptest! {
        #[test]
        fn matches_full_sort(v in prop::collection::vec(-5i32..5, 0..40), n in 0usize..45) {
            let vals: Vec<f64> = v.iter().map(|&x| x as f64).collect();
            let mut all: Vec<usize> = (0..vals.len()).collect();
            all.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
            all.truncate(n);
            prop_assert_eq!(top_n(&vals, n), all);
        }
    }
}
