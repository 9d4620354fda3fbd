//! Deterministic train/test splitting.
//!
//! The default mode partitions at source-key granularity so augmented
//! variants of one original never straddle the partitions; the ungrouped
//! mode applies the fraction to individual samples instead, reproducing the
//! augment-then-split protocol.

use std::collections::HashSet;

use crate::data::Example;
use crate::engine::Scalar;
use crate::error::{Error, Result};
use crate::rng;

/// Partition units: distinct keys (grouped) or individual indices.
fn shuffled_take(n: usize, fraction: f64, seed: u64) -> Result<HashSet<usize>> {
    if n == 0 {
        return Err(Error::config("split: empty input"));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::config(format!(
            "split: train fraction must be in (0,1), got {fraction}"
        )));
    }
    if n < 2 {
        return Err(Error::config(
            "split: need at least 2 units to form both partitions",
        ));
    }
    // Round to the nearest count, then keep both partitions non-empty.
    let take = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut r = rng::chacha(rng::mix(seed, &[0x53504C49, n as u64]));
    // Fisher-Yates
    for i in (1..n).rev() {
        let j = rand::Rng::gen_range(&mut r, 0..=i);
        order.swap(i, j);
    }
    Ok(order.into_iter().take(take).collect())
}

/// Splits sample indices by their source keys.
///
/// Grouped mode applies `train_fraction` to distinct keys and keeps every
/// sample of one key in the same partition; ungrouped mode applies it to
/// individual samples. Both partitions preserve input order.
pub fn split_indices(
    keys: &[&str],
    train_fraction: f64,
    seed: u64,
    group_by_source: bool,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if keys.is_empty() {
        return Err(Error::config("split: empty input"));
    }
    let chosen: Vec<bool> = if group_by_source {
        let mut unique: Vec<&str> = Vec::new();
        let mut seen: HashSet<&str> = HashSet::new();
        for &k in keys {
            if seen.insert(k) {
                unique.push(k);
            }
        }
        let picked = shuffled_take(unique.len(), train_fraction, seed)?;
        let train_keys: HashSet<&str> = unique
            .iter()
            .enumerate()
            .filter(|(i, _)| picked.contains(i))
            .map(|(_, k)| *k)
            .collect();
        keys.iter().map(|k| train_keys.contains(k)).collect()
    } else {
        let picked = shuffled_take(keys.len(), train_fraction, seed)?;
        (0..keys.len()).map(|i| picked.contains(&i)).collect()
    };
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, c) in chosen.iter().enumerate() {
        if *c {
            train.push(i);
        } else {
            test.push(i);
        }
    }
    Ok((train, test))
}

/// Splits decoded examples; see [`split_indices`] for the semantics.
pub fn split<T: Scalar>(
    samples: Vec<Example<T>>,
    train_fraction: f64,
    seed: u64,
    group_by_source: bool,
) -> Result<(Vec<Example<T>>, Vec<Example<T>>)> {
    let keys: Vec<&str> = samples.iter().map(|s| s.source_key.as_str()).collect();
    let (train_idx, _) = split_indices(&keys, train_fraction, seed, group_by_source)?;
    let train_set: HashSet<usize> = train_idx.into_iter().collect();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, s) in samples.into_iter().enumerate() {
        if train_set.contains(&i) {
            train.push(s);
        } else {
            test.push(s);
        }
    }
    Ok((train, test))
}

/// Alias kept for call sites that read better with an explicit name.
pub use split as split_examples;

#[cfg(test)]
mod tests {
    use super::*;

    fn keys(groups: &[(&'static str, usize)]) -> Vec<&'static str> {
        let mut v = Vec::new();
        for (k, n) in groups {
            for _ in 0..*n {
                v.push(*k);
            }
        }
        v
    }

    #[test]
    fn grouped_fraction_applies_to_source_keys() {
        // 10 sources with 3 variants each: 7 source groups in train.
        let groups: Vec<(&str, usize)> = vec![
            ("a", 3), ("b", 3), ("c", 3), ("d", 3), ("e", 3),
            ("f", 3), ("g", 3), ("h", 3), ("i", 3), ("j", 3),
        ];
        let ks = keys(&groups);
        let (train, test) = split_indices(&ks, 0.7, 11, true).unwrap();
        assert_eq!(train.len(), 21);
        assert_eq!(test.len(), 9);

        let train_keys: HashSet<&str> = train.iter().map(|&i| ks[i]).collect();
        let test_keys: HashSet<&str> = test.iter().map(|&i| ks[i]).collect();
        assert_eq!(train_keys.len(), 7);
        assert_eq!(test_keys.len(), 3);
        assert!(train_keys.is_disjoint(&test_keys));
    }

    #[test]
    fn grouped_split_is_a_partition() {
        let ks = keys(&[("a", 2), ("b", 5), ("c", 1), ("d", 4)]);
        let (train, test) = split_indices(&ks, 0.5, 3, true).unwrap();
        let mut all: Vec<usize> = train.iter().chain(test.iter()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..ks.len()).collect::<Vec<_>>());
    }

    #[test]
    fn ungrouped_fraction_applies_to_samples() {
        let ks: Vec<&str> = vec!["x"; 240];
        let (train, test) = split_indices(&ks, 0.7, 5, false).unwrap();
        assert_eq!(train.len(), 168);
        assert_eq!(test.len(), 72);
    }

    #[test]
    fn empty_input_and_bad_fraction_error() {
        assert!(split_indices(&[], 0.7, 0, true).is_err());
        assert!(split_indices(&["a", "b"], 0.0, 0, true).is_err());
        assert!(split_indices(&["a", "b"], 1.0, 0, true).is_err());
    }

    #[test]
    fn split_is_seed_deterministic() {
        let ks = keys(&[("a", 2), ("b", 2), ("c", 2), ("d", 2), ("e", 2)]);
        let a = split_indices(&ks, 0.6, 42, true).unwrap();
        let b = split_indices(&ks, 0.6, 42, true).unwrap();
        assert_eq!(a, b);
        let c = split_indices(&ks, 0.6, 43, true).unwrap();
        assert!(a != c || ks.len() <= 2, "different seeds should usually differ");
    }
}
