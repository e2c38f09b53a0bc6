use serde::{Deserialize, Serialize};

use super::LabelMap;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Per-class split sizes.
///
/// A class with fewer than `train_per_class + val_per_class + small_class_test`
/// pixels falls under the small-class rule: `small_class_test` test pixels,
/// `small_class_val` validation pixels, and the rest go to training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_per_class: usize,
    pub val_per_class: usize,
    pub small_class_test: usize,
    pub small_class_val: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { train_per_class: 20, val_per_class: 20, small_class_test: 5, small_class_val: 2, seed: 0 }
    }
}

/// Disjoint pixel-index sets. Each list is sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train_ids: Vec<usize>,
    pub val_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
    pub pool_ids: Vec<usize>,
}

pub fn make_split(labels: &LabelMap, spec: &SplitSpec) -> Result<DatasetSplit> {
    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();
    let regular = spec.train_per_class + spec.val_per_class + spec.small_class_test;
    for class in 1..=labels.num_classes() {
        let mut members = labels.class_members(class);
        if members.is_empty() {
            return Err(Error::Split(format!("class {class} has no labeled pixels")));
        }
        let mut rng = SplitMix64::derive(spec.seed, class as u64);
        rng.shuffle(&mut members);
        let n = members.len();
        if n >= regular {
            let (t, rest) = members.split_at(spec.train_per_class);
            let (v, rest) = rest.split_at(spec.val_per_class);
            train.extend_from_slice(t);
            val.extend_from_slice(v);
            test.extend_from_slice(rest);
        } else {
            if n < spec.small_class_test + spec.small_class_val {
                return Err(Error::Split(format!(
                    "class {class} has {n} pixels, fewer than {} + {} reserved for test and validation",
                    spec.small_class_test, spec.small_class_val
                )));
            }
            let (t, rest) = members.split_at(spec.small_class_test);
            let (v, rest) = rest.split_at(spec.small_class_val);
            test.extend_from_slice(t);
            val.extend_from_slice(v);
            train.extend_from_slice(rest);
        }
    }
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(DatasetSplit { pool_ids: train.clone(), train_ids: train, val_ids: val, test_ids: test })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_class_map(big: usize, small: usize) -> LabelMap {
        let mut labels = vec![1; big];
        labels.extend(vec![2; small]);
        let n = labels.len();
        LabelMap::new(1, n, 2, labels).unwrap()
    }

    fn count_class(map: &LabelMap, ids: &[usize], class: usize) -> usize {
        ids.iter().filter(|&&i| map.get(i) == class).count()
    }

    #[test]
    fn regular_and_small_class_counts() {
        let map = two_class_map(100, 12);
        let spec = SplitSpec { seed: 3, ..SplitSpec::default() };
        let s = make_split(&map, &spec).unwrap();
        assert_eq!(count_class(&map, &s.train_ids, 1), 20);
        assert_eq!(count_class(&map, &s.val_ids, 1), 20);
        assert_eq!(count_class(&map, &s.test_ids, 1), 60);
        assert_eq!(count_class(&map, &s.test_ids, 2), 5);
        assert_eq!(count_class(&map, &s.val_ids, 2), 2);
        assert_eq!(count_class(&map, &s.train_ids, 2), 5);
        assert_eq!(s.pool_ids, s.train_ids);
    }

    #[test]
    fn deterministic_under_seed() {
        let map = two_class_map(100, 30);
        let spec = SplitSpec { seed: 9, ..SplitSpec::default() };
        assert_eq!(make_split(&map, &spec).unwrap(), make_split(&map, &spec).unwrap());
        let other = SplitSpec { seed: 10, ..spec };
        assert_ne!(make_split(&map, &spec).unwrap(), make_split(&map, &other).unwrap());
    }

    #[test]
    fn tiny_class_is_split_error() {
        let map = two_class_map(100, 6);
        assert!(matches!(make_split(&map, &SplitSpec::default()), Err(Error::Split(_))));
        let map = LabelMap::new(1, 3, 2, vec![1, 1, 1]).unwrap();
        assert!(matches!(make_split(&map, &SplitSpec::default()), Err(Error::Split(_))));
    }

    #[test]
    fn unlabeled_pixels_never_used() {
        let mut labels = vec![0; 50];
        labels.extend(vec![1; 60]);
        labels.extend(vec![2; 60]);
        let map = LabelMap::new(1, 170, 2, labels).unwrap();
        let s = make_split(&map, &SplitSpec::default()).unwrap();
        for id in s.train_ids.iter().chain(&s.val_ids).chain(&s.test_ids) {
            assert_ne!(map.get(*id), 0);
        }
    }
}
