//! Content-disjoint partitioning of a dataset.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Random split protocol: fractions per part, master seed and repeat count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// `(train, test)` or `(train, val, test)`.
    pub fractions: Vec<f64>,
    pub seed: u64,
    pub iterations: usize,
}

impl SplitSpec {
    pub fn new(fractions: Vec<f64>, seed: u64, iterations: usize) -> Result<Self> {
        let spec = Self {
            fractions,
            seed,
            iterations,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.fractions.len()) {
            return Err(Error::invalid("split fractions must have 2 or 3 parts"));
        }
        if self.fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(Error::invalid("split fractions must lie in (0, 1)"));
        }
        let total: f64 = self.fractions.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!("split fractions sum to {total}, expected 1")));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be at least 1"));
        }
        Ok(())
    }

    pub fn has_validation(&self) -> bool {
        self.fractions.len() == 3
    }
}

/// Row indices of each subset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Option<Vec<usize>>,
    pub test: Vec<usize>,
}

impl Split {
    fn from_content_groups(content_ids: &[String], groups: &[BTreeSet<&str>]) -> Self {
        let rows = |set: &BTreeSet<&str>| -> Vec<usize> {
            content_ids
                .iter()
                .enumerate()
                .filter(|(_, c)| set.contains(c.as_str()))
                .map(|(i, _)| i)
                .collect()
        };
        match groups {
            [train, test] => Split {
                train: rows(train),
                val: None,
                test: rows(test),
            },
            [train, val, test] => Split {
                train: rows(train),
                val: Some(rows(val)),
                test: rows(test),
            },
            _ => unreachable!("splits have two or three parts"),
        }
    }
}

fn distinct_contents(content_ids: &[String]) -> Result<Vec<&str>> {
    if let Some(i) = content_ids.iter().position(|c| c.is_empty()) {
        return Err(Error::invalid(format!("row {i} has an empty content id")));
    }
    Ok(content_ids.iter().map(String::as_str).collect::<BTreeSet<_>>().into_iter().collect())
}

/// Number of contents per part: largest-remainder rounding, ties to the
/// earlier part, then every part topped up to at least one content by taking
/// from the currently largest part.
pub fn part_sizes(n: usize, fractions: &[f64]) -> Result<Vec<usize>> {
    if n < fractions.len() {
        return Err(Error::TooFewSamples {
            min: fractions.len(),
            got: n,
        });
    }
    let quotas: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    // Round away float noise so that e.g. 0.15 * 10 counts as exactly 1.5.
    let quotas: Vec<f64> = quotas.iter().map(|q| (q * 1e9).round() / 1e9).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    while let Some(empty) = sizes.iter().position(|&s| s == 0) {
        let donor = (0..sizes.len()).max_by_key(|&i| (sizes[i], std::cmp::Reverse(i))).expect("non-empty");
        sizes[donor] -= 1;
        sizes[empty] += 1;
    }
    Ok(sizes)
}

/// The split for one iteration of a random protocol.
///
/// Distinct contents are sorted, shuffled with a generator seeded by
/// `spec.seed ^ iteration`, then cut into consecutive runs.
pub fn split_by_content(content_ids: &[String], spec: &SplitSpec, iteration: usize) -> Result<Split> {
    spec.validate()?;
    let mut contents = distinct_contents(content_ids)?;
    let sizes = part_sizes(contents.len(), &spec.fractions)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ iteration as u64);
    contents.shuffle(&mut rng);
    let mut groups = Vec::with_capacity(sizes.len());
    let mut rest = contents.as_slice();
    for size in sizes {
        let (head, tail) = rest.split_at(size);
        groups.push(head.iter().copied().collect::<BTreeSet<_>>());
        rest = tail;
    }
    Ok(Split::from_content_groups(content_ids, &groups))
}

/// Every train/test split that puts `round(train_fraction * n)` contents in
/// training (clamped to `1..=n-1`), in lexicographic order of the training set.
pub fn all_content_splits(content_ids: &[String], train_fraction: f64) -> Result<Vec<Split>> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid("train fraction must lie in (0, 1)"));
    }
    let contents = distinct_contents(content_ids)?;
    let n = contents.len();
    if n < 2 {
        return Err(Error::TooFewSamples { min: 2, got: n });
    }
    let k = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    Ok(contents
        .iter()
        .copied()
        .combinations(k)
        .map(|train| {
            let train: BTreeSet<&str> = train.into_iter().collect();
            let test: BTreeSet<&str> = contents.iter().copied().filter(|c| !train.contains(c)).collect();
            Split::from_content_groups(content_ids, &[train, test])
        })
        .collect())
}

/// Checks that no content appears in two subsets of `split`.
pub fn assert_content_disjoint(content_ids: &[String], split: &Split) -> Result<()> {
    let mut owner: BTreeMap<&str, usize> = BTreeMap::new();
    let parts = [Some(&split.train), split.val.as_ref(), Some(&split.test)];
    for (part, rows) in parts.iter().enumerate() {
        for &row in rows.iter().flat_map(|r| r.iter()) {
            let content = content_ids
                .get(row)
                .ok_or_else(|| Error::invalid(format!("split row {row} out of range")))?;
            if *owner.entry(content).or_insert(part) != part {
                return Err(Error::invalid(format!("content {content:?} appears in two subsets")));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(contents: usize, per: usize) -> Vec<String> {
        (0..contents)
            .flat_map(|c| std::iter::repeat_n(format!("c{c:02}"), per))
            .collect()
    }

    #[test]
    fn rounding_ten_contents() {
        assert_eq!(part_sizes(10, &[0.7, 0.15, 0.15]).unwrap(), vec![7, 2, 1]);
        let spec = SplitSpec::new(vec![0.7, 0.15, 0.15], 9, 1).unwrap();
        let s = split_by_content(&ids(10, 3), &spec, 0).unwrap();
        assert_eq!((s.train.len(), s.val.as_ref().unwrap().len(), s.test.len()), (21, 6, 3));
    }

    #[test]
    fn minimal_two_contents() {
        assert_eq!(part_sizes(2, &[0.8, 0.2]).unwrap(), vec![1, 1]);
        assert_eq!(part_sizes(3, &[0.9, 0.05, 0.05]).unwrap(), vec![1, 1, 1]);
        let spec = SplitSpec::new(vec![0.8, 0.2], 0, 1).unwrap();
        assert!(split_by_content(&ids(1, 4), &spec, 0).is_err());
    }

    #[test]
    fn reproducible_and_seed_sensitive() {
        let spec = SplitSpec::new(vec![0.7, 0.15, 0.15], 42, 5).unwrap();
        let c = ids(12, 2);
        assert_eq!(split_by_content(&c, &spec, 3).unwrap(), split_by_content(&c, &spec, 3).unwrap());
        let all: BTreeSet<Vec<usize>> = (0..10).map(|i| split_by_content(&c, &spec, i).unwrap().test).collect();
        assert!(all.len() > 1);
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(all_content_splits(&ids(5, 2), 0.8).unwrap().len(), 5);
        assert_eq!(all_content_splits(&ids(10, 1), 0.8).unwrap().len(), 45);
        assert!(all_content_splits(&ids(1, 3), 0.8).is_err());
        // k is clamped so the test side is never empty.
        assert_eq!(all_content_splits(&ids(2, 1), 0.8).unwrap().len(), 2);
    }

    #[test]
    fn bad_specs_rejected() {
        assert!(SplitSpec::new(vec![0.5, 0.6], 0, 1).is_err());
        assert!(SplitSpec::new(vec![1.0], 0, 1).is_err());
        assert!(SplitSpec::new(vec![0.8, 0.2], 0, 0).is_err());
        assert!(split_by_content(&["".to_string(), "a".into()], &SplitSpec::new(vec![0.5, 0.5], 0, 1).unwrap(), 0).is_err());
    }

    proptest! {
        #[test]
        fn splits_cover_and_are_disjoint(n in 3usize..30, per in 1usize..4, seed in any::<u64>(), it in 0usize..50) {
            let c = ids(n, per);
            let spec = SplitSpec::new(vec![0.7, 0.15, 0.15], seed, 1).unwrap();
            let s = split_by_content(&c, &spec, it).unwrap();
            assert_content_disjoint(&c, &s).unwrap();
            let mut rows: Vec<usize> = s.train.iter().chain(s.val.as_ref().unwrap()).chain(&s.test).copied().collect();
            rows.sort_unstable();
            prop_assert_eq!(rows, (0..c.len()).collect::<Vec<_>>());
            prop_assert!(!s.test.is_empty() && !s.train.is_empty());
        }

        #[test]
        fn sizes_sum_to_n(n in 3usize..200, a in 0.05f64..0.9) {
            let b = (1.0 - a) / 2.0;
            let sizes = part_sizes(n, &[a, b, 1.0 - a - b]).unwrap();
            prop_assert_eq!(sizes.iter().sum::<usize>(), n);
            prop_assert!(sizes.iter().all(|&s| s >= 1));
        }
    }
}
