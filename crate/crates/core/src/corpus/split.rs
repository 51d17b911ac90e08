use std::collections::HashSet;

use rand::seq::SliceRandom;

use super::Thread;
use crate::error::{Error, Result};
use crate::seed;

/// Requested partition sizes. `test: None` means "everything left over".
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitCounts {
    pub train: usize,
    pub dev: usize,
    pub test: Option<usize>,
}

impl SplitCounts {
    pub fn new(train: usize, dev: usize) -> Self {
        SplitCounts {
            train,
            dev,
            test: None,
        }
    }

    /// Train/dev sizes in the 1500/200 (of 2200) proportions, remainder to test.
    pub fn proportional(total: usize) -> Self {
        let train = (total * 15 + 11) / 22;
        let dev = (total * 2 + 11) / 22;
        SplitCounts::new(train, dev.min(total - train))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorpusSplit {
    pub train: Vec<Thread>,
    pub dev: Vec<Thread>,
    pub test: Vec<Thread>,
}

/// Shuffle with `seed`, then cut into train/dev/test.
pub fn split_corpus(corpus: &[Thread], counts: SplitCounts, seed: u64) -> Result<CorpusSplit> {
    let test = counts
        .test
        .unwrap_or_else(|| corpus.len().saturating_sub(counts.train + counts.dev));
    let needed = counts.train + counts.dev + test;
    if needed > corpus.len() {
        return Err(Error::validation(format!(
            "split needs {needed} threads but the corpus has {}",
            corpus.len()
        )));
    }
    let mut seen = HashSet::new();
    for t in corpus {
        if !seen.insert(t.thread_id.as_str()) {
            return Err(Error::validation(format!(
                "duplicate thread id {:?}",
                t.thread_id
            )));
        }
    }

    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut seed::rng(seed));
    let take = |range: std::ops::Range<usize>| -> Vec<Thread> {
        order[range].iter().map(|&i| corpus[i].clone()).collect()
    };
    let a = counts.train;
    let b = a + counts.dev;
    Ok(CorpusSplit {
        train: take(0..a),
        dev: take(a..b),
        test: take(b..b + test),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Post, Sentence};

    fn corpus(n: usize) -> Vec<Thread> {
        (0..n)
            .map(|i| Thread {
                thread_id: format!("t{i}"),
                posts: vec![Post {
                    post_id: 1,
                    author: "a".into(),
                    sentences: vec![Sentence::new("x")],
                }],
                gold_parents: None,
            })
            .collect()
    }

    #[test]
    fn default_scale_split() {
        let c = corpus(2200);
        let s = split_corpus(&c, SplitCounts::new(1500, 200), 3).unwrap();
        assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (1500, 200, 500));
        let mut ids: Vec<_> = s
            .train
            .iter()
            .chain(&s.dev)
            .chain(&s.test)
            .map(|t| t.thread_id.clone())
            .collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 2200);
        assert_eq!(SplitCounts::proportional(2200), SplitCounts::new(1500, 200));
    }

    #[test]
    fn everything_to_test() {
        let s = split_corpus(&corpus(7), SplitCounts::new(0, 0), 1).unwrap();
        assert_eq!(s.test.len(), 7);
    }

    #[test]
    fn deterministic_and_checked() {
        let c = corpus(50);
        let a = split_corpus(&c, SplitCounts::new(30, 10), 9).unwrap();
        let b = split_corpus(&c, SplitCounts::new(30, 10), 9).unwrap();
        assert_eq!(a, b);
        assert!(split_corpus(&c, SplitCounts::new(45, 10), 9).is_err());
        let mut dup = corpus(3);
        dup[2].thread_id = "t0".into();
        assert!(split_corpus(&dup, SplitCounts::new(1, 1), 9).is_err());
    }
}
