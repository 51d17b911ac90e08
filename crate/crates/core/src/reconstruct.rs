//! Reply-tree prediction: Grid-CNN argmax and three baselines.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::corpus::{ParentVector, Post, Thread};
use crate::error::{Error, Result};
use crate::grid::ThreadGrids;
use crate::neural::CoherenceModel;
use crate::tree::{enumerate_candidate_trees, ENUMERATION_CAP};

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub parents: ParentVector,
    /// Coherence of the chosen tree (Grid-CNN only, when candidates were scored).
    pub score: Option<f64>,
}

/// Highest-scoring candidate tree; score ties go to the lexicographically
/// smallest parent vector.
pub fn predict_grid_cnn(model: &CoherenceModel, thread: &Thread) -> Result<Prediction> {
    let n = thread.len();
    if n > ENUMERATION_CAP {
        return Err(Error::validation(format!(
            "thread {:?} has {n} posts; exhaustive scoring stops at {ENUMERATION_CAP} \
             and beam or sampled prediction is not supported",
            thread.thread_id
        )));
    }
    if n <= 2 {
        return Ok(Prediction {
            parents: ParentVector::all_first(n),
            score: None,
        });
    }
    let candidates = enumerate_candidate_trees(n)?;
    let grids = ThreadGrids::new(thread);
    let seqs = candidates
        .iter()
        .map(|c| grids.sequence(c, model.hp.seq_len))
        .collect::<Result<Vec<_>>>()?;
    let scores = model.score_batch(&seqs)?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(Prediction {
        parents: candidates[best].clone(),
        score: Some(scores[best]),
    })
}

pub fn predict_all_previous(thread: &Thread) -> ParentVector {
    ParentVector::all_previous(thread.len())
}

pub fn predict_all_first(thread: &Thread) -> ParentVector {
    ParentVector::all_first(thread.len())
}

/// Raw term frequencies over a post's tokens.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TermVector(HashMap<String, usize>);

impl TermVector {
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let mut counts = HashMap::new();
        for t in tokens {
            *counts.entry(t.to_string()).or_insert(0) += 1;
        }
        TermVector(counts)
    }

    pub fn from_post(post: &Post) -> Self {
        TermVector::from_tokens(post.tokens())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn norm(&self) -> f64 {
        self.0.values().map(|&c| (c * c) as f64).sum::<f64>().sqrt()
    }
}

/// Cosine similarity; 0 when either vector is empty.
pub fn cosine(u: &TermVector, v: &TermVector) -> f64 {
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    let (small, large) = if u.0.len() <= v.0.len() {
        (u, v)
    } else {
        (v, u)
    };
    let dot: usize = small
        .0
        .iter()
        .filter_map(|(t, &c)| large.0.get(t).map(|&d| c * d))
        .sum();
    dot as f64 / (nu * nv)
}

/// Link each post to the earlier post it is most similar to; ties go to the
/// most recent post, and an empty post links to its predecessor.
pub fn predict_cos_sim(thread: &Thread) -> ParentVector {
    let vectors: Vec<TermVector> = thread.posts.iter().map(TermVector::from_post).collect();
    let mut parents = vec![0usize; thread.len().max(1)];
    for i in 1..thread.len() {
        parents[i] = if vectors[i].is_empty() {
            i
        } else {
            let mut best = (f64::NEG_INFINITY, i);
            for (j, v) in vectors.iter().enumerate().take(i) {
                let sim = cosine(&vectors[i], v);
                if sim >= best.0 {
                    best = (sim, j + 1);
                }
            }
            best.1
        };
    }
    ParentVector::from_raw_unchecked(parents)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    GridCnn,
    AllPrevious,
    AllFirst,
    CosSim,
}

impl StrategyKind {
    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::GridCnn => "grid-cnn",
            StrategyKind::AllPrevious => "all-previous",
            StrategyKind::AllFirst => "all-first",
            StrategyKind::CosSim => "cos-sim",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid-cnn" => Ok(StrategyKind::GridCnn),
            "all-previous" => Ok(StrategyKind::AllPrevious),
            "all-first" => Ok(StrategyKind::AllFirst),
            "cos-sim" => Ok(StrategyKind::CosSim),
            other => Err(Error::validation(format!("unknown strategy {other:?}"))),
        }
    }
}

/// A reconstruction method ready to run.
#[derive(Clone, Debug)]
pub enum Strategy {
    GridCnn(Box<CoherenceModel>),
    AllPrevious,
    AllFirst,
    CosSim,
}

impl Strategy {
    pub fn kind(&self) -> StrategyKind {
        match self {
            Strategy::GridCnn(_) => StrategyKind::GridCnn,
            Strategy::AllPrevious => StrategyKind::AllPrevious,
            Strategy::AllFirst => StrategyKind::AllFirst,
            Strategy::CosSim => StrategyKind::CosSim,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind().name()
    }

    pub fn predict(&self, thread: &Thread) -> Result<Prediction> {
        let parents = match self {
            Strategy::GridCnn(model) => return predict_grid_cnn(model, thread),
            Strategy::AllPrevious => predict_all_previous(thread),
            Strategy::AllFirst => predict_all_first(thread),
            Strategy::CosSim => predict_cos_sim(thread),
        };
        Ok(Prediction {
            parents,
            score: None,
        })
    }
}
