//! Pairwise ranking training: gold tree vs. false tree, hinge margin of one.

use rand::seq::SliceRandom;
use serde::Serialize;

use super::optim::RmsProp;
use super::{dropout_mask, CoherenceModel, Params};
use crate::corpus::{CorpusSplit, ParentVector, Thread};
use crate::error::{Error, Result};
use crate::grid::{GridSequence, ThreadGrids};
use crate::seed;
use crate::tree::{enumerate_candidate_trees, sample_candidate_trees, ENUMERATION_CAP};

/// `max(0, 1 - pos + neg)`.
pub fn ranking_loss(pos: f64, neg: f64) -> f64 {
    (1.0 - pos + neg).max(0.0)
}

/// Pair the gold tree of `thread` with up to `m` distinct false trees.
pub fn make_training_pairs(
    thread: &Thread,
    m: usize,
    seed: u64,
) -> Result<Vec<(ParentVector, ParentVector)>> {
    let gold = thread.gold_parents.as_ref().ok_or_else(|| {
        Error::validation(format!("thread {:?} has no gold tree", thread.thread_id))
    })?;
    if thread.len() < 3 {
        return Ok(Vec::new());
    }
    Ok(sample_candidate_trees(thread.len(), m, seed, Some(gold))
        .into_iter()
        .map(|neg| (gold.clone(), neg))
        .collect())
}

/// Fraction of pairs whose first sequence scores strictly higher (evaluation mode).
pub fn pairwise_accuracy(
    model: &CoherenceModel,
    pairs: &[(GridSequence, GridSequence)],
) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::validation("no pairs to evaluate"));
    }
    let table = model.projection();
    let mut correct = 0usize;
    for (pos, neg) in pairs {
        model.check_len(pos)?;
        model.check_len(neg)?;
        let a = model.forward(pos, &table, None).0;
        let b = model.forward(neg, &table, None).0;
        correct += usize::from(a > b);
    }
    Ok(correct as f64 / pairs.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    /// `None` when the dev set yields no pairs (all threads shorter than 3 posts).
    pub dev_pair_accuracy: Option<f64>,
    pub dev_tree_accuracy: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxEpochs,
    /// No dev improvement for `patience` consecutive epochs.
    EarlyStop,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub stop: StopReason,
}

/// Sequences of gold/false trees, each stored once.
#[derive(Default)]
struct PairSet {
    seqs: Vec<GridSequence>,
    pairs: Vec<(usize, usize)>,
}

fn build_pairs(threads: &[Thread], model: &CoherenceModel, seed: u64) -> Result<PairSet> {
    let mut set = PairSet::default();
    for (i, thread) in threads.iter().enumerate() {
        let pairs = make_training_pairs(
            thread,
            model.hp.negatives,
            seed::derive_indexed(seed, "negatives", i as u64),
        )?;
        if pairs.is_empty() {
            continue;
        }
        let grids = ThreadGrids::new(thread);
        let gold_idx = set.seqs.len();
        set.seqs
            .push(grids.sequence(&pairs[0].0, model.hp.seq_len)?);
        for (_, neg) in &pairs {
            set.pairs.push((gold_idx, set.seqs.len()));
            set.seqs.push(grids.sequence(neg, model.hp.seq_len)?);
        }
    }
    Ok(set)
}

struct DevThread {
    candidates: Vec<GridSequence>,
    gold: usize,
    negatives: Vec<usize>,
}

struct DevSet {
    threads: Vec<DevThread>,
    /// Single-post threads, always reconstructed correctly.
    trivial: usize,
}

fn build_dev(threads: &[Thread], model: &CoherenceModel, seed: u64) -> Result<DevSet> {
    let mut dev = DevSet {
        threads: Vec::new(),
        trivial: 0,
    };
    for (i, thread) in threads.iter().enumerate() {
        let gold = thread.gold_parents.as_ref().ok_or_else(|| {
            Error::validation(format!(
                "dev thread {:?} has no gold tree",
                thread.thread_id
            ))
        })?;
        if thread.len() < 2 {
            dev.trivial += 1;
            continue;
        }
        if thread.len() > ENUMERATION_CAP {
            continue;
        }
        let candidates = enumerate_candidate_trees(thread.len())?;
        let grids = ThreadGrids::new(thread);
        let seqs = candidates
            .iter()
            .map(|c| grids.sequence(c, model.hp.seq_len))
            .collect::<Result<Vec<_>>>()?;
        let gold_pos = candidates
            .iter()
            .position(|c| c == gold)
            .expect("gold is a candidate");
        let negatives = make_training_pairs(
            thread,
            model.hp.negatives,
            seed::derive_indexed(seed, "dev-negatives", i as u64),
        )?
        .into_iter()
        .map(|(_, neg)| {
            candidates
                .iter()
                .position(|c| *c == neg)
                .expect("candidate")
        })
        .collect();
        dev.threads.push(DevThread {
            candidates: seqs,
            gold: gold_pos,
            negatives,
        });
    }
    if dev.threads.is_empty() && dev.trivial == 0 {
        return Err(Error::validation("dev set has no evaluable threads"));
    }
    Ok(dev)
}

fn evaluate_dev(model: &CoherenceModel, dev: &DevSet) -> (Option<f64>, f64) {
    let table = model.projection();
    let mut tree_correct = dev.trivial;
    let (mut pair_correct, mut pair_total) = (0usize, 0usize);
    for t in &dev.threads {
        let scores: Vec<f64> = t
            .candidates
            .iter()
            .map(|s| model.forward(s, &table, None).0)
            .collect();
        // first maximum = lexicographically smallest tree
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = i;
            }
        }
        tree_correct += usize::from(best == t.gold);
        for &n in &t.negatives {
            pair_total += 1;
            pair_correct += usize::from(scores[t.gold] > scores[n]);
        }
    }
    let tree = tree_correct as f64 / (dev.trivial + dev.threads.len()) as f64;
    let pair = (pair_total > 0).then(|| pair_correct as f64 / pair_total as f64);
    (pair, tree)
}

/// Loss of one pair under a shared dropout mask; accumulates its gradient
/// when the hinge is active.
pub(crate) fn accumulate_pair(
    model: &CoherenceModel,
    table: &[f64],
    pos: &GridSequence,
    neg: &GridSequence,
    mask: Option<&[f64]>,
    grad: &mut Params,
    proj_grad: &mut Vec<f64>,
) -> f64 {
    let (phi_pos, cache_pos) = model.forward(pos, table, mask);
    let (phi_neg, cache_neg) = model.forward(neg, table, mask);
    let loss = ranking_loss(phi_pos, phi_neg);
    if loss > 0.0 {
        model.backward(pos, &cache_pos, mask, -1.0, grad, proj_grad);
        model.backward(neg, &cache_neg, mask, 1.0, grad, proj_grad);
    }
    loss
}

/// The exact (gold, false) sequence pairs [`train`] draws for `threads`
/// under `model`'s seed and hyperparameters.
pub fn training_pairs(
    model: &CoherenceModel,
    threads: &[Thread],
) -> Result<Vec<(GridSequence, GridSequence)>> {
    let set = build_pairs(threads, model, seed::derive(model.seed, "train-pairs"))?;
    Ok(set
        .pairs
        .iter()
        .map(|&(p, n)| (set.seqs[p].clone(), set.seqs[n].clone()))
        .collect())
}

/// Train on `split.train`, early-stopping on dev tree-level accuracy.
pub fn train(model: CoherenceModel, split: &CorpusSplit) -> Result<(CoherenceModel, TrainReport)> {
    train_with(model, split, |_| {})
}

/// [`train`] with a callback invoked after every epoch.
pub fn train_with<F: FnMut(&EpochStats)>(
    mut model: CoherenceModel,
    split: &CorpusSplit,
    mut on_epoch: F,
) -> Result<(CoherenceModel, TrainReport)> {
    model.hp.validate()?;
    if split.train.is_empty() {
        return Err(Error::validation("training set is empty"));
    }
    if split.dev.is_empty() {
        return Err(Error::validation("dev set is empty"));
    }
    let hp = model.hp.clone();
    let root = model.seed;
    let data = build_pairs(&split.train, &model, seed::derive(root, "train-pairs"))?;
    if data.pairs.is_empty() {
        return Err(Error::validation(
            "training set yields no pairs (threads need gold trees and at least 3 posts)",
        ));
    }
    let dev = build_dev(&split.dev, &model, seed::derive(root, "dev-pairs"))?;

    let mut opt = RmsProp::new(&hp);
    let mut order: Vec<usize> = (0..data.pairs.len()).collect();
    let mut epochs = Vec::new();
    let mut best: Option<(f64, usize, CoherenceModel)> = None;
    let mut stale = 0usize;
    let mut stop = StopReason::MaxEpochs;

    for epoch in 1..=hp.max_epochs {
        order.shuffle(&mut seed::rng(seed::derive_indexed(
            root,
            "shuffle",
            epoch as u64,
        )));
        let mut dropout_rng = seed::rng(seed::derive_indexed(root, "dropout", epoch as u64));
        let mut loss_sum = 0.0;

        for batch in order.chunks(hp.batch) {
            let table = model.projection();
            let mut grad = Params::zeros(&hp);
            let mut proj_grad = model.empty_projection_grad();
            for &pi in batch {
                let (p, n) = data.pairs[pi];
                let mask = (hp.dropout > 0.0)
                    .then(|| dropout_mask(hp.feature_width(), hp.dropout, &mut dropout_rng));
                let loss = accumulate_pair(
                    &model,
                    &table,
                    &data.seqs[p],
                    &data.seqs[n],
                    mask.as_deref(),
                    &mut grad,
                    &mut proj_grad,
                );
                if !loss.is_finite() {
                    return Err(Error::Training(format!(
                        "non-finite loss {loss} in epoch {epoch}"
                    )));
                }
                loss_sum += loss;
            }
            model.resolve_projection_grad(&proj_grad, &mut grad);
            let scale = 1.0 / batch.len() as f64;
            for g in grad.groups_mut() {
                g.iter_mut().for_each(|x| *x *= scale);
            }
            opt.step(&mut model.params, &grad, hp.emb_dim);
            if !model.params.all_finite() {
                return Err(Error::Training(format!(
                    "parameters became non-finite in epoch {epoch}"
                )));
            }
        }

        let (dev_pair_accuracy, dev_tree_accuracy) = evaluate_dev(&model, &dev);
        let stats = EpochStats {
            epoch,
            mean_loss: loss_sum / data.pairs.len() as f64,
            dev_pair_accuracy,
            dev_tree_accuracy,
        };
        on_epoch(&stats);
        epochs.push(stats);

        let improved = best
            .as_ref()
            .is_none_or(|(acc, _, _)| dev_tree_accuracy > *acc);
        if improved {
            best = Some((dev_tree_accuracy, epoch, model.clone()));
            stale = 0;
        } else {
            stale += 1;
            if stale >= hp.patience {
                stop = StopReason::EarlyStop;
                break;
            }
        }
    }

    let (_, best_epoch, best_model) = best.expect("at least one epoch ran");
    Ok((
        best_model,
        TrainReport {
            epochs,
            best_epoch,
            stop,
        },
    ))
}
