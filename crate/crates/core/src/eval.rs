//! Tree-level and edge-level reconstruction metrics.
//!
//! Edge precision/recall/F1 treat "non-trivial" links (replies to any post
//! other than the first) as the positive class; plain edge accuracy covers
//! every link.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::corpus::{ParentVector, Thread};
use crate::error::{Error, Result};
use crate::reconstruct::Strategy;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EdgeScores {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub links: usize,
    pub gold_nontrivial: usize,
    pub predicted_nontrivial: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EvalResult {
    pub tree_accuracy: f64,
    pub edge_accuracy: f64,
    pub edge_precision: f64,
    pub edge_recall: f64,
    pub edge_f1: f64,
    pub threads: usize,
    pub links: usize,
    pub nontrivial_links: usize,
}

fn check_aligned(preds: &[ParentVector], golds: &[ParentVector]) -> Result<()> {
    if golds.is_empty() {
        return Err(Error::validation("evaluation set is empty"));
    }
    if preds.len() != golds.len() {
        return Err(Error::validation(format!(
            "{} predictions for {} gold trees",
            preds.len(),
            golds.len()
        )));
    }
    for (i, (p, g)) in preds.iter().zip(golds).enumerate() {
        if p.len() != g.len() {
            return Err(Error::validation(format!(
                "thread #{i}: predicted tree covers {} posts, gold covers {}",
                p.len(),
                g.len()
            )));
        }
    }
    Ok(())
}

/// Fraction of threads whose predicted tree equals the gold tree exactly.
pub fn tree_accuracy(preds: &[ParentVector], golds: &[ParentVector]) -> Result<f64> {
    check_aligned(preds, golds)?;
    let exact = preds.iter().zip(golds).filter(|(p, g)| p == g).count();
    Ok(exact as f64 / golds.len() as f64)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Link-level scores pooled over all threads.
pub fn edge_scores(preds: &[ParentVector], golds: &[ParentVector]) -> Result<EdgeScores> {
    check_aligned(preds, golds)?;
    let (mut links, mut correct) = (0usize, 0usize);
    let (mut gold_nt, mut pred_nt, mut correct_nt) = (0usize, 0usize, 0usize);
    for (p, g) in preds.iter().zip(golds) {
        for ((_, pp), (_, gp)) in p.links().zip(g.links()) {
            links += 1;
            correct += usize::from(pp == gp);
            let (p_nt, g_nt) = (pp != 1, gp != 1);
            gold_nt += usize::from(g_nt);
            pred_nt += usize::from(p_nt);
            correct_nt += usize::from(p_nt && pp == gp);
        }
    }
    let precision = ratio(correct_nt, pred_nt);
    let recall = ratio(correct_nt, gold_nt);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(EdgeScores {
        // no links at all only happens with single-post threads, which are trivially right
        accuracy: if links == 0 {
            1.0
        } else {
            ratio(correct, links)
        },
        precision,
        recall,
        f1,
        links,
        gold_nontrivial: gold_nt,
        predicted_nontrivial: pred_nt,
    })
}

pub fn score_predictions(preds: &[ParentVector], golds: &[ParentVector]) -> Result<EvalResult> {
    let tree = tree_accuracy(preds, golds)?;
    let edges = edge_scores(preds, golds)?;
    Ok(EvalResult {
        tree_accuracy: tree,
        edge_accuracy: edges.accuracy,
        edge_precision: edges.precision,
        edge_recall: edges.recall,
        edge_f1: edges.f1,
        threads: golds.len(),
        links: edges.links,
        nontrivial_links: edges.gold_nontrivial,
    })
}

/// Pair each gold thread with its prediction by thread id. Every id in
/// `preds` must exist in `gold` with a gold tree, and vice versa for the
/// evaluated set.
pub fn align(
    gold: &[Thread],
    preds: &HashMap<String, ParentVector>,
) -> Result<(Vec<ParentVector>, Vec<ParentVector>)> {
    let by_id: HashMap<&str, &Thread> = gold.iter().map(|t| (t.thread_id.as_str(), t)).collect();
    let mut ids: Vec<&String> = preds.keys().collect();
    ids.sort();
    let mut p = Vec::with_capacity(ids.len());
    let mut g = Vec::with_capacity(ids.len());
    for id in ids {
        let thread = by_id
            .get(id.as_str())
            .ok_or_else(|| Error::validation(format!("prediction for unknown thread {id:?}")))?;
        let gold_tree = thread
            .gold_parents
            .clone()
            .ok_or_else(|| Error::validation(format!("thread {id:?} has no gold tree")))?;
        p.push(preds[id].clone());
        g.push(gold_tree);
    }
    Ok((p, g))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub strategy: String,
    #[serde(flatten)]
    pub result: EvalResult,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn push(&mut self, strategy: impl Into<String>, result: EvalResult) {
        self.rows.push(ReportRow {
            strategy: strategy.into(),
            result,
        });
    }

    pub fn row(&self, strategy: &str) -> Option<&EvalResult> {
        self.rows
            .iter()
            .find(|r| r.strategy == strategy)
            .map(|r| &r.result)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name_w = self
            .rows
            .iter()
            .map(|r| r.strategy.len())
            .max()
            .unwrap_or(0)
            .max(8);
        writeln!(
            f,
            "{:name_w$}  {:>10}  {:>16}",
            "", "Tree-level", "Edge-level"
        )?;
        writeln!(
            f,
            "{:name_w$}  {:>10}  {:>7}  {:>7}",
            "strategy", "Acc", "F1", "Acc"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:name_w$}  {:>10.2}  {:>7.2}  {:>7.2}",
                r.strategy,
                100.0 * r.result.tree_accuracy,
                100.0 * r.result.edge_f1,
                100.0 * r.result.edge_accuracy
            )?;
        }
        Ok(())
    }
}

/// Run every strategy over `threads` (which must carry gold trees) and tabulate.
pub fn evaluate(strategies: &[Strategy], threads: &[Thread]) -> Result<Report> {
    if strategies.is_empty() {
        return Err(Error::validation("no strategies to evaluate"));
    }
    let golds = threads
        .iter()
        .map(|t| {
            t.gold_parents.clone().ok_or_else(|| {
                Error::validation(format!("thread {:?} has no gold tree", t.thread_id))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = Report::default();
    for s in strategies {
        let preds = threads
            .iter()
            .map(|t| s.predict(t).map(|p| p.parents))
            .collect::<Result<Vec<_>>>()?;
        report.push(s.name(), score_predictions(&preds, &golds)?);
    }
    Ok(report)
}
