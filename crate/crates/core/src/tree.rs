//! Sentence-level conversation trees and candidate reply trees.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;

use crate::corpus::{ParentVector, Thread};
use crate::error::{Error, Result};
use crate::seed;

/// Largest thread size for which all candidate trees are enumerated.
pub const ENUMERATION_CAP: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SentenceRef {
    /// 1-based post id.
    pub post_id: usize,
    /// 0-based position inside the post.
    pub index: usize,
}

/// Tree over all sentences of a thread read under one reply structure.
///
/// Nodes are numbered in thread order (post by post). Consecutive sentences
/// of a post are chained, and the first sentence of a reply hangs off the last
/// sentence of the post it answers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentenceTree {
    nodes: Vec<SentenceRef>,
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
    /// Preorder rank of each post (children visited in posting order).
    post_rank: Vec<usize>,
}

impl SentenceTree {
    pub fn nodes(&self) -> &[SentenceRef] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn depth(&self, node: usize) -> usize {
        self.depth[node]
    }

    pub fn max_depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// Node index of a sentence reference.
    pub fn node_of(&self, r: SentenceRef) -> Option<usize> {
        self.nodes.iter().position(|&n| n == r)
    }
}

/// Sentences grouped by depth. Within a level, sentences follow the preorder
/// of their posts in the reply tree, so sibling branches appear in posting
/// order of their first post.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepthLevels {
    pub levels: Vec<Vec<usize>>,
}

impl DepthLevels {
    pub fn level_refs(&self, tree: &SentenceTree, depth: usize) -> Vec<SentenceRef> {
        self.levels[depth].iter().map(|&n| tree.nodes[n]).collect()
    }
}

/// Post-level sizes only; lets grid construction skip the text.
pub(crate) fn build_from_sizes(sizes: &[usize], parents: &ParentVector) -> Result<SentenceTree> {
    let n = sizes.len();
    if parents.len() != n {
        return Err(Error::validation(format!(
            "{} parents for a {n}-post thread",
            parents.len()
        )));
    }
    if sizes.contains(&0) {
        return Err(Error::validation("every post needs at least one sentence"));
    }
    let mut offsets = Vec::with_capacity(n);
    let mut total = 0;
    for &s in sizes {
        offsets.push(total);
        total += s;
    }
    let mut nodes = Vec::with_capacity(total);
    let mut parent = Vec::with_capacity(total);
    let mut depth = Vec::with_capacity(total);
    for (p, &size) in sizes.iter().enumerate() {
        for idx in 0..size {
            let node = offsets[p] + idx;
            let par = if idx > 0 {
                Some(node - 1)
            } else {
                parents
                    .parent_of(p + 1)
                    .map(|q| offsets[q - 1] + sizes[q - 1] - 1)
            };
            depth.push(par.map_or(0, |q: usize| depth[q] + 1));
            parent.push(par);
            nodes.push(SentenceRef {
                post_id: p + 1,
                index: idx,
            });
        }
    }

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (child, par) in parents.links() {
        children[par - 1].push(child - 1);
    }
    let mut post_rank = vec![0; n];
    let mut stack = vec![0usize];
    let mut next = 0;
    while let Some(p) = stack.pop() {
        post_rank[p] = next;
        next += 1;
        stack.extend(children[p].iter().rev());
    }

    Ok(SentenceTree {
        nodes,
        parent,
        depth,
        post_rank,
    })
}

pub fn build_sentence_tree(thread: &Thread, parents: &ParentVector) -> Result<SentenceTree> {
    let sizes: Vec<usize> = thread.posts.iter().map(|p| p.sentences.len()).collect();
    build_from_sizes(&sizes, parents)
}

pub fn depth_levels(tree: &SentenceTree) -> DepthLevels {
    let mut levels = vec![
        Vec::new();
        if tree.is_empty() {
            0
        } else {
            tree.max_depth() + 1
        }
    ];
    for (node, &d) in tree.depth.iter().enumerate() {
        levels[d].push(node);
    }
    for level in &mut levels {
        level.sort_by_key(|&node| (tree.post_rank[tree.nodes[node].post_id - 1], node));
    }
    DepthLevels { levels }
}

/// Number of valid reply trees over `n` posts, `(n - 1)!`.
pub fn candidate_count(n: usize) -> u128 {
    (1..n.max(1) as u128).product()
}

/// All valid reply trees in lexicographic order.
pub fn enumerate_candidate_trees(n_posts: usize) -> Result<Vec<ParentVector>> {
    enumerate_with_cap(n_posts, ENUMERATION_CAP)
}

pub fn enumerate_with_cap(n_posts: usize, cap: usize) -> Result<Vec<ParentVector>> {
    if n_posts == 0 {
        return Err(Error::validation("a thread needs at least one post"));
    }
    if n_posts > cap {
        return Err(Error::validation(format!(
            "{n_posts} posts exceed the enumeration cap of {cap}; use sampled candidates instead"
        )));
    }
    let mut out = Vec::with_capacity(candidate_count(n_posts) as usize);
    let mut current: Vec<usize> = (0..n_posts).map(|i| usize::from(i > 0)).collect();
    loop {
        out.push(ParentVector::from_raw_unchecked(current.clone()));
        // odometer: position i ranges over 1..=i
        let mut pos = n_posts;
        loop {
            if pos <= 1 {
                return Ok(out);
            }
            pos -= 1;
            if current[pos] < pos {
                current[pos] += 1;
                for later in current.iter_mut().skip(pos + 1) {
                    *later = 1;
                }
                break;
            }
        }
    }
}

/// Up to `k` distinct valid trees, excluding `exclude`, drawn without
/// replacement. Small threads sample from the full enumeration; larger ones
/// draw each parent uniformly and reject duplicates.
pub fn sample_candidate_trees(
    n_posts: usize,
    k: usize,
    seed: u64,
    exclude: Option<&ParentVector>,
) -> Vec<ParentVector> {
    if n_posts == 0 || k == 0 {
        return Vec::new();
    }
    let mut rng = seed::rng(seed);
    if n_posts <= ENUMERATION_CAP {
        let pool: Vec<ParentVector> = enumerate_with_cap(n_posts, ENUMERATION_CAP)
            .expect("within cap")
            .into_iter()
            .filter(|pv| Some(pv) != exclude)
            .collect();
        let amount = k.min(pool.len());
        return index::sample(&mut rng, pool.len(), amount)
            .into_iter()
            .map(|i| pool[i].clone())
            .collect();
    }
    let space = candidate_count(n_posts);
    let available = space - u128::from(exclude.is_some_and(|e| e.len() == n_posts));
    let amount = (k as u128).min(available) as usize;
    let mut seen: HashSet<ParentVector> = HashSet::new();
    let mut out = Vec::with_capacity(amount);
    while out.len() < amount {
        let mut v = vec![0usize; n_posts];
        for (i, p) in v.iter_mut().enumerate().skip(1) {
            *p = rng.gen_range(1..=i);
        }
        let pv = ParentVector::from_raw_unchecked(v);
        if Some(&pv) == exclude || !seen.insert(pv.clone()) {
            continue;
        }
        out.push(pv);
    }
    out
}
