//! Thread data model, ingestion, segmentation, synthetic data and splits.

mod io;
mod segment;
mod split;
mod synth;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use io::{load_corpus, parse_thread, read_corpus_file, serialize_thread, write_corpus};
pub use segment::{segment_sentences, tokenize};
pub use split::{split_corpus, CorpusSplit, SplitCounts};
pub use synth::{generate_synthetic_corpus, GeneratorConfig};

/// Grammatical role of an entity in a sentence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    S,
    O,
    X,
    Absent,
}

impl Role {
    /// Precedence used when one entity is mentioned several times in a sentence.
    pub fn priority(self) -> u8 {
        match self {
            Role::S => 3,
            Role::O => 2,
            Role::X => 1,
            Role::Absent => 0,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Role::S => 'S',
            Role::O => 'O',
            Role::X => 'X',
            Role::Absent => '-',
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S" => Ok(Role::S),
            "O" => Ok(Role::O),
            "X" => Ok(Role::X),
            "-" => Ok(Role::Absent),
            other => Err(Error::validation(format!("unknown role letter {other:?}"))),
        }
    }
}

/// An entity together with the role it plays in one sentence.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EntityMention {
    pub entity: String,
    pub role: Role,
}

impl EntityMention {
    pub fn new(entity: impl Into<String>, role: Role) -> Self {
        EntityMention {
            entity: entity.into(),
            role,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub text: String,
    /// Lowercased word tokens of `text`.
    pub tokens: Vec<String>,
    /// Gold entity/role annotations. When present they replace the heuristic tagger.
    pub annotations: Option<Vec<EntityMention>>,
}

impl Sentence {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let tokens = tokenize(&text);
        Sentence {
            text,
            tokens,
            annotations: None,
        }
    }

    pub fn annotated(text: impl Into<String>, annotations: Vec<EntityMention>) -> Self {
        let mut s = Sentence::new(text);
        s.annotations = Some(annotations);
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Post {
    /// 1-based position in posting order.
    pub post_id: usize,
    pub author: String,
    pub sentences: Vec<Sentence>,
}

impl Post {
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.sentences
            .iter()
            .flat_map(|s| s.tokens.iter().map(String::as_str))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Thread {
    pub thread_id: String,
    pub posts: Vec<Post>,
    pub gold_parents: Option<ParentVector>,
}

impl Thread {
    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn sentence_count(&self) -> usize {
        self.posts.iter().map(|p| p.sentences.len()).sum()
    }

    /// Check the structural invariants: consecutive post ids, nonempty posts,
    /// and a gold tree (if any) that fits the thread.
    pub fn validate(&self) -> Result<()> {
        if self.posts.is_empty() {
            return Err(Error::validation(format!(
                "thread {:?} has no posts",
                self.thread_id
            )));
        }
        for (i, post) in self.posts.iter().enumerate() {
            if post.post_id != i + 1 {
                return Err(Error::validation(format!(
                    "thread {:?}: post ids must be consecutive from 1, found {} at position {}",
                    self.thread_id,
                    post.post_id,
                    i + 1
                )));
            }
            if post.sentences.is_empty() {
                return Err(Error::validation(format!(
                    "thread {:?}: post {} has no sentences",
                    self.thread_id, post.post_id
                )));
            }
        }
        if let Some(gold) = &self.gold_parents {
            if gold.len() != self.posts.len() {
                return Err(Error::validation(format!(
                    "thread {:?}: {} parents for {} posts",
                    self.thread_id,
                    gold.len(),
                    self.posts.len()
                )));
            }
        }
        Ok(())
    }
}

/// Reply tree over the posts of a thread.
///
/// Stored with one entry per post: entry 0 is the root marker `0`, entry `i`
/// holds the 1-based id of the post that post `i + 1` replies to. Ordering is
/// lexicographic over the entries.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParentVector(Vec<usize>);

impl ParentVector {
    /// Build from the full vector (root entry included, as `0`).
    pub fn new(parents: Vec<usize>) -> Result<Self> {
        let pv = ParentVector(parents);
        pv.check()?;
        Ok(pv)
    }

    /// Build from the parents of posts 2..=n only.
    pub fn from_replies(replies: &[usize]) -> Result<Self> {
        let mut v = Vec::with_capacity(replies.len() + 1);
        v.push(0);
        v.extend_from_slice(replies);
        ParentVector::new(v)
    }

    pub(crate) fn from_raw_unchecked(parents: Vec<usize>) -> Self {
        ParentVector(parents)
    }

    pub fn all_first(n: usize) -> Self {
        let mut v = vec![1; n.max(1)];
        v[0] = 0;
        ParentVector(v)
    }

    pub fn all_previous(n: usize) -> Self {
        ParentVector((0..n.max(1)).collect())
    }

    fn check(&self) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::validation("parent vector is empty"));
        }
        if self.0[0] != 0 {
            return Err(Error::validation("post 1 must be the root"));
        }
        for (i, &p) in self.0.iter().enumerate().skip(1) {
            // post i + 1 may reply to posts 1..=i
            if p < 1 || p > i {
                return Err(Error::validation(format!(
                    "post {} cannot reply to post {} (must be an earlier post)",
                    i + 1,
                    p
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parent of a 1-based post id, `None` for the root.
    pub fn parent_of(&self, post_id: usize) -> Option<usize> {
        match self.0[post_id - 1] {
            0 => None,
            p => Some(p),
        }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// `(child, parent)` links, one per non-root post.
    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().enumerate().skip(1).map(|(i, &p)| (i + 1, p))
    }

    /// Parse `"1,1,1,4"` (replies only) or `"0,1,1,1,4"` (root included).
    pub fn parse(text: &str, n_posts: Option<usize>) -> Result<Self> {
        let text = text.trim();
        let values: Vec<usize> = if text.is_empty() {
            Vec::new()
        } else {
            text.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::validation(format!("bad parent entry {t:?}")))
                })
                .collect::<Result<_>>()?
        };
        let with_root = match n_posts {
            Some(n) if values.len() == n => true,
            Some(n) if values.len() + 1 == n => false,
            Some(n) => {
                return Err(Error::validation(format!(
                    "{} parent entries do not fit a {n}-post thread",
                    values.len()
                )))
            }
            None => values.first() == Some(&0),
        };
        if with_root {
            ParentVector::new(values)
        } else {
            ParentVector::from_replies(&values)
        }
    }
}

impl fmt::Display for ParentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parent_vector_validity() {
        assert!(ParentVector::new(vec![0, 1, 1, 1, 4]).is_ok());
        assert!(ParentVector::new(vec![0, 1, 3, 2]).is_err());
        assert!(ParentVector::new(vec![1, 1]).is_err());
        assert!(ParentVector::new(vec![0, 0]).is_err());
        assert!(ParentVector::new(vec![0]).is_ok());
    }

    #[test]
    fn parent_vector_parse_both_forms() {
        let a = ParentVector::parse("1,1,1,4", Some(5)).unwrap();
        let b = ParentVector::parse("0,1,1,1,4", Some(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "0,1,1,1,4");
        assert_eq!(a.parent_of(5), Some(4));
        assert_eq!(a.parent_of(1), None);
        assert!(ParentVector::parse("1,2", Some(5)).is_err());
    }

    #[test]
    fn role_priority_orders_s_o_x() {
        assert!(Role::S.priority() > Role::O.priority());
        assert!(Role::O.priority() > Role::X.priority());
        assert_eq!("O".parse::<Role>().unwrap(), Role::O);
        assert!("Q".parse::<Role>().is_err());
    }
}
