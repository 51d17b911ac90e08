//! Entity tagging, conversational entity grids and their linearization.
//!
//! A grid has one row per depth level of the sentence tree and one column per
//! entity. A cell lists, left to right, the role the entity plays in each
//! sentence of that level (`-` when absent).

use std::collections::HashMap;
use std::fmt;

use crate::corpus::{EntityMention, ParentVector, Role, Sentence, Thread};
use crate::error::Result;
use crate::tree::{build_from_sizes, depth_levels, DepthLevels, SentenceTree};

/// Default linearized grid length.
pub const DEFAULT_SEQ_LEN: usize = 768;

const STOPWORDS: &[&str] = &[
    "the",
    "a",
    "an",
    "and",
    "or",
    "but",
    "if",
    "then",
    "than",
    "so",
    "of",
    "to",
    "in",
    "on",
    "at",
    "by",
    "for",
    "from",
    "with",
    "without",
    "about",
    "into",
    "out",
    "over",
    "under",
    "up",
    "down",
    "off",
    "aside",
    "as",
    "it",
    "its",
    "it's",
    "this",
    "that",
    "these",
    "those",
    "there",
    "here",
    "i",
    "im",
    "i'm",
    "me",
    "my",
    "you",
    "your",
    "we",
    "our",
    "they",
    "them",
    "their",
    "he",
    "she",
    "his",
    "her",
    "who",
    "what",
    "which",
    "when",
    "where",
    "why",
    "how",
    "any",
    "all",
    "some",
    "none",
    "no",
    "not",
    "more",
    "less",
    "most",
    "much",
    "many",
    "few",
    "each",
    "every",
    "other",
    "such",
    "same",
    "only",
    "just",
    "also",
    "very",
    "too",
    "still",
    "again",
    "well",
    "pretty",
    "quite",
    "really",
    "maybe",
    "now",
    "since",
    "while",
    "though",
    "although",
    "way",
    "free",
    "safe",
    "good",
    "bad",
    "new",
    "old",
    "expensive",
    "cheap",
    "faster",
    "fast",
    "slow",
    "further",
    "somewhat",
    "doubtful",
    "automatic",
    "thanks",
    "guyz",
    "yes",
    "yeah",
    "hello",
    "hi",
    "please",
    "one",
    "two",
    "can",
    "could",
    "would",
    "should",
    "will",
    "shall",
    "may",
    "might",
    "must",
    "don't",
    "doesn't",
    "didn't",
    "isn't",
    "won't",
    "can't",
];

const VERBS: &[&str] = &[
    "is",
    "are",
    "was",
    "were",
    "be",
    "been",
    "being",
    "am",
    "has",
    "have",
    "had",
    "do",
    "does",
    "did",
    "use",
    "uses",
    "used",
    "using",
    "try",
    "tried",
    "tries",
    "delete",
    "deleted",
    "clean",
    "cleans",
    "cleaned",
    "get",
    "gets",
    "got",
    "make",
    "makes",
    "made",
    "need",
    "needs",
    "needed",
    "want",
    "wants",
    "think",
    "thinks",
    "tend",
    "suggest",
    "suggested",
    "mention",
    "mentioned",
    "check",
    "checked",
    "uninstall",
    "uninstalled",
    "install",
    "installed",
    "work",
    "works",
    "worked",
    "found",
    "find",
    "fix",
    "fixes",
    "fixed",
    "cure",
    "run",
    "runs",
    "ran",
    "compress",
    "compressed",
    "uncompress",
    "remove",
    "removed",
    "suffer",
    "help",
    "helps",
    "helped",
    "having",
    "left",
    "depending",
    "breaks",
    "replaced",
    "updates",
    "blocks",
    "reset",
    "supports",
    "loads",
    "corrupts",
    "detects",
];

fn is_stopword(t: &str) -> bool {
    STOPWORDS.contains(&t)
}

fn is_verb(t: &str) -> bool {
    VERBS.contains(&t)
}

/// Normalized entity form: lowercase, trailing `s` dropped from words of
/// five or more characters.
pub fn normalize_entity(token: &str) -> String {
    let lower = token.to_lowercase();
    if lower.chars().count() >= 5 && lower.ends_with('s') {
        lower[..lower.len() - 1].to_string()
    } else {
        lower
    }
}

/// Collapse repeated entities to one mention with the strongest role
/// (S > O > X), keeping first-mention order.
fn collapse(mentions: impl IntoIterator<Item = EntityMention>) -> Vec<EntityMention> {
    let mut out: Vec<EntityMention> = Vec::new();
    for m in mentions {
        match out.iter_mut().find(|o| o.entity == m.entity) {
            Some(existing) => {
                if m.role.priority() > existing.role.priority() {
                    existing.role = m.role;
                }
            }
            None => out.push(m),
        }
    }
    out
}

/// Entities of a sentence with their roles.
///
/// Gold annotations win when present. Otherwise a verb-pivot heuristic runs
/// over the tokens: content words of three or more letters are entities, the
/// first one before the first verb is the subject, the first one after it the
/// object, and everything else is `X`.
pub fn tag_entities(sentence: &Sentence) -> Vec<EntityMention> {
    if let Some(ann) = &sentence.annotations {
        return collapse(ann.iter().cloned());
    }
    let verb_at = sentence.tokens.iter().position(|t| is_verb(t));
    let mut subject_taken = false;
    let mut object_taken = false;
    let mentions = sentence.tokens.iter().enumerate().filter_map(|(i, tok)| {
        if tok.chars().count() < 3 || is_stopword(tok) || is_verb(tok) {
            return None;
        }
        if !tok.chars().any(char::is_alphabetic) {
            return None;
        }
        let role = match verb_at {
            Some(v) if i < v && !subject_taken => {
                subject_taken = true;
                Role::S
            }
            Some(v) if i > v && !object_taken => {
                object_taken = true;
                Role::O
            }
            _ => Role::X,
        };
        Some(EntityMention::new(normalize_entity(tok), role))
    });
    collapse(mentions.collect::<Vec<_>>())
}

/// Token of a linearized grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum GridToken {
    S = 0,
    O = 1,
    X = 2,
    Absent = 3,
    Pad = 4,
}

impl GridToken {
    pub const VOCAB: [GridToken; 5] = [
        GridToken::S,
        GridToken::O,
        GridToken::X,
        GridToken::Absent,
        GridToken::Pad,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn symbol(self) -> &'static str {
        match self {
            GridToken::S => "S",
            GridToken::O => "O",
            GridToken::X => "X",
            GridToken::Absent => "-",
            GridToken::Pad => "PAD",
        }
    }
}

impl From<Role> for GridToken {
    fn from(r: Role) -> Self {
        match r {
            Role::S => GridToken::S,
            Role::O => GridToken::O,
            Role::X => GridToken::X,
            Role::Absent => GridToken::Absent,
        }
    }
}

/// Fixed-length token sequence fed to the scorer.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GridSequence(Vec<GridToken>);

impl GridSequence {
    pub fn new(tokens: Vec<GridToken>) -> Self {
        GridSequence(tokens)
    }

    pub fn all_pad(len: usize) -> Self {
        GridSequence(vec![GridToken::Pad; len])
    }

    pub fn tokens(&self) -> &[GridToken] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Length of the prefix before the trailing run of padding.
    pub fn content_len(&self) -> usize {
        self.0
            .iter()
            .rposition(|&t| t != GridToken::Pad)
            .map_or(0, |i| i + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConversationalGrid {
    pub entities: Vec<String>,
    /// `rows[depth][entity]` is the role string of that cell.
    pub rows: Vec<Vec<Vec<Role>>>,
}

impl ConversationalGrid {
    pub fn depth_count(&self) -> usize {
        self.rows.len()
    }

    pub fn cell(&self, depth: usize, entity: usize) -> String {
        self.rows[depth][entity]
            .iter()
            .map(|r| r.as_char())
            .collect()
    }

    pub fn cell_for(&self, depth: usize, entity: &str) -> Option<String> {
        let col = self.entities.iter().position(|e| e == entity)?;
        Some(self.cell(depth, col))
    }
}

impl fmt::Display for ConversationalGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let widths: Vec<usize> = self
            .entities
            .iter()
            .enumerate()
            .map(|(c, e)| {
                let cell_max = self.rows.iter().map(|r| r[c].len()).max().unwrap_or(0);
                e.len().max(cell_max)
            })
            .collect();
        write!(f, "depth")?;
        for (e, w) in self.entities.iter().zip(&widths) {
            write!(f, "  {:<w$}", e.to_uppercase(), w = *w)?;
        }
        writeln!(f)?;
        for d in 0..self.rows.len() {
            write!(f, "{d:>5}")?;
            for (c, w) in widths.iter().enumerate() {
                write!(f, "  {:<w$}", self.cell(d, c), w = *w)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Per-thread tagging, reusable across candidate trees.
///
/// Entity columns depend only on the text, so tagging happens once and each
/// candidate tree only reorders sentences.
#[derive(Clone, Debug)]
pub struct ThreadGrids {
    sizes: Vec<usize>,
    entities: Vec<String>,
    /// `roles[entity * n_sentences + node]`
    roles: Vec<Role>,
    n_sentences: usize,
}

impl ThreadGrids {
    pub fn new(thread: &Thread) -> Self {
        let sizes: Vec<usize> = thread.posts.iter().map(|p| p.sentences.len()).collect();
        let tagged: Vec<Vec<EntityMention>> = thread
            .posts
            .iter()
            .flat_map(|p| p.sentences.iter().map(tag_entities))
            .collect();
        let n_sentences = tagged.len();

        // (frequency, first mention) per entity
        let mut stats: HashMap<&str, (usize, usize)> = HashMap::new();
        let mut order = 0;
        for mentions in &tagged {
            for m in mentions {
                let e = stats.entry(m.entity.as_str()).or_insert((0, order));
                e.0 += 1;
                order += 1;
            }
        }
        let mut entities: Vec<(&str, (usize, usize))> = stats.into_iter().collect();
        entities.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.1 .1.cmp(&b.1 .1)));
        let entities: Vec<String> = entities.into_iter().map(|(e, _)| e.to_string()).collect();
        let column: HashMap<&str, usize> = entities
            .iter()
            .enumerate()
            .map(|(i, e)| (e.as_str(), i))
            .collect();

        let mut roles = vec![Role::Absent; entities.len() * n_sentences];
        for (node, mentions) in tagged.iter().enumerate() {
            for m in mentions {
                roles[column[m.entity.as_str()] * n_sentences + node] = m.role;
            }
        }
        ThreadGrids {
            sizes,
            entities,
            roles,
            n_sentences,
        }
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn sentence_tree(&self, parents: &ParentVector) -> Result<SentenceTree> {
        build_from_sizes(&self.sizes, parents)
    }

    fn levels(&self, parents: &ParentVector) -> Result<DepthLevels> {
        Ok(depth_levels(&self.sentence_tree(parents)?))
    }

    pub fn grid(&self, parents: &ParentVector) -> Result<ConversationalGrid> {
        let levels = self.levels(parents)?;
        let rows = levels
            .levels
            .iter()
            .map(|level| {
                (0..self.entities.len())
                    .map(|e| {
                        level
                            .iter()
                            .map(|&node| self.roles[e * self.n_sentences + node])
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(ConversationalGrid {
            entities: self.entities.clone(),
            rows,
        })
    }

    /// Same result as `linearize_grid(&self.grid(parents)?, len)` without
    /// materializing the grid.
    pub fn sequence(&self, parents: &ParentVector, len: usize) -> Result<GridSequence> {
        let levels = self.levels(parents)?;
        let order: Vec<usize> = levels.levels.into_iter().flatten().collect();
        let column_len = order.len();
        let columns = len
            .checked_div(column_len)
            .map_or(0, |c| c.min(self.entities.len()));
        let mut tokens = Vec::with_capacity(len);
        for e in 0..columns {
            let base = e * self.n_sentences;
            tokens.extend(
                order
                    .iter()
                    .map(|&node| GridToken::from(self.roles[base + node])),
            );
        }
        tokens.resize(len, GridToken::Pad);
        Ok(GridSequence(tokens))
    }
}

/// Conversational grid of `thread` read under the reply tree `parents`.
///
/// Columns are sorted by mention count (descending), ties by first mention.
pub fn build_grid(thread: &Thread, parents: &ParentVector) -> Result<ConversationalGrid> {
    ThreadGrids::new(thread).grid(parents)
}

/// Column-major flattening: each entity's cells in depth order, entity after
/// entity, padded to `len`. Trailing columns that do not fit are dropped whole.
pub fn linearize_grid(grid: &ConversationalGrid, len: usize) -> GridSequence {
    let mut tokens = Vec::with_capacity(len);
    for e in 0..grid.entities.len() {
        let column: Vec<GridToken> = grid
            .rows
            .iter()
            .flat_map(|row| row[e].iter().map(|&r| GridToken::from(r)))
            .collect();
        if tokens.len() + column.len() > len {
            break;
        }
        tokens.extend(column);
    }
    tokens.resize(len, GridToken::Pad);
    GridSequence(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{segment_sentences, Post};

    #[test]
    fn heuristic_subject_before_verb() {
        let s =
            &segment_sentences("regedit is free, but depending on which applications it were ..")
                [0];
        let m = tag_entities(s);
        assert_eq!(m[0], EntityMention::new("regedit", Role::S));
        // first content word after the verb takes the object slot
        assert_eq!(m[1], EntityMention::new("application", Role::O));
    }

    #[test]
    fn heuristic_object_after_verb() {
        let s = Sentence::new("use regedit to delete the bunch of junks you found.");
        let m = tag_entities(&s);
        assert_eq!(
            m,
            vec![
                EntityMention::new("regedit", Role::O),
                EntityMention::new("bunch", Role::X),
                EntityMention::new("junk", Role::X),
            ]
        );
    }

    #[test]
    fn empty_sentence_has_no_entities() {
        assert!(tag_entities(&Sentence::new("")).is_empty());
    }

    #[test]
    fn annotations_pass_through_with_collapse() {
        let s = Sentence::annotated(
            "x",
            vec![
                EntityMention::new("system", Role::O),
                EntityMention::new("system", Role::X),
                EntityMention::new("disk", Role::X),
                EntityMention::new("disk", Role::S),
            ],
        );
        assert_eq!(
            tag_entities(&s),
            vec![
                EntityMention::new("system", Role::O),
                EntityMention::new("disk", Role::S)
            ]
        );
    }

    #[test]
    fn tagging_is_deterministic() {
        let s = Sentence::new("the driver breaks the printer with the cable.");
        assert_eq!(tag_entities(&s), tag_entities(&s.clone()));
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_entity("Junks"), "junk");
        assert_eq!(normalize_entity("apps"), "apps");
        assert_eq!(normalize_entity("cleaners"), "cleaner");
    }

    fn grid_of(cells: Vec<Vec<&str>>, entities: &[&str]) -> ConversationalGrid {
        let parse =
            |s: &str| -> Vec<Role> { s.chars().map(|c| c.to_string().parse().unwrap()).collect() };
        ConversationalGrid {
            entities: entities.iter().map(|e| e.to_string()).collect(),
            rows: cells
                .into_iter()
                .map(|row| row.into_iter().map(parse).collect())
                .collect(),
        }
    }

    #[test]
    fn linearize_pads() {
        let g = grid_of(vec![vec!["O"], vec!["S"]], &["e"]);
        let seq = linearize_grid(&g, 4);
        use GridToken::*;
        assert_eq!(seq.tokens(), &[O, S, Pad, Pad]);
        assert_eq!(seq.content_len(), 2);
    }

    #[test]
    fn linearize_drops_whole_columns() {
        let long = "-".repeat(500);
        let g = grid_of(vec![vec![long.as_str(), long.as_str()]], &["a", "b"]);
        let seq = linearize_grid(&g, 768);
        assert_eq!(seq.content_len(), 500);
        assert!(seq.tokens()[500..].iter().all(|&t| t == GridToken::Pad));
    }

    #[test]
    fn no_entities_no_columns() {
        let t = Thread {
            thread_id: "t".into(),
            posts: vec![
                Post {
                    post_id: 1,
                    author: "a".into(),
                    sentences: vec![Sentence::new("is it")],
                },
                Post {
                    post_id: 2,
                    author: "b".into(),
                    sentences: vec![Sentence::new("yes")],
                },
            ],
            gold_parents: None,
        };
        let pv = ParentVector::all_first(2);
        let g = build_grid(&t, &pv).unwrap();
        assert!(g.entities.is_empty());
        assert_eq!(g.depth_count(), 2);
        assert_eq!(linearize_grid(&g, 8), GridSequence::all_pad(8));
    }
}
