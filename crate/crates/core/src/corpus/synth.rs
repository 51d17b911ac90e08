//! Seeded synthetic forum threads.
//!
//! Each thread gets a reply tree drawn uniformly from the valid trees. The
//! text carries the tree through entity roles: every post closes by
//! introducing a "hook" entity as object, a reply opens with its parent's
//! hook as subject, and posts in one branch keep returning to a
//! branch-specific entity set. A small thread-wide vocabulary and filler words
//! appear everywhere, so raw word overlap is a noisy cue for the parent.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{EntityMention, ParentVector, Post, Role, Sentence, Thread};
use crate::error::{Error, Result};
use crate::seed;

const NOUNS: &[&str] = &[
    "registry",
    "cleaner",
    "driver",
    "printer",
    "router",
    "modem",
    "laptop",
    "monitor",
    "keyboard",
    "mouse",
    "battery",
    "charger",
    "adapter",
    "cable",
    "firmware",
    "bios",
    "kernel",
    "browser",
    "plugin",
    "toolbar",
    "antivirus",
    "firewall",
    "password",
    "account",
    "profile",
    "desktop",
    "folder",
    "archive",
    "backup",
    "partition",
    "drive",
    "disk",
    "memory",
    "processor",
    "fan",
    "heatsink",
    "motherboard",
    "chipset",
    "card",
    "speaker",
    "headset",
    "microphone",
    "webcam",
    "scanner",
    "camera",
    "phone",
    "tablet",
    "screen",
    "pixel",
    "resolution",
    "codec",
    "player",
    "playlist",
    "library",
    "installer",
    "update",
    "patch",
    "service",
    "process",
    "task",
    "scheduler",
    "log",
    "error",
    "warning",
    "crash",
    "freeze",
    "reboot",
    "shutdown",
    "startup",
    "login",
    "session",
    "network",
    "signal",
    "channel",
    "bandwidth",
    "server",
    "client",
    "proxy",
    "domain",
    "certificate",
    "email",
    "inbox",
    "attachment",
    "spam",
    "filter",
    "rule",
    "macro",
    "spreadsheet",
    "document",
    "template",
    "font",
    "icon",
    "shortcut",
    "menu",
    "setting",
    "option",
    "preference",
    "license",
    "subscription",
    "warranty",
    "receipt",
    "vendor",
    "store",
    "refund",
    "model",
    "version",
    "edition",
    "manual",
    "forum",
    "thread",
    "answer",
    "question",
    "solution",
    "workaround",
    "trick",
    "guide",
    "tutorial",
    "script",
    "command",
    "terminal",
    "shell",
    "console",
    "emulator",
    "image",
    "snapshot",
    "clone",
    "mirror",
    "sector",
    "cluster",
    "bootloader",
    "recovery",
    "virus",
    "trojan",
    "worm",
    "spyware",
    "adware",
    "popup",
    "cookie",
    "cache",
    "history",
    "bookmark",
    "tab",
    "window",
    "dialog",
    "button",
    "slider",
    "switch",
];

const VERBS: &[&str] = &[
    "fixes",
    "breaks",
    "needs",
    "replaced",
    "updates",
    "blocks",
    "checked",
    "removed",
    "installed",
    "reset",
    "supports",
    "loads",
    "cleans",
    "corrupts",
    "detects",
];

const FILLER: &[&str] = &[
    "the", "a", "it", "i", "you", "and", "but", "so", "just", "really", "still", "maybe", "also",
    "then", "now", "again", "well", "pretty", "quite", "very", "thanks", "hope", "think", "try",
];

/// Knobs for [`generate_synthetic_corpus`].
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub threads: usize,
    pub min_posts: usize,
    pub max_posts: usize,
    pub min_sentences: usize,
    pub max_sentences: usize,
    /// Size of the entity set each branch keeps returning to.
    pub entities_per_branch: usize,
    /// Probability that a role cue follows the tree (reply opens on the
    /// parent's hook, branch entity kept as subject).
    pub cohesion: f64,
    /// Thread-wide entities mentioned across all branches.
    pub shared_entities: usize,
    /// Per-sentence probability of an extra thread-wide mention.
    pub shared_rate: f64,
    /// Filler words appended to each sentence, inclusive range.
    pub filler: (usize, usize),
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            threads: 2200,
            min_posts: 2,
            max_posts: 5,
            min_sentences: 2,
            max_sentences: 3,
            entities_per_branch: 2,
            cohesion: 0.9,
            shared_entities: 3,
            shared_rate: 0.5,
            filler: (2, 6),
        }
    }
}

impl GeneratorConfig {
    pub fn with_threads(threads: usize) -> Self {
        GeneratorConfig {
            threads,
            ..Default::default()
        }
    }

    fn entities_needed(&self) -> usize {
        // hooks + one set per branch (root included) + shared
        self.max_posts + self.max_posts * self.entities_per_branch + self.shared_entities
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::validation(format!("generator config: {m}")));
        if self.min_posts < 1 || self.min_posts > self.max_posts {
            return bad("need 1 <= min_posts <= max_posts");
        }
        if self.min_sentences < 1 || self.min_sentences > self.max_sentences {
            return bad("need 1 <= min_sentences <= max_sentences");
        }
        if self.entities_per_branch < 1 {
            return bad("entities_per_branch must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.cohesion) || !(0.0..=1.0).contains(&self.shared_rate) {
            return bad("probabilities must lie in [0, 1]");
        }
        if self.filler.0 > self.filler.1 {
            return bad("filler range is reversed");
        }
        if self.entities_needed() > NOUNS.len() {
            return bad("too many entities requested per thread");
        }
        Ok(())
    }
}

/// Generate `config.threads` threads; identical `(config, seed)` gives an
/// identical corpus.
pub fn generate_synthetic_corpus(config: &GeneratorConfig, seed: u64) -> Result<Vec<Thread>> {
    config.validate()?;
    Ok((0..config.threads)
        .map(|i| {
            let mut rng = seed::rng(seed::derive_indexed(seed, "synth-thread", i as u64));
            generate_thread(config, format!("synth-{i:05}"), &mut rng)
        })
        .collect())
}

fn generate_thread(cfg: &GeneratorConfig, thread_id: String, rng: &mut ChaCha8Rng) -> Thread {
    let n = rng.gen_range(cfg.min_posts..=cfg.max_posts);
    let mut parents = vec![0usize; n];
    for (i, p) in parents.iter_mut().enumerate().skip(1) {
        *p = rng.gen_range(1..=i);
    }

    let mut pool: Vec<&str> = NOUNS.to_vec();
    pool.shuffle(rng);
    let mut pool = pool.into_iter();
    let hooks: Vec<&str> = pool.by_ref().take(n).collect();
    // branch sets indexed by post id of the branch head (index 0 = the opening post)
    let branch_sets: Vec<Vec<&str>> = (0..n)
        .map(|_| pool.by_ref().take(cfg.entities_per_branch).collect())
        .collect();
    let shared: Vec<&str> = pool.by_ref().take(cfg.shared_entities).collect();

    // branch head of each post: the child of the root on its path, or the root itself
    let mut head = vec![0usize; n];
    for i in 1..n {
        let p = parents[i] - 1;
        head[i] = if p == 0 { i } else { head[p] };
    }

    let authors = ["alice", "bob", "carol", "dave", "erin", "frank"];
    let posts = (0..n)
        .map(|i| {
            let branch = &branch_sets[head[i]];
            let len = rng.gen_range(cfg.min_sentences..=cfg.max_sentences);
            let sentences = (0..len)
                .map(|t| {
                    let mut mentions = Vec::new();
                    if t == 0 {
                        let subject = if i > 0 && rng.gen_bool(cfg.cohesion) {
                            hooks[parents[i] - 1]
                        } else {
                            branch[rng.gen_range(0..branch.len())]
                        };
                        mentions.push(EntityMention::new(subject, Role::S));
                    } else {
                        let e = branch[rng.gen_range(0..branch.len())];
                        let role = if rng.gen_bool(cfg.cohesion) {
                            Role::S
                        } else {
                            Role::X
                        };
                        mentions.push(EntityMention::new(e, role));
                    }
                    if t + 1 == len {
                        mentions.push(EntityMention::new(hooks[i], Role::O));
                    }
                    if !shared.is_empty() && rng.gen_bool(cfg.shared_rate) {
                        let e = shared[rng.gen_range(0..shared.len())];
                        mentions.push(EntityMention::new(e, Role::X));
                    }
                    let text = render(&mentions, cfg.filler, rng);
                    Sentence::annotated(text, mentions)
                })
                .collect();
            Post {
                post_id: i + 1,
                author: authors[rng.gen_range(0..authors.len())].to_string(),
                sentences,
            }
        })
        .collect();

    Thread {
        thread_id,
        posts,
        gold_parents: Some(ParentVector::from_raw_unchecked(parents)),
    }
}

/// Surface text: `<subject> <verb> the <object> with the <other> ...` plus filler.
fn render(mentions: &[EntityMention], filler: (usize, usize), rng: &mut ChaCha8Rng) -> String {
    let mut words: Vec<String> = Vec::new();
    let pick = |role: Role| mentions.iter().filter(move |m| m.role == role);
    for m in pick(Role::S) {
        words.push("the".into());
        words.push(m.entity.clone());
    }
    words.push(VERBS[rng.gen_range(0..VERBS.len())].into());
    for m in pick(Role::O) {
        words.push("the".into());
        words.push(m.entity.clone());
    }
    for m in pick(Role::X) {
        words.push("with".into());
        words.push("the".into());
        words.push(m.entity.clone());
    }
    for _ in 0..rng.gen_range(filler.0..=filler.1) {
        words.push(FILLER[rng.gen_range(0..FILLER.len())].into());
    }
    let mut text = words.join(" ");
    text.push('.');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{load_corpus, write_corpus};

    #[test]
    fn zero_threads_is_empty() {
        let cfg = GeneratorConfig::with_threads(0);
        assert!(generate_synthetic_corpus(&cfg, 1).unwrap().is_empty());
    }

    #[test]
    fn same_seed_same_bytes() {
        let cfg = GeneratorConfig::with_threads(30);
        let a = generate_synthetic_corpus(&cfg, 5).unwrap();
        let b = generate_synthetic_corpus(&cfg, 5).unwrap();
        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        write_corpus(&mut ba, &a).unwrap();
        write_corpus(&mut bb, &b).unwrap();
        assert_eq!(ba, bb);
        let c = generate_synthetic_corpus(&cfg, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generated_threads_are_valid_and_reload() {
        let cfg = GeneratorConfig::with_threads(100);
        let corpus = generate_synthetic_corpus(&cfg, 11).unwrap();
        for t in &corpus {
            t.validate().unwrap();
            let gold = t.gold_parents.as_ref().unwrap();
            ParentVector::new(gold.as_slice().to_vec()).unwrap();
            assert!((2..=5).contains(&t.len()));
        }
        let mut buf = Vec::new();
        write_corpus(&mut buf, &corpus).unwrap();
        assert_eq!(load_corpus(buf.as_slice()).unwrap(), corpus);
    }

    #[test]
    fn mean_post_count_near_three_and_a_half() {
        let corpus = generate_synthetic_corpus(&GeneratorConfig::with_threads(2200), 2).unwrap();
        assert_eq!(corpus.len(), 2200);
        let mean = corpus.iter().map(Thread::len).sum::<usize>() as f64 / 2200.0;
        assert!((mean - 3.5).abs() < 0.1, "mean {mean}");
    }

    #[test]
    fn invalid_ranges_rejected() {
        let mut cfg = GeneratorConfig::with_threads(1);
        cfg.min_posts = 6;
        assert!(generate_synthetic_corpus(&cfg, 0).is_err());
        let mut cfg = GeneratorConfig::with_threads(1);
        cfg.cohesion = 1.5;
        assert!(generate_synthetic_corpus(&cfg, 0).is_err());
        let mut cfg = GeneratorConfig::with_threads(1);
        cfg.min_sentences = 0;
        assert!(generate_synthetic_corpus(&cfg, 0).is_err());
    }
}
