//! Line-delimited JSON thread records.
//!
//! ```text
//! {"thread_id":"t1","posts":[{"post_id":1,"author":"a","text":"..."}, ...],"parents":[null,1,1]}
//! ```
//!
//! A post carries either raw `text` (segmented on load) or pre-segmented
//! `sentences`, each with optional `annotations` given as `[entity, role]`
//! pairs. `parents` is optional; the root entry may be `0` or `null`.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{segment_sentences, EntityMention, ParentVector, Post, Role, Sentence, Thread};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct ThreadRecord {
    thread_id: String,
    posts: Vec<PostRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parents: Option<Vec<Option<usize>>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PostRecord {
    post_id: usize,
    #[serde(default)]
    author: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sentences: Option<Vec<SentenceRecord>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SentenceRecord {
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    annotations: Option<Vec<(String, String)>>,
}

fn convert_sentence(rec: SentenceRecord) -> Result<Sentence> {
    let annotations = match rec.annotations {
        None => None,
        Some(pairs) => Some(
            pairs
                .into_iter()
                .map(|(entity, role)| {
                    let entity = entity.trim().to_lowercase();
                    if entity.is_empty() {
                        return Err(Error::validation("annotated entity is empty"));
                    }
                    let role: Role = role.parse()?;
                    if role == Role::Absent {
                        return Err(Error::validation(format!(
                            "annotation for {entity:?} must be S, O or X"
                        )));
                    }
                    Ok(EntityMention::new(entity, role))
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    let mut sentence = Sentence::new(rec.text);
    sentence.annotations = annotations;
    Ok(sentence)
}

fn convert_post(rec: PostRecord) -> Result<Post> {
    let mut sentences = match (rec.sentences, rec.text) {
        (Some(recs), _) => recs
            .into_iter()
            .map(convert_sentence)
            .collect::<Result<Vec<_>>>()?,
        (None, Some(text)) => segment_sentences(&text),
        (None, None) => Vec::new(),
    };
    // An empty post still occupies one (empty) sentence slot in the tree.
    if sentences.is_empty() {
        sentences.push(Sentence::new(""));
    }
    Ok(Post {
        post_id: rec.post_id,
        author: rec.author,
        sentences,
    })
}

fn convert_thread(rec: ThreadRecord) -> Result<Thread> {
    let posts = rec
        .posts
        .into_iter()
        .map(convert_post)
        .collect::<Result<Vec<_>>>()?;
    let gold_parents = rec
        .parents
        .map(|ps| ParentVector::new(ps.into_iter().map(|p| p.unwrap_or(0)).collect()))
        .transpose()?;
    let thread = Thread {
        thread_id: rec.thread_id,
        posts,
        gold_parents,
    };
    thread.validate()?;
    Ok(thread)
}

/// Parse one record line.
pub fn parse_thread(line: &str) -> Result<Thread> {
    let rec: ThreadRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
        line: 0,
        message: e.to_string(),
    })?;
    convert_thread(rec)
}

/// Read every thread record from a line-delimited stream, in order.
/// Blank lines are skipped.
pub fn load_corpus<R: BufRead>(reader: R) -> Result<Vec<Thread>> {
    let mut threads = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let thread = parse_thread(&line).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                line: lineno,
                message,
            },
            Error::Validation(msg) => Error::Validation(format!("line {lineno}: {msg}")),
            other => other,
        })?;
        threads.push(thread);
    }
    Ok(threads)
}

pub fn read_corpus_file(path: &Path) -> Result<Vec<Thread>> {
    load_corpus(BufReader::new(File::open(path)?))
}

/// Render a thread as one record line (no trailing newline). Sentences are
/// always written pre-segmented so a reload reproduces the same thread.
pub fn serialize_thread(thread: &Thread) -> String {
    let rec = ThreadRecord {
        thread_id: thread.thread_id.clone(),
        posts: thread
            .posts
            .iter()
            .map(|p| PostRecord {
                post_id: p.post_id,
                author: p.author.clone(),
                text: None,
                sentences: Some(
                    p.sentences
                        .iter()
                        .map(|s| SentenceRecord {
                            text: s.text.clone(),
                            annotations: s.annotations.as_ref().map(|a| {
                                a.iter()
                                    .map(|m| (m.entity.clone(), m.role.to_string()))
                                    .collect()
                            }),
                        })
                        .collect(),
                ),
            })
            .collect(),
        parents: thread.gold_parents.as_ref().map(|pv| {
            pv.as_slice()
                .iter()
                .map(|&p| if p == 0 { None } else { Some(p) })
                .collect()
        }),
    };
    serde_json::to_string(&rec).expect("thread records always serialize")
}

pub fn write_corpus<W: Write>(mut writer: W, threads: &[Thread]) -> Result<()> {
    for t in threads {
        writeln!(writer, "{}", serialize_thread(t))?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1_LINE: &str = r#"{"thread_id":"cnet-1","posts":[
        {"post_id":1,"author":"barspinboy","text":"is there any way i could clean my registry aside from expensive registry cleaners."},
        {"post_id":2,"author":"kees bakker","text":"use regedit to delete the bunch of junks you found."},
        {"post_id":3,"author":"willy","text":"i tend to use ccleaner as a registry cleaner."},
        {"post_id":4,"author":"caktus","text":"try regseeker. it's free and pretty safe to use automatic."},
        {"post_id":5,"author":"barspinboy","text":"thanks guyz!"}],
        "parents":[null,1,1,1,4]}"#;

    fn one_line(s: &str) -> String {
        s.lines().map(str::trim).collect::<Vec<_>>().join("")
    }

    #[test]
    fn loads_gold_parents() {
        let threads = load_corpus(one_line(FIG1_LINE).as_bytes()).unwrap();
        assert_eq!(threads.len(), 1);
        let t = &threads[0];
        assert_eq!(
            t.gold_parents,
            Some(ParentVector::new(vec![0, 1, 1, 1, 4]).unwrap())
        );
        assert_eq!(t.posts[3].sentences.len(), 2);
    }

    #[test]
    fn empty_stream_is_empty_corpus() {
        assert!(load_corpus("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn self_reply_is_rejected() {
        let line = r#"{"thread_id":"t","posts":[{"post_id":1,"author":"a","text":"x"},{"post_id":2,"author":"b","text":"y"},{"post_id":3,"author":"c","text":"z"},{"post_id":4,"author":"d","text":"w"}],"parents":[null,1,3,2]}"#;
        let err = load_corpus(line.as_bytes()).unwrap_err();
        assert!(
            matches!(err, Error::Validation(ref m) if m.starts_with("line 1")),
            "{err}"
        );
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let input = format!("{}\n{{not json\n", one_line(FIG1_LINE));
        match load_corpus(input.as_bytes()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn non_consecutive_ids_are_rejected() {
        let line = r#"{"thread_id":"t","posts":[{"post_id":1,"author":"a","text":"x"},{"post_id":3,"author":"b","text":"y"}]}"#;
        assert!(matches!(
            load_corpus(line.as_bytes()).unwrap_err(),
            Error::Validation(_)
        ));
    }

    #[test]
    fn annotations_and_zero_root() {
        let line = r#"{"thread_id":"t","posts":[{"post_id":1,"author":"a","sentences":[{"text":"The System works.","annotations":[["System","S"],["disk","X"]]}]},{"post_id":2,"author":"b","text":""}],"parents":[0,1]}"#;
        let t = &load_corpus(line.as_bytes()).unwrap()[0];
        let ann = t.posts[0].sentences[0].annotations.as_ref().unwrap();
        assert_eq!(ann[0], EntityMention::new("system", Role::S));
        assert_eq!(t.posts[1].sentences.len(), 1);
        assert!(t.posts[1].sentences[0].tokens.is_empty());
        let bad = line.replace("\"X\"", "\"Q\"");
        assert!(load_corpus(bad.as_bytes()).is_err());
    }

    #[test]
    fn serialize_then_load_is_identity() {
        let threads = load_corpus(one_line(FIG1_LINE).as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_corpus(&mut buf, &threads).unwrap();
        let again = load_corpus(buf.as_slice()).unwrap();
        assert_eq!(threads, again);
    }
}
