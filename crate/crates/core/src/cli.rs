//! `threadgrid` command line.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 I/O error.
//! Diagnostics go to stderr; data goes to stdout or `--out`.

use std::collections::{BTreeSet, HashMap};
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::corpus::{
    generate_synthetic_corpus, load_corpus, read_corpus_file, split_corpus, write_corpus,
    CorpusSplit, GeneratorConfig, ParentVector, SplitCounts, Thread,
};
use crate::error::{Error, Result};
use crate::eval::{align, score_predictions, Report};
use crate::grid::ThreadGrids;
use crate::neural::{
    gradient_check, init_model, load_model_file, make_training_pairs, save_model_file, train_with,
    HyperParams, Pooling, GRADCHECK_EPSILON,
};
use crate::reconstruct::{Strategy, StrategyKind};
use crate::seed;
use crate::tree::{candidate_count, enumerate_candidate_trees};

#[derive(Debug, Parser)]
#[command(
    name = "threadgrid",
    version,
    about = "Reconstruct forum reply trees with entity-grid coherence"
)]
struct Cli {
    /// Root seed; every stochastic stage derives its own stream from it.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus with gold reply trees.
    Synth(SynthArgs),
    /// Parse a corpus and report how many threads it holds.
    #[command(alias = "synth-check")]
    Check {
        /// Corpus file; stdin when omitted or `-`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Print the conversational entity grid of one thread.
    Gridify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        thread: String,
        /// Reply tree, e.g. `1,1,1,4`; defaults to the gold tree.
        #[arg(long)]
        parents: Option<String>,
    },
    /// Count (and optionally list) the candidate reply trees of an N-post thread.
    Enumerate {
        #[arg(long)]
        posts: usize,
        #[arg(long)]
        list: bool,
    },
    /// Train the Grid-CNN scorer.
    Train(TrainArgs),
    /// Predict reply trees with a strategy.
    Predict(PredictArgs),
    /// Score prediction files against gold trees.
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long = "pred", required = true)]
        preds: Vec<PathBuf>,
        /// Also write the report as JSON lines.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare analytic and finite-difference gradients of a trained model.
    Gradcheck {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 250)]
        samples: usize,
        #[arg(long, default_value_t = GRADCHECK_EPSILON)]
        epsilon: f64,
    },
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 2200)]
    threads: usize,
    #[arg(long, default_value_t = 2)]
    min_posts: usize,
    #[arg(long, default_value_t = 5)]
    max_posts: usize,
    #[arg(long, default_value_t = 2)]
    min_sentences: usize,
    #[arg(long, default_value_t = 3)]
    max_sentences: usize,
    #[arg(long, default_value_t = 2)]
    entities_per_branch: usize,
    #[arg(long, default_value_t = 0.9)]
    cohesion: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// Training threads (default: 15/22 of the corpus).
    #[arg(long)]
    train_size: Option<usize>,
    /// Dev threads (default: 2/22 of the corpus).
    #[arg(long)]
    dev_size: Option<usize>,
}

impl SplitArgs {
    fn counts(&self, total: usize) -> SplitCounts {
        let d = SplitCounts::proportional(total);
        SplitCounts::new(
            self.train_size.unwrap_or(d.train),
            self.dev_size.unwrap_or(d.dev),
        )
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long, default_value_t = 64)]
    batch: usize,
    #[arg(long, default_value_t = 100)]
    emb: usize,
    #[arg(long, default_value_t = 0.5)]
    dropout: f64,
    #[arg(long, default_value_t = 150)]
    filters: usize,
    #[arg(long, default_value_t = 6)]
    window: usize,
    #[arg(long, default_value_t = 6)]
    pool: usize,
    /// Max-pool over the whole feature map instead of chunks.
    #[arg(long)]
    global_pool: bool,
    #[arg(long, default_value_t = 768)]
    seq_len: usize,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    #[arg(long, default_value_t = 25)]
    epochs: usize,
    #[arg(long, default_value_t = 10)]
    patience: usize,
    #[arg(long, default_value_t = 20)]
    negatives: usize,
}

impl TrainArgs {
    fn hyperparams(&self) -> HyperParams {
        HyperParams {
            batch: self.batch,
            emb_dim: self.emb,
            dropout: self.dropout,
            filters: self.filters,
            window: self.window,
            pool: self.pool,
            pooling: if self.global_pool {
                Pooling::Global
            } else {
                Pooling::Chunked
            },
            seq_len: self.seq_len,
            learning_rate: self.lr,
            max_epochs: self.epochs,
            patience: self.patience,
            negatives: self.negatives,
            ..HyperParams::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
enum Subset {
    All,
    Train,
    Dev,
    Test,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    strategy: String,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Which part of the seeded split to predict (same seed and sizes as `train`).
    #[arg(long, value_enum, default_value_t = Subset::All)]
    subset: Subset,
    #[command(flatten)]
    split: SplitArgs,
}

/// One line of a prediction file.
#[derive(Debug, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub thread_id: String,
    pub parents: Vec<Option<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

fn to_record_parents(pv: &ParentVector) -> Vec<Option<usize>> {
    pv.as_slice()
        .iter()
        .map(|&p| if p == 0 { None } else { Some(p) })
        .collect()
}

fn out_writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn split_for(seed: u64, threads: &[Thread], args: &SplitArgs) -> Result<CorpusSplit> {
    split_corpus(
        threads,
        args.counts(threads.len()),
        seed::derive(seed, "split"),
    )
}

fn cmd_synth(root: u64, a: &SynthArgs) -> Result<()> {
    let cfg = GeneratorConfig {
        threads: a.threads,
        min_posts: a.min_posts,
        max_posts: a.max_posts,
        min_sentences: a.min_sentences,
        max_sentences: a.max_sentences,
        entities_per_branch: a.entities_per_branch,
        cohesion: a.cohesion,
        ..GeneratorConfig::default()
    };
    let corpus = generate_synthetic_corpus(&cfg, seed::derive(root, "corpus"))?;
    write_corpus(out_writer(a.out.as_deref())?, &corpus)
}

fn cmd_check(input: Option<&Path>) -> Result<()> {
    let threads = match input {
        Some(p) if p != Path::new("-") => read_corpus_file(p)?,
        _ => load_corpus(io::stdin().lock())?,
    };
    let posts: usize = threads.iter().map(Thread::len).sum();
    println!("{} threads, {} posts", threads.len(), posts);
    Ok(())
}

fn find_thread(threads: Vec<Thread>, id: &str) -> Result<Thread> {
    threads
        .into_iter()
        .find(|t| t.thread_id == id)
        .ok_or_else(|| Error::validation(format!("no thread {id:?} in the corpus")))
}

fn cmd_gridify(input: &Path, id: &str, parents: Option<&str>) -> Result<()> {
    let thread = find_thread(read_corpus_file(input)?, id)?;
    let tree = match parents {
        Some(text) => ParentVector::parse(text, Some(thread.len()))?,
        None => thread.gold_parents.clone().ok_or_else(|| {
            Error::validation(format!("thread {id:?} has no gold tree; pass --parents"))
        })?,
    };
    let grid = ThreadGrids::new(&thread).grid(&tree)?;
    print!("{grid}");
    Ok(())
}

fn cmd_enumerate(posts: usize, list: bool) -> Result<()> {
    let mut out = io::stdout().lock();
    if !list {
        if posts == 0 {
            return Err(Error::validation("a thread needs at least one post"));
        }
        writeln!(out, "{}", candidate_count(posts))?;
        return Ok(());
    }
    let all = enumerate_candidate_trees(posts)?;
    writeln!(out, "{}", all.len())?;
    for pv in all {
        writeln!(out, "{pv}")?;
    }
    Ok(())
}

fn cmd_train(root: u64, a: &TrainArgs) -> Result<()> {
    let corpus = read_corpus_file(&a.input)?;
    let split = split_for(root, &corpus, &a.split)?;
    eprintln!(
        "split: {} train / {} dev / {} test",
        split.train.len(),
        split.dev.len(),
        split.test.len()
    );
    let model = init_model(a.hyperparams(), seed::derive(root, "model"))?;
    let mut stdout = io::stdout().lock();
    let mut log_err = None;
    let (model, report) = train_with(model, &split, |stats| {
        if let Err(e) = writeln!(
            stdout,
            "{}",
            serde_json::to_string(stats).expect("serializable")
        ) {
            log_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = log_err {
        return Err(e.into());
    }
    save_model_file(&model, &a.out)?;
    writeln!(
        stdout,
        "{}",
        serde_json::json!({"best_epoch": report.best_epoch, "stop": report.stop, "epochs": report.epochs.len()})
    )?;
    Ok(())
}

fn cmd_predict(root: u64, a: &PredictArgs) -> Result<()> {
    let kind: StrategyKind = a.strategy.parse()?;
    let strategy = match kind {
        StrategyKind::GridCnn => {
            let path = a
                .model
                .as_ref()
                .ok_or_else(|| Error::validation("grid-cnn needs --model"))?;
            Strategy::GridCnn(Box::new(load_model_file(path)?))
        }
        StrategyKind::AllPrevious => Strategy::AllPrevious,
        StrategyKind::AllFirst => Strategy::AllFirst,
        StrategyKind::CosSim => Strategy::CosSim,
    };
    let corpus = read_corpus_file(&a.input)?;
    let threads = match a.subset {
        Subset::All => corpus,
        subset => {
            let split = split_for(root, &corpus, &a.split)?;
            match subset {
                Subset::Train => split.train,
                Subset::Dev => split.dev,
                _ => split.test,
            }
        }
    };
    let mut out = out_writer(Some(&a.out))?;
    for t in &threads {
        let p = strategy.predict(t)?;
        let rec = PredictionRecord {
            thread_id: t.thread_id.clone(),
            parents: to_record_parents(&p.parents),
            strategy: Some(kind.name().to_string()),
            score: p.score,
        };
        writeln!(
            out,
            "{}",
            serde_json::to_string(&rec).expect("serializable")
        )?;
    }
    out.flush()?;
    eprintln!("{} predictions written", threads.len());
    Ok(())
}

fn read_predictions(path: &Path) -> Result<(String, HashMap<String, ParentVector>)> {
    let reader = BufReader::new(File::open(path)?);
    let mut label = None;
    let mut preds = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let pv = ParentVector::new(rec.parents.iter().map(|p| p.unwrap_or(0)).collect())
            .map_err(|e| Error::validation(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if label.is_none() {
            label = rec.strategy.clone();
        }
        if preds.insert(rec.thread_id.clone(), pv).is_some() {
            return Err(Error::validation(format!(
                "{}: duplicate prediction for {:?}",
                path.display(),
                rec.thread_id
            )));
        }
    }
    let label = label.unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string())
    });
    Ok((label, preds))
}

fn cmd_evaluate(gold: &Path, preds: &[PathBuf], out: Option<&Path>) -> Result<()> {
    let gold = read_corpus_file(gold)?;
    let mut report = Report::default();
    let mut ids: Option<BTreeSet<String>> = None;
    for path in preds {
        let (label, map) = read_predictions(path)?;
        let these: BTreeSet<String> = map.keys().cloned().collect();
        match &ids {
            None => ids = Some(these),
            Some(prev) if *prev != these => {
                let missing = prev
                    .symmetric_difference(&these)
                    .next()
                    .cloned()
                    .unwrap_or_default();
                return Err(Error::validation(format!(
                    "{}: prediction sets differ (e.g. thread {missing:?})",
                    path.display()
                )));
            }
            Some(_) => {}
        }
        let (p, g) = align(&gold, &map)?;
        report.push(label, score_predictions(&p, &g)?);
    }
    print!("{report}");
    if let Some(path) = out {
        let mut w = out_writer(Some(path))?;
        for row in &report.rows {
            writeln!(w, "{}", serde_json::to_string(row).expect("serializable"))?;
        }
        w.flush()?;
    }
    Ok(())
}

fn cmd_gradcheck(
    root: u64,
    model: &Path,
    input: &Path,
    samples: usize,
    epsilon: f64,
) -> Result<()> {
    let mut model = load_model_file(model)?;
    model.hp.dropout = 0.0;
    let corpus = read_corpus_file(input)?;
    for (i, thread) in corpus.iter().enumerate() {
        if thread.gold_parents.is_none() || thread.len() < 3 {
            continue;
        }
        let grids = ThreadGrids::new(thread);
        for (gold, neg) in
            make_training_pairs(thread, 4, seed::derive_indexed(root, "gradcheck", i as u64))?
        {
            let pos = grids.sequence(&gold, model.hp.seq_len)?;
            let neg = grids.sequence(&neg, model.hp.seq_len)?;
            let loss = crate::neural::ranking_loss(
                model.score(&pos, false, 0)?,
                model.score(&neg, false, 0)?,
            );
            if loss <= 1e-6 {
                continue;
            }
            match gradient_check(
                &model,
                &pos,
                &neg,
                epsilon,
                samples,
                seed::derive(root, "gradcheck"),
            ) {
                Ok(err) => {
                    println!("thread {} max relative error {err:.3e}", thread.thread_id);
                    return Ok(());
                }
                Err(Error::Validation(_)) => continue,
                Err(e) => return Err(e),
            }
        }
    }
    Err(Error::validation(
        "no thread offered a pair with an active hinge; nothing to check",
    ))
}

fn dispatch(cli: Cli) -> Result<()> {
    let root = cli.seed;
    match cli.command {
        Command::Synth(a) => cmd_synth(root, &a),
        Command::Check { input } => cmd_check(input.as_deref()),
        Command::Gridify {
            input,
            thread,
            parents,
        } => cmd_gridify(&input, &thread, parents.as_deref()),
        Command::Enumerate { posts, list } => cmd_enumerate(posts, list),
        Command::Train(a) => cmd_train(root, &a),
        Command::Predict(a) => cmd_predict(root, &a),
        Command::Evaluate { gold, preds, out } => cmd_evaluate(&gold, &preds, out.as_deref()),
        Command::Gradcheck {
            model,
            input,
            samples,
            epsilon,
        } => cmd_gradcheck(root, &model, &input, samples, epsilon),
    }
}

/// Parse `args` (program name first) and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => 2,
                _ => 1,
            }
        }
    }
}
