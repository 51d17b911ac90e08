//! Reconstruction of forum reply trees from conversational entity grids.
//!
//! A thread is read under every chronologically valid reply tree. For each
//! candidate the sentences are arranged into a sentence-level conversation
//! tree, entity roles are collected per depth level into a grid, and a small
//! convolutional network scores the grid. The highest scoring candidate is the
//! predicted reply structure.
//!
//! The crate is organised as a pipeline:
//!
//! * [`corpus`]: thread data model, JSONL ingestion, sentence segmentation,
//!   synthetic corpora and splits.
//! * [`tree`]: sentence-level conversation trees, depth levels and candidate
//!   tree enumeration.
//! * [`grid`]: entity/role tagging, conversational grids and linearization.
//! * [`neural`]: the convolutional coherence scorer, its pairwise ranking
//!   trainer, gradient checking and model files.
//! * [`reconstruct`]: Grid-CNN prediction and the lexical/positional baselines.
//! * [`eval`]: tree- and edge-level metrics and report tables.
//! * [`cli`]: the `threadgrid` command line front end.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod grid;
pub mod neural;
pub mod reconstruct;
pub mod seed;
pub mod tree;

pub use corpus::{ParentVector, Post, Role, Sentence, Thread};
pub use error::{Error, Result};
