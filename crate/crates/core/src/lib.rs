//! Topic modeling by message passing.
//!
//! This crate learns latent Dirichlet allocation and two of its variants on
//! sparse bag-of-words corpora. Three interchangeable update rules drive the
//! same training loop: loopy belief propagation (synchronous or
//! asynchronous), collapsed Gibbs sampling, and variational Bayes. Labeled
//! LDA restricts documents to labeled topic sets; the author-topic model
//! moves the document side of the factorization onto authors.
//!
//! ```
//! use std::io::Cursor;
//! use topicbp::corpus::parse_docword;
//! use topicbp::engine::{self, Algorithm, Hyperparameters, Schedule, TrainOptions};
//!
//! let corpus = parse_docword(Cursor::new("2\n3\n4\n1 1 2\n1 2 1\n2 2 1\n2 3 2\n"))?;
//! let hp = Hyperparameters::with_defaults(2);
//! let opts = TrainOptions { iters: 50, ..TrainOptions::default() };
//! let (model, _) = engine::train(
//!     &corpus, &hp, Algorithm::Bp, Schedule::Sync, &opts,
//!     |iteration, perplexity| eprintln!("{iteration}: {perplexity:.6}"),
//! );
//! assert_eq!(model.theta.nrows(), corpus.num_docs());
//! # Ok::<(), topicbp::corpus::CorpusError>(())
//! ```

pub mod atm;
pub mod corpus;
pub mod engine;
pub mod eval;
pub mod lalda;
pub mod synth;
pub mod updaters;

pub use corpus::{SparseCorpus, Vocabulary};
pub use engine::{
    Aggregates, Algorithm, Hyperparameters, LatentState, MessageBoard, Schedule, TopicModel,
    TrainOptions,
};
