//! Doc-test shim for the guide under `book/`.
//!
//! mdbook cannot run snippets that depend on external crates, so each
//! chapter is included here as module documentation and `cargo test --doc`
//! exercises every Rust code block with the real `topicbp` available. One
//! module per chapter keeps failures traceable to their source file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/corpus-format.md")]
pub mod corpus_format {}

#[doc = include_str!("../../../book/src/message-passing.md")]
pub mod message_passing {}

#[doc = include_str!("../../../book/src/training.md")]
pub mod training {}

#[doc = include_str!("../../../book/src/labeled-topics.md")]
pub mod labeled_topics {}

#[doc = include_str!("../../../book/src/author-topics.md")]
pub mod author_topics {}

#[doc = include_str!("../../../book/src/synthetic-data.md")]
pub mod synthetic_data {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
