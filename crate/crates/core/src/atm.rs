//! Author-topic model via BP: each entry's message ranges over the pairs
//! `(author, topic)` for the authors of its document, normalized jointly,
//! and the document-side statistics are kept per author instead of per
//! document.
//!
//! The update rule mirrors the BP-LDA rule with the entry's own mass
//! excluded on both sides:
//!
//! ```text
//! mu'(a,k) ~ (at_a(k) - x*mu(a,k) + alpha) / sum_k (at_a(k) - x*mu(a,k) + alpha)
//!          * (wt_w(k) - x*m(k) + beta)     / (tt(k) - rho_d(k) + W*beta)
//! ```
//!
//! where `m(k)` is the entry's author-marginalized message and `rho_d` the
//! document's marginalized topic mass. On a corpus where every document has
//! exactly one distinct author this collapses, operation for operation, to
//! the BP-LDA sweep, which the tests pin down bit for bit.

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::corpus::{DocMetadata, MetadataKind, SparseCorpus};
use crate::engine::{self, Hyperparameters, TrainOptions};
use crate::eval;
use crate::updaters::{SweepStats, finish_normalize};

/// Per-entry joint distributions over `(author, topic)`: entry `n` owns a
/// block of `|authors(doc_n)| * K` values summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AuthorMessageBoard {
    num_topics: usize,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl AuthorMessageBoard {
    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    pub fn num_entries(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Author-major block for entry `n`: row `a`, column `k` at `a * K + k`.
    pub fn block(&self, entry: usize) -> &[f64] {
        &self.values[self.offsets[entry]..self.offsets[entry + 1]]
    }

    pub fn max_block_sum_error(&self) -> f64 {
        (0..self.num_entries())
            .map(|n| (self.block(n).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Sufficient statistics of an author board. `author_topic` is the per-author
/// analogue of the doc-topic table; `doc_topic` holds the author-marginalized
/// per-document mass feeding the word-side denominator; `word_topic` and
/// `topic_total` are as in the plain engine.
#[derive(Debug, Clone, PartialEq)]
pub struct AuthorAggregates {
    pub author_topic: Array2<f64>,
    pub doc_topic: Array2<f64>,
    pub word_topic: Array2<f64>,
    pub topic_total: Array1<f64>,
}

/// Author-topic estimates: `author_theta` is `A x K` row-stochastic, `phi`
/// as in the plain model.
#[derive(Debug, Clone, PartialEq)]
pub struct AuthorTopicModel {
    pub author_theta: Array2<f64>,
    pub phi: Array2<f64>,
}

fn check_metadata(corpus: &SparseCorpus, meta: &DocMetadata) {
    assert_eq!(
        meta.kind(),
        MetadataKind::Authors,
        "author metadata required"
    );
    assert_eq!(
        meta.num_docs(),
        corpus.num_docs(),
        "metadata/corpus mismatch"
    );
}

/// Seeds every entry with a jointly normalized uniform block over its
/// `(author, topic)` support. Draws in entry order, so a one-author corpus
/// consumes the rng exactly like [`engine::init_messages`].
pub fn init_author_messages(
    corpus: &SparseCorpus,
    meta: &DocMetadata,
    num_topics: usize,
    seed: u64,
) -> AuthorMessageBoard {
    assert!(num_topics >= 1, "at least one topic required");
    check_metadata(corpus, meta);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut offsets = Vec::with_capacity(corpus.num_entries() + 1);
    offsets.push(0);
    let mut values = Vec::new();
    for e in corpus.entries() {
        let width = meta.ids(e.doc as usize).len() * num_topics;
        values.extend(engine::draw_normalized_rows(1, width, &mut rng));
        offsets.push(values.len());
    }
    AuthorMessageBoard {
        num_topics,
        offsets,
        values,
    }
}

/// Recomputes all four aggregate tables from scratch.
pub fn compute_author_aggregates(
    board: &AuthorMessageBoard,
    corpus: &SparseCorpus,
    meta: &DocMetadata,
) -> AuthorAggregates {
    check_metadata(corpus, meta);
    assert_eq!(
        board.num_entries(),
        corpus.num_entries(),
        "board/corpus mismatch"
    );
    let k = board.num_topics;
    let num_authors = meta.id_limit();
    let mut author_topic = Array2::<f64>::zeros((num_authors, k));
    let mut doc_topic = Array2::<f64>::zeros((corpus.num_docs(), k));
    let mut word_topic = Array2::<f64>::zeros((corpus.num_words(), k));
    let mut marginal = vec![0.0; k];
    for (n, e) in corpus.entries().iter().enumerate() {
        let x = e.count as f64;
        let d = e.doc as usize;
        let authors = meta.ids(d);
        let block = board.block(n);
        for (ai, &a) in authors.iter().enumerate() {
            let mut at = author_topic.row_mut(a as usize);
            for i in 0..k {
                at[i] += x * block[ai * k + i];
            }
        }
        for i in 0..k {
            let mut m = 0.0;
            for ai in 0..authors.len() {
                m += block[ai * k + i];
            }
            marginal[i] = m;
        }
        let mut dt = doc_topic.row_mut(d);
        for i in 0..k {
            dt[i] += x * marginal[i];
        }
        let mut wt = word_topic.row_mut(e.word as usize);
        for i in 0..k {
            wt[i] += x * marginal[i];
        }
    }
    let mut topic_total = Array1::<f64>::zeros(k);
    for w in 0..corpus.num_words() {
        let wt = word_topic.row(w);
        for i in 0..k {
            topic_total[i] += wt[i];
        }
    }
    AuthorAggregates {
        author_topic,
        doc_topic,
        word_topic,
        topic_total,
    }
}

/// Synchronous author-topic BP sweep over the previous iteration's state.
pub fn atm_bp_sweep(
    board: &AuthorMessageBoard,
    agg: &AuthorAggregates,
    corpus: &SparseCorpus,
    meta: &DocMetadata,
    hp: &Hyperparameters,
) -> (AuthorMessageBoard, SweepStats) {
    check_metadata(corpus, meta);
    assert_eq!(
        board.num_topics,
        hp.num_topics(),
        "board/hyperparameter mismatch"
    );
    let k = hp.num_topics();
    let (alpha, beta) = (hp.alpha(), hp.beta());
    let wbeta = corpus.num_words() as f64 * beta;
    let entries = corpus.entries();
    let author_topic = agg.author_topic.as_slice().unwrap();
    let doc_topic = agg.doc_topic.as_slice().unwrap();
    let word_topic = agg.word_topic.as_slice().unwrap();
    let topic_total = agg.topic_total.as_slice().unwrap();
    let guards = AtomicUsize::new(0);

    let mut values = vec![0.0; board.values.len()];
    let blocks = split_blocks(&mut values, &board.offsets);
    blocks.into_par_iter().enumerate().for_each(|(n, out)| {
        let e = &entries[n];
        let x = e.count as f64;
        let d = e.doc as usize;
        let w = e.word as usize;
        let authors = meta.ids(d);
        let old = board.block(n);
        let dt = &doc_topic[d * k..(d + 1) * k];
        let wt = &word_topic[w * k..(w + 1) * k];

        // Word-side factor, shared across the entry's authors; same
        // operation sequence as the BP-LDA rule.
        let mut word_side = vec![0.0; k];
        for i in 0..k {
            let mut m = 0.0;
            for ai in 0..authors.len() {
                m += old[ai * k + i];
            }
            word_side[i] = (wt[i] - x * m + beta) / (topic_total[i] - dt[i] + wbeta);
        }

        let mut norm = 0.0;
        for (ai, &a) in authors.iter().enumerate() {
            let at = &author_topic[a as usize * k..(a as usize + 1) * k];
            let row = &mut out[ai * k..(ai + 1) * k];
            let mut den1 = 0.0;
            for i in 0..k {
                let f = at[i] - x * old[ai * k + i] + alpha;
                row[i] = f;
                den1 += f;
            }
            for i in 0..k {
                let t1 = row[i] / den1;
                let v = t1 * word_side[i];
                row[i] = v;
                norm += v;
            }
        }
        if finish_normalize(out, norm) {
            guards.fetch_add(1, Ordering::Relaxed);
        }
    });
    (
        AuthorMessageBoard {
            num_topics: k,
            offsets: board.offsets.clone(),
            values,
        },
        SweepStats {
            underflow_guards: guards.load(Ordering::Relaxed),
            mask_fallbacks: 0,
        },
    )
}

fn split_blocks<'a>(mut values: &'a mut [f64], offsets: &[usize]) -> Vec<&'a mut [f64]> {
    let mut blocks = Vec::with_capacity(offsets.len() - 1);
    for pair in offsets.windows(2) {
        let (head, tail) = values.split_at_mut(pair[1] - pair[0]);
        blocks.push(head);
        values = tail;
    }
    blocks
}

/// Row-stochastic author-topic proportions; an author with no mass gets a
/// uniform row from the smoothing alone.
pub fn estimate_author_theta(agg: &AuthorAggregates, hp: &Hyperparameters) -> Array2<f64> {
    assert_eq!(agg.author_topic.ncols(), hp.num_topics());
    engine::smoothed_rows(&agg.author_topic, hp.alpha())
}

/// Topic-word distributions from the author-marginalized statistics.
pub fn estimate_author_phi(agg: &AuthorAggregates, hp: &Hyperparameters) -> Array2<f64> {
    assert_eq!(agg.word_topic.ncols(), hp.num_topics());
    engine::smoothed_phi(&agg.word_topic, &agg.topic_total, hp.beta())
}

/// Training perplexity with the predictive distribution averaged uniformly
/// over each document's authors:
/// `p(w|d) = (1/|authors(d)|) sum_a sum_k theta_a(k) phi_w(k)`.
pub fn atm_perplexity(
    author_theta: &Array2<f64>,
    phi: &Array2<f64>,
    corpus: &SparseCorpus,
    meta: &DocMetadata,
) -> f64 {
    check_metadata(corpus, meta);
    assert!(corpus.total_tokens() > 0, "perplexity of an empty corpus");
    assert_eq!(author_theta.ncols(), phi.ncols(), "topic count");
    assert_eq!(phi.nrows(), corpus.num_words(), "phi shape");
    assert!(author_theta.nrows() >= meta.id_limit(), "theta shape");
    let k = phi.ncols();
    eval::perplexity_over_entries(corpus, |e| {
        let authors = meta.ids(e.doc as usize);
        let phi_row = phi.row(e.word as usize);
        let mut acc = 0.0;
        for &a in authors {
            let theta_row = author_theta.row(a as usize);
            let mut s = 0.0;
            for i in 0..k {
                s += theta_row[i] * phi_row[i];
            }
            acc += s;
        }
        acc / authors.len() as f64
    })
}

/// Author-topic training loop; synchronous sweeps only.
pub fn train(
    corpus: &SparseCorpus,
    meta: &DocMetadata,
    hp: &Hyperparameters,
    opts: &TrainOptions,
    mut reporter: impl FnMut(u32, f64),
) -> (AuthorTopicModel, AuthorMessageBoard) {
    assert!(opts.iters >= 1 && opts.report_every >= 1);
    check_metadata(corpus, meta);
    let pool = engine::worker_pool(opts.workers);
    let mut board = init_author_messages(corpus, meta, hp.num_topics(), opts.seed);
    let mut agg = compute_author_aggregates(&board, corpus, meta);
    let mut model = None;
    let mut last_reported: Option<f64> = None;
    for it in 1..=opts.iters {
        board = pool.install(|| atm_bp_sweep(&board, &agg, corpus, meta, hp).0);
        agg = compute_author_aggregates(&board, corpus, meta);
        if it % opts.report_every == 0 || it == opts.iters {
            let current = AuthorTopicModel {
                author_theta: estimate_author_theta(&agg, hp),
                phi: estimate_author_phi(&agg, hp),
            };
            let ppx = atm_perplexity(&current.author_theta, &current.phi, corpus, meta);
            reporter(it, ppx);
            model = Some(current);
            if let (Some(t), Some(prev)) = (opts.early_stop, last_reported)
                && ((prev - ppx).abs() / prev) < t
            {
                break;
            }
            last_reported = Some(ppx);
        }
    }
    (model.expect("final iteration reports"), board)
}
